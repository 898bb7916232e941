"""Modified Bessel functions of the first kind, Gamma and Beta.

``bessel_i`` and ``bessel_i_scaled`` accept scalars or numpy arrays for ``x``
and an integer order ``k``.  Small arguments use the power series

    I_k(x) = sum_l (x/2)^(2l+k) / (l! (l+k)!)

and large arguments the scaled asymptotic expansion

    e^{-x} I_k(x) ~ (2 pi x)^(-1/2) sum_n (-1)^n a_n(k) / x^n,

falling back to a normalised backward recurrence when the expansion cannot
reach the requested accuracy (orders that are large compared to ``x``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SeriesPolicy",
    "DEFAULT_POLICY",
    "bessel_i",
    "bessel_i_scaled",
    "ln_gamma",
    "euler_beta",
]

# exp(x) overflows a double a little above this.
_EXP_LIMIT = 709.0


@dataclass(frozen=True)
class SeriesPolicy:
    """Controls the series/asymptotic split used by the Bessel routines."""

    rel_tol: float = 1e-15
    max_terms: int = 500
    asymptotic_switch_x: float = 30.0

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 10:
            raise ValueError("max_terms must be at least 10")
        if not self.asymptotic_switch_x > 0:
            raise ValueError("asymptotic_switch_x must be positive")


DEFAULT_POLICY = SeriesPolicy()


def _check_order(k: int) -> int:
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise ValueError(f"Bessel order must be a nonnegative integer, got {k!r}")
    return int(k)


def _series(k: int, x: np.ndarray, policy: SeriesPolicy) -> np.ndarray:
    """Power series for I_k at x >= 0 (unscaled)."""
    term = (x / 2.0) ** k / math.factorial(k)
    total = term.copy()
    q = x * x / 4.0
    for l in range(1, policy.max_terms):
        term = term * q / (l * (l + k))
        total += term
        if np.all(term <= policy.rel_tol * total):
            break
    return total


def _asymptotic_scaled(k: int, x: np.ndarray, policy: SeriesPolicy) -> tuple[np.ndarray, np.ndarray]:
    """Scaled asymptotic series; also returns a relative error estimate."""
    mu = 4.0 * k * k
    term = np.ones_like(x)
    total = np.ones_like(x)
    err = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    biggest = np.ones_like(x)
    for n in range(1, policy.max_terms):
        new = term * -(mu - (2 * n - 1) ** 2) / (n * 8.0 * x)
        biggest = np.where(active, np.maximum(biggest, np.abs(new)), biggest)
        # Once terms start growing the tail diverges: keep the partial sum.
        diverging = active & (n > 8) & (np.abs(new) > np.abs(term))
        err = np.where(diverging, np.abs(term) / np.abs(total), err)
        active &= ~diverging
        total = np.where(active, total + new, total)
        converged = active & (n >= 8) & (np.abs(new) <= policy.rel_tol * np.abs(total))
        err = np.where(converged, np.abs(new) / np.abs(total), err)
        active &= ~converged
        term = new
        if not np.any(active):
            break
    # Alternating terms much larger than the sum lose digits to cancellation.
    err = np.maximum(err, 4e-16 * biggest / np.abs(total))
    return total / np.sqrt(2.0 * np.pi * x), err


def _backward_scaled(k: int, x: np.ndarray, i0_scaled: np.ndarray) -> np.ndarray:
    """Miller backward recurrence normalised by e^{-x} I_0(x)."""
    out = np.empty_like(x)
    for idx, xv in np.ndenumerate(x):
        n_start = int(k + 30 + 2.0 * math.sqrt(40.0 * max(k, xv)))
        if n_start % 2:
            n_start += 1
        i_next, i_cur = 0.0, 1e-300
        want = 0.0
        for n in range(n_start, 0, -1):
            i_prev = (2.0 * n / xv) * i_cur + i_next
            i_next, i_cur = i_cur, i_prev
            if n - 1 == k:
                want = i_cur
            # Rescale to keep the recurrence in range.
            if abs(i_cur) > 1e250:
                i_cur *= 1e-250
                i_next *= 1e-250
                want *= 1e-250
        out[idx] = want / i_cur * i0_scaled[idx]
    return out


def _scaled_large(k: int, x: np.ndarray, policy: SeriesPolicy) -> np.ndarray:
    val, err = _asymptotic_scaled(k, x, policy)
    bad = err > 100.0 * policy.rel_tol
    if np.any(bad):
        i0, _ = _asymptotic_scaled(0, x[bad], policy)
        val = val.copy()
        val[bad] = _backward_scaled(k, x[bad], i0)
    return val


def bessel_i_scaled(k: int, x, policy: SeriesPolicy = DEFAULT_POLICY):
    """Return ``exp(-x) * I_k(x)`` for ``x >= 0``; finite for any finite ``x``."""
    k = _check_order(k)
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise ValueError("bessel_i_scaled requires x >= 0")
    flat = np.atleast_1d(arr).ravel()
    out = np.full(flat.shape, np.nan)
    finite = ~np.isnan(flat)
    small = finite & (flat <= policy.asymptotic_switch_x)
    large = finite & ~small
    if np.any(small):
        xs = flat[small]
        out[small] = _series(k, xs, policy) * np.exp(-xs)
    if np.any(large):
        out[large] = _scaled_large(k, flat[large], policy)
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def bessel_i(k: int, x, policy: SeriesPolicy = DEFAULT_POLICY):
    """Return ``I_k(x)`` for real ``x``.

    Negative arguments use ``I_k(-x) = (-1)^k I_k(x)``.  Raises
    ``OverflowError`` when the result is not representable; use
    :func:`bessel_i_scaled` in that regime.
    """
    k = _check_order(k)
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr) & ~np.isnan(arr)):
        raise ValueError("bessel_i requires finite x")
    ax = np.abs(arr)
    if np.any(ax > _EXP_LIMIT):
        raise OverflowError(
            f"I_{k}(x) overflows for |x| > {_EXP_LIMIT}; use bessel_i_scaled"
        )
    flat = np.atleast_1d(ax).ravel()
    out = np.full(flat.shape, np.nan)
    small = flat <= policy.asymptotic_switch_x
    large = ~small & ~np.isnan(flat)
    if np.any(small):
        out[small] = _series(k, flat[small], policy)
    if np.any(large):
        xl = flat[large]
        out[large] = _scaled_large(k, xl, policy) * np.exp(xl)
    out = out.reshape(arr.shape)
    if k % 2:
        out = np.where(arr < 0, -out, out)
    return float(out) if np.ndim(out) == 0 else out


def ln_gamma(x: float) -> float:
    """Natural log of the Gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"ln_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def euler_beta(x: float, y: float) -> float:
    """Euler's Beta function ``Gamma(x) Gamma(y) / Gamma(x + y)``."""
    if not (x > 0 and y > 0):
        raise ValueError(f"euler_beta requires positive arguments, got {x}, {y}")
    return math.exp(ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y))
