"""Spin-weighted fields on the momentum sphere and the E(3) operators.

Conventions
-----------
Fields of spin weight ``s`` are stored as ordinary complex samples in the
stereographic gauge of the north-omitting chart.  In that gauge the edth
operators read

    edth  f = -(1/(sqrt2 P)) e^{+i phi} (d_theta f - (i/sin) d_phi f - s cot(theta/2) f)
    edth' f = -(1/(sqrt2 P)) e^{-i phi} (d_theta f + (i/sin) d_phi f + s cot(theta/2) f)

and the harmonics are

    sY_{j,m}(theta, phi) = (1/P) sqrt((2j+1)/(4 pi)) e^{i(m+s) phi} d^j_{m,s}(theta)

with ``d^j`` the Wigner small-d function ``<j m| exp(-i theta J_y) |j s>``.
The phi dependence carries the integer index ``q = m + s``, so half-integer
spin weights need no double-valued phases.  With this choice

    edth  sY_{jm} = +sqrt((j-s)(j+s+1)) / (sqrt2 P) * (s+1)Y_{jm}
    edth' sY_{jm} = -sqrt((j+s)(j-s+1)) / (sqrt2 P) * (s-1)Y_{jm}

and the third angular momentum component acts as ``-i hbar d_phi - s hbar``,
so ``J_3 sY_{jm} = m hbar sY_{jm}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Literal

import numpy as np

from .sphere import Direction, SphereGrid, build_grid, integrate

__all__ = [
    "SpectralCoeffs",
    "SpinField",
    "OperatorLabel",
    "wigner_d",
    "swsh_eval",
    "edth_coefficient",
    "edth_prime_coefficient",
    "analyze",
    "synthesize",
    "max_band_limit",
    "edth",
    "edth_prime",
    "apply",
    "inner",
    "expectation",
    "deviation",
    "field_to_json",
    "field_from_json",
]

Sampler = Callable[[np.ndarray, np.ndarray], np.ndarray]
Method = Literal["auto", "spectral", "pointwise"]


def as_half_integer(x: float, name: str = "value") -> float:
    """Return ``x`` as a float after checking that ``2x`` is an integer."""
    two = 2.0 * float(x)
    if abs(two - round(two)) > 1e-9:
        raise ValueError(f"{name} must be an integer or half-integer, got {x!r}")
    return round(two) / 2.0


def _is_integer(x: float) -> bool:
    return abs(x - round(x)) < 1e-9


def check_triple(s: float, j: float, m: float) -> None:
    """Validate a harmonic label (s, j, m)."""
    s, j, m = (as_half_integer(v) for v in (s, j, m))
    if j < abs(s) or abs(m) > j or not _is_integer(j - abs(s)) or not _is_integer(j - abs(m)):
        raise ValueError(f"invalid harmonic label (s, j, m) = ({s}, {j}, {m})")


# ---------------------------------------------------------------------------
# Wigner small-d functions
# ---------------------------------------------------------------------------

def _wigner_d_sum(j: float, mp: float, m: float, theta: np.ndarray) -> np.ndarray:
    """Explicit finite sum for d^j_{mp,m}(theta)."""
    lg = math.lgamma
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    pref = 0.5 * (lg(j + mp + 1) + lg(j - mp + 1) + lg(j + m + 1) + lg(j - m + 1))
    k_lo = max(0, round(m - mp))
    k_hi = min(round(j + m), round(j - mp))
    out = np.zeros_like(theta, dtype=float)
    for k in range(k_lo, k_hi + 1):
        e = pref - (lg(j + m - k + 1) + lg(k + 1) + lg(j - k - mp + 1) + lg(k - m + mp + 1))
        sign = -1.0 if round(k - m + mp) % 2 else 1.0
        out += sign * math.exp(e) * c ** round(2 * j - 2 * k + m - mp) * s ** round(2 * k - m + mp)
    return out


def wigner_d(j_max: float, mp: float, m: float, theta) -> tuple[np.ndarray, np.ndarray]:
    """Wigner small-d values ``d^j_{mp,m}(theta)`` for all j up to ``j_max``.

    Returns ``(js, table)`` where ``table[i]`` holds ``d^{js[i]}`` at every
    theta.  Uses the three-term recursion in j started from the closed form
    at ``j0 = max(|m|, |mp|)``.
    """
    theta = np.asarray(theta, dtype=float)
    j0 = max(abs(m), abs(mp))
    n = int(round(j_max - j0)) + 1
    if n <= 0:
        return np.zeros(0), np.zeros((0,) + theta.shape)
    js = j0 + np.arange(n)
    table = np.empty((n,) + theta.shape)
    table[0] = _wigner_d_sum(j0, mp, m, theta)
    cos_t = np.cos(theta)
    prev = np.zeros_like(cos_t)
    for i in range(1, n):
        j = js[i - 1]
        cur = table[i - 1]
        if j == 0:
            nxt = cos_t * cur
        else:
            down = (j + 1) * math.sqrt(max((j * j - m * m) * (j * j - mp * mp), 0.0))
            up = j * math.sqrt(((j + 1) ** 2 - m * m) * ((j + 1) ** 2 - mp * mp))
            nxt = ((2 * j + 1) * (j * (j + 1) * cos_t - m * mp) * cur - down * prev) / up
        prev = cur
        table[i] = nxt
    return js, table


def swsh_eval(s: float, j: float, m: float, theta, phi, P: float = 1.0):
    """Evaluate ``sY_{j,m}`` at polar angles (broadcasting)."""
    check_triple(s, j, m)
    theta = np.asarray(theta, dtype=float)
    _, d = wigner_d(j, m, s, theta)
    norm = math.sqrt((2 * j + 1) / (4 * math.pi)) / P
    return norm * d[-1] * np.exp(1j * (m + s) * np.asarray(phi, dtype=float))


# ---------------------------------------------------------------------------
# Spectral coefficients and transforms
# ---------------------------------------------------------------------------

def edth_coefficient(s: float, j: float) -> float:
    """``sqrt2 * P`` times the ladder factor of edth on ``sY_{jm}``."""
    return math.sqrt(max((j - s) * (j + s + 1), 0.0))


def edth_prime_coefficient(s: float, j: float) -> float:
    """``sqrt2 * P`` times the ladder factor of edth' on ``sY_{jm}``."""
    return -math.sqrt(max((j + s) * (j - s + 1), 0.0))


def ladder_casimir(s: Fraction, j: Fraction) -> Fraction:
    """``-P^2 (edth edth' + edth' edth) + s^2`` on ``sY_{jm}``, as a rational.

    With ``k(s)`` the ladder factors above (divided by ``sqrt2 P``), the
    combination is ``-(k'(s) k(s-1) + k(s) k'(s+1)) / 2 + s^2``; the square
    roots pair up into products of rationals.
    """
    lowered = (j + s) * (j - s + 1)  # k'(s) k(s-1) = -this
    raised = (j - s) * (j + s + 1)   # k(s) k'(s+1) = -this
    return (lowered + raised) / 2 + s * s


@dataclass(frozen=True, eq=False)
class SpectralCoeffs:
    """Harmonic coefficients of a spin-weight-s field with band limit L.

    ``data[i, c]`` is the coefficient of ``sY_{j,m}`` with ``j = |s| + i``
    and ``m = c - L``; entries with ``|m| > j`` are zero.
    """

    s: float
    L: float
    data: np.ndarray

    @property
    def j_min(self) -> float:
        return abs(self.s)

    def js(self) -> np.ndarray:
        return self.j_min + np.arange(self.data.shape[0])

    def ms(self) -> np.ndarray:
        return np.arange(self.data.shape[1]) - self.L

    @classmethod
    def zeros(cls, s: float, L: float) -> "SpectralCoeffs":
        s = as_half_integer(s, "spin weight")
        L = as_half_integer(L, "band limit")
        if not _is_integer(L - abs(s)) or L < abs(s):
            raise ValueError(f"band limit {L} incompatible with spin weight {s}")
        n_j = int(round(L - abs(s))) + 1
        return cls(s, L, np.zeros((n_j, int(round(2 * L)) + 1), dtype=complex))

    @classmethod
    def from_dict(cls, s: float, L: float, values: dict) -> "SpectralCoeffs":
        out = cls.zeros(s, L)
        for (j, m), c in values.items():
            check_triple(s, j, m)
            out.data[int(round(j - abs(s))), int(round(m + L))] = c
        return out

    def get(self, j: float, m: float) -> complex:
        i = int(round(j - self.j_min))
        c = int(round(m + self.L))
        if i < 0 or i >= self.data.shape[0] or abs(m) > j:
            return 0j
        return complex(self.data[i, c])

    def to_dict(self) -> dict:
        out = {}
        for i, j in enumerate(self.js()):
            for c, m in enumerate(self.ms()):
                if abs(m) <= j + 1e-12:
                    out[(float(j), float(m))] = complex(self.data[i, c])
        return out

    def valid_mask(self) -> np.ndarray:
        return np.abs(self.ms())[None, :] <= self.js()[:, None] + 1e-12


def max_band_limit(grid: SphereGrid, s: float) -> float:
    """Largest band limit the grid transforms exactly for spin weight s."""
    s = as_half_integer(s)
    L_theta = grid.n_theta - 1
    L_phi = (grid.n_phi - 1) // 2 - abs(s)
    L = min(L_theta, L_phi)
    # L - |s| must be an integer.
    L = math.floor(L - abs(s)) + abs(s)
    if L < abs(s):
        raise ValueError(f"grid {grid.shape} cannot represent spin weight {s}")
    return L


def _tables(grid: SphereGrid, s: float, L: float) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Per Fourier index q: (j values, normalized d table[n_j, n_theta])."""
    key = ("swsh", s, L)
    hit = grid._cache.get(key)
    if hit is not None:
        return hit
    out = {}
    q_lo = int(round(-L + s))
    q_hi = int(round(L + s))
    for q in range(q_lo, q_hi + 1):
        m = q - s
        if abs(m) > L:
            continue
        js_all, table = wigner_d(L, m, s, grid.theta_nodes)
        keep = js_all >= abs(s) - 1e-12
        js = js_all[keep]
        norm = np.sqrt((2 * js + 1) / (4 * math.pi)) / grid.P
        out[q] = (js, norm[:, None] * table[keep])
    grid._cache[key] = out
    return out


def _check_capacity(grid: SphereGrid, s: float, L: float) -> None:
    if L > max_band_limit(grid, s) + 1e-12:
        raise ValueError(
            f"grid {grid.shape} cannot resolve band limit {L} at spin weight {s}"
        )


def analyze(field: "SpinField", L: float | None = None) -> SpectralCoeffs:
    """Project samples onto ``sY_{jm}``, ``j <= L`` (exact for band-limited data)."""
    grid, s = field.grid, field.s
    L = max_band_limit(grid, s) if L is None else as_half_integer(L)
    _check_capacity(grid, s, L)
    out = SpectralCoeffs.zeros(s, L)
    rows = np.fft.fft(field.samples, axis=1) * (2.0 * np.pi / grid.n_phi)
    w = grid.theta_weights * grid.P**2
    n = grid.n_phi
    for q, (js, table) in _tables(grid, s, L).items():
        m = q - s
        vals = table @ (w * rows[:, q % n])
        i0 = int(round(js[0] - abs(s)))
        out.data[i0 : i0 + js.size, int(round(m + L))] = vals
    return out


def synthesize(coeffs: SpectralCoeffs, grid: SphereGrid) -> np.ndarray:
    """Evaluate a harmonic expansion at the grid nodes."""
    s, L = coeffs.s, coeffs.L
    _check_capacity(grid, s, L)
    n = grid.n_phi
    spec = np.zeros((grid.n_theta, n), dtype=complex)
    for q, (js, table) in _tables(grid, s, L).items():
        m = q - s
        i0 = int(round(js[0] - abs(s)))
        c = coeffs.data[i0 : i0 + js.size, int(round(m + L))]
        spec[:, q % n] += c @ table
    return np.fft.ifft(spec, axis=1) * n


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpinField:
    """Samples of a spin-weighted field on a grid.

    ``coeffs`` (if present) is its exact harmonic expansion.  ``sampler``
    (if present) evaluates the same field at arbitrary interior angles and
    enables pointwise differentiation for fields that are not band-limited.
    """

    s: float
    grid: SphereGrid
    samples: np.ndarray
    coeffs: SpectralCoeffs | None = None
    sampler: Sampler | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "s", as_half_integer(self.s, "spin weight"))
        arr = np.asarray(self.samples, dtype=complex)
        if arr.shape != self.grid.shape:
            raise ValueError(f"samples shape {arr.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "samples", arr)

    @classmethod
    def from_coeffs(cls, coeffs: SpectralCoeffs, grid: SphereGrid) -> "SpinField":
        return cls(coeffs.s, grid, synthesize(coeffs, grid), coeffs=coeffs)

    @classmethod
    def harmonic(cls, s: float, j: float, m: float, grid: SphereGrid) -> "SpinField":
        check_triple(s, j, m)
        return cls.from_coeffs(SpectralCoeffs.from_dict(s, j if j >= abs(s) else abs(s), {(j, m): 1.0}), grid)

    @classmethod
    def from_function(cls, s: float, grid: SphereGrid, func: Sampler) -> "SpinField":
        th, ph = grid.mesh()
        vals = np.broadcast_to(func(th, ph), grid.shape)
        return cls(s, grid, vals, sampler=func)

    def scaled(self, factor: complex) -> "SpinField":
        coeffs = None
        if self.coeffs is not None:
            coeffs = SpectralCoeffs(self.coeffs.s, self.coeffs.L, self.coeffs.data * factor)
        sampler = None
        if self.sampler is not None:
            base = self.sampler
            sampler = lambda th, ph: factor * base(th, ph)  # noqa: E731
        return SpinField(self.s, self.grid, self.samples * factor, coeffs, sampler)

    def norm(self) -> float:
        return math.sqrt(max(integrate(self.grid, np.abs(self.samples) ** 2).real, 0.0))

    def normalized(self) -> "SpinField":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero field")
        return self.scaled(1.0 / n)

    def spectral(self) -> SpectralCoeffs:
        return self.coeffs if self.coeffs is not None else analyze(self)


def _combine(s: float, grid: SphereGrid, samples: np.ndarray, band: float | None) -> SpinField:
    """Build a field and attach coefficients if the band limit fits the grid."""
    if band is not None:
        try:
            coeffs = analyze(SpinField(s, grid, samples), band)
        except ValueError:
            coeffs = None
        return SpinField(s, grid, samples, coeffs=coeffs)
    return SpinField(s, grid, samples)


def inner(f: SpinField, g: SpinField) -> complex:
    """``<f, g> = integral of conj(f) g dS``."""
    if f.grid is not g.grid:
        raise ValueError("fields live on different grids")
    if f.s != g.s:
        raise ValueError("inner product of fields with different spin weights")
    return integrate(f.grid, np.conj(f.samples) * g.samples)


# ---------------------------------------------------------------------------
# edth operators
# ---------------------------------------------------------------------------

_FD8 = ((1, 4.0 / 5.0), (2, -1.0 / 5.0), (3, 4.0 / 105.0), (4, -1.0 / 280.0))


def _theta_derivative(f: SpinField) -> np.ndarray:
    """Eighth-order central difference of the sampler in theta."""
    th, ph = f.grid.mesh()
    dist = np.minimum(th, np.pi - th)
    h = np.minimum(0.05 * dist, 1e-2)
    acc = np.zeros(f.grid.shape, dtype=complex)
    for k, c in _FD8:
        acc += c * (f.sampler(th + k * h, ph) - f.sampler(th - k * h, ph))
    return acc / h


def _phi_derivative(samples: np.ndarray) -> np.ndarray:
    """Spectral derivative along each theta row."""
    n = samples.shape[1]
    q = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        q[n // 2] = 0.0  # Nyquist mode has no well-defined derivative.
    return np.fft.ifft(1j * q * np.fft.fft(samples, axis=1), axis=1)


def _pick(f: SpinField, method: Method) -> str:
    if method != "auto":
        return method
    if f.coeffs is not None:
        return "spectral"
    return "pointwise" if f.sampler is not None else "spectral"


def _ladder(coeffs: SpectralCoeffs, shift: int, P: float) -> SpectralCoeffs:
    s, L = coeffs.s, coeffs.L
    t = s + shift
    if abs(t) > L:
        return SpectralCoeffs.zeros(t, abs(t))
    out = SpectralCoeffs.zeros(t, L)
    for i, j in enumerate(coeffs.js()):
        if j < abs(t) - 1e-12:
            continue
        k = edth_coefficient(s, j) if shift > 0 else edth_prime_coefficient(s, j)
        out.data[int(round(j - abs(t)))] = coeffs.data[i] * (k / (math.sqrt(2.0) * P))
    return out


def _edth_any(f: SpinField, shift: int, method: Method) -> SpinField:
    grid, s = f.grid, f.s
    if _pick(f, method) == "spectral":
        c = _ladder(f.spectral(), shift, grid.P)
        return SpinField(c.s, grid, synthesize(c, grid), coeffs=c)
    if f.sampler is None:
        raise ValueError("pointwise edth needs a field with a sampler")
    th, ph = grid.mesh()
    d_th = _theta_derivative(f)
    d_ph = _phi_derivative(f.samples)
    pre = -1.0 / (math.sqrt(2.0) * grid.P)
    half_cot = 1.0 / np.tan(th / 2.0)
    if shift > 0:
        vals = pre * np.exp(1j * ph) * (d_th - 1j * d_ph / np.sin(th) - s * half_cot * f.samples)
    else:
        vals = pre * np.exp(-1j * ph) * (d_th + 1j * d_ph / np.sin(th) + s * half_cot * f.samples)
    return SpinField(s + shift, grid, vals)


def edth(f: SpinField, method: Method = "auto") -> SpinField:
    """Raise the spin weight by one."""
    return _edth_any(f, +1, method)


def edth_prime(f: SpinField, method: Method = "auto") -> SpinField:
    """Lower the spin weight by one."""
    return _edth_any(f, -1, method)


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

_COMPONENT_KINDS = ("p_component", "J_component", "C_component")
_KINDS = _COMPONENT_KINDS + ("J_squared", "C_squared", "W", "P_squared")


@dataclass(frozen=True)
class OperatorLabel:
    kind: str
    direction: Direction | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.kind in _COMPONENT_KINDS and self.direction is None:
            raise ValueError(f"{self.kind} needs a direction")

    @classmethod
    def p(cls, direction) -> "OperatorLabel":
        return cls("p_component", _as_direction(direction))

    @classmethod
    def J(cls, direction) -> "OperatorLabel":
        return cls("J_component", _as_direction(direction))

    @classmethod
    def C(cls, direction) -> "OperatorLabel":
        return cls("C_component", _as_direction(direction))


def _as_direction(d) -> Direction:
    return d if isinstance(d, Direction) else Direction(tuple(d))


def _band(f: SpinField, extra: int) -> float | None:
    return None if f.coeffs is None else f.coeffs.L + extra


def apply(op: OperatorLabel, f: SpinField, hbar: float = 1.0, method: Method = "auto") -> SpinField:
    """Apply one of the E(3) operators to a field.

    Component operators follow

        p^i f = p^i f
        J^i f = s hbar (p^i / P) f + P hbar (m^i edth' f - conj(m^i) edth f)
        C_i f = i hbar (P^2 m_i edth' f + P^2 conj(m_i) edth f - p_i f)

    contracted with ``op.direction``.  If ``f`` carries exact coefficients
    the result does too whenever the grid can represent them.
    """
    grid, s, P = f.grid, f.s, f.grid.P
    kind = op.kind
    if kind == "P_squared":
        return SpinField(s, grid, P * P * f.samples, coeffs=_scaled_coeffs(f, P * P))
    if kind == "W":
        return SpinField(s, grid, hbar * P * s * f.samples, coeffs=_scaled_coeffs(f, hbar * P * s))
    if kind == "J_squared":
        return _casimir_j(f, hbar)
    if kind == "C_squared":
        j2 = _casimir_j(f, hbar)
        extra = P * P * hbar * hbar * (1.0 - s * s)
        return SpinField(
            s, grid, P * P * j2.samples + extra * f.samples,
            coeffs=None if j2.coeffs is None else SpectralCoeffs(
                s, j2.coeffs.L, P * P * j2.coeffs.data + extra * _padded(f, j2.coeffs.L)
            ),
        )

    d = op.direction.vector
    n_d = np.tensordot(d, grid.unit_normal(), axes=1)
    if kind == "p_component":
        return _combine(s, grid, P * n_d * f.samples, _band(f, 1))
    m_d = np.tensordot(d, grid.m_field(), axes=1)
    up = edth(f, method).samples
    down = edth_prime(f, method).samples
    if kind == "J_component":
        vals = s * hbar * n_d * f.samples + P * hbar * (m_d * down - np.conj(m_d) * up)
    else:
        vals = 1j * hbar * (P * P * (m_d * down + np.conj(m_d) * up) - P * n_d * f.samples)
    return _combine(s, grid, vals, _band(f, 1))


def _scaled_coeffs(f: SpinField, factor: float) -> SpectralCoeffs | None:
    if f.coeffs is None:
        return None
    return SpectralCoeffs(f.coeffs.s, f.coeffs.L, f.coeffs.data * factor)


def _padded(f: SpinField, L: float) -> np.ndarray:
    c = f.spectral()
    if c.L == L:
        return c.data
    out = SpectralCoeffs.zeros(c.s, L).data
    shift = int(round(L - c.L))
    out[: c.data.shape[0], shift : shift + c.data.shape[1]] = c.data
    return out


def _casimir_j(f: SpinField, hbar: float) -> SpinField:
    """``hbar^2 (-P^2 (edth edth' + edth' edth) + s^2)`` applied spectrally."""
    grid, s, P = f.grid, f.s, f.grid.P
    c = f.spectral()
    a = _ladder(_ladder(c, -1, P), +1, P)
    b = _ladder(_ladder(c, +1, P), -1, P)
    data = np.zeros_like(c.data)
    for coeff in (a, b):
        if coeff.data.size and coeff.L == c.L:
            data += coeff.data
    out = SpectralCoeffs(s, c.L, hbar * hbar * (-P * P * data + s * s * c.data))
    return SpinField(s, grid, synthesize(out, grid), coeffs=out)


def expectation(op: OperatorLabel, f: SpinField, hbar: float = 1.0, method: Method = "auto") -> complex:
    """``<f, op f>`` for a normalized field."""
    _require_normalized(f)
    return inner(f, apply(op, f, hbar, method))


def deviation(op: OperatorLabel, f: SpinField, hbar: float = 1.0, method: Method = "auto") -> float:
    """Standard deviation, using ``<A^2> = ||A f||^2``."""
    _require_normalized(f)
    g = apply(op, f, hbar, method)
    mean = inner(f, g).real
    var = inner(g, g).real - mean * mean
    if var < -1e-10:
        raise ArithmeticError(f"negative variance {var}")
    return math.sqrt(max(var, 0.0))


def _require_normalized(f: SpinField) -> None:
    n = f.norm()
    if abs(n - 1.0) > 1e-8:
        raise ValueError(f"field is not normalized (norm = {n!r})")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def field_to_json(f: SpinField) -> str:
    """Row-major (theta, phi) samples as ``[re, im]`` pairs."""
    pairs = [[float(v.real), float(v.imag)] for v in f.samples.ravel()]
    return json.dumps(
        {"s": f.s, "n_theta": f.grid.n_theta, "n_phi": f.grid.n_phi, "P": f.grid.P, "samples": pairs}
    )


def field_from_json(text: str, grid: SphereGrid | None = None) -> SpinField:
    obj = json.loads(text)
    if grid is None:
        grid = build_grid(obj["P"], obj["n_theta"], obj["n_phi"])
    vals = np.array([complex(re, im) for re, im in obj["samples"]]).reshape(grid.shape)
    return SpinField(obj["s"], grid, vals)
