"""Most classical states of the E(2) system on the momentum circle.

The momentum circle has radius P and angle phi.  Momentum components act
by multiplication, ``p1 = P cos(phi)``, ``p2 = P sin(phi)``, the angular
momentum is ``J = i hbar d/dphi``, and states are normalized in
``L^2(P dphi)``.  The state saturating the uncertainty relation of the
pair ``(p(alpha), J)`` with ratio ``lambda = dp / dJ`` is

    phi(phi) = A exp(-(P / (lambda hbar)) sin(phi - alpha) - i ell phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvals_banded
from scipy.optimize import minimize

from .report import UncertaintyReport
from .specfun import bessel_i_scaled

__all__ = [
    "E2Params",
    "E2State",
    "build_e2_state",
    "e2_closed_forms",
    "e2_report",
    "e2_saturation_residual",
    "e2_required_n_phi",
    "e2_joint_saturation_probe",
    "e2_single_pair_sigma",
]

MIN_N_PHI = 64


@dataclass(frozen=True)
class E2Params:
    P: float = 1.0
    hbar: float = 1.0
    lam: float = 1.0
    alpha: float = 0.0
    ell: int = 0

    def __post_init__(self) -> None:
        if not (self.P > 0 and math.isfinite(self.P)):
            raise ValueError("P must be positive")
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise ValueError("hbar must be positive")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError("lambda must be positive")
        if not (0.0 <= self.alpha < 2.0 * math.pi):
            raise ValueError("alpha must lie in [0, 2 pi)")
        if isinstance(self.ell, bool) or int(self.ell) != self.ell:
            raise ValueError("ell must be an integer")
        object.__setattr__(self, "ell", int(self.ell))

    @property
    def steepness(self) -> float:
        """The Bessel argument ``2P / (lambda hbar)``."""
        return 2.0 * self.P / (self.lam * self.hbar)


@dataclass(frozen=True, eq=False)
class E2State:
    """A sampled most classical state.

    ``A`` may underflow to zero for very steep states; ``log_A`` is always
    finite and the samples are evaluated in the log domain.
    """

    params: E2Params
    A: float
    log_A: float
    n_phi: int
    samples: np.ndarray

    @property
    def phi_nodes(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi


def e2_required_n_phi(params: E2Params) -> int:
    """Smallest grid that resolves the exponential concentration of the state."""
    return max(MIN_N_PHI, int(math.ceil(16.0 * params.steepness)))


def _samples(params: E2Params, phi: np.ndarray, log_A: float) -> np.ndarray:
    x = params.steepness
    # log_A carries -x/2, so the exponent stays bounded for steep states.
    expo = log_A - 0.5 * x * np.sin(phi - params.alpha)
    return np.exp(expo) * np.exp(-1j * params.ell * phi)


def build_e2_state(params: E2Params, n_phi: int = 512) -> E2State:
    if n_phi < MIN_N_PHI:
        raise ValueError(f"n_phi must be at least {MIN_N_PHI}")
    x = params.steepness
    i0s = bessel_i_scaled(0, x)  # e^{-x} I_0(x)
    log_A = -0.5 * (math.log(2.0 * math.pi * params.P * i0s) + x)
    A = math.exp(log_A)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    return E2State(params, A, log_A, int(n_phi), _samples(params, phi, log_A))


def _d_dphi(f: np.ndarray) -> np.ndarray:
    n = f.size
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(f))


def _inner(state: E2State, f: np.ndarray, g: np.ndarray) -> complex:
    w = state.params.P * 2.0 * np.pi / state.n_phi
    return complex(np.sum(np.conj(f) * g) * w)


def _apply_J(state: E2State, f: np.ndarray) -> np.ndarray:
    return 1j * state.params.hbar * _d_dphi(f)


def e2_closed_forms(params: E2Params) -> dict[str, float]:
    """Closed-form expectations and uncertainties of the state."""
    P, hb, lam, a = params.P, params.hbar, params.lam, params.alpha
    x = params.steepness
    ratio = bessel_i_scaled(1, x) / bessel_i_scaled(0, x)
    p_perp = P * ratio
    dp2 = lam * hb / 2.0 * p_perp
    dj2 = hb / (2.0 * lam) * p_perp
    # <cos^2(phi - alpha)>; the cross moment with sin(phi - alpha) vanishes by symmetry.
    c2 = ratio / x
    ca, sa = math.cos(a) ** 2, math.sin(a) ** 2
    return {
        "p_alpha": 0.0,
        "J": params.ell * hb,
        "p1": math.sin(a) * p_perp,
        "p2": -math.cos(a) * p_perp,
        "p_perp": p_perp,
        "var_p_alpha": dp2,
        "var_J": dj2,
        "dp_alpha": math.sqrt(dp2),
        "dJ": math.sqrt(dj2),
        "product": 0.5 * P * hb * ratio,
        "p1_sq": P * P * (ca * c2 + sa * (1.0 - c2)),
        "p2_sq": P * P * (sa * c2 + ca * (1.0 - c2)),
        "p_sq": P * P,
        "overall": 0.5 * hb * P * ratio * (hb * hb * lam + P * P / lam),
    }


def _measure(state: E2State) -> dict[str, float]:
    pr = state.params
    f = state.samples
    phi = state.phi_nodes
    p1 = pr.P * np.cos(phi)
    p2 = pr.P * np.sin(phi)
    pa = (math.cos(pr.alpha) * p1 + math.sin(pr.alpha) * p2)
    pperp = (math.sin(pr.alpha) * p1 - math.cos(pr.alpha) * p2)
    jf = _apply_J(state, f)
    rho = np.abs(f) ** 2
    w = pr.P * 2.0 * np.pi / state.n_phi
    ev = lambda g: float(np.sum(g * rho) * w)  # noqa: E731
    norm = ev(np.ones_like(phi))
    mp = ev(pa)
    mj = _inner(state, f, jf).real
    var_p = ev((pa - mp) ** 2)
    var_j = max(_inner(state, jf, jf).real - mj * mj, 0.0)
    out = {
        "norm": norm,
        "p_alpha": mp,
        "J": mj,
        "p1": ev(p1),
        "p2": ev(p2),
        "p_perp": ev(pperp),
        "var_p_alpha": var_p,
        "var_J": var_j,
        "dp_alpha": math.sqrt(var_p),
        "dJ": math.sqrt(var_j),
        "p1_sq": ev(p1 * p1),
        "p2_sq": ev(p2 * p2),
        "p_sq": ev(p1 * p1 + p2 * p2),
    }
    out["product"] = out["dp_alpha"] * out["dJ"]
    out["overall"] = pr.hbar**2 * var_p + pr.P**2 * var_j
    return out


_EQUATIONS = {
    "p_alpha": "<p(alpha)> = 0",
    "J": "<J> = ell hbar",
    "p1": "<p1> = sin(alpha) 2 pi |A|^2 P^2 I1(2P/(lambda hbar))",
    "p2": "<p2> = -cos(alpha) 2 pi |A|^2 P^2 I1(2P/(lambda hbar))",
    "p_perp": "<p_perp(alpha)> = P I1/I0",
    "var_p_alpha": "(dp(alpha))^2 = lambda (hbar/2) <p_perp>",
    "var_J": "(dJ)^2 = (1/lambda) (hbar/2) <p_perp>",
    "product": "dp dJ = (1/2) P hbar I1/I0",
    "p1_sq": "<p1^2> = P^2 (cos^2(alpha) c + sin^2(alpha) (1 - c)), c = I1/(x I0)",
    "p2_sq": "<p2^2> = P^2 (sin^2(alpha) c + cos^2(alpha) (1 - c)), c = I1/(x I0)",
    "p_sq": "<p1^2 + p2^2> = P^2",
    "overall": "hbar^2 dp^2 + P^2 dJ^2 = (1/2) hbar P (hbar^2 lambda + P^2/lambda) I1/I0",
}


def e2_report(state: E2State, rel_tol: float | None = None) -> UncertaintyReport:
    pr = state.params
    meas = _measure(state)
    cf = e2_closed_forms(pr)
    rep = UncertaintyReport(
        system="e2",
        params={"P": pr.P, "hbar": pr.hbar, "lambda": pr.lam, "alpha": pr.alpha, "ell": pr.ell},
        grid={"n_phi": state.n_phi, "rule": "trapezoid"},
    )
    rep.quadrature = dict(meas)
    scale = {"p_alpha": pr.P, "J": pr.hbar, "p1": pr.P, "p2": pr.P, "p_perp": pr.P}
    for key, eq in _EQUATIONS.items():
        abs_tol = 1e-10 * scale[key] if key in scale else 0.0
        rep.compare(key, meas[key], cf[key], eq, rel_tol=rel_tol, abs_tol=abs_tol)
    if state.n_phi >= e2_required_n_phi(pr):
        rep.residuals["saturation"] = _residual_on(state)
    else:
        rep.notes["saturation"] = (
            f"not reported: n_phi={state.n_phi} is below the steepness guard "
            f"{e2_required_n_phi(pr)}"
        )
    rep.residuals["saturation_gap"] = abs(
        meas["product"] - 0.5 * pr.hbar * abs(meas["p_perp"])
    )
    return rep


def _residual_on(state: E2State, samples: np.ndarray | None = None) -> float:
    pr = state.params
    f = state.samples if samples is None else samples
    phi = state.phi_nodes
    pa = pr.P * np.cos(phi - pr.alpha)
    jf = _apply_J(state, f)
    nrm2 = _inner(state, f, f).real
    mp = _inner(state, f, pa * f).real / nrm2
    mj = _inner(state, f, jf).real / nrm2
    r = pa * f - 1j * pr.lam * jf - (mp - 1j * pr.lam * mj) * f
    return math.sqrt(_inner(state, r, r).real / nrm2)


def e2_saturation_residual(state: E2State, samples: np.ndarray | None = None,
                           auto_refine: bool = True, max_n_phi: int = 1 << 20) -> float:
    """Relative norm of ``(p(alpha) - i lambda J - shift) phi``.

    The shift uses the state's own expectations.  With ``auto_refine`` the
    grid is doubled until it passes the steepness guard; that needs the
    analytic state, so custom ``samples`` disable refinement.
    """
    if samples is not None:
        return _residual_on(state, samples)
    need = e2_required_n_phi(state.params)
    if state.n_phi < need:
        if not auto_refine:
            raise ValueError(f"n_phi={state.n_phi} is below the steepness guard {need}")
        n = state.n_phi
        while n < need:
            n *= 2
        if n > max_n_phi:
            raise ValueError(f"required grid {n} exceeds max_n_phi={max_n_phi}")
        state = build_e2_state(state.params, n)
    return _residual_on(state)


# ---------------------------------------------------------------------------
# Joint saturation probe in a truncated Fourier basis.
#
# Columns are modes k = -K..K of e^{ik phi}/sqrt(2 pi P), rows k = -K-1..K+1,
# so the multiplication operators are represented without truncation error.


def _fourier_ops(P: float, hbar: float, K: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n = 2 * K + 1
    k = np.arange(-K, K + 1)
    E = np.zeros((n + 2, n))
    Jm = np.zeros((n + 2, n), dtype=complex)
    p1 = np.zeros((n + 2, n), dtype=complex)
    p2 = np.zeros((n + 2, n), dtype=complex)
    cols = np.arange(n)
    E[cols + 1, cols] = 1.0
    Jm[cols + 1, cols] = -hbar * k  # i hbar d/dphi e^{ik phi} = -hbar k e^{ik phi}
    p1[cols + 2, cols] = P / 2.0
    p1[cols, cols] = P / 2.0
    p2[cols + 2, cols] = P / 2j
    p2[cols, cols] = -P / 2j
    return E, Jm, p1, p2


def _to_lower_band(M: np.ndarray, bw: int) -> np.ndarray:
    n = M.shape[0]
    band = np.zeros((bw + 1, n), dtype=M.dtype)
    for d in range(bw + 1):
        band[d, : n - d] = np.diagonal(M, -d)
    return band


class _JointSystem:
    """Smallest singular value of the stacked shifted operators."""

    def __init__(self, blocks: list[np.ndarray], E: np.ndarray) -> None:
        # (B - cE)^H (B - cE) = G - conj(c) H - c H^H + |c|^2 E^T E, all pentadiagonal.
        band = lambda M: _to_lower_band(M, 2)  # noqa: E731
        self.G = [band(b.conj().T @ b) for b in blocks]
        self.H = [band(E.T @ b) for b in blocks]
        self.Hh = [band(b.conj().T @ E) for b in blocks]
        self.EE = band((E.T @ E).astype(complex))

    def sigma_min(self, shifts) -> float:
        M = np.zeros_like(self.G[0])
        for G, H, Hh, c in zip(self.G, self.H, self.Hh, shifts):
            M += G - np.conj(c) * H - c * Hh + abs(c) ** 2 * self.EE
        ev = eigvals_banded(M, lower=True, select="i", select_range=(0, 0))
        return math.sqrt(max(float(ev[0]), 0.0))


def e2_single_pair_sigma(P: float, hbar: float, lam: float, alpha: float, ell: int,
                         n_phi: int = 256) -> float:
    """Smallest singular value of ``p(alpha) - i lambda J`` at its true shift."""
    K = n_phi // 2 - 1
    E, Jm, p1, p2 = _fourier_ops(P, hbar, K)
    B = math.cos(alpha) * p1 + math.sin(alpha) * p2 - 1j * lam * Jm
    shift = -1j * lam * ell * hbar
    # Dense SVD here: the Gram route bottoms out near sqrt(eps).
    return float(np.linalg.svd(B - shift * E, compute_uv=False)[-1])


@dataclass
class JointProbeResult:
    min_sigma: float
    shifts: tuple[complex, complex]
    expectations: tuple[float, float, float]
    n_phi: int
    grid_min: float
    n_evaluations: int


def e2_joint_saturation_probe(P: float, hbar: float, lam1: float, lam2: float,
                              n_phi: int = 256, n_scan: int = 9, j_range: float | None = None,
                              refine: bool = True) -> JointProbeResult:
    """Minimal residual for simultaneous saturation of (p1, J) and (p2, J).

    Shifts are ``<p1> - i lam1 <J>`` and ``<p2> - i lam2 <J>`` with the
    expectations scanned over ``|<p_i>| <= P`` and ``|<J>| <= j_range``
    (default: ``4 hbar``), then refined locally from the best grid points.
    """
    if not (lam1 > 0 and lam2 > 0):
        raise ValueError("lambda1 and lambda2 must be positive")
    K = n_phi // 2 - 1
    E, Jm, p1, p2 = _fourier_ops(P, hbar, K)
    system = _JointSystem([p1 - 1j * lam1 * Jm, p2 - 1j * lam2 * Jm], E)
    jr = 4.0 * hbar if j_range is None else j_range
    count = [0]

    def objective(v) -> float:
        a1, a2, b = v
        count[0] += 1
        return system.sigma_min([a1 - 1j * lam1 * b, a2 - 1j * lam2 * b])

    pgrid = np.linspace(-P, P, n_scan)
    jgrid = np.linspace(-jr, jr, 2 * n_scan - 1)
    scored = []
    for a1 in pgrid:
        for a2 in pgrid:
            for b in jgrid:
                scored.append((objective((a1, a2, b)), (a1, a2, b)))
    scored.sort(key=lambda t: t[0])
    grid_min = scored[0][0]
    best_val, best_x = scored[0]
    if refine:
        for _, x0 in scored[:4]:
            res = minimize(objective, np.array(x0), method="Nelder-Mead",
                           options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 400})
            if res.fun < best_val:
                best_val, best_x = float(res.fun), tuple(res.x)
    a1, a2, b = best_x
    return JointProbeResult(
        min_sigma=float(best_val),
        shifts=(complex(a1, -lam1 * b), complex(a2, -lam2 * b)),
        expectations=(float(a1), float(a2), float(b)),
        n_phi=int(n_phi),
        grid_min=float(grid_min),
        n_evaluations=count[0],
    )
