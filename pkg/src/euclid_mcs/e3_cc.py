"""The (C(alpha), C(beta)) pair: local solutions and why none is a state.

Saturation would require an eigenfunction of ``C(alpha) - i lambda C(beta)``
that is square integrable and differentiable away from isolated points.
The local solutions are known in closed form; periodicity and local
integrability around the singular points ``xi_+-, conj(xi_+-)`` reduce the
free data to a small integer system (the constraint ledger), and a
maximum-modulus argument then rules out every case.  This module evaluates
the local factor, enumerates the ledger, checks the coordinate maps used in
that argument, and runs a finite-basis residual probe as a numerical
companion to the analytic statement.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import eigvalsh, svdvals
from scipy.optimize import minimize

from .sphere import Direction, build_grid
from .states import ValidationError
from .swsh import OperatorLabel, SpectralCoeffs, SpinField, analyze, apply, as_half_integer

__all__ = [
    "CCParams",
    "ConstraintLedger",
    "cc_roots",
    "cc_eigenvalue_from_M",
    "cc_local_factor_F",
    "cc_local_solution",
    "cc_constraint_search",
    "cc_exceptional_constraints",
    "cc_Y_coefficients",
    "cc_z_map",
    "cc_v_map",
    "cc_u_map",
    "cc_z_preimage",
    "cc_u_preimage",
    "ProbeMatrix",
    "cc_probe_matrix",
    "jj_probe_matrix",
    "sigma_min",
    "ProbeRow",
    "cc_residual_probe",
    "cc_control_probe",
    "decay_trend",
    "cc_exceptional_control",
    "PARITY_TAGS",
    "TrendVerdict",
    "default_C_grid",
    "local_l2_growth",
]

BETA = Direction((0.0, 0.0, 1.0))
_TOL = 1e-12


@dataclass(frozen=True)
class CCParams:
    P: float = 1.0
    hbar: float = 1.0
    lam: float = 1.0
    s: float = 0.0
    alpha3: float = 0.5
    alpha_azimuth: float = 0.0

    def __post_init__(self) -> None:
        for name in ("P", "hbar", "lam"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive")
        if not -1.0 < self.alpha3 < 1.0:
            raise ValidationError("alpha must not be parallel with beta (|alpha3| < 1)",
                                  "PARALLEL_DIRECTIONS")
        object.__setattr__(self, "s", as_half_integer(self.s, "spin"))

    @property
    def exceptional(self) -> bool:
        return abs(self.alpha3) < _TOL and abs(self.lam - 1.0) < _TOL

    @property
    def alpha_dir(self) -> Direction:
        return Direction.from_tilt(self.alpha3, self.alpha_azimuth)

    @property
    def root(self) -> complex:
        """``sqrt(1 - lambda^2 - 2 i lambda alpha3)``, principal branch."""
        return cmath.sqrt(complex(1.0 - self.lam**2, -2.0 * self.lam * self.alpha3))


def cc_roots(params: CCParams) -> tuple[complex, complex]:
    """``(xi_+, xi_-)``, the zeros of the xi-component of Y; ``xi_+ xi_- = -1``."""
    if params.exceptional:
        return -1j, -1j
    r = math.sqrt(1.0 - params.alpha3**2)
    base = complex(params.alpha3, -params.lam)
    return (base + params.root) / r, (base - params.root) / r


def cc_eigenvalue_from_M(params: CCParams, M: complex) -> complex:
    """Dimensionless ``C`` (eigenvalue of the operator over hbar P) for power ``M``."""
    return -1j * M * params.root


# ---------------------------------------------------------------------------
# Local solutions.


def _cut_log(w: complex) -> complex:
    """log with the cut along the positive real axis: arg in [0, 2 pi)."""
    a = cmath.phase(w)
    if a < 0.0:
        a += 2.0 * math.pi
    return complex(math.log(abs(w)), a)


def _power(w: complex, p: complex) -> complex:
    return cmath.exp(p * _cut_log(w))


def cc_local_factor_F(xi: complex, params: CCParams, M: complex = 0.0) -> complex:
    """Coefficient of the free function in the general local solution.

    Generic case::

        (1 + |xi|^2) (xi - xi_+)^((M+s-1)/2) (conj(xi) - xi_+)^((M-s-1)/2)
                     (xi - xi_-)^((-M+s-1)/2) (conj(xi) - xi_-)^((-M-s-1)/2)

    Exceptional case (zero eigenvalue forced)::

        (1 + |xi|^2) (xi + i)^(s-1) (conj(xi) + i)^(-s-1)

    Each non-integer power has its cut along the horizontal ray running from
    its branch point towards positive real part.
    """
    xi = complex(xi)
    xb = xi.conjugate()
    s = params.s
    if params.exceptional:
        if abs(xi + 1j) < _TOL or abs(xb + 1j) < _TOL:
            raise ValidationError(f"xi = {xi} is a singular point", "SINGULAR_POINT")
        return (1.0 + abs(xi) ** 2) * _power(xi + 1j, s - 1.0) * _power(xb + 1j, -s - 1.0)
    xp, xm = cc_roots(params)
    for w in (xi - xp, xb - xp, xi - xm, xb - xm):
        if abs(w) < _TOL:
            raise ValidationError(f"xi = {xi} is a singular point", "SINGULAR_POINT")
    return (
        (1.0 + abs(xi) ** 2)
        * _power(xi - xp, 0.5 * (M + s - 1.0))
        * _power(xb - xp, 0.5 * (M - s - 1.0))
        * _power(xi - xm, 0.5 * (-M + s - 1.0))
        * _power(xb - xm, 0.5 * (-M - s - 1.0))
    )


def cc_local_solution(params: CCParams, M: complex = 0.0, C: complex = 0.0):
    """Sampler ``(theta, phi) -> phi_local`` with the free function set to 1.

    In the exceptional case ``C`` multiplies ``exp(-i C (u1 + u2))``.
    """
    az = params.alpha_azimuth

    def f(th, ph):
        th, ph = np.broadcast_arrays(np.asarray(th, float), np.asarray(ph, float))
        xi = np.exp(1j * (ph - az)) / np.tan(th / 2.0)
        out = np.empty(xi.shape, dtype=complex)
        for idx, x in np.ndenumerate(xi):
            val = cc_local_factor_F(complex(x), params, M)
            if params.exceptional and C != 0:
                u = 1.0 / (1j + x) + 1.0 / (1j + np.conj(x))
                val *= cmath.exp(-1j * C * u)
            out[idx] = val
        return out

    return f


# ---------------------------------------------------------------------------
# Constraint ledger.

PARITY_TAGS = {
    "odd/odd": "F smooth off the singular points; bounded phi0 vanishes by the maximum-modulus lemma",
    "even/even": "square-root factorization gives phi1 phi2 = phi0^2, which the lemma forces to vanish",
    "mixed": "jump lines force a two-sheeted surface on which the extended phi0 would attain a maximum",
}


@dataclass(frozen=True)
class ConstraintLedger:
    n1: int
    n2: int
    n3: int
    n4: int
    s: Fraction
    a: Fraction
    b: Fraction
    M: Fraction
    parity: str
    conclusion: str

    @property
    def tag(self) -> str:
        return PARITY_TAGS[self.parity]

    def to_dict(self) -> dict:
        return {
            "n": [self.n1, self.n2, self.n3, self.n4], "s": str(self.s), "a": str(self.a),
            "b": str(self.b), "M": str(self.M), "parity": self.parity, "tag": self.tag,
            "conclusion": self.conclusion,
        }


def _parity(k: int) -> str:
    return "odd" if k % 2 else "even"


def cc_constraint_search(s: float, n_max: int) -> list[ConstraintLedger]:
    """All ``(n1..n4)`` in ``[0, n_max]`` compatible with spin ``s``.

    ``a = (1+n1+n4)/2``, ``b = (1+n2+n3)/2``, ``2M = n1+n2-n3-n4`` and
    ``2s = n1-n2+n3-n4``; then ``M + s = n1 - n4`` and ``M - s = n2 - n3``.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    s_f = Fraction(as_half_integer(s, "spin")).limit_denominator(2)
    two_s = int(2 * s_f)
    out = []
    rng = range(n_max + 1)
    for n1 in rng:
        for n2 in rng:
            for n3 in rng:
                n4 = n1 - n2 + n3 - two_s
                if not 0 <= n4 <= n_max:
                    continue
                M = Fraction(n1 + n2 - n3 - n4, 2)
                plus, minus = n1 - n4, n2 - n3
                pp, pm = _parity(plus), _parity(minus)
                parity = f"{pp}/{pm}" if pp == pm else "mixed"
                out.append(ConstraintLedger(
                    n1, n2, n3, n4, s_f, Fraction(1 + n1 + n4, 2), Fraction(1 + n2 + n3, 2), M,
                    parity, "NO_STATE",
                ))
    return out


def cc_exceptional_constraints(s: float, n_max: int) -> list[dict]:
    """Exceptional-case ledger: decay power ``a = 1 + (n1+n2)/2`` with ``2s = n1 - n2``."""
    s = as_half_integer(s, "spin")
    two_s = int(round(2 * s))
    rows = []
    for n1 in range(n_max + 1):
        n2 = n1 - two_s
        if 0 <= n2 <= n_max:
            rows.append({
                "n1": n1, "n2": n2, "a": 1.0 + 0.5 * (n1 + n2),
                "argument": "Liouville" if float(s).is_integer() else "two-sheeted extension",
                "conclusion": "NO_STATE",
            })
    return rows


# ---------------------------------------------------------------------------
# The vector field Y and the adapted coordinates.


def cc_Y_coefficients(xi: complex, params: CCParams) -> tuple[complex, complex]:
    """Components of Y along d/dxi and d/dconj(xi) at ``xi``."""
    r = math.sqrt(1.0 - params.alpha3**2)
    k = complex(params.alpha3, -params.lam)
    xb = np.conj(xi)
    return 0.5 * r * (1.0 - xi * xi) + k * xi, 0.5 * r * (1.0 - xb * xb) + k * xb


def cc_z_map(xi, params: CCParams):
    """Invariant of Y in the generic case; its level sets carry the free function."""
    if params.exceptional:
        raise ValidationError("the exceptional point uses the u coordinate instead", "EXCEPTIONAL_POINT")
    xp, xm = cc_roots(params)
    xb = np.conj(xi)
    return (xi - xm) * (xb - xp) / ((xb - xm) * (xi - xp))


def cc_v_map(xi, params: CCParams):
    """``v = u1 + u2`` with ``Y(v) = 1`` (generic) or the exceptional ``u1 + u2``."""
    xb = np.conj(xi)
    if params.exceptional:
        return 1.0 / (1j + xi) + 1.0 / (1j + xb)
    xp, xm = cc_roots(params)
    pre = -0.5 / params.root
    return pre * (np.log((xi - xp) / (xi - xm)) + np.log((xb - xp) / (xb - xm)))


def cc_u_map(xi):
    """Exceptional-case coordinate ``u = 1/(i + xi) - 1/(i + conj(xi))``."""
    return 1.0 / (1j + xi) - 1.0 / (1j + np.conj(xi))


def _positive_root(B: complex) -> tuple[float, float]:
    """Positive root of ``r^2 - B r - 1 = 0`` and the discriminant (B real in theory)."""
    Br = B.real  # imaginary part is roundoff
    disc = Br * Br + 4.0
    return 0.5 * (Br + math.sqrt(disc)), disc


def cc_z_preimage(z: complex, params: CCParams) -> tuple[complex, float]:
    """A point ``xi`` with ``z(xi) = z`` (z != 1) and the r-quadratic discriminant."""
    if params.exceptional:
        raise ValidationError("the exceptional point uses the u coordinate instead", "EXCEPTIONAL_POINT")
    xp, xm = cc_roots(params)
    zb = z.conjugate()
    num = (z - 1) * (zb * xm.conjugate() - xp.conjugate()) - (zb - 1) * (z * xp - xm)
    den = (zb - 1) * (z * xm - xp) - (z - 1) * (zb * xp.conjugate() - xm.conjugate())
    e2 = num / den
    best = None
    for chi in (0.5 * cmath.phase(e2), 0.5 * cmath.phase(e2) + math.pi):
        e = cmath.exp(1j * chi)
        # Sum (not difference) of the two divided equations; the difference
        # vanishes identically once chi is fixed.
        B = 0.5 * (e * ((z * xm - xp) / (z - 1) + (zb * xp.conjugate() - xm.conjugate()) / (zb - 1))
                   + (1 / e) * ((z * xp - xm) / (z - 1) + (zb * xm.conjugate() - xp.conjugate()) / (zb - 1)))
        r, disc = _positive_root(B)
        xi = r * e
        err = abs(cc_z_map(xi, params) - z)
        if best is None or err < best[2]:
            best = (xi, disc, err)
    return best[0], best[1]


def cc_u_preimage(u: complex) -> tuple[complex, float]:
    """A point ``xi`` with ``u(xi) = u`` (u != 0) and the r-quadratic discriminant."""
    ub = u.conjugate()
    e2 = (u + ub - 2j * u * ub) / (u + ub + 2j * u * ub)
    best = None
    for chi in (0.5 * cmath.phase(e2), 0.5 * cmath.phase(e2) + math.pi):
        e = cmath.exp(1j * chi)
        B = -0.5 * (e * (1 / u - 1 / ub) + (1 / e) * (1 / ub - 1 / u))
        r, disc = _positive_root(B)
        xi = r * e
        err = abs(cc_u_map(xi) - u)
        if best is None or err < best[2]:
            best = (xi, disc, err)
    return best[0], best[1]


# ---------------------------------------------------------------------------
# Finite-basis residual probe.


@dataclass(eq=False)
class ProbeMatrix:
    """``A``: operator over ``hbar P`` from ``j <= j_max`` into ``j <= j_max + 1``.

    ``E`` is the inclusion of the domain into the codomain.  Columns are
    orthonormal harmonics, so ``||A x - c E x||`` is the residual of the
    unit-norm state with coefficient vector ``x``.
    """

    A: np.ndarray
    E: np.ndarray
    labels: list[tuple[float, float]]
    j_max: float
    gram: np.ndarray = field(init=False)
    cross: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.gram = self.A.conj().T @ self.A
        self.cross = self.E.conj().T @ self.A

    def ritz_values(self) -> np.ndarray:
        return np.linalg.eigvals(self.cross)


def _basis(s: float, j_max: float) -> list[tuple[float, float]]:
    out = []
    j = abs(s)
    while j <= j_max + 1e-9:
        out.extend((j, m) for m in np.arange(-j, j + 0.5))
        j += 1.0
    return out


def _check_j_max(s: float, j_max: float) -> float:
    j_max = as_half_integer(j_max, "j_max")
    if not float(j_max - abs(s)).is_integer() or j_max < abs(s):
        raise ValueError(f"j_max = {j_max} incompatible with spin {s}")
    return j_max


def _operator_matrix(s: float, j_max: float, P: float, hbar: float, label, alpha: Direction,
                     lam: float, out_extra: int) -> ProbeMatrix:
    j_max = _check_j_max(s, j_max)
    L = j_max + out_extra
    grid = build_grid(P, int(2 * L + 4), int(4 * L + 8))
    labels = _basis(s, j_max)
    mask = SpectralCoeffs.zeros(s, L).valid_mask()
    A = np.empty((int(mask.sum()), len(labels)), dtype=complex)
    E = np.zeros_like(A)
    for k, (j, m) in enumerate(labels):
        f = SpinField.harmonic(s, j, m, grid)
        ga = analyze(apply(label(alpha), f, hbar, "spectral"), L).data
        gb = analyze(apply(label(BETA), f, hbar, "spectral"), L).data
        A[:, k] = (ga - 1j * lam * gb)[mask]
        E[:, k] = SpectralCoeffs.from_dict(s, L, {(j, m): 1.0}).data[mask]
    return ProbeMatrix(A / (hbar * P), E, labels, j_max)


def cc_probe_matrix(params: CCParams, j_max: float) -> ProbeMatrix:
    if j_max < abs(params.s) + 2:
        raise ValueError("j_max must be at least |s| + 2")
    return _operator_matrix(params.s, j_max, params.P, params.hbar, OperatorLabel.C,
                            params.alpha_dir, params.lam, 1)


def jj_probe_matrix(P: float, hbar: float, lam: float, s: float, alpha3: float,
                    j_max: float, alpha_azimuth: float = 0.0) -> ProbeMatrix:
    """Same construction for ``J(alpha) - i lambda J(beta)`` (operator over hbar)."""
    pm = _operator_matrix(s, j_max, P, hbar, OperatorLabel.J,
                          Direction.from_tilt(alpha3, alpha_azimuth), lam, 0)
    return ProbeMatrix(pm.A * P, pm.E, pm.labels, pm.j_max)


def sigma_min(pm: ProbeMatrix, c: complex, exact: bool = False) -> float:
    """Smallest singular value of ``A - c E``.

    The Gram form is fast and adequate for searching; ``exact`` uses the SVD
    and resolves values near machine precision.
    """
    if exact:
        return float(svdvals(pm.A - c * pm.E)[-1])
    H = pm.gram - np.conj(c) * pm.cross - c * pm.cross.conj().T + abs(c) ** 2 * np.eye(pm.gram.shape[0])
    w = eigvalsh(H, subset_by_index=[0, 0])
    return math.sqrt(max(float(w[0]), 0.0))


@dataclass(frozen=True)
class ProbeRow:
    j_max: float
    best_C: complex
    sigma_min: float
    sigma_at_zero: float
    n_basis: int

    def csv(self) -> str:
        return ",".join(repr(float(x)) for x in (self.j_max, self.best_C.real, self.best_C.imag, self.sigma_min))


def default_C_grid(radius: float = 4.0, n_r: int = 8, n_angle: int = 16) -> list[complex]:
    out = [0j]
    for r in np.linspace(radius / n_r, radius, n_r):
        out.extend(r * np.exp(1j * np.linspace(0.0, 2.0 * np.pi, n_angle, endpoint=False)))
    return out


def _minimize_in_disc(pm: ProbeMatrix, seeds: Iterable[complex], radius: float, n_best: int = 3):
    seeds = [c for c in seeds if abs(c) <= radius]
    scored = sorted(((sigma_min(pm, c), c) for c in seeds), key=lambda t: t[0])[:n_best]

    def obj(x):
        c = complex(x[0], x[1])
        excess = abs(c) - radius
        return sigma_min(pm, c) + (1e3 * excess if excess > 0 else 0.0)

    best_val, best_c = scored[0]
    for _, c in scored:
        res = minimize(obj, [c.real, c.imag], method="Nelder-Mead",
                       options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 400})
        cand = complex(res.x[0], res.x[1])
        if abs(cand) <= radius and res.fun < best_val:
            best_val, best_c = res.fun, cand
    return best_c


def cc_residual_probe(params: CCParams, j_values: Sequence[float],
                      C_grid: Sequence[complex] | None = None, radius: float = 4.0,
                      refine: bool = True) -> list[ProbeRow]:
    """Min over trial eigenvalues ``C`` (units of hbar P) of ``sigma_min(Op - C)``.

    Trial values are restricted to the disc ``|C| <= radius``.  Seeds are the
    grid points and the in-disc Ritz values of the square truncation; the
    best seeds are refined by Nelder-Mead inside the disc.
    """
    grid_C = list(default_C_grid(radius) if C_grid is None else C_grid)
    rows = []
    for j_max in j_values:
        pm = cc_probe_matrix(params, j_max)
        seeds = grid_C + list(pm.ritz_values())
        if refine:
            c = _minimize_in_disc(pm, seeds, radius)
        else:
            c = min(seeds, key=lambda t: sigma_min(pm, t) if abs(t) <= radius else math.inf)
        rows.append(ProbeRow(float(j_max), complex(c), sigma_min(pm, c, exact=True),
                             sigma_min(pm, 0j, exact=True), len(pm.labels)))
    return rows


def cc_control_probe(P: float, hbar: float, lam: float, s: float, j: float, m: float,
                     alpha3: float, sheet: int = 1, j_max: float | None = None) -> float:
    """``sigma_min`` of the (J, J) operator at its known eigenvalue."""
    from .e3_jj import JJParams, jj_eigenvalue

    jp = JJParams(P=P, hbar=hbar, lam=lam, s=s, j=j, m=m, alpha3=alpha3, sheet=sheet)
    pm = jj_probe_matrix(P, hbar, lam, s, alpha3, j + 2 if j_max is None else j_max)
    return sigma_min(pm, jj_eigenvalue(jp), exact=True)


@dataclass(frozen=True)
class TrendVerdict:
    floor: float
    sigmas: tuple[float, ...]
    log_slope: float
    decays: bool

    def to_dict(self) -> dict:
        return {"floor": self.floor, "sigmas": list(self.sigmas), "log_slope": self.log_slope,
                "decays": self.decays}


def decay_trend(rows: Sequence[ProbeRow], floor_fraction: float = 0.5,
                attr: str = "sigma_min") -> TrendVerdict:
    """Flag a decay trend when some later value drops below ``floor_fraction`` of the first.

    The floor is the first (smallest ``j_max``) value times ``floor_fraction``;
    ``log_slope`` is the least-squares slope of ``log sigma`` against
    ``log j_max`` for reference.
    """
    vals = np.array([getattr(r, attr) for r in rows], dtype=float)
    js = np.array([r.j_max for r in rows], dtype=float)
    floor = floor_fraction * float(vals[0])
    slope = float(np.polyfit(np.log(js), np.log(np.maximum(vals, 1e-300)), 1)[0]) if len(rows) > 1 else 0.0
    return TrendVerdict(floor, tuple(float(v) for v in vals), slope, bool(np.any(vals < floor)))


def cc_exceptional_control(s: float, j_max: float, radii: Sequence[float] = (0.5, 1.0),
                           n_angle: int = 16, P: float = 1.0, hbar: float = 1.0) -> dict:
    """Exceptional point: residual at ``C = 0`` versus rings of nonzero ``C``."""
    pm = cc_probe_matrix(CCParams(P=P, hbar=hbar, lam=1.0, s=s, alpha3=0.0), j_max)
    zero = sigma_min(pm, 0j, exact=True)
    rings = {}
    for r in radii:
        cs = r * np.exp(1j * np.linspace(0.0, 2.0 * np.pi, n_angle, endpoint=False))
        rings[float(r)] = min(sigma_min(pm, c, exact=True) for c in cs)
    return {"sigma_zero": zero, "ring_min": rings, "nonzero_larger": all(v > zero for v in rings.values())}


def local_l2_growth(s: float, C: complex, eps_values: Sequence[float], R: float = 0.5,
                    n_r: int = 200, n_chi: int = 256) -> list[float]:
    """``int |phi_local|^2`` over ``eps < |xi + i| < R`` for shrinking ``eps`` (exceptional case)."""
    params = CCParams(lam=1.0, s=s, alpha3=0.0)
    out = []
    chi = np.linspace(0.0, 2.0 * np.pi, n_chi, endpoint=False)
    for eps in eps_values:
        # Log-spaced radii resolve the approach to the singular point.
        t, w = np.polynomial.legendre.leggauss(n_r)
        lr = 0.5 * (t + 1.0) * (math.log(R) - math.log(eps)) + math.log(eps)
        wr = 0.5 * w * (math.log(R) - math.log(eps))
        total = 0.0
        for rho, wt in zip(np.exp(lr), wr):
            xi = -1j + rho * np.exp(1j * chi)
            vals = np.empty(chi.size)
            for k, x in enumerate(xi):
                F = cc_local_factor_F(complex(x), params)
                u = 1.0 / (1j + x) + 1.0 / (1j + np.conj(x))
                lg = (-1j * C * u).real
                vals[k] = abs(F) ** 2 * math.exp(min(2.0 * lg, 700.0))
            # Area element rho drho dchi, with drho = rho dlog(rho).
            total += wt * rho * rho * vals.mean() * 2.0 * math.pi
        out.append(total)
    return out
