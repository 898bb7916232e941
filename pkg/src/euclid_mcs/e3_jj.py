"""Most classical states for two angular momentum components J(alpha), J(beta).

``beta`` is the third axis and ``alpha`` has third component ``alpha3`` and
azimuth ``az``.  The eigenvalue of ``J(alpha) - i lambda J(beta)`` on a
saturating state is ``hbar C`` with ``C = m sqrt(1 - lambda^2 - 2 i lambda alpha3)``.
In the rotated stereographic coordinate ``xi = exp(-i az) zeta`` the
eigenfunctions are products of powers of ``xi - xi_pm`` and
``conj(xi) - xi_pm`` divided by ``(1 + |xi|^2)^j``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .report import UncertaintyReport
from .sphere import Direction, SphereGrid, build_grid, integrate
from .states import StateBundle, ValidationError
from .swsh import OperatorLabel, SpinField, analyze, apply, as_half_integer, inner

__all__ = [
    "JJParams",
    "PhiZeroFamily",
    "jj_eigenvalue",
    "jj_expectations",
    "jj_roots",
    "jj_exponents",
    "default_family",
    "build_jj_state_generic",
    "build_jj_state_exceptional",
    "build_jj_state",
    "jj_report",
    "jj_grid_for",
]

BETA = Direction((0.0, 0.0, 1.0))
EXCEPTIONAL_TOL = 1e-12


def _is_int(x: float) -> bool:
    return abs(x - round(x)) < 1e-12


@dataclass(frozen=True)
class JJParams:
    P: float = 1.0
    hbar: float = 1.0
    lam: float = 1.0
    s: float = 0.0
    j: float = 1.0
    m: float = 1.0
    alpha3: float = 0.0
    alpha_azimuth: float = 0.0
    sheet: int = 1

    def __post_init__(self) -> None:
        for name in ("P", "hbar", "lam"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive")
        s = as_half_integer(self.s, "spin")
        j = as_half_integer(self.j, "j")
        m = as_half_integer(self.m, "m")
        if j < abs(s) or not _is_int(j - abs(s)):
            raise ValidationError(f"j = {j} must be |s| + n with n = 0, 1, 2, ... (s = {s})", "BAD_J")
        if abs(m) > j or not _is_int(j - m):
            raise ValidationError(f"m = {m} must lie in -j, -j+1, ..., j (j = {j})", "BAD_M")
        if not -1.0 < self.alpha3 < 1.0:
            raise ValidationError("alpha3 must lie in (-1, 1): the directions may not be parallel",
                                  "PARALLEL_DIRECTIONS")
        if self.sheet not in (1, -1):
            raise ValueError("sheet must be +1 or -1")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "m", m)

    @property
    def exceptional(self) -> bool:
        return abs(self.alpha3) <= EXCEPTIONAL_TOL and abs(self.lam - 1.0) <= EXCEPTIONAL_TOL

    @property
    def alpha_dir(self) -> Direction:
        return Direction.from_tilt(self.alpha3, self.alpha_azimuth)


@dataclass(frozen=True)
class PhiZeroFamily:
    """Exponents ``a`` (at ``xi_+``) and ``b`` (at ``xi_-``) with ``a + b = j``."""

    a: float
    b: float

    def __post_init__(self) -> None:
        a = as_half_integer(self.a, "a")
        b = as_half_integer(self.b, "b")
        if a < 0 or b < 0:
            raise ValidationError("a and b must be non-negative", "BAD_FAMILY")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


def _root(params: JJParams) -> complex:
    """Principal ``sqrt(1 - lambda^2 - 2 i lambda alpha3)``.

    At ``alpha3 = 0`` the imaginary part is taken as ``-0`` so that the
    value is the limit from ``alpha3 > 0``.
    """
    lam, a3 = params.lam, params.alpha3
    imag = -2.0 * lam * a3 if a3 != 0.0 else -0.0
    return cmath.sqrt(complex(1.0 - lam * lam, imag))


def jj_eigenvalue(params: JJParams) -> complex:
    """``C``, with ``hbar C = <J(alpha)> - i lambda <J(beta)>``."""
    if params.exceptional:
        return 0j
    return params.sheet * params.m * _root(params)


def jj_expectations(params: JJParams) -> tuple[float, float]:
    """``(<J(alpha)>, <J(beta)>)`` from the closed forms."""
    hb, lam, a3, m = params.hbar, params.lam, params.alpha3, params.m
    if params.exceptional:
        return 0.0, 0.0
    if a3 == 0.0:
        if lam < 1.0:
            ja, lam_jb = m * hb * math.sqrt(1.0 - lam * lam), 0.0
        else:
            ja, lam_jb = 0.0, m * hb * math.sqrt(lam * lam - 1.0)
    else:
        q = 1.0 - lam * lam
        r = math.sqrt(q * q + 4.0 * lam * lam * a3 * a3)
        ja = m * hb / math.sqrt(2.0) * math.sqrt(max(q + r, 0.0))
        lam_jb = math.copysign(1.0, a3) * m * hb / math.sqrt(2.0) * math.sqrt(max(r - q, 0.0))
    return params.sheet * ja, params.sheet * lam_jb / lam


def jj_roots(params: JJParams) -> tuple[complex, complex]:
    """``(xi_+, xi_-)``; the sheet sign exchanges them."""
    r = math.sqrt(1.0 - params.alpha3**2)
    d = params.sheet * _root(params)
    base = complex(params.alpha3, -params.lam)
    return (base + d) / r, (base - d) / r


def jj_exponents(params: JJParams, family: PhiZeroFamily) -> tuple[int, int, int, int]:
    """Powers of ``(xi - xi_+), (conj xi - xi_+), (xi - xi_-), (conj xi - xi_-)``.

    The state is single-valued and regular exactly when all four are
    non-negative integers.
    """
    m, s, a, b = params.m, params.s, family.a, family.b
    if abs(a + b - params.j) > 1e-12:
        raise ValidationError(f"a + b = {a + b} must equal j = {params.j}", "BAD_FAMILY")
    ns = (a - (m - s) / 2, a + (m - s) / 2, b + (m + s) / 2, b - (m + s) / 2)
    if not all(_is_int(n) and n > -1e-12 for n in ns):
        raise ValidationError(
            f"(a, b) = ({a}, {b}) with m = {m}, s = {s} gives exponents {ns}; "
            "they must be non-negative integers for a single-valued regular state",
            "NOT_SINGLE_VALUED",
        )
    return tuple(int(round(n)) for n in ns)  # type: ignore[return-value]


def default_family(params: JJParams) -> PhiZeroFamily:
    """The admissible family with the smallest ``a``: ``a = |m - s| / 2``."""
    a = abs(params.m - params.s) / 2.0
    return PhiZeroFamily(a, params.j - a)


def jj_grid_for(params: JJParams) -> SphereGrid:
    L = params.j
    return build_grid(params.P, max(16, int(2 * L) + 4), max(32, int(4 * (L + abs(params.s))) + 8))


def _xi(params: JJParams, grid: SphereGrid) -> np.ndarray:
    return np.exp(-1j * params.alpha_azimuth) * grid.zeta()


def _finish(system: str, params: JJParams, grid: SphereGrid, samples: np.ndarray,
            family: dict) -> StateBundle:
    raw = SpinField(params.s, grid, samples)
    norm = raw.norm()
    f = raw.scaled(1.0 / norm)
    # The state is band-limited at j, so exact coefficients are available.
    f = SpinField(params.s, grid, f.samples, coeffs=analyze(f, params.j))
    ja, jb = jj_expectations(params)
    return StateBundle(
        system=system, field=f, params=params, normalization=1.0 / norm,
        targets={"C": jj_eigenvalue(params), "J_alpha": ja, "J_beta": jb},
        family=family,
    )


def build_jj_state_generic(params: JJParams, family: PhiZeroFamily | None = None,
                           grid: SphereGrid | None = None) -> StateBundle:
    if params.exceptional:
        raise ValidationError(
            "alpha3 = 0, lambda = 1 is the exceptional point; use build_jj_state_exceptional",
            "EXCEPTIONAL_POINT",
        )
    family = family or default_family(params)
    n1, n2, n3, n4 = jj_exponents(params, family)
    grid = grid or jj_grid_for(params)
    xp, xm = jj_roots(params)
    xi = _xi(params, grid)
    xb = np.conj(xi)
    samples = (xi - xp) ** n1 * (xb - xp) ** n2 * (xi - xm) ** n3 * (xb - xm) ** n4
    samples = samples / (1.0 + (xi * xb).real) ** params.j
    return _finish("e3-jj", params, grid, samples,
                   {"a": family.a, "b": family.b, "exponents": [n1, n2, n3, n4],
                    "xi_plus": [xp.real, xp.imag], "xi_minus": [xm.real, xm.imag]})


def build_jj_state_exceptional(params: JJParams, j: float | None = None,
                               grid: SphereGrid | None = None) -> StateBundle:
    """``(xi + i)^(j+s) (conj xi + i)^(j-s) / (1 + |xi|^2)^j`` with eigenvalue 0."""
    if not params.exceptional:
        raise ValidationError("the exceptional builder needs alpha3 = 0 and lambda = 1",
                              "NOT_EXCEPTIONAL")
    j = params.j if j is None else as_half_integer(j, "j")
    s = params.s
    if j < abs(s) or not _is_int(j - abs(s)):
        raise ValidationError(f"j = {j} must be |s| + n with n = 0, 1, 2, ...", "BAD_J")
    if j != params.j:
        params = JJParams(params.P, params.hbar, params.lam, s, j, min(abs(params.m), j),
                          params.alpha3, params.alpha_azimuth, params.sheet)
    grid = grid or jj_grid_for(params)
    xi = _xi(params, grid)
    xb = np.conj(xi)
    samples = (xi + 1j) ** int(round(j + s)) * (xb + 1j) ** int(round(j - s))
    samples = samples / (1.0 + (xi * xb).real) ** j
    return _finish("e3-jj", params, grid, samples, {"a": j, "exceptional": True})


def build_jj_state(params: JJParams, family: PhiZeroFamily | None = None,
                   grid: SphereGrid | None = None) -> StateBundle:
    if params.exceptional:
        return build_jj_state_exceptional(params, grid=grid)
    return build_jj_state_generic(params, family, grid)


_EQUATIONS = {
    "J_alpha": "<J(alpha)> = m (hbar/sqrt2) sqrt(1 - lambda^2 + sqrt((1 - lambda^2)^2 + 4 lambda^2 alpha3^2))",
    "J_beta": "lambda <J(beta)> = sign(alpha3) m (hbar/sqrt2) sqrt(lambda^2 - 1 + sqrt((1 - lambda^2)^2 + 4 lambda^2 alpha3^2))",
    "ratio": "dJ(alpha) / dJ(beta) = lambda",
    "product": "dJ(alpha) dJ(beta) = (hbar/2) |<J(alpha x beta)>|",
}


def _measure(bundle: StateBundle) -> dict[str, float]:
    pr: JJParams = bundle.params
    f = bundle.field
    hb = pr.hbar
    a = pr.alpha_dir
    ja = apply(OperatorLabel.J(a), f, hb)
    jb = apply(OperatorLabel.J(BETA), f, hb)
    cross = np.cross(a.vector, BETA.vector)
    jc = apply(OperatorLabel.J(Direction.normalized(cross)), f, hb)
    mean_a, mean_b = inner(f, ja).real, inner(f, jb).real
    var_a = inner(ja, ja).real - mean_a**2
    var_b = inner(jb, jb).real - mean_b**2
    C = jj_eigenvalue(pr)
    r_target = ja.samples - 1j * pr.lam * jb.samples - hb * C * f.samples
    shift = mean_a - 1j * pr.lam * mean_b
    r_sat = ja.samples - 1j * pr.lam * jb.samples - shift * f.samples
    j2 = inner(f, apply(OperatorLabel("J_squared", None), f, hb)).real
    dA, dB = math.sqrt(max(var_a, 0.0)), math.sqrt(max(var_b, 0.0))
    return {
        "norm": inner(f, f).real,
        "J_alpha": mean_a,
        "J_beta": mean_b,
        "dJ_alpha": dA,
        "dJ_beta": dB,
        "ratio": dA / dB if dB > 0 else math.inf,
        "product": dA * dB,
        "commutator_bound": 0.5 * hb * abs(inner(f, jc).real) * float(np.linalg.norm(cross)),
        "J_squared": j2,
        "eigen_residual": math.sqrt(integrate(f.grid, np.abs(r_target) ** 2).real),
        "saturation_residual": math.sqrt(integrate(f.grid, np.abs(r_sat) ** 2).real),
    }


def jj_report(bundle: StateBundle, rel_tol: float | None = None,
              residual_tol: float = 1e-6) -> UncertaintyReport:
    pr: JJParams = bundle.params
    meas = _measure(bundle)
    ja, jb = jj_expectations(pr)
    rep = UncertaintyReport(
        system="e3-jj",
        params={
            "P": pr.P, "hbar": pr.hbar, "lambda": pr.lam, "s": pr.s, "j": pr.j, "m": pr.m,
            "alpha3": pr.alpha3, "alpha_azimuth": pr.alpha_azimuth, "sheet": pr.sheet,
            "exceptional": pr.exceptional,
        },
        grid=bundle.field.grid.describe(),
        residual_tol=residual_tol,
    )
    rep.quadrature = dict(meas)
    C = jj_eigenvalue(pr)
    rep.quadrature["C_re"], rep.quadrature["C_im"] = C.real, C.imag
    tol = 1e-6 if rel_tol is None else rel_tol
    rep.compare("J_alpha", meas["J_alpha"], ja, _EQUATIONS["J_alpha"], tol, abs_tol=1e-9 * pr.hbar)
    rep.compare("J_beta", meas["J_beta"], jb, _EQUATIONS["J_beta"], tol, abs_tol=1e-9 * pr.hbar)
    if meas["dJ_beta"] > 0:
        rep.compare("ratio", meas["ratio"], pr.lam, _EQUATIONS["ratio"], tol)
    rep.compare("product", meas["product"], meas["commutator_bound"], _EQUATIONS["product"], tol,
                abs_tol=1e-12 * pr.hbar**2)
    if pr.j == max(abs(pr.m), abs(pr.s)) or pr.exceptional:
        jj = pr.j * (pr.j + 1.0) * pr.hbar**2
        rep.compare("J_squared", meas["J_squared"], jj, "<J^2> = j (j+1) hbar^2", tol)
    rep.residuals["eigen"] = meas["eigen_residual"]
    rep.residuals["saturation"] = meas["saturation_residual"]
    return rep
