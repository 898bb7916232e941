"""Most classical states of the pair (p(alpha), J(beta)) on the momentum sphere.

With ``beta`` along the third axis, saturating states exist only for
``alpha`` orthogonal to ``beta``.  They read

    phi = A(theta) exp((P sin(theta) / (lambda hbar)) sin(phi - alpha) + i ell phi)

where ``A`` is a free profile fixed only by normalization:
``1 = 2 pi P^2 int |A|^2 I_0(x sin(theta)) sin(theta) dtheta`` with
``x = 2P / (lambda hbar)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .report import UncertaintyReport
from .specfun import bessel_i_scaled
from .sphere import Direction, SphereGrid, build_grid, integrate
from .states import StateBundle, ValidationError
from .swsh import OperatorLabel, SpinField, apply, as_half_integer, inner

__all__ = [
    "AProfile",
    "PJParams",
    "NonOrthogonalDirections",
    "build_pj_state",
    "pj_closed_forms",
    "pj_report",
    "pj_grid_for",
    "pj_lambda_sweep",
    "BETA",
]

BETA = Direction((0.0, 0.0, 1.0))
ORTHOGONALITY_TOL = 1e-12


class NonOrthogonalDirections(ValidationError):
    code = "NON_ORTHOGONAL_DIRECTIONS"


@dataclass(frozen=True)
class AProfile:
    """Free theta profile: constant, or a polynomial in cos(theta).

    ``coefficients[k]`` multiplies ``cos(theta)**k``.
    """

    kind: str = "constant"
    coefficients: tuple[float, ...] = (1.0,)

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "polynomial"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        coeffs = tuple(float(c) for c in self.coefficients)
        if self.kind == "constant":
            coeffs = coeffs[:1] or (1.0,)
        if not coeffs or not any(c != 0 for c in coeffs):
            raise ValueError("profile must not vanish identically")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def constant(cls) -> "AProfile":
        return cls("constant", (1.0,))

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]) -> "AProfile":
        return cls("polynomial", tuple(coefficients))

    def __call__(self, theta):
        c = np.cos(theta)
        return np.polynomial.polynomial.polyval(c, self.coefficients) * np.ones_like(c)

    def describe(self) -> str:
        if self.kind == "constant":
            return "constant"
        return "poly(cos theta)[" + ",".join(format(c, ".17g") for c in self.coefficients) + "]"


@dataclass(frozen=True)
class PJParams:
    P: float = 1.0
    hbar: float = 1.0
    lam: float = 1.0
    s: float = 0.0
    alpha_dir: Direction = Direction((1.0, 0.0, 0.0))
    ell: int = 0
    profile: AProfile = field(default_factory=AProfile.constant)

    def __post_init__(self) -> None:
        for name in ("P", "hbar", "lam"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive")
        object.__setattr__(self, "s", as_half_integer(self.s, "spin"))
        if isinstance(self.ell, bool) or int(self.ell) != self.ell:
            raise ValueError("ell must be an integer")
        object.__setattr__(self, "ell", int(self.ell))

    @property
    def alpha3(self) -> float:
        return float(np.dot(self.alpha_dir.vector, BETA.vector))

    @property
    def steepness(self) -> float:
        return 2.0 * self.P / (self.lam * self.hbar)


def _check_orthogonal(params: PJParams) -> None:
    a3 = params.alpha3
    if abs(a3) > ORTHOGONALITY_TOL:
        raise NonOrthogonalDirections(
            f"alpha . beta = {a3:.6g} != 0: the solution of the saturation equation "
            "is periodic in the azimuth only if the two directions are orthogonal"
        )


def _log_norm(params: PJParams) -> float:
    """log of ``2 pi P^2 int |A|^2 I_0(x sin) sin dtheta`` by 1-D quadrature."""
    x = params.steepness
    prof = params.profile

    def integrand(t: float) -> float:
        y = x * math.sin(t)
        return abs(prof(t)) ** 2 * bessel_i_scaled(0, y) * math.exp(y - x) * math.sin(t)

    val = _quad(integrand)
    return math.log(2.0 * math.pi * params.P**2 * val) + x


def _quad(func) -> float:
    val, _ = quad(func, 0.0, math.pi, points=[math.pi / 2.0], epsabs=0.0, epsrel=1e-13, limit=400)
    return float(val)


def pj_grid_for(params: PJParams, n_theta: int | None = None, n_phi: int | None = None) -> SphereGrid:
    """Grid large enough for the state's concentration at the equator."""
    x = params.steepness
    nt = n_theta or max(48, 2 * int(math.ceil(math.sqrt(x) * 8)))
    npf = n_phi or max(64, 1 << int(math.ceil(math.log2(16.0 * x + 1.0))))
    return build_grid(params.P, nt, npf)


def build_pj_state(params: PJParams, grid: SphereGrid | None = None) -> StateBundle:
    _check_orthogonal(params)
    if grid is None:
        grid = pj_grid_for(params)
    if abs(grid.P - params.P) > 1e-14 * params.P:
        raise ValueError("grid radius does not match P")
    x = params.steepness
    alpha = params.alpha_dir.azimuth
    log_n = _log_norm(params)
    prof = params.profile
    ell = params.ell

    def sampler(th, ph):
        # Normalization folded into the exponent: exp(x/2 (sin th sin(ph - a) - 1)).
        expo = 0.5 * x * (np.sin(th) * np.sin(ph - alpha) - 1.0) - 0.5 * (log_n - x)
        return prof(th) * np.exp(expo) * np.exp(1j * ell * ph)

    f = SpinField.from_function(params.s, grid, sampler)
    return StateBundle(
        system="e3-pj",
        field=f,
        params=params,
        normalization=math.exp(-0.5 * log_n) if log_n < 1400 else 0.0,
        targets={"p_alpha": 0.0, "J3": (ell - params.s) * params.hbar},
        family={"profile": prof.describe(), "log_norm": log_n},
    )


def pj_closed_forms(params: PJParams) -> dict[str, float]:
    """1-D theta integrals for the uncertainties of the normalized state."""
    P, hb, lam = params.P, params.hbar, params.lam
    x = params.steepness
    prof = params.profile
    log_n = _log_norm(params)
    scale = math.exp(x - log_n)  # undo the e^{-x} scaling, divide by the norm

    def pieces(k: int, power: int):
        def g(t: float) -> float:
            y = x * math.sin(t)
            return abs(prof(t)) ** 2 * bessel_i_scaled(k, y) * math.exp(y - x) * math.sin(t) ** power
        return g

    int_i1 = _quad(pieces(1, 2)) * scale
    int_i0_3 = _quad(pieces(0, 3)) * scale
    int_i2_3 = _quad(pieces(2, 3)) * scale
    var_p = math.pi * lam * hb * P**3 * int_i1
    var_p_alt = math.pi * P**4 * (int_i0_3 - int_i2_3)
    p_perp = -2.0 * math.pi * P**3 * int_i1
    return {
        "p_alpha": 0.0,
        "J3": (params.ell - params.s) * hb,
        "p_perp": p_perp,
        "var_p_alpha": var_p,
        "var_p_alpha_I0_I2": var_p_alt,
        "var_J3": var_p / lam**2,
        "dp_alpha": math.sqrt(var_p),
        "dJ3": math.sqrt(var_p) / lam,
        "product": var_p / lam,
        "p_sq": P * P,
    }


_EQUATIONS = {
    "p_alpha": "<p(alpha)> = 0",
    "J3": "<J3> = (ell - s) hbar",
    "p_perp": "<p_perp(alpha)> = -2 pi P^3 int |A|^2 I1 sin^2",
    "var_p_alpha": "(dp(alpha))^2 = pi lambda hbar P^3 int |A|^2 I1 sin^2",
    "var_p_alpha_I0_I2": "(dp(alpha))^2 = pi P^4 int |A|^2 (I0 - I2) sin^3",
    "var_J3": "lambda^2 (dJ3)^2 = (dp(alpha))^2",
    "product": "dp dJ3 = (dp(alpha))^2 / lambda",
    "p_sq": "<p.p> = P^2",
}


def _measure(bundle: StateBundle) -> dict[str, float]:
    pr: PJParams = bundle.params
    f = bundle.field
    hb = pr.hbar
    a = pr.alpha_dir
    perp = Direction.normalized(np.cross(a.vector, BETA.vector))
    p_op = OperatorLabel.p(a)
    j_op = OperatorLabel.J(BETA)
    pf = apply(p_op, f, hb)
    jf = apply(j_op, f, hb, method="pointwise")
    ppf = apply(OperatorLabel.p(perp), f, hb)
    norm2 = inner(f, f).real
    mp = inner(f, pf).real
    mj = inner(f, jf).real
    var_p = inner(pf, pf).real - mp * mp
    var_j = inner(jf, jf).real - mj * mj
    # |p|^2 from the grid normal directly.
    rho = np.abs(f.samples) ** 2
    out = {
        "norm": norm2,
        "p_alpha": mp,
        "J3": mj,
        "p_perp": inner(f, ppf).real,
        "var_p_alpha": var_p,
        "var_p_alpha_I0_I2": var_p,
        "var_J3": var_j,
        "dp_alpha": math.sqrt(max(var_p, 0.0)),
        "dJ3": math.sqrt(max(var_j, 0.0)),
        "p_sq": integrate(f.grid, pr.P**2 * rho).real,
    }
    out["product"] = out["dp_alpha"] * out["dJ3"]
    target = -1j * pr.lam * (pr.ell - pr.s) * hb
    resid = pf.samples - 1j * pr.lam * jf.samples - target * f.samples
    out["eigen_residual"] = math.sqrt(integrate(f.grid, np.abs(resid) ** 2).real / norm2)
    shift = mp - 1j * pr.lam * mj
    resid = pf.samples - 1j * pr.lam * jf.samples - shift * f.samples
    out["saturation_residual"] = math.sqrt(integrate(f.grid, np.abs(resid) ** 2).real / norm2)
    return out


def pj_report(bundle: StateBundle, rel_tol: float | None = None,
              residual_tol: float = 1e-6) -> UncertaintyReport:
    pr: PJParams = bundle.params
    meas = _measure(bundle)
    cf = pj_closed_forms(pr)
    rep = UncertaintyReport(
        system="e3-pj",
        params={
            "P": pr.P, "hbar": pr.hbar, "lambda": pr.lam, "s": pr.s, "ell": pr.ell,
            "alpha": list(pr.alpha_dir.components), "beta": list(BETA.components),
            "profile": pr.profile.describe(),
        },
        grid=bundle.field.grid.describe(),
        residual_tol=residual_tol,
    )
    rep.quadrature = dict(meas)
    abs_scale = {"p_alpha": pr.P, "J3": pr.hbar, "p_perp": pr.P}
    for key, eq in _EQUATIONS.items():
        abs_tol = 1e-10 * abs_scale[key] if key in abs_scale else 0.0
        rep.compare(key, meas[key], cf[key], eq, rel_tol=rel_tol, abs_tol=abs_tol)
    rep.residuals["eigen"] = meas["eigen_residual"]
    rep.residuals["saturation"] = meas["saturation_residual"]
    rep.residuals["saturation_gap"] = abs(meas["product"] - 0.5 * pr.hbar * abs(meas["p_perp"]))
    rep.residuals["norm"] = abs(meas["norm"] - 1.0)
    return rep


@dataclass
class SweepRow:
    lam: float
    dp: float
    dJ: float
    product: float
    residual: float
    closed_form_product: float
    n_theta: int
    n_phi: int


def pj_lambda_sweep(base: PJParams, lambdas: Sequence[float], rel_conv: float = 1e-9,
                    max_doublings: int = 3) -> list[SweepRow]:
    """Product uncertainty over ``lambdas``, refining each grid until it converges."""
    rows = []
    for lam in lambdas:
        if not lam > 0:
            raise ValueError("every lambda must be positive")
        params = PJParams(base.P, base.hbar, float(lam), base.s, base.alpha_dir, base.ell, base.profile)
        grid = pj_grid_for(params)
        meas = _measure(build_pj_state(params, grid))
        for _ in range(max_doublings):
            finer = build_grid(params.P, 2 * grid.n_theta, 2 * grid.n_phi)
            new = _measure(build_pj_state(params, finer))
            done = abs(new["product"] - meas["product"]) <= rel_conv * abs(new["product"])
            grid, meas = finer, new
            if done:
                break
        rows.append(SweepRow(
            float(lam), meas["dp_alpha"], meas["dJ3"], meas["product"], meas["eigen_residual"],
            pj_closed_forms(params)["product"], grid.n_theta, grid.n_phi,
        ))
    return rows
