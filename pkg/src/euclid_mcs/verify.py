"""Invariant suite behind ``euclid-mcs verify``.

Each check returns ``(passed, detail)``.  The quick subset skips the
expensive (C, C) trend probe and the finer E(2) joint-probe grids.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["CheckResult", "CHECKS", "run_suite", "format_table"]


@dataclass
class CheckResult:
    name: str
    group: str
    passed: bool
    detail: str
    seconds: float

    def to_dict(self) -> dict:
        return {"name": self.name, "group": self.group, "passed": self.passed,
                "detail": self.detail, "seconds": self.seconds}


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


# ---------------------------------------------------------------------------
# specfun


def _specfun_recurrence():
    from .specfun import bessel_i

    rng = np.random.default_rng(1)
    worst = 0.0
    for x in rng.uniform(0.01, 50.0, 40):
        for k in range(7):
            lhs = x * (bessel_i(k, x) - bessel_i(k + 2, x))
            rhs = 2.0 * (k + 1) * bessel_i(k + 1, x)
            worst = max(worst, _rel(lhs, rhs))
    return worst < 1e-10, f"max rel err {worst:.2e}"


def _specfun_integral_form():
    from .specfun import bessel_i

    w = 2.0 * np.pi * np.arange(512) / 512
    worst = odd = 0.0
    for x in (0.5, 2.0, 7.5, 20.0):
        for k in range(5):
            ref = np.mean(np.exp(x * np.cos(w)) * np.cos(k * w))
            worst = max(worst, _rel(bessel_i(k, x), ref))
            # Relative to the size of the even integral 2 pi I_0(x).
            odd = max(odd, abs(np.mean(np.exp(x * np.cos(w)) * np.sin(k * w))) / bessel_i(0, x))
    return worst < 1e-12 and odd < 1e-12, f"series/integral {worst:.2e}, odd-sine {odd:.2e}"


def _specfun_asymptotic():
    from .specfun import bessel_i, bessel_i_scaled

    x = 1000.0
    ref = (2.0 * math.pi * x) ** -0.5 * (1.0 + 1.0 / (8.0 * x))
    err = _rel(bessel_i_scaled(0, x), ref)
    par = max(abs(bessel_i(k, -3.2) - (-1) ** k * bessel_i(k, 3.2)) for k in range(6))
    return err < 1e-5 and par == 0.0, f"asymptotic rel {err:.2e}, parity {par:.1e}"


def _specfun_derivatives():
    from .specfun import bessel_i

    worst = 0.0
    for x in (0.7, 3.0, 11.0):
        h = 1e-4
        d1 = (bessel_i(0, x + h) - bessel_i(0, x - h)) / (2 * h)
        d2 = (bessel_i(0, x + h) - 2 * bessel_i(0, x) + bessel_i(0, x - h)) / h**2
        worst = max(worst, _rel(d1, bessel_i(1, x)), _rel(2 * d2 - bessel_i(0, x), bessel_i(2, x)))
    return worst < 1e-5, f"max rel err {worst:.2e}"


def _specfun_gamma():
    from .specfun import euler_beta, ln_gamma

    worst = max(_rel(math.exp(ln_gamma(x + 1) - ln_gamma(x)), x) for x in (0.3, 1.7, 9.2))
    b = _rel(euler_beta(0.5, 0.5), math.pi)
    return worst < 1e-12 and b < 1e-12, f"recurrence {worst:.2e}, B(1/2,1/2) {b:.2e}"


# ---------------------------------------------------------------------------
# sphere and swsh


def _sphere_area():
    from .sphere import build_grid, integrate

    g = build_grid(2.0, 16, 32)
    th = np.broadcast_to(g.mesh()[0], g.shape)
    a = _rel(integrate(g, np.ones(g.shape)).real, 16.0 * math.pi)
    c = abs(integrate(g, np.cos(th)))
    return a < 1e-13 and c < 1e-12, f"area {a:.2e}, odd {c:.2e}"


def _random_field(s: float, L: float, grid, rng):
    from .swsh import SpectralCoeffs, SpinField

    c = SpectralCoeffs.zeros(s, L)
    c.data[:] = (rng.normal(size=c.data.shape) + 1j * rng.normal(size=c.data.shape)) * c.valid_mask()
    return SpinField.from_coeffs(c, grid)


_EPS = np.zeros((3, 3, 3))
_EPS[0, 1, 2] = _EPS[1, 2, 0] = _EPS[2, 0, 1] = 1.0
_EPS[0, 2, 1] = _EPS[2, 1, 0] = _EPS[1, 0, 2] = -1.0


def _commutators(j_max: float = 6.0):
    from .sphere import Direction, build_grid
    from .swsh import OperatorLabel, apply

    P, hb = 1.3, 0.8
    g = build_grid(P, int(2 * j_max) + 12, int(4 * j_max) + 24)
    rng = np.random.default_rng(7)
    axes = [Direction(tuple(np.eye(3)[i])) for i in range(3)]
    worst = 0.0
    for s in (0.0, 0.5, -1.0):
        f = _random_field(s, j_max + abs(s), g, rng)
        cache: dict = {}

        def op(kind, i, x, tag):
            key = (kind, i, tag)
            if key not in cache:
                cache[key] = apply(OperatorLabel(kind, axes[i]), x, hb)
            return cache[key]

        def A(kind, i):
            return op(kind, i, f, "f")

        def AB(k1, i, k2, j):
            inner_f = A(k2, j)
            return op(k1, i, inner_f, (k2, j))

        scale = np.max(np.abs(f.samples)) * P * P
        W = hb * P * s
        for i in range(3):
            for j in range(3):
                pj = AB("p_component", i, "J_component", j).samples - AB("J_component", j, "p_component", i).samples
                rhs = sum(1j * hb * _EPS[i, j, k] * A("p_component", k).samples for k in range(3))
                jj = AB("J_component", i, "J_component", j).samples - AB("J_component", j, "J_component", i).samples
                rhs2 = sum(1j * hb * _EPS[i, j, k] * A("J_component", k).samples for k in range(3))
                pc = AB("p_component", i, "C_component", j).samples - AB("C_component", j, "p_component", i).samples
                rhs3 = -1j * hb * ((i == j) * P * P * f.samples - AB("p_component", i, "p_component", j).samples)
                cc = AB("C_component", i, "C_component", j).samples - AB("C_component", j, "C_component", i).samples
                rhs4 = -1j * hb * (
                    sum(_EPS[i, j, l] * A("p_component", l).samples for l in range(3)) * W
                    + AB("C_component", i, "p_component", j).samples
                    - AB("C_component", j, "p_component", i).samples
                )
                pp = AB("p_component", i, "p_component", j).samples - AB("p_component", j, "p_component", i).samples
                for lhs, r in ((pj, rhs), (jj, rhs2), (pc, rhs3), (cc, rhs4), (pp, 0.0)):
                    worst = max(worst, float(np.max(np.abs(lhs - r))) / scale)
    return worst < 1e-8, f"max rel err {worst:.2e}"


def _hermiticity():
    from .sphere import Direction, build_grid
    from .swsh import OperatorLabel, apply, inner

    P, hb = 1.1, 0.9
    g = build_grid(P, 24, 48)
    rng = np.random.default_rng(3)
    d = Direction.normalized(rng.normal(size=3))
    worst = 0.0
    for s in (0.0, 0.5, 1.0):
        f = _random_field(s, 6 + abs(s), g, rng)
        h = _random_field(s, 6 + abs(s), g, rng)
        for lab in (OperatorLabel.p(d), OperatorLabel.J(d), OperatorLabel.C(d)):
            a = inner(f, apply(lab, h, hb))
            b = np.conj(inner(h, apply(lab, f, hb)))
            worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    return worst < 1e-8, f"max rel err {worst:.2e}"


def _casimir():
    from .sphere import build_grid
    from .swsh import OperatorLabel, SpinField, apply

    hb = 0.7
    g = build_grid(1.0, 20, 40)
    worst = 0.0
    for s in (0.0, 0.5, 1.0):
        j = abs(s)
        while j <= 6.0:
            for m in (-j, j - math.floor(j), j):
                Y = SpinField.harmonic(s, j, m, g)
                out = apply(OperatorLabel("J_squared", None), Y, hb).samples
                ref = j * (j + 1) * hb**2 * Y.samples
                worst = max(worst, float(np.max(np.abs(out - ref))) / max(1.0, j * (j + 1) * hb**2))
            j += 1.0
    return worst < 1e-8, f"max rel err {worst:.2e}"


def _edth_frame():
    from .sphere import build_grid
    from .swsh import SpinField, analyze, edth

    P = 1.7
    g = build_grid(P, 24, 64)
    n, m = g.unit_normal(), g.m_field()
    worst = 0.0
    for i in range(3):
        for s, vals, target in ((0, P * n[i], m[i]), (1, m[i], 0.0), (-1, np.conj(m[i]), -n[i] / P)):
            f = SpinField(s, g, vals)
            f = SpinField(s, g, vals, coeffs=analyze(f, 3))
            worst = max(worst, float(np.max(np.abs(edth(f).samples - target))))
    return worst < 1e-8, f"max abs err {worst:.2e}"


# ---------------------------------------------------------------------------
# families


def _e2_grid():
    from .e2 import E2Params, build_e2_state, e2_report

    worst = 0.0
    ok = True
    for lam in (0.1, 1.0, 10.0):
        for ell in (0, 1, -1, 3):
            for alpha in (0.0, math.pi / 3):
                pr = E2Params(lam=lam, alpha=alpha, ell=ell)
                rep = e2_report(build_e2_state(pr, 1024), rel_tol=1e-8)
                q = rep.quadrature
                worst = max(worst, rep.comparisons["product"].rel_gap)
                ok &= abs(q["p_alpha"]) < 1e-9 and abs(q["J"] - ell) < 1e-9
    return ok and worst < 1e-8, f"product max rel gap {worst:.2e}"


def _e2_limits():
    from .e2 import E2Params, build_e2_state, e2_report

    lo = e2_report(build_e2_state(E2Params(lam=1e-3), 1 << 15)).quadrature["product"]
    hi = e2_report(build_e2_state(E2Params(lam=1e3), 512)).quadrature["product"]
    return abs(lo - 0.5) < 0.005 and hi < 1e-3, f"lambda=1e-3: {lo:.6f}, lambda=1e3: {hi:.2e}"


def _e2_joint(n_values):
    from .e2 import e2_joint_saturation_probe, e2_single_pair_sigma

    sig = [e2_joint_saturation_probe(1.0, 1.0, 1.0, 1.0, n_phi=n).min_sigma for n in n_values]
    ctrl = e2_single_pair_sigma(1.0, 1.0, 1.0, 0.0, 2)
    ok = min(sig) > JOINT_FLOOR and ctrl < 1e-8
    return ok, "min sigma " + ", ".join(f"{v:.4f}" for v in sig) + f"; single pair {ctrl:.1e}"


JOINT_FLOOR = 0.2


def _pj_family():
    from .e3_pj import AProfile, NonOrthogonalDirections, PJParams, build_pj_state, pj_report
    from .sphere import Direction

    rejected = 0
    for v in ((0, 0, 1), (1, 0, 0.3), (0.2, -0.5, -0.4)):
        try:
            build_pj_state(PJParams(alpha_dir=Direction.normalized(v)))
        except NonOrthogonalDirections:
            rejected += 1
    worst = 0.0
    ok = rejected == 3
    for prof in (AProfile.constant(), AProfile.polynomial([1.0, 0.5])):
        for s in (0.0, 0.5):
            rep = pj_report(build_pj_state(PJParams(s=s, ell=1, profile=prof)))
            q = rep.quadrature
            worst = max(worst, rep.residuals["eigen"])
            ok &= abs(q["J3"] - (1 - s)) < 1e-8 and q["var_p_alpha"] <= 0.5 + 1e-9
            ok &= _rel(q["dp_alpha"], q["dJ3"]) < 1e-8
    return ok and worst < 1e-6, f"rejected {rejected}/3, max eigen residual {worst:.2e}"


def _jj_family():
    from .e3_jj import JJParams, build_jj_state, jj_expectations, jj_report

    worst_gap = worst_res = 0.0
    neg = 0.0
    for a3 in (0.0, 0.3, 0.7):
        for lam in (0.5, 1.0, 2.0):
            pr = JJParams(lam=lam, alpha3=a3, s=0.5, j=1.5, m=0.5)
            rep = jj_report(build_jj_state(pr))
            for k in ("J_alpha", "J_beta"):
                c = rep.comparisons[k]
                worst_gap = max(worst_gap, c.abs_gap)
            worst_res = max(worst_res, rep.residuals["eigen"])
            mirror = JJParams(lam=lam, alpha3=a3, s=0.5, j=1.5, m=0.5, sheet=-1)
            e1, e2 = jj_expectations(pr), jj_expectations(mirror)
            neg = max(neg, abs(e1[0] + e2[0]), abs(e1[1] + e2[1]))
    ok = worst_gap < 1e-6 and worst_res < 1e-6 and neg == 0.0
    return ok, f"max gap {worst_gap:.2e}, max residual {worst_res:.2e}, sheet {neg:.1e}"


def _pc_family():
    from .e3_pc import PCParams, build_pc_state, pc_lambda_asymptotics, pc_report, validate_pc

    grid_ok = True
    for a3 in (-0.3, 0.0, 0.5, 1.0):
        for pe in (-0.6, -0.49, 0.0, 0.49, 0.6):
            v = validate_pc(PCParams(alpha3=a3, p_expect=pe))
            grid_ok &= v.admissible == (a3 > 0 and abs(pe) < a3)
    rep = pc_report(build_pc_state(PCParams(alpha3=0.8, p_expect=0.2, lam=1.0, C3_expect=0.7)))
    fit = pc_lambda_asymptotics(PCParams(alpha3=0.8, p_expect=0.2))
    ok = grid_ok and rep.passed and fit.c0_rel_err < 0.02 and fit.c1_rel_err < 0.05
    return ok, (f"verdicts {'ok' if grid_ok else 'MISMATCH'}, report {'pass' if rep.passed else 'fail'}, "
                f"c0 err {fit.c0_rel_err:.1e}, c1 err {fit.c1_rel_err:.1e}")


def _cc_ledger():
    from .e3_cc import cc_constraint_search

    ok, n = True, 0
    for s in (0.0, 0.5, 1.0):
        for led in cc_constraint_search(s, 4):
            n += 1
            ok &= led.M.denominator in (1, 2) and (led.M + led.s).denominator == 1
            ok &= led.a >= 0.5 and led.b >= 0.5
    return ok and n > 0, f"{n} ledgers checked"


def _cc_control():
    from .e3_cc import cc_control_probe

    vals = [cc_control_probe(1.0, 1.0, lam, s, j, j, a3)
            for s, j in ((0.0, 1.0), (0.5, 1.5)) for lam in (0.5, 1.0) for a3 in (0.0, 0.5)]
    return max(vals) < 1e-8, f"max control sigma {max(vals):.1e}"


def _cc_trend():
    from .e3_cc import CCParams, cc_residual_probe, decay_trend

    decays = []
    for s in (0.0, 0.5):
        for lam in (0.5, 1.0):
            for a3 in (0.0, 0.5):
                js = [j + s for j in (4, 6, 8, 10, 12)]
                tr = decay_trend(cc_residual_probe(CCParams(lam=lam, s=s, alpha3=a3), js))
                decays.append(tr.decays)
    return not any(decays), f"{sum(decays)}/{len(decays)} configurations decay under refinement"


Check = tuple[str, str, Callable[[], tuple[bool, str]], bool]

CHECKS: list[Check] = [
    ("bessel recurrence", "specfun", _specfun_recurrence, True),
    ("bessel integral forms", "specfun", _specfun_integral_form, True),
    ("bessel asymptotic and parity", "specfun", _specfun_asymptotic, True),
    ("bessel derivative identities", "specfun", _specfun_derivatives, True),
    ("gamma and beta", "specfun", _specfun_gamma, True),
    ("grid area", "sphere", _sphere_area, True),
    ("commutators", "swsh", _commutators, True),
    ("hermiticity", "swsh", _hermiticity, True),
    ("casimir spectrum j <= 6", "swsh", _casimir, True),
    ("edth on frame fields", "swsh", _edth_frame, True),
    ("closed form vs quadrature", "e2", _e2_grid, True),
    ("lambda limits", "e2", _e2_limits, True),
    ("joint probe n_phi 128", "e2", lambda: _e2_joint((128,)), True),
    ("joint probe n_phi 128..512", "e2", lambda: _e2_joint((128, 256, 512)), False),
    ("builder, residuals, bounds", "e3-pj", _pj_family, True),
    ("expectations and sheets", "e3-jj", _jj_family, True),
    ("window, report, asymptotics", "e3-pc", _pc_family, True),
    ("constraint ledger", "e3-cc", _cc_ledger, True),
    ("(J,J) control column", "e3-cc", _cc_control, True),
    ("no decay trend of min residual", "e3-cc", _cc_trend, False),
]


def run_suite(quick: bool = False) -> list[CheckResult]:
    out = []
    for name, group, fn, in_quick in CHECKS:
        if quick and not in_quick:
            continue
        t0 = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            passed, detail = False, f"error: {type(exc).__name__}: {exc}"
        out.append(CheckResult(name, group, bool(passed), detail, time.perf_counter() - t0))
    return out


def format_table(results: list[CheckResult]) -> str:
    w = max(len(f"{r.group}: {r.name}") for r in results)
    lines = [f"{'check':<{w}}  result  seconds  detail"]
    for r in results:
        label = f"{r.group}: {r.name}"
        lines.append(f"{label:<{w}}  {'PASS' if r.passed else 'FAIL':<6}  {r.seconds:7.2f}  {r.detail}")
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} checks passed")
    return "\n".join(lines)
