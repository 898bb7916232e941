import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.special import iv

from euclid_mcs.e3_pc import (
    InadmissiblePC, PCParams, build_pc_state, pc_closed_forms, pc_exponents, pc_integrability_probe,
    pc_lambda_asymptotics, pc_normalization_identity, pc_report, pc_weight_integral_exact, validate_pc,
)

CASES = [
    PCParams(alpha3=1.0),
    PCParams(alpha3=0.8, p_expect=0.3, lam=0.7),
    PCParams(alpha3=0.8, p_expect=0.2, lam=1.0, C3_expect=0.7),
    PCParams(alpha3=0.6, p_expect=-0.1, lam=2.0, alpha_azimuth=0.9, mode_m=1),
]


def theta_density(pr):
    a, b = pc_exponents(pr)
    t = math.sqrt(1 - pr.alpha3**2)
    k = 2 * t / (pr.lam * pr.hbar)
    w = lambda th: math.sin(th) ** (2 * a + 1) * math.tan(th / 2) ** (2 * b)  # noqa: E731
    return k, t, w


def quad_oracle(pr):
    """<p(alpha)> and (dp)^2 from phi-averaged Bessel moments with scipy quad."""
    k, t, w = theta_density(pr)
    P, a3 = pr.P, pr.alpha3

    def integ(f):
        return quad(lambda th: f(th) * w(th), 0, math.pi, epsabs=0, epsrel=1e-10, limit=400)[0]

    I = lambda n, th: iv(n, k * th)  # noqa: E731
    Z = integ(lambda th: I(0, th))
    mean = P * integ(lambda th: a3 * math.cos(th) * I(0, th) + t * math.sin(th) * I(1, th)) / Z
    sq = P * P * integ(lambda th: a3**2 * math.cos(th) ** 2 * I(0, th)
                       + 2 * a3 * t * math.cos(th) * math.sin(th) * I(1, th)
                       + t * t * math.sin(th) ** 2 * 0.5 * (I(0, th) + I(2, th))) / Z
    return mean, sq - mean * mean


def test_verdict_examples():
    v = validate_pc(PCParams(alpha3=0.0))
    assert not v.admissible and v.code == "NEEDS_ACUTE_ANGLE"
    v = validate_pc(PCParams(alpha3=0.5, p_expect=0.7))
    assert not v.admissible and v.code == "P_EXPECT_OUT_OF_WINDOW"
    assert validate_pc(PCParams(alpha3=1.0)).admissible
    assert validate_pc(PCParams(alpha3=-0.3)).code == "NEEDS_ACUTE_ANGLE"


@pytest.mark.parametrize("a3", [0.2, 0.5, 0.9])
@pytest.mark.parametrize("P", [1.0, 2.5])
def test_verdicts_at_window_edges(a3, P):
    edge = P * a3
    for sgn in (1, -1):
        assert validate_pc(PCParams(P=P, alpha3=a3, p_expect=sgn * edge * (1 - 1e-9))).admissible
        assert validate_pc(PCParams(P=P, alpha3=a3, p_expect=sgn * edge)).code == "P_EXPECT_OUT_OF_WINDOW"
        assert not validate_pc(PCParams(P=P, alpha3=a3, p_expect=sgn * edge * (1 + 1e-9))).admissible


@given(st.floats(-1, 1).filter(lambda x: not 0 < x < 1e-9), st.floats(-2, 2))
def test_verdict_matches_exponent_window(a3, pe):
    pr = PCParams(alpha3=a3, p_expect=pe, lam=0.9)
    a, b = pc_exponents(pr)
    ok = validate_pc(pr).admissible
    if ok:
        assert a > -1 and -a - 1 < b < a + 1
    elif a3 > 0:
        assert not (-a - 1 < b < a + 1) or abs(abs(pe) - a3) < 1e-12


def test_inadmissible_build_raises():
    with pytest.raises(InadmissiblePC) as exc:
        build_pc_state(PCParams(alpha3=0.5, p_expect=0.7))
    assert exc.value.code == "P_EXPECT_OUT_OF_WINDOW"


def test_build_examples():
    st_ = build_pc_state(PCParams(alpha3=1.0))
    assert st_.a == 0.0 and st_.b == 0.0
    assert abs(pc_report(st_).quadrature["norm"] - 1) < 1e-9
    st_ = build_pc_state(PCParams(alpha3=0.8, p_expect=0.3, lam=0.7))
    assert abs(st_.a - (0.8 / 0.7 - 1)) < 1e-15 and abs(st_.b + 0.3 / 0.7) < 1e-15
    q = pc_report(st_).quadrature
    assert abs(q["norm"] - 1) < 1e-9
    assert abs(q["p_alpha"] - 0.3) < 1e-6


@pytest.mark.parametrize("pr", CASES, ids=["a1", "a08p03", "c3", "tilted"])
@pytest.mark.parametrize("s", [0.0, 0.5, 1.0])
def test_report(pr, s):
    pr = PCParams(pr.P, pr.hbar, pr.lam, s, pr.alpha3, pr.alpha_azimuth, pr.p_expect, pr.C3_expect, pr.mode_m)
    rep = pc_report(build_pc_state(pr))
    q = rep.quadrature
    assert rep.passed
    assert rep.residuals["eigen"] < 1e-5
    assert abs(q["norm"] - 1) < 1e-9
    assert abs(q["p_alpha"] - pr.p_expect) < 1e-6
    assert abs(q["C3"] - pr.C3_expect) < 1e-6
    assert abs(q["dC3"] - q["dp_alpha"] / pr.lam) < 1e-6 * q["dC3"]
    assert abs(q["product"] - 0.5 * pr.hbar * (pr.alpha3 * pr.P**2 - q["pp3"])) < 1e-7
    cf = pc_closed_forms(pr)
    assert abs(q["var_p_alpha"] - cf["var_p_alpha"]) < 1e-6 * cf["var_p_alpha"]
    assert rep.residuals["pp3_bound_violation"] == 0.0


@pytest.mark.parametrize("pr", CASES[1:], ids=["a08p03", "c3", "tilted"])
def test_closed_forms_against_scipy_quad(pr):
    mean, var = quad_oracle(pr)
    cf = pc_closed_forms(pr)
    # The state equation fixes <p(alpha)> to the target; the Bessel moments must agree.
    assert abs(mean - pr.p_expect) < 1e-9
    assert abs(cf["p_alpha_I0_I1"] - mean) < 1e-9
    assert abs(cf["var_p_alpha"] - var) < 1e-9 * var
    assert abs(cf["var_p_alpha_I0_I1_I2"] - var) < 1e-9 * var


@given(st.floats(0.1, 1.0), st.floats(-0.9, 0.9), st.floats(0.3, 3.0))
def test_weight_integral_beta_form(a3, frac, lam):
    pr = PCParams(alpha3=a3, p_expect=frac * a3, lam=lam)
    a, b = pc_exponents(pr)
    if 2 * a + 2 * b + 1 < -0.9 or 2 * a - 2 * b + 1 < -0.9 or a > 15:
        return  # near-singular or huge powers: quad itself is unreliable
    p1, p2 = 2 * a + 2 * b + 1, 2 * a - 2 * b + 1

    def smooth(th):
        # sin^{2a+1} tan^{2b}(th/2) = 2^{2a+1} sin^{p1}(th/2) cos^{p2}(th/2), pole factors removed.
        return (2.0 ** (2 * a + 1) * (0.5 * np.sinc(th / (2 * math.pi))) ** p1
                * (0.5 * np.sinc((math.pi - th) / (2 * math.pi))) ** p2)

    ref = quad(smooth, 0, math.pi, weight="alg", wvar=(p1, p2), epsabs=0, epsrel=1e-12)[0]
    assert abs(pc_weight_integral_exact(pr) - ref) < 1e-8 * ref


def test_two_mode_normalization():
    for pr in (PCParams(alpha3=0.8, p_expect=0.2), PCParams(alpha3=0.6, p_expect=-0.1, lam=2.0, s=0.5)):
        series, direct = pc_normalization_identity(pr, {0: 1.0, 1: 0.5 + 0.2j})
        assert abs(series - direct) < 1e-8


def test_boundary_divergence():
    near = pc_integrability_probe(PCParams(alpha3=0.8, p_expect=0.8 * (1 - 1e-3)))
    mid = pc_integrability_probe(PCParams(alpha3=0.8, p_expect=0.0))
    assert all(b > a for a, b in zip(near, near[1:]))
    assert near[-1] > 1.5 * near[0]
    assert abs(mid[-1] - mid[-2]) < 1e-8 * mid[-1]


def test_large_lambda_fit():
    fit = pc_lambda_asymptotics(PCParams(alpha3=0.8, p_expect=0.2))
    assert fit.c0_rel_err < 0.02
    assert fit.c1_rel_err < 0.05
    assert abs(fit.c1_expected + 1.2) < 1e-12
    assert abs(fit.var_p_at_max - 0.6) < 0.02 * 0.6
    lo, hi = fit.small_lambda_bracket
    assert lo <= fit.small_lambda_product <= hi
    with pytest.raises(ValueError):
        pc_lambda_asymptotics(PCParams(alpha3=0.8), lambdas=(10.0, 50.0))


def test_param_validation():
    with pytest.raises(ValueError):
        PCParams(lam=0.0)
    with pytest.raises(ValueError):
        PCParams(alpha3=1.5)
    with pytest.raises(ValueError):
        PCParams(mode_m=0.5)
