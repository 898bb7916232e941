import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from euclid_mcs.e3_jj import (
    JJParams, PhiZeroFamily, build_jj_state, build_jj_state_exceptional, build_jj_state_generic, jj_eigenvalue,
    jj_expectations, jj_report, jj_roots,
)
from euclid_mcs.states import ValidationError


def closed_form_expectations(lam, a3, m, hbar=1.0):
    """Closed forms for <J(alpha)> and <J(beta)> written out directly."""
    r = math.sqrt((1 - lam**2) ** 2 + 4 * lam**2 * a3**2)
    ja = m * hbar / math.sqrt(2) * math.sqrt(1 - lam**2 + r)
    sgn = 1.0 if a3 >= 0 else -1.0
    jb = sgn * m * hbar / math.sqrt(2) * math.sqrt(max(lam**2 - 1 + r, 0.0)) / lam
    return ja, jb


def test_eigenvalue_examples():
    assert jj_eigenvalue(JJParams(lam=1.0, alpha3=0.0, j=2, m=2)) == 0
    assert abs(jj_eigenvalue(JJParams(lam=0.6, alpha3=0.0)) - 0.8) < 1e-15
    c = jj_eigenvalue(JJParams(lam=2.0, alpha3=0.0))
    assert abs(c - (-1j * math.sqrt(3))) < 1e-15
    # 2 lambda <J(beta)> = 2 m hbar sqrt(lambda^2 - 1) in the degenerate case.
    assert abs(jj_expectations(JJParams(lam=2.0, alpha3=0.0))[1] * 2.0 - math.sqrt(3)) < 1e-15


def test_expectation_examples():
    assert jj_expectations(JJParams(lam=0.6, alpha3=0.0)) == pytest.approx((0.8, 0.0), abs=1e-15)
    assert jj_expectations(JJParams(lam=1.0, alpha3=0.0)) == (0.0, 0.0)
    ja, jb = jj_expectations(JJParams(lam=1.0, alpha3=0.5, j=2, m=2))
    c = 2 * cmath.sqrt(-1j)
    assert abs(ja - c.real) < 1e-12 and abs(jb + c.imag) < 1e-12


@given(st.floats(0.05, 5.0), st.floats(-0.95, 0.95), st.sampled_from([0.5, 1.0, 1.5, 2.0]))
def test_expectations_match_closed_forms(lam, a3, m):
    half = m % 1 != 0
    pr = JJParams(lam=lam, alpha3=a3, s=0.5 if half else 0.0, j=2.5 if half else 2.0, m=m)
    ja, jb = jj_expectations(pr)
    ra, rb = closed_form_expectations(lam, a3, m)
    assert abs(ja - ra) < 1e-12 * max(1, abs(ra))
    assert abs(jb - rb) < 1e-10 * max(1, abs(rb))
    C = jj_eigenvalue(pr)
    assert abs(ja - C.real) < 1e-12 * max(1, abs(ja)) and abs(lam * jb + C.imag) < 1e-12 * max(1, abs(jb))


@given(st.floats(0.05, 5.0), st.floats(-0.95, 0.95))
def test_root_product(lam, a3):
    if abs(a3) < 1e-12 and abs(lam - 1) < 1e-12:
        return
    xp, xm = jj_roots(JJParams(lam=lam, alpha3=a3))
    assert abs(xp * xm + 1) < 1e-12


@given(st.floats(0.05, 5.0), st.floats(-0.95, 0.95))
def test_sheet_antisymmetry(lam, a3):
    a = jj_expectations(JJParams(lam=lam, alpha3=a3))
    b = jj_expectations(JJParams(lam=lam, alpha3=a3, sheet=-1))
    assert a[0] == -b[0] and a[1] == -b[1]


def test_generic_state_example():
    pr = JJParams(s=0, j=1, m=1, lam=0.5, alpha3=0.3)
    rep = jj_report(build_jj_state_generic(pr, PhiZeroFamily(0.5, 0.5)))
    assert rep.residuals["eigen"] < 1e-6
    ja, _ = closed_form_expectations(0.5, 0.3, 1)
    assert abs(rep.quadrature["J_alpha"] - ja) < 1e-6
    assert abs(rep.quadrature["J_squared"] - 2.0) < 1e-6


def test_non_single_valued_family_rejected():
    with pytest.raises(ValidationError) as exc:
        build_jj_state_generic(JJParams(s=0, j=1, m=1, lam=0.5, alpha3=0.3), PhiZeroFamily(1, 0))
    assert exc.value.code == "NOT_SINGLE_VALUED"


@pytest.mark.parametrize("a3", [0.0, 0.3, 0.7])
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("s,j,m", [(0, 1, 1), (0.5, 1.5, -0.5), (1, 2, 2)])
def test_family_grid(a3, lam, s, j, m):
    pr = JJParams(s=s, j=j, m=m, lam=lam, alpha3=a3)
    rep = jj_report(build_jj_state(pr))
    ja, jb = closed_form_expectations(lam, a3, m)
    if pr.exceptional:
        ja = jb = 0.0
    assert abs(rep.quadrature["J_alpha"] - ja) < 1e-6
    assert abs(rep.quadrature["J_beta"] - jb) < 1e-6
    assert rep.residuals["eigen"] < 1e-6
    q = rep.quadrature
    if q["dJ_beta"] > 1e-8:
        assert abs(q["dJ_alpha"] / q["dJ_beta"] - lam) < 1e-6 * lam
    assert abs(q["product"] - q["commutator_bound"]) < 1e-6 * max(q["product"], 1e-12)
    assert rep.passed


def test_exceptional_states():
    rep = jj_report(build_jj_state_exceptional(JJParams(lam=1.0, alpha3=0.0, s=0, j=1, m=1)))
    assert rep.residuals["eigen"] < 1e-6
    b = build_jj_state_exceptional(JJParams(lam=1.0, alpha3=0.0, s=0.5, j=0.5, m=0.5))
    assert abs(b.field.norm() - 1) < 1e-10
    g = build_jj_state_exceptional(JJParams(lam=1.0, alpha3=0.0, s=0, j=0, m=0))
    vals = g.field.samples
    assert np.max(np.abs(vals - vals.flat[0])) < 1e-12
    rep0 = jj_report(g)
    assert abs(rep0.quadrature["dJ_alpha"] - rep0.quadrature["dJ_beta"]) < 1e-12
    with pytest.raises(ValidationError):
        build_jj_state_exceptional(JJParams(lam=1.0, alpha3=0.0, s=1, j=1, m=1), j=0.5)
    with pytest.raises(ValidationError):
        build_jj_state_generic(JJParams(lam=1.0, alpha3=0.0))


def test_deviations_continuous_at_exceptional_point():
    def dev(lam):
        return jj_report(build_jj_state(JJParams(lam=lam, alpha3=0.0, s=0, j=1, m=1))).quadrature["dJ_alpha"]

    centre = dev(1.0)
    gaps = [max(abs(dev(1 + h) - centre), abs(dev(1 - h) - centre)) for h in (1e-2, 1e-3, 1e-4)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-3


def test_label_validation():
    with pytest.raises(ValidationError) as exc:
        JJParams(s=1, j=0.5, m=0.5)
    assert exc.value.code == "BAD_J"
    with pytest.raises(ValidationError):
        JJParams(j=1, m=2)
    with pytest.raises(ValidationError):
        JJParams(alpha3=1.0)
    with pytest.raises(ValueError):
        JJParams(sheet=0)
