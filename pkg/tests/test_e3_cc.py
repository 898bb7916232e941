import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from euclid_mcs.e3_cc import (
    CCParams, ProbeRow, cc_constraint_search, cc_control_probe, cc_eigenvalue_from_M,
    cc_exceptional_constraints, cc_exceptional_control, cc_local_factor_F, cc_probe_matrix, cc_residual_probe,
    cc_roots, cc_u_map, cc_u_preimage, cc_v_map, cc_Y_coefficients, cc_z_map, cc_z_preimage, decay_trend,
    local_l2_growth, sigma_min,
)
from euclid_mcs.states import ValidationError

GENERIC = [CCParams(lam=1.0, alpha3=0.5), CCParams(lam=0.5, alpha3=0.0), CCParams(lam=2.0, alpha3=-0.3, s=0.5)]


def Y_apply(f, xi, params, h=1e-6):
    """Y f by central differences and Wirtinger derivatives."""
    fx = (f(xi + h) - f(xi - h)) / (2 * h)
    fy = (f(xi + 1j * h) - f(xi - 1j * h)) / (2 * h)
    a, b = cc_Y_coefficients(xi, params)
    return a * 0.5 * (fx - 1j * fy) + b * 0.5 * (fx + 1j * fy)


@pytest.mark.parametrize("s", [0, 0.5, 1, 1.5, 2])
@pytest.mark.parametrize("n_max", [0, 2, 4])
def test_constraint_ledger(s, n_max):
    rows = cc_constraint_search(s, n_max)
    for r in rows:
        assert r.a >= 0.5 and r.b >= 0.5
        assert r.a * 2 == 1 + r.n1 + r.n4 and r.b * 2 == 1 + r.n2 + r.n3
        assert 2 * r.M == r.n1 + r.n2 - r.n3 - r.n4
        assert 2 * r.s == r.n1 - r.n2 + r.n3 - r.n4
        assert (r.M + r.s).denominator == 1 and (r.M - r.s).denominator == 1
        assert r.conclusion == "NO_STATE" and r.tag
        assert min(r.n1, r.n2, r.n3, r.n4) >= 0 and max(r.n1, r.n2, r.n3, r.n4) <= n_max
    # Brute-force count of all compatible tuples.
    count = sum(1 for n in np.ndindex(*(n_max + 1,) * 4) if n[0] - n[1] + n[2] - n[3] == 2 * s)
    assert len(rows) == count


def test_ledger_nonempty_and_classified():
    rows = cc_constraint_search(0, 4)
    assert any((r.n1, r.n2, r.n3, r.n4) == (0, 0, 0, 0) and r.M == 0 for r in rows)
    # M + s and M - s differ by 2s, so integer spin never mixes parities.
    assert {r.parity for r in rows} == {"odd/odd", "even/even"}
    assert {r.parity for r in cc_constraint_search(0.5, 4)} == {"mixed"}
    assert cc_constraint_search(0.5, 0) == []
    assert all(row["a"] >= 1 for row in cc_exceptional_constraints(1, 4))
    with pytest.raises(ValueError):
        cc_constraint_search(0, -1)


def test_F_examples():
    exc = CCParams(lam=1.0, alpha3=0.0)
    assert abs(cc_local_factor_F(0j, exc) - (-1)) < 1e-15
    gen = CCParams(lam=1.0, alpha3=0.5)
    for x in np.linspace(-50, 50, 41):
        assert math.isfinite(abs(cc_local_factor_F(complex(x), gen)))
    far = [abs(cc_local_factor_F(r * cmath.exp(0.7j), gen)) for r in (1e2, 1e4, 1e6)]
    assert max(far) < 10 * min(far)
    assert abs(far[-1] - far[-2]) < 1e-3 * far[-1]


def test_F_singular_points():
    gen = CCParams(lam=1.0, alpha3=0.5)
    xp, xm = cc_roots(gen)
    for pt in (xp, xm, xp.conjugate()):
        with pytest.raises(ValidationError) as exc:
            cc_local_factor_F(pt, gen)
        assert exc.value.code == "SINGULAR_POINT"
    with pytest.raises(ValidationError):
        cc_local_factor_F(-1j, CCParams(lam=1.0, alpha3=0.0))


@given(st.floats(0.05, 5.0), st.floats(-0.95, 0.95))
def test_root_product(lam, a3):
    p = CCParams(lam=lam, alpha3=a3)
    if p.exceptional:
        return
    xp, xm = cc_roots(p)
    assert abs(xp * xm + 1) < 1e-12
    for x in (xp, xm):
        assert abs(cc_Y_coefficients(x, p)[0]) < 1e-12 * max(1, abs(x) ** 2)


@given(st.floats(0.05, 5.0), st.floats(-0.95, 0.95), st.complex_numbers(max_magnitude=10))
def test_eigenvalue_of_M(lam, a3, M):
    p = CCParams(lam=lam, alpha3=a3)
    C = cc_eigenvalue_from_M(p, M)
    if p.root != 0:
        assert abs(1j * C / p.root - M) < 1e-12 * max(1, abs(M))


@pytest.mark.parametrize("p", GENERIC)
def test_z_preimage(p):
    rng = np.random.default_rng(7)
    for _ in range(200):
        z = complex(*rng.normal(scale=2.0, size=2))
        xi, disc = cc_z_preimage(z, p)
        assert disc > 0
        assert abs(cc_z_map(xi, p) - z) < 1e-8 * max(1, abs(z))


def test_u_preimage():
    rng = np.random.default_rng(8)
    for _ in range(200):
        u = complex(*rng.normal(scale=2.0, size=2))
        xi, disc = cc_u_preimage(u)
        assert disc > 0
        assert abs(cc_u_map(xi) - u) < 1e-8 * max(1, abs(u))


@pytest.mark.parametrize("p", GENERIC + [CCParams(lam=1.0, alpha3=0.0)])
def test_Y_identities(p):
    rng = np.random.default_rng(9)
    inv = (lambda x: cc_u_map(x)) if p.exceptional else (lambda x: cc_z_map(x, p))
    for _ in range(20):
        xi = complex(*rng.normal(size=2))
        scale = max(1.0, abs(inv(xi)))
        assert abs(Y_apply(inv, xi, p)) < 1e-6 * scale
        assert abs(Y_apply(lambda x: cc_v_map(x, p), xi, p) - 1) < 1e-6


@pytest.mark.parametrize("lam,a3,s,j,m", [(0.5, 0.3, 0, 1, 1), (1.0, 0.5, 0, 2, -1), (2.0, 0.0, 0.5, 1.5, 0.5),
                                         (0.7, -0.4, 1, 2, 2)])
def test_control_probe(lam, a3, s, j, m):
    assert cc_control_probe(1.0, 1.0, lam, s, j, m, a3) < 1e-8


def test_probe_matrix_sigma_routes_agree():
    pm = cc_probe_matrix(CCParams(lam=1.0, alpha3=0.5), 4)
    for c in (0j, 1 + 1j, -2.5j, 3.0):
        assert abs(sigma_min(pm, c) - sigma_min(pm, c, exact=True)) < 1e-6
    with pytest.raises(ValueError):
        cc_probe_matrix(CCParams(), 1)


def test_residual_probe_rows():
    rows = cc_residual_probe(CCParams(lam=1.0, alpha3=0.5), [2, 3])
    for r in rows:
        assert abs(r.best_C) <= 4.0 + 1e-12
        assert 0 < r.sigma_min <= r.sigma_at_zero + 1e-12
        assert len(r.csv().split(",")) == 4


def test_decay_trend_logic():
    rows = [ProbeRow(j, 0j, v, v, 1) for j, v in zip((4, 6, 8), (1.0, 0.9, 0.8))]
    assert not decay_trend(rows).decays
    rows = [ProbeRow(j, 0j, v, v, 1) for j, v in zip((4, 6, 8), (1.0, 0.5, 0.2))]
    v = decay_trend(rows)
    assert v.decays and v.floor == 0.5 and v.log_slope < 0


@pytest.mark.parametrize("s", [0.0, 0.5])
def test_exceptional_control_smallest_truncation(s):
    res = cc_exceptional_control(s, abs(s) + 2)
    assert res["nonzero_larger"]


@pytest.mark.xfail(strict=True, reason="larger truncations admit nonzero C rings below the C = 0 column")
@pytest.mark.parametrize("s", [0.0, 0.5])
def test_exceptional_control_larger_truncation(s):
    assert cc_exceptional_control(s, abs(s) + 6)["nonzero_larger"]


def test_local_growth_near_singular_point():
    with_C = local_l2_growth(0, 0.5, [1e-1, 1e-2, 1e-3])
    assert with_C[1] > 1e30 * with_C[0]
    spin_half = local_l2_growth(0.5, 0.0, [1e-1, 1e-2, 1e-3, 1e-4])
    assert abs(spin_half[-1] - spin_half[-2]) < 0.05 * spin_half[-1]
    # Spin 0 at C = 0 grows like log(1/eps).
    zero = local_l2_growth(0, 0.0, [1e-1, 1e-2, 1e-3])
    assert abs((zero[2] - zero[1]) - (zero[1] - zero[0])) < 0.05 * (zero[1] - zero[0])


def test_exceptional_map_guards():
    exc = CCParams(lam=1.0, alpha3=0.0)
    assert exc.exceptional
    with pytest.raises(ValidationError):
        cc_z_map(0.3 + 0.1j, exc)
    with pytest.raises(ValidationError):
        cc_z_preimage(0.5j, exc)
    with pytest.raises(ValidationError):
        CCParams(alpha3=1.0)
