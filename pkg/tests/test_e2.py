import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from euclid_mcs.e2 import (
    E2Params, build_e2_state, e2_closed_forms, e2_joint_saturation_probe, e2_report, e2_required_n_phi,
    e2_saturation_residual, e2_single_pair_sigma,
)
from euclid_mcs.specfun import bessel_i


def fourier_ops(P, hbar, K):
    """Dense oracle: p1, p2 and J on exp(i k phi), |k| <= K, mapped into |k| <= K + 1."""
    n_in, n_out = 2 * K + 1, 2 * K + 3
    E = np.zeros((n_out, n_in), complex)
    p1 = np.zeros_like(E)
    p2 = np.zeros_like(E)
    J = np.zeros_like(E)
    for c, k in enumerate(range(-K, K + 1)):
        r = k + K + 1
        E[r, c] = 1
        J[r, c] = -k * hbar  # i hbar d/dphi
        p1[r + 1, c] += P / 2
        p1[r - 1, c] += P / 2
        p2[r + 1, c] += P / (2j)
        p2[r - 1, c] -= P / (2j)
    return E, p1, p2, J


def test_normalization_examples():
    st_ = build_e2_state(E2Params(lam=1e6), 512)
    assert abs(st_.A ** 2 - 1 / (2 * math.pi)) < 1e-6
    st_ = build_e2_state(E2Params(lam=1.0), 4096)
    assert abs(np.sum(np.abs(st_.samples) ** 2) * 2 * math.pi / 4096 - 1) < 1e-10
    st_ = build_e2_state(E2Params(lam=0.5, alpha=math.pi / 3, ell=2), 512)
    assert abs(st_.A ** 2 - 1 / (2 * math.pi * bessel_i(0, 4.0))) < 1e-14


def test_samples_match_formula():
    pr = E2Params(P=1.3, hbar=0.7, lam=0.9, alpha=1.1, ell=-2)
    s = build_e2_state(pr, 128)
    phi = s.phi_nodes
    ref = s.A * np.exp(-(pr.P / (pr.lam * pr.hbar)) * np.sin(phi - pr.alpha) - 1j * pr.ell * phi)
    np.testing.assert_allclose(s.samples, ref, rtol=1e-13)


@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("ell", [0, 1, -1, 3])
@pytest.mark.parametrize("alpha", [0.0, math.pi / 3])
def test_report_matches_closed_forms(lam, ell, alpha):
    t0 = time.perf_counter()
    pr = E2Params(lam=lam, alpha=alpha, ell=ell)
    rep = e2_report(build_e2_state(pr, max(512, e2_required_n_phi(pr))), rel_tol=1e-8)
    assert time.perf_counter() - t0 < 1.0
    q = rep.quadrature
    x = 2.0 / lam
    assert abs(q["product"] - 0.5 * bessel_i(1, x) / bessel_i(0, x)) < 1e-8 * q["product"]
    assert abs(q["p_alpha"]) < 1e-9
    assert abs(q["J"] - ell) < 1e-9
    assert abs(q["dp_alpha"] / q["dJ"] - lam) < 1e-8 * lam
    assert abs(q["product"] - 0.5 * abs(q["p_perp"])) < 1e-9
    assert abs(q["p_sq"] - 1.0) < 1e-9
    assert rep.passed


def test_product_example_value():
    q = e2_report(build_e2_state(E2Params(), 512)).quadrature
    assert abs(q["product"] - 0.5 * bessel_i(1, 2.0) / bessel_i(0, 2.0)) < 1e-9


def test_second_moments_exact_form():
    # The split of <p1^2 + p2^2> = P^2 is not even at finite lambda.
    pr = E2Params(lam=0.5, alpha=0.3)
    q = e2_report(build_e2_state(pr, 1024)).quadrature
    x = pr.steepness
    c = bessel_i(1, x) / (x * bessel_i(0, x))
    assert abs(q["p1_sq"] - (math.cos(0.3) ** 2 * c + math.sin(0.3) ** 2 * (1 - c))) < 1e-12
    assert abs(q["p1_sq"] + q["p2_sq"] - 1) < 1e-12


@given(st.floats(0.05, 20.0), st.floats(0.0, 2.0), st.floats(-1.0, 1.0))
def test_alpha_independence(lam, alpha, delta):
    pr = E2Params(lam=lam, alpha=alpha)
    n = max(256, e2_required_n_phi(pr))
    a = e2_report(build_e2_state(pr, n)).quadrature["product"]
    b = e2_report(build_e2_state(E2Params(lam=lam, alpha=alpha + 1.0 + delta), n)).quadrature["product"]
    assert abs(a - b) < 1e-10


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.floats(0.1, 10.0))
def test_product_scales_with_P_hbar(P, hbar, lam):
    cf = e2_closed_forms(E2Params(P=P, hbar=hbar, lam=lam * P / hbar))
    ref = e2_closed_forms(E2Params(lam=lam))
    assert abs(cf["product"] - P * hbar * ref["product"]) < 1e-12 * P * hbar


def test_lambda_limits():
    lo = e2_report(build_e2_state(E2Params(lam=1e-3), 1 << 15)).quadrature["product"]
    hi = e2_report(build_e2_state(E2Params(lam=1e3), 512)).quadrature["product"]
    assert abs(lo - 0.5) < 0.005
    assert hi < 1e-3


def test_saturation_residual():
    st_ = build_e2_state(E2Params(lam=1.0), 512)
    assert e2_saturation_residual(st_) < 1e-8
    bumped = st_.samples * (1 + 0.01 * np.cos(st_.phi_nodes))
    assert e2_saturation_residual(st_, bumped) > 1e-3
    steep = build_e2_state(E2Params(lam=0.1), 64)
    assert e2_saturation_residual(steep) < 1e-8
    with pytest.raises(ValueError):
        e2_saturation_residual(steep, auto_refine=False)


def test_invalid_params():
    for kw in ({"lam": 0.0}, {"lam": -1.0}, {"P": 0.0}, {"alpha": 7.0}, {"ell": 0.5}):
        with pytest.raises(ValueError):
            E2Params(**kw)
    with pytest.raises(ValueError):
        build_e2_state(E2Params(), 32)


def test_single_pair_sigma_vanishes():
    for args in [(1.0, 1.0, 1.0, 0.3, 2), (2.0, 0.5, 0.7, 1.2, -1)]:
        assert e2_single_pair_sigma(*args) < 1e-10


def test_joint_probe_against_dense_svd():
    res = e2_joint_saturation_probe(1.0, 1.0, 1.0, 1.0, n_phi=64)
    E, p1, p2, J = fourier_ops(1.0, 1.0, 64 // 2 - 1)
    c1, c2 = res.shifts
    A = np.vstack([p1 - 1j * J - c1 * E, p2 - 1j * J - c2 * E])
    assert abs(np.linalg.svd(A, compute_uv=False)[-1] - res.min_sigma) < 1e-8
    # Brute force over a coarse shift grid never beats the probe.
    best = math.inf
    for a1 in np.linspace(-1, 1, 5):
        for a2 in np.linspace(-1, 1, 5):
            for b in np.linspace(-4, 4, 9):
                A = np.vstack([p1 - 1j * J - (a1 - 1j * b) * E, p2 - 1j * J - (a2 - 1j * b) * E])
                best = min(best, np.linalg.svd(A, compute_uv=False)[-1])
    assert res.min_sigma <= best + 1e-12
    assert res.min_sigma > 0.05


def test_joint_probe_does_not_decay():
    vals = [e2_joint_saturation_probe(1.0, 1.0, 1.0, 1.0, n_phi=n).min_sigma for n in (128, 256, 512)]
    assert min(vals) > 0.2
    assert vals[-1] > 0.9 * vals[0]
