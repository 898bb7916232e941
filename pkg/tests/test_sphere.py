import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from euclid_mcs.sphere import (
    Direction, StereoPoint, build_grid, build_weighted_grid, cartesian_from_stereo, integrate, m_vector,
)
from euclid_mcs.swsh import SpinField

angles = st.tuples(st.floats(0.05, math.pi - 0.05), st.floats(0.0, 2 * math.pi))


def polar(theta, phi, P=1.0):
    return P * np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def test_cartesian_examples():
    np.testing.assert_allclose(cartesian_from_stereo(StereoPoint(0j), 2.0), [0, 0, -2], atol=1e-15)
    np.testing.assert_allclose(cartesian_from_stereo(StereoPoint(1 + 0j)), [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(cartesian_from_stereo(StereoPoint(1j)), polar(math.pi / 2, math.pi / 2),
                               atol=1e-15)


def test_m_vector_at_origin():
    np.testing.assert_allclose(m_vector(StereoPoint(0j)), np.array([1, 1j, 0]) / math.sqrt(2), atol=1e-15)


def test_chart_consistency_random_points(rng):
    for theta, phi in zip(rng.uniform(0.01, math.pi - 0.01, 100), rng.uniform(0, 2 * math.pi, 100)):
        p = StereoPoint.from_polar(theta, phi)
        assert abs(p.zeta - np.exp(1j * phi) / math.tan(theta / 2)) < 1e-12 * max(1, abs(p.zeta))
        np.testing.assert_allclose(cartesian_from_stereo(p, 1.3), polar(theta, phi, 1.3), atol=1e-12)
        back = p.to_polar()
        assert abs(back[0] - theta) < 1e-12
        s = StereoPoint.from_polar(theta, phi, "south")
        np.testing.assert_allclose(cartesian_from_stereo(s, 1.3), polar(theta, phi, 1.3), atol=1e-12)


@given(angles, st.floats(0.2, 5.0))
def test_frame_relations(ang, P):
    p = StereoPoint.from_polar(*ang)
    m = m_vector(p)
    x = cartesian_from_stereo(p, P)
    assert abs(np.dot(m, m)) < 1e-12
    assert abs(np.dot(m, np.conj(m)) - 1) < 1e-12
    assert abs(np.dot(m, x)) < 1e-12 * P
    assert abs(np.dot(x, np.cross(m, np.conj(m))) - 1j * P) < 1e-12 * P
    assert abs(np.linalg.norm(x) - P) < 1e-12 * P


@given(angles, st.floats(0.3, 3.0))
def test_metric_pullback(ang, P):
    # The round metric in the chart, 4 P^2 |dzeta|^2 / (1 + |zeta|^2)^2, against
    # P^2 (dtheta^2 + sin^2 theta dphi^2) by finite differences.
    theta, phi = ang
    h = 1e-6
    for dt, dp in ((1.0, 0.0), (0.0, 1.0), (0.6, -0.8)):
        z0 = StereoPoint.from_polar(theta, phi).zeta
        z1 = StereoPoint.from_polar(theta + h * dt, phi + h * dp).zeta
        zm = StereoPoint.from_polar(theta - h * dt, phi - h * dp).zeta
        dz = (z1 - zm) / (2 * h)
        chart = 4 * P * P * abs(dz) ** 2 / (1 + abs(z0) ** 2) ** 2
        round_ = P * P * (dt**2 + math.sin(theta) ** 2 * dp**2)
        assert abs(chart - round_) < 1e-6 * round_


def test_grid_integrates_constants_and_polynomials():
    g = build_grid(1.0, 12, 16)
    th = np.broadcast_to(g.mesh()[0], g.shape)
    assert abs(integrate(g, np.ones(g.shape)).real - 4 * math.pi) < 1e-13 * 4 * math.pi
    assert abs(integrate(g, np.cos(th) ** 2).real - 4 * math.pi / 3) < 1e-13
    assert abs(integrate(g, np.cos(th))) < 1e-14
    assert abs(np.sum(g.theta_weights) * 2 * math.pi - 4 * math.pi) < 1e-12
    assert np.all((g.theta_nodes > 0) & (g.theta_nodes < math.pi))
    big = build_grid(2.0, 8, 8)
    assert abs(integrate(big, np.ones(big.shape)).real - 16 * math.pi) < 1e-12


def test_grid_exact_for_degree_and_fourier_limits():
    n = 6
    g = build_grid(1.0, n, 10)
    th, ph = g.mesh()
    c = np.broadcast_to(np.cos(th), g.shape)
    # Oracle: int_{-1}^{1} x^d dx = 2/(d+1) for even d.
    for d in range(0, 2 * n, 2):
        assert abs(integrate(g, c**d).real - 2 * math.pi * 2 / (d + 1)) < 1e-13
    for k in range(1, 5):
        assert abs(integrate(g, np.broadcast_to(np.exp(1j * k * ph), g.shape))) < 1e-13


def test_harmonic_norm_on_grid():
    g = build_grid(1.0, 8, 16)
    Y = SpinField.harmonic(0, 1, 0, g)
    assert abs(integrate(g, np.abs(Y.samples) ** 2).real - 1) < 1e-13


def test_plane_wave_refinement_converges():
    # int exp(i p.xi / hbar) dS = 4 pi P^2 sin(k)/k with k = |xi| P / hbar.
    P, hbar = 1.0, 1.0
    xi = np.array([3.0, -4.0, 6.0]) / math.sqrt(61.0) * 10.0
    k = np.linalg.norm(xi) * P / hbar
    prev = None
    for n in (16, 24, 32, 40):
        g = build_grid(P, n, 2 * n)
        vals = np.exp(1j * np.tensordot(xi, P * g.unit_normal(), axes=1) / hbar)
        cur = integrate(g, vals)
        if prev is not None and n >= 32:
            assert abs(cur - prev) < 1e-10
        prev = cur
    assert abs(prev - 4 * math.pi * math.sin(k) / k) < 1e-10


def test_weighted_grid_integrates_pole_powers():
    # Oracle: int_0^pi sin^(2a+1) tan^(2b)(theta/2) dtheta = 2^(2a+1) B(a+b+1, a-b+1).
    from scipy.special import beta
    a, b = -0.4, 0.3
    g = build_weighted_grid(1.0, 40, 4, 2 * a + 2 * b + 1, 2 * a - 2 * b + 1)
    f = np.sin(g.theta_nodes) ** (2 * a) * np.tan(g.theta_nodes / 2) ** (2 * b)
    val = np.sum(g.theta_weights * f)
    assert abs(val - 2 ** (2 * a + 1) * beta(a + b + 1, a - b + 1)) < 1e-12 * val


def test_grid_errors():
    with pytest.raises(ValueError):
        build_grid(1.0, 1, 8)
    with pytest.raises(ValueError):
        build_grid(1.0, 8, 3)
    with pytest.raises(ValueError):
        build_weighted_grid(1.0, 8, 8, -1.0, 0.0)
    g = build_grid(1.0, 4, 8)
    with pytest.raises(ValueError):
        integrate(g, np.ones((4, 7)))


def test_direction_validation():
    with pytest.raises(ValueError):
        Direction((1.0, 1.0, 0.0))
    d = Direction.from_tilt(0.6, 1.0)
    assert abs(np.linalg.norm(d.vector) - 1) < 1e-15
    assert d.alpha3 == 0.6


def test_integration_is_bit_stable():
    g = build_grid(1.0, 20, 40)
    vals = np.random.default_rng(5).normal(size=g.shape)
    assert integrate(g, vals) == integrate(g, vals.copy())
