"""Geometry of the momentum sphere of radius P.

Points are addressed either by polar angles (theta, phi) or by the
stereographic coordinate ``zeta = exp(i phi) cot(theta / 2)`` of the chart
that omits the north pole.  Quadrature grids are tensor products of a
rule in theta with a uniform rule in phi; nodes never sit on a pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

__all__ = [
    "Direction",
    "StereoPoint",
    "SphereGrid",
    "cartesian_from_stereo",
    "m_vector",
    "build_grid",
    "build_weighted_grid",
    "integrate",
]

Chart = Literal["north", "south"]


@dataclass(frozen=True)
class Direction:
    """A unit vector in R^3."""

    components: tuple[float, float, float]

    def __post_init__(self) -> None:
        c = tuple(float(v) for v in self.components)
        if len(c) != 3:
            raise ValueError("a direction has three components")
        norm2 = c[0] ** 2 + c[1] ** 2 + c[2] ** 2
        if abs(norm2 - 1.0) > 1e-12:
            raise ValueError(f"direction is not unit length (|a|^2 = {norm2!r})")
        object.__setattr__(self, "components", c)

    @classmethod
    def from_tilt(cls, alpha3: float, azimuth: float = 0.0) -> "Direction":
        """Direction with third component ``alpha3`` and the given azimuth."""
        if not -1.0 <= alpha3 <= 1.0:
            raise ValueError("alpha3 must lie in [-1, 1]")
        r = math.sqrt(max(0.0, 1.0 - alpha3 * alpha3))
        return cls((r * math.cos(azimuth), r * math.sin(azimuth), alpha3))

    @classmethod
    def normalized(cls, vec) -> "Direction":
        v = np.asarray(vec, dtype=float)
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(tuple(v / n))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.components)

    @property
    def alpha3(self) -> float:
        return self.components[2]

    @property
    def azimuth(self) -> float:
        return math.atan2(self.components[1], self.components[0])


@dataclass(frozen=True)
class StereoPoint:
    """Stereographic coordinate of a point of the unit sphere.

    On the north chart ``zeta = exp(i phi) cot(theta/2)`` (the south pole is
    ``zeta = 0``); on the south chart ``zeta = exp(i phi) tan(theta/2)``.
    """

    zeta: complex
    chart: Chart = "north"

    @classmethod
    def from_polar(cls, theta: float, phi: float, chart: Chart = "north") -> "StereoPoint":
        half = math.tan(theta / 2.0)
        r = 1.0 / half if chart == "north" else half
        return cls(complex(r * math.cos(phi), r * math.sin(phi)), chart)

    def to_polar(self) -> tuple[float, float]:
        r = abs(self.zeta)
        phi = math.atan2(self.zeta.imag, self.zeta.real) % (2.0 * math.pi)
        theta = 2.0 * math.atan2(1.0, r) if self.chart == "north" else 2.0 * math.atan(r)
        return theta, phi

    def to_north(self) -> "StereoPoint":
        if self.chart == "north":
            return self
        if self.zeta == 0:
            raise ValueError("the north pole has no north-chart coordinate")
        return StereoPoint(1.0 / self.zeta.conjugate(), "north")


def _north_zeta(p: StereoPoint) -> complex:
    return p.to_north().zeta


def cartesian_from_stereo(p: StereoPoint, P: float = 1.0) -> np.ndarray:
    """Cartesian momentum ``p^i`` of the point on the sphere of radius P."""
    z = _north_zeta(p)
    zz = (z * z.conjugate()).real
    d = 1.0 + zz
    return P * np.array([(2.0 * z.real) / d, (2.0 * z.imag) / d, (zz - 1.0) / d])


def m_vector(p: StereoPoint) -> np.ndarray:
    """Complex null tangent vector ``m^i`` at the point (north chart)."""
    z = _north_zeta(p)
    d = 1.0 + (z * z.conjugate()).real
    return np.array([1.0 - z * z, 1j * (1.0 + z * z), 2.0 * z]) / (math.sqrt(2.0) * d)


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Product quadrature grid on the sphere of radius P.

    ``theta_weights`` integrate ``g(theta) sin(theta) dtheta`` over [0, pi];
    the full area element is ``P^2 * w_k * 2 pi / n_phi``.
    """

    P: float
    theta_nodes: np.ndarray
    theta_weights: np.ndarray
    n_phi: int
    rule: str = "gauss-legendre"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_theta(self) -> int:
        return int(self.theta_nodes.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_theta, self.n_phi)

    @property
    def phi_nodes(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable (theta, phi) arrays of shape (n_theta, 1) and (1, n_phi)."""
        return self.theta_nodes[:, None], self.phi_nodes[None, :]

    @property
    def area_weights(self) -> np.ndarray:
        w = self._cache.get("area")
        if w is None:
            w = np.repeat(
                (self.P**2 * 2.0 * np.pi / self.n_phi) * self.theta_weights[:, None],
                self.n_phi,
                axis=1,
            )
            self._cache["area"] = w
        return w

    def zeta(self) -> np.ndarray:
        """North-chart stereographic coordinate at every node."""
        th, ph = self.mesh()
        return np.exp(1j * ph) / np.tan(th / 2.0)

    def unit_normal(self) -> np.ndarray:
        """``p^i / P`` at every node, shape (3, n_theta, n_phi)."""
        n = self._cache.get("normal")
        if n is None:
            th, ph = self.mesh()
            st = np.sin(th)
            n = np.array(
                [st * np.cos(ph), st * np.sin(ph), np.cos(th) * np.ones_like(ph)]
            )
            self._cache["normal"] = n
        return n

    def m_field(self) -> np.ndarray:
        """``m^i`` at every node, shape (3, n_theta, n_phi)."""
        m = self._cache.get("m")
        if m is None:
            z = self.zeta()
            d = math.sqrt(2.0) * (1.0 + np.abs(z) ** 2)
            m = np.array([(1.0 - z * z) / d, 1j * (1.0 + z * z) / d, 2.0 * z / d])
            self._cache["m"] = m
        return m

    def describe(self) -> dict:
        return {"n_theta": self.n_theta, "n_phi": self.n_phi, "P": self.P, "rule": self.rule}


def build_grid(P: float, n_theta: int = 64, n_phi: int = 128) -> SphereGrid:
    """Gauss-Legendre nodes in cos(theta) times a uniform grid in phi."""
    if n_theta < 2 or n_phi < 4:
        raise ValueError(f"grid too small: n_theta={n_theta}, n_phi={n_phi}")
    if not P > 0:
        raise ValueError("sphere radius P must be positive")
    x, w = leggauss(n_theta)
    order = np.argsort(-x)  # ascending theta
    theta = np.arccos(x[order])
    return SphereGrid(float(P), theta, w[order], int(n_phi))


def build_weighted_grid(
    P: float, n_theta: int, n_phi: int, north_power: float, south_power: float
) -> SphereGrid:
    """Grid for integrands with algebraic behaviour at the poles.

    The rule integrates ``g(theta) sin(theta) dtheta`` exactly-in-the-limit
    fast when ``g sin(theta)`` behaves like ``theta^north_power`` times an
    analytic function near theta = 0 and like ``(pi - theta)^south_power``
    times an analytic function near theta = pi.  Each hemisphere gets a
    Gauss-Jacobi rule carrying the corresponding power as its weight.
    Such a grid is accurate only for that class of integrands.
    """
    if north_power <= -1 or south_power <= -1:
        raise ValueError("pole powers must exceed -1 for integrability")
    if n_theta < 4 or n_phi < 4:
        raise ValueError(f"grid too small: n_theta={n_theta}, n_phi={n_phi}")
    half = n_theta // 2
    quarter = np.pi / 4.0
    thetas, weights = [], []
    for power, flip, count in ((north_power, False, half), (south_power, True, n_theta - half)):
        x, w = roots_jacobi(count, 0.0, power)
        dist = quarter * (1.0 + x)  # distance from the pole, in (0, pi/2)
        wt = w * quarter ** (power + 1.0) * np.sin(dist) / dist**power
        th = np.pi - dist if flip else dist
        thetas.append(th)
        weights.append(wt)
    theta = np.concatenate(thetas)
    weight = np.concatenate(weights)
    order = np.argsort(theta)
    return SphereGrid(
        float(P), theta[order], weight[order], int(n_phi),
        rule=f"gauss-jacobi({north_power:.17g},{south_power:.17g})",
    )


def integrate(grid: SphereGrid, samples) -> complex:
    """Integrate node samples against ``dS = P^2 sin(theta) dtheta dphi``."""
    s = np.asarray(samples)
    if s.shape != grid.shape:
        raise ValueError(f"samples have shape {s.shape}, grid is {grid.shape}")
    # Row sums first, then an ordered sum over theta: deterministic.
    rows = (s * grid.area_weights).sum(axis=1)
    total = complex(np.sum(rows))
    return total
