"""Quadrature rules on the reference interval and the reference triangle.

Two rules cover every form assembled in this package: the 3-point
Gauss-Legendre rule on [-1, 1] and a 7-point symmetric rule on the unit
reference triangle, both exact for polynomials of total degree 5.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureRule",
    "gauss3_interval",
    "map_to_interval",
    "triangle_rule",
    "integrate",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on a reference domain.

    ``points`` has shape (n,) for interval rules and (n, 2) for triangle
    rules, ``weights`` has shape (n,).  ``exact_degree`` is the highest
    polynomial degree the rule integrates exactly.
    """

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        wts = np.asarray(self.weights, dtype=float)
        if len(wts) != len(pts):
            raise ValueError("points and weights must have the same length")
        pts.flags.writeable = False
        wts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @property
    def dim(self) -> int:
        return 1 if self.points.ndim == 1 else self.points.shape[1]

    def __len__(self) -> int:
        return len(self.weights)


def gauss3_interval() -> QuadratureRule:
    """3-point Gauss-Legendre rule on [-1, 1], exact to degree 5.

    Points -sqrt(15)/5, 0, sqrt(15)/5 with weights 5/9, 8/9, 5/9.
    """
    s = math.sqrt(15.0) / 5.0
    return QuadratureRule(
        points=np.array([-s, 0.0, s]),
        weights=np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0]),
        exact_degree=5,
    )


def map_to_interval(rule: QuadratureRule, a: float, b: float) -> QuadratureRule:
    """Affinely map a rule on [-1, 1] to [a, b], scaling weights by (b-a)/2."""
    if rule.dim != 1:
        raise ValueError("map_to_interval expects an interval rule")
    if not a < b:
        raise ValueError(f"invalid interval: a={a} must be < b={b}")
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return QuadratureRule(
        points=half * rule.points + mid,
        weights=half * rule.weights,
        exact_degree=rule.exact_degree,
    )


def triangle_rule(min_degree: int = 5) -> QuadratureRule:
    """Symmetric 7-point rule on the reference triangle, exact to degree 5.

    Reference triangle is {(xi, eta): xi, eta >= 0, xi + eta <= 1}.  The rule
    is the centroid plus two symmetric 3-point orbits; weights sum to 1/2,
    the reference area.  Degrees above 5 are not supported.
    """
    if min_degree > 5:
        raise ValueError(f"triangle rules above degree 5 unsupported (got {min_degree})")
    r15 = math.sqrt(15.0)
    a1 = (6.0 - r15) / 21.0
    a2 = (6.0 + r15) / 21.0
    w1 = (155.0 - r15) / 2400.0
    w2 = (155.0 + r15) / 2400.0
    points = np.array(
        [
            [1.0 / 3.0, 1.0 / 3.0],
            [a1, a1],
            [1.0 - 2.0 * a1, a1],
            [a1, 1.0 - 2.0 * a1],
            [a2, a2],
            [1.0 - 2.0 * a2, a2],
            [a2, 1.0 - 2.0 * a2],
        ]
    )
    weights = np.array([9.0 / 80.0, w1, w1, w1, w2, w2, w2])
    return QuadratureRule(points=points, weights=weights, exact_degree=5)


def integrate(rule: QuadratureRule, geometry, f) -> float:
    """Integrate ``f`` over one element using a reference rule.

    ``geometry`` is an ``(a, b)`` pair for an interval element (with ``rule``
    on [-1, 1]) or a (3, 2) array of CCW triangle vertices (with ``rule`` on
    the reference triangle).  ``f`` is called with physical coordinates:
    ``f(x)`` in 1D, ``f(x, y)`` in 2D.  Returns sum_i w_i |J| f(F(p_i)).
    """
    if rule.dim == 1:
        a, b = geometry
        jac = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        total = 0.0
        for p, w in zip(rule.points, rule.weights):
            total += w * jac * f(jac * p + mid)
        return total

    verts = np.asarray(geometry, dtype=float)
    if verts.shape != (3, 2):
        raise ValueError("triangle geometry must be a (3, 2) vertex array")
    jac_cols = np.column_stack((verts[1] - verts[0], verts[2] - verts[0]))
    det = jac_cols[0, 0] * jac_cols[1, 1] - jac_cols[0, 1] * jac_cols[1, 0]
    total = 0.0
    for p, w in zip(rule.points, rule.weights):
        x, y = verts[0] + jac_cols @ p
        total += w * det * f(x, y)
    return total
