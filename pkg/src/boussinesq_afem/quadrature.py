"""Quadrature rules on the reference triangle and the unit interval.

Triangle rules come from a collapsed Gauss-Jacobi x Gauss-Legendre tensor
product, so all weights are positive at every degree.  Rules report the
exactness degree they actually achieve, which is testable monomial by
monomial.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 10


@dataclass(frozen=True)
class QuadRule:
    """points: (nq, 3) barycentric triples, or (nq,) parameters on [0, 1]."""

    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def __post_init__(self):
        self.points.flags.writeable = False
        self.weights.flags.writeable = False


def _check_degree(degree: int):
    if not 1 <= degree <= MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree} (1..{MAX_DEGREE})")


@lru_cache(maxsize=None)
def simplex_rule(degree: int) -> QuadRule:
    """Rule on the reference triangle {l1, l2 >= 0, l1 + l2 <= 1}.

    Weights sum to the reference area 1/2.
    """
    _check_degree(degree)
    n = (degree + 2) // 2
    # radial direction with the (1 - s) Jacobian absorbed as a Jacobi weight
    xs, ws = roots_jacobi(n, 1.0, 0.0)
    s = 0.5 * (xs + 1.0)
    ws = ws / 4.0
    xt, wt = roots_legendre(n)
    t = 0.5 * (xt + 1.0)
    wt = wt / 2.0

    xi = np.repeat(s, n)
    eta = np.tile(t, n) * (1.0 - xi)
    w = np.repeat(ws, n) * np.tile(wt, n)
    bary = np.column_stack([1.0 - xi - eta, xi, eta])
    return QuadRule(bary, w, 2 * n - 1)


@lru_cache(maxsize=None)
def edge_rule(degree: int) -> QuadRule:
    """Gauss-Legendre rule on [0, 1]; weights sum to 1."""
    _check_degree(degree)
    n = (degree + 2) // 2
    x, w = roots_legendre(n)
    return QuadRule(0.5 * (x + 1.0), 0.5 * w, 2 * n - 1)


def barycentric_integral(a: int, b: int, c: int, area: float = 0.5) -> float:
    """Exact integral of l0^a l1^b l2^c over a triangle of given area."""
    return (
        factorial(a) * factorial(b) * factorial(c)
        / factorial(a + b + c + 2) * 2.0 * area
    )
