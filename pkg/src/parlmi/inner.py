"""Inner approximation of the Rayleigh set and the online error-bound LP.

A finite set of Rayleigh vectors taken from actual eigenvectors gives upper
bounds on alpha and, through the error-bound LP, lower bounds on the SDP
optimum.  Like :mod:`parlmi.outer` this module is matrix-free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lp import LinearProgram, LpStatus, solve_lp
from .polynomial import ParameterMaps

DUPLICATE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class InnerPoint:
    y: np.ndarray
    x: np.ndarray | None = None
    mu: np.ndarray | None = None


class InnerSet:
    """Finite subset of the Rayleigh set; each point remembers the (x, mu) that produced it."""

    def __init__(self, points=()):
        self.points: list[InnerPoint] = []
        for pt in points:
            if isinstance(pt, InnerPoint):
                self.add(pt.y, pt.x, pt.mu)
            else:
                self.add(pt)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def copy(self) -> "InnerSet":
        new = InnerSet()
        new.points = list(self.points)
        return new

    def add(self, y, x=None, mu=None) -> bool:
        """Append ``y`` unless an identical point (to 1e-12) is already stored."""
        y = np.asarray(y, dtype=float).copy()
        for pt in self.points:
            if np.max(np.abs(pt.y - y)) <= DUPLICATE_TOL:
                return False
        self.points.append(InnerPoint(
            y, None if x is None else np.asarray(x, dtype=float).copy(),
            None if mu is None else np.atleast_1d(np.asarray(mu, dtype=float)).copy()))
        return True

    def as_array(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, 0))
        return np.array([pt.y for pt in self.points])


def alpha_in(inner: InnerSet, maps: ParameterMaps, x, mu) -> float:
    """Upper bound of alpha(x; mu); ``math.inf`` for an empty set."""
    if not len(inner):
        return math.inf
    return float(np.min(inner.as_array() @ maps.coefficients(x, mu)))


@dataclass
class ERSolution:
    J_in: float            # -inf when the LP is unbounded
    x: np.ndarray | None

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.J_in)


def solve_ER(inner: InnerSet, maps: ParameterMaps, mu) -> ERSolution:
    """Minimize ``c(mu)^T x`` subject to ``alpha_in(x; mu) >= 0``.

    The optimal value never exceeds the true SDP optimum.  An unbounded LP
    (too few inner points) is reported as ``J_in = -inf``.
    """
    t0, tL, c = maps.eval_theta(mu)
    n = c.size
    Y = inner.as_array().reshape(-1, t0.size)
    lp = LinearProgram(c, "min", A_ge=Y @ tL, b_ge=-(Y @ t0),
                       lower=np.full(n, -np.inf), upper=np.full(n, np.inf))
    res = solve_lp(lp)
    if res.status is LpStatus.UNBOUNDED:
        return ERSolution(-math.inf, None)
    if res.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"error-bound LP reported {res.status.value}")
    return ERSolution(res.objective, res.x)
