"""Full-order solvers for one fixed parameter value.

Both solvers alternate a small LP over the inner set with one eigensolve of
size N, adding the new Rayleigh vector after each eigensolve.  The
eigensolve dominates the cost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .inner import InnerSet, alpha_in
from .lp import LinearProgram, LpStatus, solve_lp
from .problem import ParametricLMI
from .spectral import alpha

X_BOX = 1e6
MAX_ITER = 200


class FullOrderError(RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass
class Iterate:
    x: np.ndarray
    alpha_in: float
    alpha: float
    objective: float = math.nan


@dataclass
class FullOrderResult:
    x: np.ndarray
    alpha: float
    y: np.ndarray
    inner: InnerSet
    history: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.history)

    @property
    def J(self) -> float:
        return self.history[-1].objective if self.history else math.nan


def _inner_rows(inner: InnerSet, problem: ParametricLMI, mu):
    t0, tL, c = problem.eval_theta(mu)
    Y = inner.as_array().reshape(-1, t0.size)
    return Y @ tL, Y @ t0, c


def solve_feas_fullorder(problem: ParametricLMI, mu, inner: InnerSet | None = None,
                         eps_alpha: float = 1e-6, tol_gap: float | None = None,
                         x_box: float = X_BOX, max_iter: int = MAX_ITER,
                         **eig_kwargs) -> FullOrderResult:
    """Look for ``x`` with ``F(x; mu)`` positive definite.

    Each iteration maximizes ``alpha_in(., mu)`` over ``|x_i| <= x_box``,
    evaluates the true ``alpha`` there and adds its Rayleigh vector.  Stops
    once ``alpha >= eps_alpha`` or ``alpha_in - alpha <= tol_gap`` (default
    ``1e-8 (1 + |alpha_in|)``).  The inner set passed in is not modified.
    """
    inner = InnerSet() if inner is None else inner.copy()
    n = problem.num_decision
    history = []
    for _ in range(max_iter):
        if len(inner):
            G, h, _ = _inner_rows(inner, problem, mu)
            # variables [x, t]: maximize t with G x + h >= t
            lp = LinearProgram(np.r_[np.zeros(n), 1.0], "max",
                               A_ge=np.hstack([G, -np.ones((len(h), 1))]), b_ge=-h,
                               lower=np.r_[np.full(n, -x_box), -np.inf],
                               upper=np.r_[np.full(n, x_box), np.inf])
            res = solve_lp(lp)
            if res.status is not LpStatus.OPTIMAL:
                raise FullOrderError(f"max alpha_in LP reported {res.status.value}")
            x = res.x[:n]
        else:
            x = np.zeros(n)
        upper = alpha_in(inner, problem.maps, x, mu)
        ev = alpha(problem, x, mu, **eig_kwargs)
        history.append(Iterate(x.copy(), upper, ev.alpha))
        gap_tol = tol_gap if tol_gap is not None else 1e-8 * (1.0 + abs(upper))
        close = math.isfinite(upper) and upper - ev.alpha <= gap_tol
        if ev.alpha >= eps_alpha or close:
            inner.add(ev.y, x, mu)
            return FullOrderResult(x, ev.alpha, ev.y, inner, history)
        inner.add(ev.y, x, mu)
    best = max(history, key=lambda it: it.alpha)
    raise FullOrderError(f"feasibility solver did not converge in {max_iter} iterations",
                         best=best)


def default_alpha_min(problem: ParametricLMI, mu, rel: float = 1e-6) -> float:
    t0, _, _ = problem.eval_theta(mu)
    scale = float(np.max(np.abs(t0))) if t0.size else 0.0
    return rel * (scale if scale > 0 else 1.0)


def solve_sdp_fullorder(problem: ParametricLMI, mu, inner: InnerSet | None = None,
                        alpha_min: float | None = None, x_box: float = X_BOX,
                        max_iter: int = MAX_ITER, **eig_kwargs) -> FullOrderResult:
    """Accurate SDP solution at one parameter by cutting planes on the inner set.

    Each iteration solves ``min c^T x`` s.t. ``alpha_in(x; mu) >= alpha_min``
    and ``|x_i| <= x_box``, then eigensolves at the minimizer.  The loop ends
    as soon as ``alpha(x; mu) > 0``; otherwise the new Rayleigh vector is
    appended.  The objective sequence is non-decreasing since constraints only
    accumulate.
    """
    if alpha_min is None:
        alpha_min = default_alpha_min(problem, mu)
    if not alpha_min > 0:
        raise ValueError("alpha_min must be positive")
    inner = InnerSet() if inner is None else inner.copy()
    n = problem.num_decision
    history = []
    for _ in range(max_iter):
        G, h, c = _inner_rows(inner, problem, mu)
        lp = LinearProgram(c, "min", A_ge=G, b_ge=alpha_min - h,
                           lower=np.full(n, -x_box), upper=np.full(n, x_box))
        res = solve_lp(lp)
        if res.status is LpStatus.INFEASIBLE:
            raise FullOrderError(
                f"no x in the box reaches alpha_in >= {alpha_min:g} at mu={np.ravel(mu).tolist()}")
        x = res.x
        upper = alpha_in(inner, problem.maps, x, mu)
        ev = alpha(problem, x, mu, **eig_kwargs)
        history.append(Iterate(x.copy(), upper, ev.alpha, float(c @ x)))
        if ev.alpha > 0:
            if np.any(np.abs(x) >= x_box * (1 - 1e-12)):
                raise FullOrderError(
                    "solution lies on the x-box; enlarge x_box or check boundedness",
                    best=history[-1])
            return FullOrderResult(x, ev.alpha, ev.y, inner, history)
        inner.add(ev.y, x, mu)
    raise FullOrderError(f"SDP cutting-plane iteration did not reach alpha > 0 in {max_iter} iterations",
                         best=history[-1])
