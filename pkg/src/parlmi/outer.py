"""Outer approximation of the Rayleigh set: box plus half-space cuts.

Everything here works on coefficient evaluations, box bounds and cut records
only; no operator of size N is ever touched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lp import LinearProgram, LpStatus, solve_lp
from .polynomial import ParameterMaps


# Relative rounding allowance on cut right-hand sides.  Each lower bound is
# lowered by CUT_SLACK * sum_q |row_q| * max(|lo_q|, |hi_q|), the size of the
# error in evaluating row . y over the box, so cuts built at large x stay valid.
CUT_SLACK = 1e-9


class ConsistencyError(RuntimeError):
    """An LP that must be feasible by construction was not (invalid cut or bug)."""


@dataclass(frozen=True, eq=False)
class BoxBounds:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box bounds need lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, y, slack: float = 1e-10) -> bool:
        y = np.asarray(y)
        return bool(np.all(y >= self.lo - slack) and np.all(y <= self.hi + slack))


@dataclass(eq=False)
class CutRecord:
    """One training parameter with its current solution and a lower bound on alpha there."""

    mu_bar: np.ndarray
    x_bar: np.ndarray
    alpha_bar: float = -math.inf
    exact: bool = False
    y_bar: np.ndarray | None = None
    J_accurate: float | None = None

    def row(self, maps: ParameterMaps) -> np.ndarray:
        return maps.coefficients(self.x_bar, self.mu_bar)


@dataclass(eq=False)
class OuterModel:
    box: BoxBounds
    Xi: np.ndarray
    records: list
    C_k: list = field(default_factory=list)
    M_C: int = 4
    M_Xi: int = 3
    scaling: np.ndarray | None = None

    def __post_init__(self):
        self.Xi = np.asarray(self.Xi, dtype=float)
        if self.Xi.ndim == 1:
            self.Xi = self.Xi.reshape(-1, 1)
        if self.scaling is None:
            self.scaling = np.ones(self.Xi.shape[1])
        self.scaling = np.asarray(self.scaling, dtype=float)
        if len(self.records) != len(self.Xi):
            raise ValueError("need exactly one record per training point")

    @classmethod
    def empty(cls, box: BoxBounds, Xi, num_decision: int, **kwargs) -> "OuterModel":
        Xi = np.asarray(Xi, dtype=float).reshape(len(Xi), -1)
        records = [CutRecord(mu_bar=mu.copy(), x_bar=np.zeros(num_decision)) for mu in Xi]
        return cls(box=box, Xi=Xi, records=records, **kwargs)

    def check(self) -> None:
        ck = set(self.C_k)
        if len(ck) != len(self.C_k) or any(not 0 <= i < len(self.records) for i in ck):
            raise ValueError("C_k indices must be distinct and valid")
        for i, rec in enumerate(self.records):
            if rec.exact != (i in ck):
                raise ValueError(f"record {i}: exact flag disagrees with C_k membership")

    def set_exact(self, index: int, x_bar, alpha_bar: float, y_bar, J_accurate=None) -> None:
        rec = self.records[index]
        rec.x_bar = np.asarray(x_bar, dtype=float).copy()
        rec.alpha_bar = float(alpha_bar)
        rec.y_bar = None if y_bar is None else np.asarray(y_bar, dtype=float).copy()
        rec.J_accurate = J_accurate
        rec.exact = True
        if index not in self.C_k:
            self.C_k.append(index)

    def distances(self, mu) -> np.ndarray:
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        return np.linalg.norm((self.Xi - mu) / self.scaling, axis=1)


def select_cut_indices(model: OuterModel, mu) -> list[int]:
    """Indices of the M_C nearest exact and M_Xi nearest inexact records.

    Inexact records that have never been updated (lower bound ``-inf``) are
    skipped.  Distance ties go to the lower training index.
    """
    order = np.argsort(model.distances(mu), kind="stable")
    ck = set(model.C_k)
    exact = [int(i) for i in order if i in ck]
    inexact = [int(i) for i in order
               if i not in ck and math.isfinite(model.records[i].alpha_bar)]
    return exact[:model.M_C] + inexact[:model.M_Xi]


def select_cuts(model: OuterModel, mu) -> list[CutRecord]:
    return [model.records[i] for i in select_cut_indices(model, mu)]


def build_polytope(model: OuterModel, maps: ParameterMaps, mu,
                   cuts: list[CutRecord] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(A_out, b_out)`` with ``Y_out = {y : A_out y >= b_out}``.

    The first ``2 Q_F`` rows are the box, then one row per selected cut.
    """
    if cuts is None:
        cuts = select_cuts(model, mu)
    qf = model.box.lo.size
    eye = np.eye(qf)
    rows = [eye, -eye]
    rhs = [model.box.lo, -model.box.hi]
    if cuts:
        cut_rows = np.array([rec.row(maps) for rec in cuts])
        reach = np.maximum(np.abs(model.box.lo), np.abs(model.box.hi))
        rows.append(cut_rows)
        rhs.append(np.array([rec.alpha_bar for rec in cuts]) - CUT_SLACK * (np.abs(cut_rows) @ reach))
    return np.vstack(rows), np.concatenate(rhs)


def alpha_out(model: OuterModel, maps: ParameterMaps, x, mu,
              cuts: list[CutRecord] | None = None) -> float:
    """Lower bound of alpha(x; mu): minimize the coefficient vector over Y_out."""
    A, b = build_polytope(model, maps, mu, cuts)
    coefs = maps.coefficients(x, mu)
    qf = coefs.size
    lp = LinearProgram(coefs, "min", A_ge=A, b_ge=b,
                       lower=np.full(qf, -np.inf), upper=np.full(qf, np.inf))
    res = solve_lp(lp)
    if res.status is not LpStatus.OPTIMAL:
        raise ConsistencyError(f"outer polytope LP is {res.status.value} at mu={mu}")
    return res.objective


def _dual_lp(A, b, maps: ParameterMaps, mu):
    """Shared constraint block of the feasibility and SDP reduced LPs over variables ``[p, x]``."""
    t0, tL, c = maps.eval_theta(mu)
    ell, n = A.shape[0], tL.shape[1]
    A_eq = np.hstack([A.T, -tL])
    lower = np.concatenate([np.zeros(ell), np.full(n, -np.inf)])
    upper = np.full(ell + n, np.inf)
    return A_eq, t0, lower, upper, c, ell, n


@dataclass
class ReducedSolution:
    status: LpStatus
    x: np.ndarray | None
    value: float                 # b_out^T p in feasibility mode, J_out in SDP mode
    p: np.ndarray | None = None
    ray: np.ndarray | None = None


def solve_RF(model: OuterModel, maps: ParameterMaps, mu, cap: float = 1.0,
             cuts: list[CutRecord] | None = None) -> ReducedSolution:
    """Reduced feasibility problem: maximize ``b_out^T p`` subject to
    ``A_out^T p - thetaL x = theta0``, ``p >= 0`` and ``b_out^T p <= cap``.

    A positive value certifies that the returned ``x`` strictly satisfies the LMI.
    """
    A, b = build_polytope(model, maps, mu, cuts)
    A_eq, t0, lower, upper, _, ell, n = _dual_lp(A, b, maps, mu)
    obj = np.concatenate([b, np.zeros(n)])
    lp = LinearProgram(obj, "max", A_eq=A_eq, b_eq=t0,
                       A_ge=-obj[None, :], b_ge=np.array([-cap]),
                       lower=lower, upper=upper)
    res = solve_lp(lp)
    if res.status is not LpStatus.OPTIMAL:
        raise ConsistencyError(f"reduced feasibility LP reported {res.status.value} at mu={mu}")
    return ReducedSolution(LpStatus.OPTIMAL, res.x[ell:], res.objective, p=res.x[:ell])


def solve_RS(model: OuterModel, maps: ParameterMaps, mu,
             cuts: list[CutRecord] | None = None) -> ReducedSolution:
    """Reduced SDP: minimize ``c^T x`` over x with ``alpha_out(x; mu) >= 0``.

    Infeasible or unbounded statuses are returned to the caller unchanged.
    """
    A, b = build_polytope(model, maps, mu, cuts)
    A_eq, t0, lower, upper, c, ell, n = _dual_lp(A, b, maps, mu)
    obj = np.concatenate([np.zeros(ell), c])
    lp = LinearProgram(obj, "min", A_eq=A_eq, b_eq=t0,
                       A_ge=np.concatenate([b, np.zeros(n)])[None, :], b_ge=np.zeros(1),
                       lower=lower, upper=upper)
    res = solve_lp(lp)
    if res.status is LpStatus.OPTIMAL:
        return ReducedSolution(res.status, res.x[ell:], res.objective, p=res.x[:ell])
    if res.status is LpStatus.UNBOUNDED:
        return ReducedSolution(res.status, None, -math.inf, ray=res.ray[ell:])
    return ReducedSolution(res.status, None, math.inf)
