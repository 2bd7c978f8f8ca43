"""Small dense linear programs: two-phase primal simplex with Bland's rule.

The problems solved here have at most a few hundred variables, so a full
tableau is cheap and keeps the pivoting fully deterministic.

A :class:`LinearProgram` reads::

    minimize / maximize   c^T x
    subject to            A_eq x  = b_eq
                          A_ge x >= b_ge
                          lower <= x <= upper

Bounds default to ``0 <= x < inf``; pass ``-np.inf`` for free variables.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class SingularBasisError(ArithmeticError):
    def __init__(self, columns):
        super().__init__(f"numerically singular basis, columns {list(columns)}")
        self.columns = list(columns)


class IterationLimitError(RuntimeError):
    pass


@dataclass
class LinearProgram:
    c: np.ndarray
    sense: str = "min"
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ge: np.ndarray | None = None
    b_ge: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', not {self.sense!r}")
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n, "eq")
        self.A_ge, self.b_ge = _rows(self.A_ge, self.b_ge, n, "ge")
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, float).reshape(-1)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, float).reshape(-1)
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise ValueError("lower bound +inf or upper bound -inf")
        for arr in (self.c, self.A_eq, self.b_eq, self.A_ge, self.b_ge):
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite LP coefficient")

    @property
    def num_vars(self) -> int:
        return self.c.size


def _rows(A, b, n, name):
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.shape != (b.size, n):
        raise ValueError(f"A_{name} has shape {A.shape}, expected ({b.size}, {n})")
    return A, b


@dataclass
class LpResult:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float = np.nan
    ray: np.ndarray | None = None          # improving direction when unbounded
    duals_eq: np.ndarray | None = None     # c = A_eq^T y_eq + A_ge^T y_ge + bound multipliers
    duals_ge: np.ndarray | None = None
    witness: np.ndarray | None = None      # phase-1 Farkas multipliers of the standard-form rows
    iterations: int = 0
    basis: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class SimplexSolver:
    """Dense two-phase simplex.  One instance may be reused; it keeps no state between solves."""

    def __init__(self, feas_tol: float = 1e-9, pivot_tol: float = 1e-11,
                 opt_tol: float = 1e-10, max_iter: int | None = None):
        self.feas_tol = feas_tol
        self.pivot_tol = pivot_tol
        self.opt_tol = opt_tol
        self.max_iter = max_iter
        self._force_bland = False

    # -- standard form ------------------------------------------------------
    def _standardize(self, lp: LinearProgram):
        n = lp.num_vars
        cols = []            # (original var, sign) per structural column
        offset = np.zeros(n)
        upper_rows = []      # (column, bound)
        for j in range(n):
            lo, hi = lp.lower[j], lp.upper[j]
            if np.isfinite(lo):
                offset[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    upper_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                offset[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        nz = len(cols)
        T = np.zeros((n, nz))
        for k, (j, s) in enumerate(cols):
            T[j, k] = s
        m_eq, m_ge, m_ub = len(lp.b_eq), len(lp.b_ge), len(upper_rows)
        n_cols = nz + m_ge + m_ub
        A = np.zeros((m_eq + m_ge + m_ub, n_cols))
        b = np.zeros(m_eq + m_ge + m_ub)
        A[:m_eq, :nz] = lp.A_eq @ T
        b[:m_eq] = lp.b_eq - lp.A_eq @ offset
        r = slice(m_eq, m_eq + m_ge)
        A[r, :nz] = lp.A_ge @ T
        A[r, nz:nz + m_ge] = -np.eye(m_ge)
        b[r] = lp.b_ge - lp.A_ge @ offset
        for i, (k, bound) in enumerate(upper_rows):
            row = m_eq + m_ge + i
            A[row, k] = 1.0
            A[row, nz + m_ge + i] = 1.0
            b[row] = bound
        sign = 1.0 if lp.sense == "min" else -1.0
        cost = np.zeros(n_cols)
        cost[:nz] = sign * (T.T @ lp.c)
        return A, b, cost, T, offset, (m_eq, m_ge, m_ub)

    # -- tableau primitives -------------------------------------------------
    def _refactor(self, tab, basis, Aext, b, cost_ext):
        """Rebuild the tableau from the basis so pivoting errors never accumulate."""
        try:
            sol = np.linalg.solve(Aext[:, basis], np.column_stack([Aext, b]))
        except np.linalg.LinAlgError:
            raise SingularBasisError(basis) from None
        sol[:, basis] = np.eye(len(basis))
        rhs = sol[:, -1]
        rhs[(rhs < 0) & (rhs > -self.feas_tol)] = 0.0
        tab[:-1] = sol
        tab[-1, :-1] = cost_ext - cost_ext[basis] @ sol[:, :-1]
        tab[-1, basis] = 0.0
        tab[-1, -1] = -cost_ext[basis] @ rhs

    def _entering(self, tab, allowed, cost_scale=1.0):
        red = tab[-1, :-1]
        cand = np.flatnonzero(allowed & (red < -self.opt_tol * cost_scale))
        return int(cand[0]) if cand.size else None

    def _leaving(self, tab, basis, s, bland):
        col = tab[:-1, s]
        rows = np.flatnonzero(col > self.pivot_tol * max(1.0, np.abs(col).max(initial=0.0)))
        if rows.size == 0:
            return None
        rhs = np.maximum(tab[rows, -1], 0.0)
        if bland:
            ratios = rhs / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            return int(min(ties, key=lambda i: basis[i]))
        # Harris two-pass test: among rows within the feasibility tolerance of
        # the minimum ratio, take the largest pivot element.
        bound = ((rhs + self.feas_tol) / col[rows]).min()
        ok = rows[rhs / col[rows] <= bound]
        return int(ok[np.argmax(col[ok])])

    def _run(self, tab, basis, allowed, budget, refactor, cost_scale=1.0):
        # A Harris pivot that leaves basic values markedly more negative is
        # retried with the plain minimum-ratio row.  A pivot whose basis turns
        # out singular (pivot element was rounding noise) is undone and its
        # column skipped until the next successful pivot.  Long degenerate
        # stalls fall back to Bland's rule.
        it = 0
        stall = 0
        blocked = np.ones_like(allowed)
        while True:
            s = self._entering(tab, allowed & blocked, cost_scale)
            if s is None:
                # if columns were blocked, the caller's final check decides
                return "optimal", None, it
            bland = self._force_bland or stall > 50
            r = self._leaving(tab, basis, s, bland=bland)
            if r is None:
                return "unbounded", s, it
            before = tab[-1, -1]
            worst = min(tab[:-1, -1].min(initial=0.0), 0.0)
            if not self._try_pivot(basis, r, s, refactor, tab, None if bland else worst):
                r2 = self._leaving(tab, basis, s, bland=True)
                if bland or r2 == r or not self._try_pivot(basis, r2, s, refactor, tab, None):
                    blocked[s] = False
                    continue
            blocked[:] = True
            stall = stall + 1 if abs(tab[-1, -1] - before) <= 1e-14 * (1 + abs(before)) else 0
            it += 1
            if it > budget:
                raise IterationLimitError(f"simplex exceeded {budget} pivots")

    def _try_pivot(self, basis, r, s, refactor, tab, worst) -> bool:
        old = basis[r]
        basis[r] = s
        try:
            refactor()
            if worst is None or tab[:-1, -1].min(initial=0.0) >= worst - 10 * self.feas_tol:
                return True
        except SingularBasisError:
            pass
        basis[r] = old
        refactor()
        return False

    # -- driver -------------------------------------------------------------
    def solve(self, lp: LinearProgram) -> LpResult:
        # Harris pivots with large elements usually win; on badly scaled
        # degenerate programs they can drift, so retry along Bland's path.
        try:
            return self._solve(lp)
        except SingularBasisError:
            if self._force_bland:
                raise
        self._force_bland = True
        try:
            return self._solve(lp)
        finally:
            self._force_bland = False

    def _solve(self, lp: LinearProgram) -> LpResult:
        A, b, cost, T, offset, (m_eq, m_ge, m_ub) = self._standardize(lp)
        m, ncol = A.shape
        # Row equilibration plus sign flip so every rhs is non-negative; the
        # same factor maps duals and Farkas multipliers back.
        scale = np.abs(A).max(axis=1, initial=0.0)
        flip = np.where(b < 0, -1.0, 1.0) / np.where(scale > 0, scale, 1.0)
        A = A * flip[:, None]
        b = b * flip
        # column equilibration: solve in z' = z * colscale
        colscale = np.abs(A).max(axis=0, initial=0.0)
        colscale = np.where(colscale > 0, colscale, 1.0)
        A = A / colscale
        cost = cost / colscale
        budget = 50 * (m + ncol + 10) if self.max_iter is None else self.max_iter

        # Tableau: [structural | artificial | rhs], last row holds reduced costs.
        Aext = np.hstack([A, np.eye(m)])
        tab = np.zeros((m + 1, ncol + m + 1))
        basis = list(range(ncol, ncol + m))
        allowed = np.zeros(ncol + m, dtype=bool)
        allowed[:ncol] = True
        phase1_cost = np.r_[np.zeros(ncol), np.ones(m)]
        self._refactor(tab, basis, Aext, b, phase1_cost)

        def refactor1():
            self._refactor(tab, basis, Aext, b, phase1_cost)

        _, _, it1 = self._run(tab, basis, allowed, budget, refactor1)
        if -tab[-1, -1] > self.feas_tol * max(1.0, np.abs(b).max(initial=0.0)):
            w = phase1_cost[basis] @ tab[:m, ncol:ncol + m]
            return LpResult(LpStatus.INFEASIBLE, witness=w * flip, iterations=it1,
                            basis=list(basis))

        # Drive remaining artificials out of the basis; drop redundant rows.
        keep = []
        for i in range(m):
            if basis[i] >= ncol:
                nz = np.flatnonzero(np.abs(tab[i, :ncol]) > self.pivot_tol)
                if nz.size:
                    basis[i] = int(nz[0])
                    refactor1()
                    keep.append(i)
            else:
                keep.append(i)
        rows = np.array(keep, dtype=int)
        basis = [basis[i] for i in rows]
        Aext, b2 = Aext[rows], b[rows]
        tab = np.zeros((len(rows) + 1, ncol + m + 1))
        ext_cost = np.concatenate([cost, np.zeros(m)])

        def refactor2():
            self._refactor(tab, basis, Aext, b2, ext_cost)

        refactor2()
        cscale = 1.0 + np.abs(cost).max(initial=0.0)
        state, s, it2 = self._run(tab, basis, allowed, budget, refactor2, cscale)
        iters = it1 + it2
        if state == "unbounded":
            d = np.zeros(ncol + m)
            d[s] = 1.0
            d[basis] = -tab[:-1, s]
            ray = T @ (d[:ncol] / colscale)[:T.shape[1]]
            ray /= np.abs(ray).max(initial=1.0)
            return LpResult(LpStatus.UNBOUNDED, ray=ray, iterations=iters, basis=list(basis))

        B = Aext[:, basis]
        try:
            y = np.linalg.solve(B.T, ext_cost[basis])
        except np.linalg.LinAlgError:
            raise SingularBasisError(basis) from None
        z = np.zeros(ncol + m)
        z[basis] = tab[:-1, -1]
        # A posteriori check: an ill-conditioned basis is fine as long as the
        # point it yields is primal and dual feasible to tolerance.
        primal = np.abs(Aext @ z - b2).max(initial=0.0)
        reduced = (cost - Aext[:, :ncol].T @ y).min(initial=0.0)
        if (primal > 10 * self.feas_tol * (1.0 + np.abs(b2).max(initial=0.0))
                or z.min() < -10 * self.feas_tol
                or reduced < -1e3 * self.opt_tol * cscale):
            raise SingularBasisError(basis)
        x = offset + T @ (z[:ncol] / colscale)[:T.shape[1]]
        duals = np.zeros(m)
        duals[rows] = y * flip[rows]
        if lp.sense == "max":
            duals = -duals
        return LpResult(LpStatus.OPTIMAL, x=x, objective=float(lp.c @ x),
                        duals_eq=duals[:m_eq], duals_ge=duals[m_eq:m_eq + m_ge],
                        iterations=iters, basis=list(basis))


def solve_lp(lp: LinearProgram, **options) -> LpResult:
    return SimplexSolver(**options).solve(lp)


def check_feasible(lp: LinearProgram, x, tol: float = 1e-9) -> float:
    """Largest constraint violation of ``x`` (0 when feasible)."""
    x = np.asarray(x, dtype=float)
    viol = [0.0]
    if lp.b_eq.size:
        viol.append(np.abs(lp.A_eq @ x - lp.b_eq).max())
    if lp.b_ge.size:
        viol.append(np.max(lp.b_ge - lp.A_ge @ x))
    viol.append(np.max(lp.lower - x))
    viol.append(np.max(x - lp.upper))
    return float(max(viol))
