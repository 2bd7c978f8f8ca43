"""Offline greedy training of reduced models.

Both loops alternate a sweep over the non-exact training points (reduced
LPs only, parallelizable, reduced in index order) with a single full-order
solve at the worst point.
"""
from __future__ import annotations

import copy
import itertools
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .fullorder import solve_feas_fullorder, solve_sdp_fullorder
from .inner import InnerSet, solve_ER
from .lp import LpStatus
from .model import LogEntry, TrainedModel
from .outer import BoxBounds, OuterModel, alpha_out, select_cuts, solve_RF, solve_RS
from .problem import ParametricLMI, TrainSet
from .spectral import box_bounds

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


def default_threads() -> int:
    return int(os.environ.get("PARLMI_THREADS", "1") or 1)


def _map(fn, items, threads):
    if threads is None:
        threads = default_threads()
    if threads <= 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _as_trainset(problem: ParametricLMI, train) -> TrainSet:
    if isinstance(train, TrainSet):
        ts = train
    else:
        ts = TrainSet(np.asarray(train, dtype=float), problem.maps.widths)
    if ts.Xi.shape[1] != problem.num_params:
        raise ValueError(f"training points have {ts.Xi.shape[1]} coordinates, "
                         f"problem has {problem.num_params} parameters")
    ts.check_domain(problem.maps)
    return ts


def corner_indices(problem: ParametricLMI, Xi: np.ndarray) -> list[int]:
    """Training indices nearest to the 2^p corners of the domain box (deduplicated)."""
    scale = problem.maps.widths
    out = []
    for corner in itertools.product(*problem.maps.domain):
        d = np.linalg.norm((Xi - np.asarray(corner)) / scale, axis=1)
        i = int(np.argmin(d))
        if i not in out:
            out.append(i)
    return out


def _fresh_outer(problem, ts, box, M_C, M_Xi):
    if box is None:
        box = box_bounds(problem)
    return OuterModel.empty(box, ts.Xi, problem.num_decision, M_C=M_C, M_Xi=M_Xi,
                            scaling=ts.scaling)


def _exact_inner(outer: OuterModel) -> InnerSet:
    inner = InnerSet()
    for i in outer.C_k:
        rec = outer.records[i]
        if rec.y_bar is not None:
            inner.add(rec.y_bar, rec.x_bar, rec.mu_bar)
    return inner


# --- feasibility -------------------------------------------------------------

def train_feasibility(problem: ParametricLMI, train, M_C: int = 4, M_Xi: int = 3,
                      tol_feas: float = 1e-6, C0=None, max_k: int | None = None,
                      cap: float = 1.0, threads: int | None = None,
                      box: BoxBounds | None = None, **solver_options) -> TrainedModel:
    """Greedy construction of a model whose reduced feasibility LP certifies strict feasibility.

    Stops once every non-exact training point has a lower bound above
    ``tol_feas``.  If ``max_k`` exact points are reached first the model is
    returned with ``status="budget"``.
    """
    if not tol_feas > 0:
        raise ValueError("tol_feas must be positive")
    ts = _as_trainset(problem, train)
    maps = problem.maps
    outer = _fresh_outer(problem, ts, box, M_C, M_Xi)
    C0 = corner_indices(problem, ts.Xi) if C0 is None else [int(i) for i in C0]
    if not C0:
        raise ValueError("initial set C0 must be nonempty")
    max_k = len(ts) if max_k is None else max_k

    def add_exact(i):
        res = solve_feas_fullorder(problem, ts.Xi[i], inner=_exact_inner(outer), **solver_options)
        prior = outer.records[i].alpha_bar
        outer.set_exact(i, res.x, res.alpha, res.y)
        return prior, res.alpha

    for i in C0:
        add_exact(i)

    history = []
    status = "converged"
    for it in itertools.count():
        rest = [i for i in range(len(ts)) if i not in set(outer.C_k)]
        if not rest:
            break

        def sweep(i):
            return solve_RF(outer, maps, ts.Xi[i], cap=cap)

        results = _map(sweep, rest, threads)
        for i, res in zip(rest, results):
            rec = outer.records[i]
            rec.x_bar = res.x
            rec.alpha_bar = res.value
        values = np.array([outer.records[i].alpha_bar for i in rest])
        j = rest[int(np.argmin(values))]
        worst = float(values.min())
        log.info("feasibility sweep %d: min lower bound %.3e at index %d", it, worst, j)
        if worst > tol_feas:
            history.append(LogEntry(it, None, None, worst, "min_alpha", len(outer.C_k)))
            break
        if len(outer.C_k) >= max_k:
            history.append(LogEntry(it, None, None, worst, "min_alpha", len(outer.C_k)))
            status = "budget"
            break
        _, exact_alpha = add_exact(j)
        history.append(LogEntry(it, j, ts.Xi[j].tolist(), worst, "min_alpha",
                                len(outer.C_k), exact_alpha))

    settings = {"tol_feas": tol_feas, "cap": cap, "C0": C0, "max_k": max_k}
    return TrainedModel("feasibility", maps, outer, problem.fingerprint(), settings,
                        history, status)


# --- SDP -----------------------------------------------------------------------

def _sdp_sweep(problem, outer, maps, Xi, rest, threads, bootstrapped=False):
    inner = _exact_inner(outer)

    def one(i):
        mu = Xi[i]
        cuts = select_cuts(outer, mu)
        rs = solve_RS(outer, maps, mu, cuts=cuts)
        if rs.status is LpStatus.INFEASIBLE and bootstrapped:
            # inexact cuts alone can be too weak here: keep the record and
            # force the point towards the exact set
            return None, None, math.inf, solve_ER(inner, maps, mu).J_in
        if rs.status is LpStatus.INFEASIBLE:
            raise TrainingError(
                f"reduced SDP infeasible at mu={mu.tolist()}; bootstrap with a feasibility "
                "model or choose C0 so the reduced SDP is feasible everywhere")
        if rs.status is LpStatus.UNBOUNDED:
            raise TrainingError(f"reduced SDP unbounded at mu={mu.tolist()}: the SDP is unbounded")
        er = solve_ER(inner, maps, mu)
        abar = alpha_out(outer, maps, rs.x, mu, cuts=cuts)
        return rs.x, abar, rs.value, er.J_in

    return _map(one, rest, threads)


def _store_sweep(outer, rest, results):
    for i, (x, abar, _, _) in zip(rest, results):
        if x is not None:
            outer.records[i].x_bar = x
            outer.records[i].alpha_bar = abar


def _gap_values(J_out, J_in, kind):
    J_out = np.asarray(J_out)
    J_in = np.asarray(J_in)
    if kind == "auto":
        kind = "rel" if np.all(J_in > 0) else "abs"
    gap = np.where(np.isfinite(J_in), J_out - J_in, np.inf)
    if kind == "rel":
        gap = gap / J_in
    return gap, kind


def _sdp_exact(problem, outer, i, alpha_min, solver_options):
    res = solve_sdp_fullorder(problem, outer.Xi[i], inner=_exact_inner(outer),
                              alpha_min=alpha_min, **solver_options)
    outer.set_exact(i, res.x, res.alpha, res.y, J_accurate=res.J)
    return res


def _start_sdp(problem, ts, M_C, M_Xi, C0, feas_model, skip_feas_phase, box, threads,
               alpha_min, solver_options):
    if feas_model is None and not skip_feas_phase:
        feas_model = train_feasibility(problem, ts, M_C, M_Xi, C0=C0, box=box, threads=threads)
    if feas_model is not None:
        if feas_model.fingerprint != problem.fingerprint():
            raise TrainingError("feasibility model belongs to a different problem")
        outer = copy.deepcopy(feas_model.outer)
        outer.M_C, outer.M_Xi = M_C, M_Xi
        outer.C_k = []
        for rec in outer.records:
            rec.exact = False
            rec.J_accurate = None
        C0 = [] if C0 is None else list(C0)
    else:
        outer = _fresh_outer(problem, ts, box, M_C, M_Xi)
        C0 = corner_indices(problem, ts.Xi) if C0 is None else list(C0)
    for i in C0:
        _sdp_exact(problem, outer, int(i), alpha_min, solver_options)
    return outer, [int(i) for i in C0]


def train_sdp(problem: ParametricLMI, train, M_C: int = 4, M_Xi: int = 3,
              tol_gap: float = 1e-2, C0=None, feas_model: TrainedModel | None = None,
              skip_feas_phase: bool = False, gap: str = "auto",
              max_k: int | None = None, alpha_min: float | None = None,
              threads: int | None = None, box: BoxBounds | None = None,
              **solver_options) -> TrainedModel:
    """Greedy construction of a reduced SDP model with online error bounds.

    Without ``skip_feas_phase`` a feasibility model is built first (or taken
    from ``feas_model``) and its solutions become the starting records with an
    empty exact set.  With ``skip_feas_phase`` the exact set starts at ``C0``
    (default: domain corners), which must make the reduced SDP feasible on all
    training points.

    ``gap`` is ``"abs"``, ``"rel"`` or ``"auto"`` (relative whenever every
    lower bound ``J_in`` of the sweep is positive).
    """
    if gap not in ("auto", "abs", "rel"):
        raise ValueError("gap must be 'auto', 'abs' or 'rel'")
    ts = _as_trainset(problem, train)
    maps = problem.maps
    bootstrapped = feas_model is not None or not skip_feas_phase
    outer, C0 = _start_sdp(problem, ts, M_C, M_Xi, C0, feas_model, skip_feas_phase, box,
                           threads, alpha_min, solver_options)
    max_k = len(ts) if max_k is None else max_k

    history = []
    status = "converged"
    for it in itertools.count():
        rest = [i for i in range(len(ts)) if i not in set(outer.C_k)]
        if not rest:
            break
        results = _sdp_sweep(problem, outer, maps, ts.Xi, rest, threads, bootstrapped)
        _store_sweep(outer, rest, results)
        gaps, kind = _gap_values([r[2] for r in results], [r[3] for r in results], gap)
        k = int(np.argmax(gaps))
        j, worst = rest[k], float(gaps[k])
        log.info("sdp sweep %d: max %s gap %.3e at index %d", it, kind, worst, j)
        if worst <= tol_gap or len(outer.C_k) >= max_k:
            history.append(LogEntry(it, None, None, worst, f"gap_{kind}", len(outer.C_k)))
            if worst > tol_gap:
                status = "budget"
            break
        res = _sdp_exact(problem, outer, j, alpha_min, solver_options)
        history.append(LogEntry(it, j, ts.Xi[j].tolist(), worst, f"gap_{kind}",
                                len(outer.C_k), res.alpha))

    settings = {"tol_gap": tol_gap, "gap": gap, "C0": C0, "max_k": max_k,
                "alpha_min": alpha_min, "skip_feas_phase": bool(skip_feas_phase)}
    return TrainedModel("sdp", maps, outer, problem.fingerprint(), settings, history, status)


def build_sdp_model(problem: ParametricLMI, train, C_indices, M_C: int = 4, M_Xi: int = 3,
                    sweeps: int = 3, alpha_min: float | None = None,
                    threads: int | None = None, box: BoxBounds | None = None,
                    **solver_options) -> TrainedModel:
    """SDP model with a prescribed exact set (no greedy selection).

    Used to compare greedy placement against e.g. uniform placement; the
    remaining records are refreshed by ``sweeps`` reduced sweeps.
    """
    ts = _as_trainset(problem, train)
    outer = _fresh_outer(problem, ts, box, M_C, M_Xi)
    for i in C_indices:
        _sdp_exact(problem, outer, int(i), alpha_min, solver_options)
    rest = [i for i in range(len(ts)) if i not in set(outer.C_k)]
    for _ in range(sweeps):
        results = _sdp_sweep(problem, outer, problem.maps, ts.Xi, rest, threads)
        _store_sweep(outer, rest, results)
    settings = {"C0": [int(i) for i in C_indices], "sweeps": sweeps, "alpha_min": alpha_min,
                "placement": "prescribed"}
    return TrainedModel("sdp", problem.maps, outer, problem.fingerprint(), settings, [],
                        "converged")


def uniform_indices(Xi: np.ndarray, count: int) -> list[int]:
    """``count`` indices spread evenly over a 1-D ordered training set."""
    order = np.argsort(Xi[:, 0], kind="stable")
    picks = np.round(np.linspace(0, len(Xi) - 1, count)).astype(int)
    return [int(order[p]) for p in picks]

