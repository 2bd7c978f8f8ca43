"""Benchmark experiments on the reaction-diffusion instance, emitted as CSV.

``fig-a``  decay of ``alpha_in - alpha`` along the full-order SDP iteration.
``fig-b``  worst relative gap over the training set against ``|C_k|``.
``fig-c``  greedy against uniformly spaced exact sets of equal size.

Each CSV starts with a ``# schema: parlmi.bench-<name>/1`` comment line.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .example_rd import build_problem
from .fullorder import default_alpha_min, solve_sdp_fullorder
from .online import online_solve
from .problem import TrainSet
from .trainer import build_sdp_model, corner_indices, train_sdp, uniform_indices

FIG_A_MUS = (0.5, 2.5)
# The final error of a decay curve is below alpha_min, so the decay study runs
# with a margin ten times tighter than the solver default.
FIG_A_ALPHA_REL = 1e-7
EXPERIMENTS = ("fig-a", "fig-b", "fig-c")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return str(v)


def write_csv(path, schema: str, header: list[str], rows: list[list]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: parlmi.bench-{schema}/1\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def decay_curves(problem, mus, alpha_rel=FIG_A_ALPHA_REL) -> list[list[float]]:
    """Per-iteration error ``alpha_in - alpha`` of the full-order SDP solver for each mu."""
    curves = []
    for mu in mus:
        res = solve_sdp_fullorder(problem, [mu],
                                  alpha_min=default_alpha_min(problem, [mu], alpha_rel))
        curves.append([h.alpha_in - h.alpha for h in res.history])
    return curves


def fig_a(m: int = 11, seed: int = 0, n_random: int = 30, mus=FIG_A_MUS,
          alpha_rel=FIG_A_ALPHA_REL):
    """Rows ``[iteration, err(mu_1), ..., err(mu_j), worst_random]``.

    A curve that has already terminated keeps its final value, so the worst
    case over random parameters is a running maximum of finished errors.
    """
    problem = build_problem(nodes_per_side=m)
    lo, hi = problem.maps.domain[0]
    rng = np.random.default_rng(seed)
    fixed = decay_curves(problem, mus, alpha_rel)
    rand = decay_curves(problem, rng.uniform(lo, hi, n_random), alpha_rel)
    length = max(len(c) for c in fixed + rand)

    def at(c, i):
        return c[i] if i < len(c) else c[-1]

    rows = []
    for i in range(length):
        rows.append([i + 1] + [at(c, i) if i < len(c) else None for c in fixed]
                    + [max(at(c, i) for c in rand)])
    header = ["iteration"] + [f"err_mu_{mu:g}" for mu in mus] + ["worst_random"]
    return header, rows


def greedy_gap_history(m: int, domain, xi_count: int, tol_gap: float = 1e-2,
                       max_k: int | None = None, threads=None):
    problem = build_problem(nodes_per_side=m, mu_range=tuple(domain))
    ts = TrainSet.uniform(problem.maps, xi_count)
    model = train_sdp(problem, ts, tol_gap=tol_gap, skip_feas_phase=True, max_k=max_k,
                      threads=threads)
    return model, [(e.C_k_size, e.criterion, e.criterion_kind) for e in model.log]


def fig_b(m: int = 11, tol_gap: float = 1e-2, domains=((0.0, 3.0), (0.0, 1.5)),
          xi_counts=(300, 150), threads=None):
    """Rows ``[domain_hi, xi_count, C_k_size, worst_gap, gap_kind]`` per greedy sweep."""
    rows = []
    for dom, count in zip(domains, xi_counts):
        _, hist = greedy_gap_history(m, dom, count, tol_gap, threads=threads)
        for size, crit, kind in hist:
            rows.append([float(dom[1]), count, size, crit, kind])
    return ["domain_hi", "xi_count", "C_k_size", "worst_gap", "gap_kind"], rows


def worst_relative_gap(model, mus) -> float:
    worst = 0.0
    for mu in mus:
        ans = online_solve(model, [mu])
        worst = max(worst, ans.rel_gap)
    return worst


def compare_placement(problem, ts, sizes, mus, threads=None) -> list[tuple[int, float, float]]:
    """``(size, greedy_gap, uniform_gap)`` for each exact-set size."""
    c0 = len(corner_indices(problem, ts.Xi))
    out = []
    for k in sizes:
        greedy = train_sdp(problem, ts, tol_gap=0.0, max_k=k, skip_feas_phase=True,
                           threads=threads)
        # same number of reduced sweeps the greedy model went through
        uniform = build_sdp_model(problem, ts, uniform_indices(ts.Xi, k),
                                  sweeps=max(1, k - c0 + 1), threads=threads)
        out.append((k, worst_relative_gap(greedy, mus), worst_relative_gap(uniform, mus)))
    return out


def fig_c(m: int = 11, sizes=(4, 8, 12), xi_count: int = 300, n_random: int = 100,
          seed: int = 0, threads=None):
    """Rows ``[C_k_size, greedy_worst_rel_gap, uniform_worst_rel_gap]``."""
    problem = build_problem(nodes_per_side=m)
    ts = TrainSet.uniform(problem.maps, xi_count)
    lo, hi = problem.maps.domain[0]
    mus = np.random.default_rng(seed).uniform(lo, hi, n_random)
    rows = [list(r) for r in compare_placement(problem, ts, sizes, mus, threads)]
    return ["C_k_size", "greedy_worst_rel_gap", "uniform_worst_rel_gap"], rows


def run(experiment: str, out_dir, m: int = 11, seed: int = 0, sizes=(4, 8, 12),
        threads=None) -> Path:
    out_dir = Path(out_dir)
    if experiment == "fig-a":
        header, rows = fig_a(m=m, seed=seed)
    elif experiment == "fig-b":
        header, rows = fig_b(m=m, threads=threads)
    elif experiment == "fig-c":
        header, rows = fig_c(m=m, sizes=sizes, seed=seed, threads=threads)
    else:
        raise ValueError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    return write_csv(out_dir / f"{experiment}.csv", experiment, header, rows)
