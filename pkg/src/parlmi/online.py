"""Online queries against a trained model.

Only the model (coefficient maps, box, cut records, inner seeds) is used, so
the cost of a query does not depend on the size of the original matrices.
This module must not import anything that handles those matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .inner import solve_ER
from .lp import LpStatus
from .model import TrainedModel
from .outer import solve_RF, solve_RS


@dataclass
class FeasibilityAnswer:
    mu: np.ndarray
    x: np.ndarray
    rf_value: float

    @property
    def certified(self) -> bool:
        """A positive value guarantees ``F(x; mu)`` is positive definite."""
        return self.rf_value > 0


@dataclass
class SdpAnswer:
    mu: np.ndarray
    status: str
    x: np.ndarray | None
    J_out: float
    J_in: float           # -inf when the error-bound LP is unbounded

    @property
    def gap(self) -> float:
        if not math.isfinite(self.J_out):
            return math.nan
        return self.J_out - self.J_in

    @property
    def rel_gap(self) -> float:
        if self.J_in > 0:
            return self.gap / self.J_in
        return math.inf


def online_solve(model: TrainedModel, mu, cap: float | None = None):
    """Answer one query: (x, value) in feasibility mode, (x, J_out, J_in) in SDP mode."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if model.mode == "feasibility":
        cap = model.settings.get("cap", 1.0) if cap is None else cap
        rf = solve_RF(model.outer, model.maps, mu, cap=cap)
        return FeasibilityAnswer(mu, rf.x, rf.value)
    if model.mode != "sdp":
        raise ValueError(f"unknown model mode {model.mode!r}")
    rs = solve_RS(model.outer, model.maps, mu)
    er = solve_ER(model.inner_set(), model.maps, mu)
    x = rs.x if rs.status is LpStatus.OPTIMAL else None
    return SdpAnswer(mu, rs.status.value, x, rs.value, er.J_in)


def online_batch(model: TrainedModel, mus) -> list:
    return [online_solve(model, mu) for mu in np.asarray(mus, dtype=float).reshape(len(mus), -1)]
