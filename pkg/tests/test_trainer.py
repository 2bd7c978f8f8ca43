import json
import math

import numpy as np
import pytest

from parlmi.model import model_to_json
from parlmi.problem import TrainSet
from parlmi.spectral import alpha
from parlmi.trainer import (_gap_values, build_sdp_model, corner_indices, default_threads,
                            train_feasibility, train_sdp, uniform_indices)


def test_corner_and_uniform_indices(rd11, xi100):
    assert corner_indices(rd11, xi100.Xi) == [0, 99]
    assert uniform_indices(xi100.Xi, 4) == [0, 33, 66, 99]
    shuffled = xi100.Xi[::-1]
    assert uniform_indices(shuffled, 2) == [99, 0]


def test_gap_flavours():
    gap, kind = _gap_values([2.0, 3.0], [1.0, 2.0], "auto")
    assert kind == "rel"
    np.testing.assert_allclose(gap, [1.0, 0.5])
    gap, kind = _gap_values([2.0, 3.0], [-1.0, 2.0], "auto")
    assert kind == "abs"
    np.testing.assert_allclose(gap, [3.0, 1.0])
    gap, _ = _gap_values([2.0], [-math.inf], "abs")
    assert gap[0] == math.inf


def test_feasibility_model(feas_model, rd11):
    assert feas_model.converged
    assert feas_model.outer.C_k == [0, 99]
    for i, rec in enumerate(feas_model.outer.records):
        if not rec.exact:
            assert rec.alpha_bar > 1e-6
    feas_model.outer.check()


def test_feasibility_greedy_progress(rd11):
    # an unreachable tolerance forces additions; each added record is exact and
    # carries the true alpha at its stored solution
    ts = TrainSet.uniform(rd11.maps, 15)
    model = train_feasibility(rd11, ts, tol_feas=10.0, max_k=5)
    assert model.status == "budget"
    assert len(model.outer.C_k) == 5
    added = [e for e in model.log if e.selected_index is not None]
    assert len(added) == 3
    for e in added:
        rec = model.outer.records[e.selected_index]
        assert rec.exact
        assert rec.alpha_bar == pytest.approx(alpha(rd11, rec.x_bar, rec.mu_bar).alpha,
                                              abs=1e-12)
        assert rec.alpha_bar == e.exact_alpha
    # the selected point was the one with the lowest bound in its sweep
    assert all(e.criterion_kind == "min_alpha" for e in model.log)


def test_no_greedy_iterations_when_xi_in_c0(rd11):
    ts = TrainSet(np.array([0.0, 3.0]), rd11.maps.widths)
    model = train_feasibility(rd11, ts)
    assert model.log == [] and model.converged
    sdp = train_sdp(rd11, ts, skip_feas_phase=True)
    assert sdp.log == [] and sorted(sdp.outer.C_k) == [0, 1]


def test_sdp_model(sdp_model):
    assert sdp_model.converged
    assert sdp_model.outer.C_k[:2] == [0, 99]
    last = sdp_model.log[-1]
    assert last.selected_index is None and last.criterion <= 1e-2
    crit = [e.criterion for e in sdp_model.log]
    assert crit[0] > crit[-1]
    for i in sdp_model.outer.C_k:
        rec = sdp_model.outer.records[i]
        assert rec.alpha_bar > 0 and rec.J_accurate is not None


def test_sdp_from_feasibility_bootstrap(rd5):
    ts = TrainSet.uniform(rd5.maps, 15)
    feas = train_feasibility(rd5, ts)
    model = train_sdp(rd5, ts, feas_model=feas, tol_gap=5e-2)
    assert model.converged
    # the first sweep has no inner points so its gap is unbounded
    assert model.log[0].criterion == math.inf
    auto = train_sdp(rd5, ts, tol_gap=5e-2)
    assert json.dumps(model_to_json(auto)) == json.dumps(model_to_json(model))


def test_sdp_budget(rd5):
    ts = TrainSet.uniform(rd5.maps, 15)
    model = train_sdp(rd5, ts, skip_feas_phase=True, tol_gap=0.0, max_k=4)
    assert model.status == "budget"
    assert len(model.outer.C_k) == 4


def test_deterministic_and_thread_independent(rd5):
    ts = TrainSet.uniform(rd5.maps, 25)
    a = train_sdp(rd5, ts, skip_feas_phase=True, tol_gap=2e-2, threads=1)
    b = train_sdp(rd5, ts, skip_feas_phase=True, tol_gap=2e-2, threads=4)
    assert json.dumps(model_to_json(a)) == json.dumps(model_to_json(b))


def test_thread_default_from_environment(monkeypatch):
    monkeypatch.setenv("PARLMI_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.delenv("PARLMI_THREADS")
    assert default_threads() == 1


def test_prescribed_placement(rd5):
    ts = TrainSet.uniform(rd5.maps, 20)
    model = build_sdp_model(rd5, ts, uniform_indices(ts.Xi, 5), sweeps=2)
    assert sorted(model.outer.C_k) == sorted(uniform_indices(ts.Xi, 5))
    assert all(math.isfinite(r.alpha_bar) for r in model.outer.records)


def test_argument_errors(rd11, xi100):
    with pytest.raises(ValueError):
        train_feasibility(rd11, xi100, tol_feas=0.0)
    with pytest.raises(ValueError):
        train_feasibility(rd11, xi100, C0=[])
    with pytest.raises(ValueError):
        train_sdp(rd11, xi100, gap="weird")
    with pytest.raises(ValueError, match="outside"):
        train_feasibility(rd11, np.array([0.0, 5.0]))
    with pytest.raises(ValueError, match="scaling|coordinates"):
        train_feasibility(rd11, np.zeros((3, 2)) + np.arange(3)[:, None])
