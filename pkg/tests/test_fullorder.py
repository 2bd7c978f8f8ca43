import numpy as np
import pytest

from parlmi.fullorder import (FullOrderError, default_alpha_min, solve_feas_fullorder,
                              solve_sdp_fullorder)
from parlmi.inner import InnerSet
from parlmi.spectral import alpha

# minimal gains on the 11 x 11 instance, from bisection on the smallest eigenvalue
BISECTION = {0.5: 2.22999, 1.5: 8.0898, 2.5: 17.4044}


def _bisect_gain(prob, mu, lo=0.0, hi=100.0):
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if alpha(prob, [mid], [mu]).alpha > 0:
            hi = mid
        else:
            lo = mid
    return hi


def test_bisection_reference(rd11):
    assert _bisect_gain(rd11, 1.5) == pytest.approx(BISECTION[1.5], abs=1e-4)


@pytest.mark.parametrize("mu", sorted(BISECTION))
def test_sdp_solver_matches_bisection(rd11, mu):
    res = solve_sdp_fullorder(rd11, [mu])
    assert res.alpha > 0
    assert res.J == pytest.approx(BISECTION[mu], rel=1e-4)
    # the bias from alpha_min is tiny: the exact optimum lies just below
    assert res.J >= _bisect_gain(rd11, mu) - 1e-6


def test_sdp_objective_nondecreasing(rd11):
    for mu in np.linspace(0, 3, 9):
        objs = [h.objective for h in solve_sdp_fullorder(rd11, [mu]).history]
        assert all(b >= a - 1e-12 for a, b in zip(objs, objs[1:]))


def test_sdp_inner_set_input_untouched(rd11):
    seed = InnerSet()
    res = solve_sdp_fullorder(rd11, [1.0], inner=seed)
    assert len(seed) == 0
    assert len(res.inner) == res.iterations - 1


def test_warm_start_reduces_iterations(rd11):
    cold = solve_sdp_fullorder(rd11, [2.0])
    warm = solve_sdp_fullorder(rd11, [2.1], inner=cold.inner)
    assert warm.iterations < cold.iterations


def test_default_alpha_min(rd11):
    assert default_alpha_min(rd11, [2.0]) == pytest.approx(1e-6 * 2.01)
    assert default_alpha_min(rd11, [0.0]) == pytest.approx(1e-6 * 0.99)
    with pytest.raises(ValueError):
        solve_sdp_fullorder(rd11, [1.0], alpha_min=0.0)


def test_sdp_box_hit_reported(rd11):
    with pytest.raises(FullOrderError, match="box"):
        solve_sdp_fullorder(rd11, [2.5], x_box=10.0)


def test_feas_solver_finds_strictly_feasible_point(rd11):
    for mu in (0.0, 1.0, 3.0):
        res = solve_feas_fullorder(rd11, [mu])
        assert res.alpha >= 1e-6
        assert alpha(rd11, res.x, [mu]).alpha == pytest.approx(res.alpha, abs=1e-12)


def test_feas_solver_gap_stop_on_infeasible_problem():
    # F(x) = F_1 - |x|-free term: no x helps, the solver stops on the small gap
    import scipy.sparse as sp
    from parlmi.polynomial import ParameterMaps, PolynomialMap
    from parlmi.problem import ParametricLMI
    maps = ParameterMaps((PolynomialMap.constant(-1.0),), ((PolynomialMap.constant(0.0),),),
                         (PolynomialMap.constant(1.0),), ((0.0, 1.0),))
    prob = ParametricLMI(F=(sp.eye(5).tocsr(),), F_S=sp.eye(5).tocsr(), maps=maps)
    res = solve_feas_fullorder(prob, [0.5])
    assert res.alpha == pytest.approx(-1.0)
    assert res.iterations == 2


def test_iteration_budget(rd11):
    with pytest.raises(FullOrderError) as exc:
        solve_sdp_fullorder(rd11, [2.5], max_iter=2)
    assert exc.value.best is not None
