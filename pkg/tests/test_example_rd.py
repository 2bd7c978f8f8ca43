import numpy as np
import pytest

from parlmi.example_rd import GridSpec, assemble, build_problem, stability_matrix
from parlmi.fullorder import solve_sdp_fullorder
from parlmi.problem import ProblemError, is_positive_definite
from parlmi.spectral import alpha

RHO = 0.01


@pytest.fixture(scope="module")
def sys3():
    return assemble(GridSpec(nodes_per_side=3))


def test_hand_stiffness_m3(sys3):
    # node 4 is the centre; 1,3,5,7 edge midpoints; 0,2,6,8 corners
    A0 = sys3.A0.toarray()
    np.testing.assert_allclose(np.diag(A0), [1, 2, 1, 2, 4, 2, 1, 2, 1], atol=1e-14)
    np.testing.assert_allclose(A0[4, [1, 3, 5, 7]], -1.0, atol=1e-14)
    # diagonal neighbours along the element diagonals do not couple
    np.testing.assert_allclose(A0[4, [0, 8]], 0.0, atol=1e-14)


def test_hand_mass_m3(sys3):
    M = sys3.M.toarray()
    h2 = 0.25
    assert M[4, 4] == pytest.approx(h2 / 2, abs=1e-15)       # 6 triangles of area h^2/2, /6 each
    assert M[0, 0] == pytest.approx(2 * (h2 / 2) / 6, abs=1e-15)
    assert M[4, 1] == pytest.approx(2 * (h2 / 2) / 12, abs=1e-15)


def test_region_restricted_matrices(sys3):
    # with h = 1/2 each quadrant is exactly one square cell
    A1 = sys3.A1.toarray()
    assert A1.sum() == pytest.approx(0.25, abs=1e-14)
    assert np.all(A1[[2, 5, 6, 7, 8]] == 0.0)
    assert sys3.b.sum() == pytest.approx(0.25, abs=1e-14)
    assert np.count_nonzero(sys3.b) == 4


@pytest.mark.parametrize("m", [5, 11, 21])
def test_fem_identities(m):
    s = assemble(GridSpec(nodes_per_side=m))
    assert np.abs(s.A0 @ np.ones(m * m)).max() <= 1e-12
    assert s.M.sum() == pytest.approx(1.0, abs=1e-12)
    assert s.b.sum() == pytest.approx(0.25, abs=1e-12)
    assert np.linalg.matrix_rank(s.A2.toarray()) == 1
    assert is_positive_definite(s.A0 + s.A1)
    assert is_positive_definite(s.M)


def test_unaligned_mesh_area_is_approximate():
    # region edges between grid lines: centroid quadrature only approximates the area
    s = assemble(GridSpec(nodes_per_side=20))
    assert s.b.sum() == pytest.approx(0.25, abs=2.0 / 19)
    assert s.M.sum() == pytest.approx(1.0, abs=1e-12)


def test_symmetry(sys3):
    for mat in (sys3.M, sys3.A0, sys3.A1, sys3.A2):
        assert abs(mat - mat.T).max() == 0.0


def test_custom_regions():
    s = assemble(GridSpec(nodes_per_side=9, omega1=(0, 1, 0, 1), omega2=(0, 0.25, 0, 1)))
    assert abs(s.A1 - s.M).max() < 1e-15
    assert s.b.sum() == pytest.approx(0.25, abs=1e-12)


@pytest.mark.parametrize("kwargs", [
    {"nodes_per_side": 2},
    {"omega1": (0.0, 1.5, 0.0, 0.5)},
    {"omega2": (0.6, 0.5, 0.0, 0.5)},
    {"rho": 0.0},
    {"rho": 1.0},
    {"mu_range": (3.0, 0.0)},
])
def test_invalid_grid_spec(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_parametric_packaging(rd5):
    t0, tL, c = rd5.maps.eval_theta([1.7])
    np.testing.assert_allclose(t0, [1 - RHO, -1.7 - RHO, 0.0])
    np.testing.assert_allclose(tL, [[0.0], [0.0], [1.0]])
    np.testing.assert_allclose(c, [1.0])
    assert rd5.maps.domain == ((0.0, 3.0),)
    assert abs(rd5.F_S - (rd5.F[0] + rd5.F[1])).max() == 0.0


def test_lmi_equals_shifted_stability_matrix():
    s = assemble(GridSpec(nodes_per_side=5))
    prob = build_problem(nodes_per_side=5)
    rng = np.random.default_rng(0)
    for x, mu in zip(rng.uniform(-5, 30, 10), rng.uniform(0, 3, 10)):
        F = prob.assemble_F([x], [mu]).toarray()
        A = stability_matrix(s, x, mu).toarray()
        FS = (s.A0 + s.A1).toarray()
        assert np.abs(F - (A - RHO * FS)).max() < 1e-12
        lam_F = np.linalg.eigvalsh(F).min()
        lam_A = np.linalg.eigvalsh(A - RHO * FS).min()
        assert (lam_F >= 0) == (lam_A >= 0)


def test_stabilizable_with_large_gain(rd5):
    assert alpha(rd5, [1e3 * RHO], [0.0]).alpha > 0


def test_open_loop_unstable(rd5):
    assert alpha(rd5, [0.0], [3.0]).alpha < 0


def test_zero_gain_at_zero_parameter(rd11):
    # F + rho F_S = A0 is singular with constant null vector, so alpha = -rho exactly
    assert alpha(rd11, [0.0], [0.0]).alpha == pytest.approx(-RHO, abs=1e-10)


def test_minimal_gain_monotone(rd5):
    gains = [solve_sdp_fullorder(rd5, [mu]).J for mu in np.linspace(0, 3, 7)]
    assert all(b >= a for a, b in zip(gains, gains[1:]))


def test_default_size():
    assert GridSpec().nodes_per_side ** 2 == 2601


def test_non_spd_energy_rejected():
    s = assemble(GridSpec(nodes_per_side=4))
    from parlmi.example_rd import to_parametric_lmi
    bad = type(s)(M=s.M, A0=s.A0, A1=s.A1 * 0.0, A2=s.A2, b=s.b, coords=s.coords)
    with pytest.raises(ProblemError):
        to_parametric_lmi(bad)
