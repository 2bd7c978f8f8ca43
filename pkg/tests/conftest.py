import numpy as np
import pytest

from parlmi.example_rd import build_problem
from parlmi.polynomial import ParameterMaps, PolynomialMap
from parlmi.problem import ParametricLMI, TrainSet
from parlmi.trainer import train_feasibility, train_sdp


def random_spd(rng, n, shift=0.5):
    G = rng.normal(size=(n, n))
    return G @ G.T / n + shift * np.eye(n)


def random_sym(rng, n):
    G = rng.normal(size=(n, n))
    return 0.5 * (G + G.T)


def random_problem(rng, n=8, qf=3, num_decision=1, domain=(0.0, 1.0)):
    """Dense toy LMI with affine coefficient maps in one parameter."""
    F_S = random_spd(rng, n)
    F = [random_sym(rng, n) for _ in range(qf)]
    theta0 = [PolynomialMap.linear([rng.normal()], const=rng.normal()) for _ in range(qf)]
    thetaL = [[PolynomialMap.constant(rng.normal()) for _ in range(num_decision)]
              for _ in range(qf)]
    cost = [PolynomialMap.constant(1.0) for _ in range(num_decision)]
    maps = ParameterMaps(theta0, thetaL, cost, (domain,))
    return ParametricLMI(F=F, F_S=F_S, maps=maps)


@pytest.fixture(scope="session")
def rd11():
    return build_problem(nodes_per_side=11)


@pytest.fixture(scope="session")
def rd5():
    return build_problem(nodes_per_side=5)


@pytest.fixture(scope="session")
def xi100(rd11):
    return TrainSet.uniform(rd11.maps, 100)


@pytest.fixture(scope="session")
def feas_model(rd11, xi100):
    return train_feasibility(rd11, xi100)


@pytest.fixture(scope="session")
def sdp_model(rd11, xi100):
    return train_sdp(rd11, xi100, skip_feas_phase=True)


@pytest.fixture(scope="session")
def small_sdp_model(rd5):
    ts = TrainSet.uniform(rd5.maps, 20)
    return train_sdp(rd5, ts, skip_feas_phase=True, tol_gap=5e-2)
