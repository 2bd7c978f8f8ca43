"""Reaction-diffusion stabilization instance on the unit square.

P1 finite elements on a uniform triangulation with homogeneous Neumann
boundary conditions.  The closed loop is ``M y' + (A0 - mu A1 + x A2) y = 0``
where ``A1`` is the mass matrix restricted to the reaction region and
``A2 = b b^T`` couples the observation and actuation region.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .polynomial import ParameterMaps, PolynomialMap
from .problem import ParametricLMI, ProblemError, is_positive_definite

Rect = tuple[float, float, float, float]  # (xmin, xmax, ymin, ymax)


@dataclass(frozen=True)
class GridSpec:
    nodes_per_side: int = 51
    omega1: Rect = (0.0, 0.5, 0.0, 0.5)
    omega2: Rect = (0.5, 1.0, 0.5, 1.0)
    rho: float = 0.01
    mu_range: tuple[float, float] = (0.0, 3.0)

    def __post_init__(self):
        if self.nodes_per_side < 3:
            raise ValueError("need at least 3 nodes per side")
        for name in ("omega1", "omega2"):
            x0, x1, y0, y1 = getattr(self, name)
            if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
                raise ValueError(f"{name}={getattr(self, name)} is not a rectangle in [0,1]^2")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if not self.mu_range[0] <= self.mu_range[1]:
            raise ValueError("empty mu range")


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    M: sp.csr_matrix
    A0: sp.csr_matrix
    A1: sp.csr_matrix
    A2: sp.csr_matrix
    b: np.ndarray
    coords: np.ndarray


def _mesh(m: int):
    h = 1.0 / (m - 1)
    xs = np.arange(m) * h
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    coords = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(m - 1), np.arange(m - 1), indexing="xy")
    n00 = (i + j * m).ravel()
    n10, n01, n11 = n00 + 1, n00 + m, n00 + m + 1
    tris = np.concatenate([np.column_stack([n00, n10, n11]),
                           np.column_stack([n00, n11, n01])])
    return coords, tris


def _inside(pts: np.ndarray, rect: Rect) -> np.ndarray:
    x0, x1, y0, y1 = rect
    return (pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)


def assemble(spec: GridSpec) -> AssembledSystem:
    """Assemble mass, stiffness, restricted mass and feedback matrices."""
    m = spec.nodes_per_side
    N = m * m
    coords, tris = _mesh(m)
    P = coords[tris]                                   # (T, 3, 2)
    B = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]], axis=-1)   # columns are edges
    det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    area = 0.5 * np.abs(det)
    ref_grad = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    G = ref_grad @ np.linalg.inv(B)                    # (T, 3, 2) physical gradients
    Ke = area[:, None, None] * G @ G.transpose(0, 2, 1)
    Me = area[:, None, None] / 12.0 * (np.ones((3, 3)) + np.eye(3))

    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()

    def build(local):
        return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(N, N)).tocsr()

    centroids = P.mean(axis=1)
    in1 = _inside(centroids, spec.omega1)
    in2 = _inside(centroids, spec.omega2)

    A0 = build(Ke)
    M = build(Me)
    A1 = build(Me * in1[:, None, None])
    b = np.zeros(N)
    np.add.at(b, tris[in2].ravel(), np.repeat(area[in2] / 3.0, 3))
    support = np.flatnonzero(b)
    r, c = np.meshgrid(support, support, indexing="ij")
    A2 = sp.coo_matrix((np.outer(b[support], b[support]).ravel(), (r.ravel(), c.ravel())),
                       shape=(N, N)).tocsr()
    return AssembledSystem(M=M, A0=A0, A1=A1, A2=A2, b=b, coords=coords)


def to_parametric_lmi(system: AssembledSystem, rho: float = 0.01,
                      mu_range=(0.0, 3.0), metadata: dict | None = None) -> ParametricLMI:
    """Package ``F(x;mu) = (1-rho) A0 + (-mu-rho) A1 + x A2`` with ``F_S = A0 + A1``.

    The cost is the gain itself, so the SDP asks for the minimal stabilizing gain.
    """
    F_S = (system.A0 + system.A1).tocsr()
    if not is_positive_definite(F_S):
        raise ProblemError("F_S", "A0 + A1 is not positive definite")
    maps = ParameterMaps(
        theta0=(PolynomialMap.constant(1.0 - rho),
                PolynomialMap.linear([-1.0], const=-rho),
                PolynomialMap.constant(0.0)),
        thetaL=((PolynomialMap.constant(0.0),),
                (PolynomialMap.constant(0.0),),
                (PolynomialMap.constant(1.0),)),
        cost=(PolynomialMap.constant(1.0),),
        domain=(tuple(mu_range),),
    )
    meta = {"example": "reaction-diffusion", "rho": rho}
    meta.update(metadata or {})
    return ParametricLMI(F=(system.A0, system.A1, system.A2), F_S=F_S, maps=maps, metadata=meta)


def build_problem(spec: GridSpec | None = None, **kwargs) -> ParametricLMI:
    """Shortcut: ``build_problem(nodes_per_side=11)``."""
    spec = spec or GridSpec(**kwargs)
    system = assemble(spec)
    meta = {"nodes_per_side": spec.nodes_per_side, "omega1": list(spec.omega1),
            "omega2": list(spec.omega2)}
    return to_parametric_lmi(system, spec.rho, spec.mu_range, meta)


def stability_matrix(system: AssembledSystem, x: float, mu: float) -> sp.csr_matrix:
    """``A(x; mu) = A0 - mu A1 + x A2``."""
    return (system.A0 - mu * system.A1 + x * system.A2).tocsr()
