"""Extremal generalized eigenpairs of symmetric-definite pencils.

Small problems go through a dense Cholesky reduction (LAPACK ``sygvx``);
large sparse ones through ARPACK in shift-invert mode with a shift placed
just outside the spectrum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .outer import BoxBounds
from .problem import ParametricLMI

DENSE_LIMIT = 400
DENSE_FALLBACK_LIMIT = 6000
ARPACK_MAXITER = 2000
BOX_PAD = 1e-10
RESIDUAL_TOL = 1e-10


class EigenSolveError(RuntimeError):
    """Eigensolver failure.  Carries the best available iterate, if any."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: float
    vector: np.ndarray
    residual: float
    tied: bool = False   # another eigenvalue lies within 1e-12 of the extremum


def _frob(mat) -> float:
    return float(sp.linalg.norm(mat)) if sp.issparse(mat) else float(np.linalg.norm(mat))


def _residual(A, B, lam, v) -> float:
    r = A @ v - lam * (B @ v)
    return float(np.linalg.norm(r) / np.linalg.norm(v))


def _dense(A, B, which: str):
    A = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    B = B.toarray() if sp.issparse(B) else np.asarray(B, dtype=float)
    n = A.shape[0]
    idx = [0, min(1, n - 1)] if which == "smallest" else [max(n - 2, 0), n - 1]
    try:
        w, V = scipy.linalg.eigh(A, B, subset_by_index=idx)
    except np.linalg.LinAlgError as exc:
        if "positive definite" in str(exc) or "not positive" in str(exc) or "leading minor" in str(exc):
            raise EigenSolveError("F_S not positive definite") from exc
        raise EigenSolveError(f"dense eigensolve failed: {exc}") from exc
    k = 0 if which == "smallest" else len(w) - 1
    tied = len(w) > 1 and abs(w[1] - w[0]) < 1e-12
    return float(w[k]), V[:, k], tied


def _iterative(A, B, which: str, shift):
    A = sp.csc_matrix(A)
    B = sp.csc_matrix(B)
    try:
        if shift is None:
            radius = abs(spla.eigsh(A, k=1, M=B, which="LM", tol=1e-3,
                                    return_eigenvectors=False)[0])
            margin = 0.05 * radius + 1e-8
            shift = -(radius + margin) if which == "smallest" else radius + margin
        w, V = spla.eigsh(A, k=2, M=B, sigma=shift, which="LM", tol=0.0,
                          maxiter=ARPACK_MAXITER)
    except spla.ArpackNoConvergence as exc:
        # Low-rank terms give Krylov spaces of tiny dimension and ARPACK
        # stalls; a dense solve is still affordable at moderate sizes.
        if A.shape[0] <= DENSE_FALLBACK_LIMIT:
            return _dense(A, B, which)
        best = None
        if len(exc.eigenvalues):
            best = (float(exc.eigenvalues[0]), exc.eigenvectors[:, 0])
        raise EigenSolveError("iterative eigensolve did not converge", best) from exc
    except RuntimeError as exc:
        raise EigenSolveError(f"iterative eigensolve failed: {exc}") from exc
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    k = 0 if which == "smallest" else len(w) - 1
    tied = abs(w[1] - w[0]) < 1e-12
    v = V[:, k]
    v = v / np.sqrt(v @ (B @ v))
    return float(w[k]), v, tied


def extremal_eigpair(A, B, which: str = "smallest", *, method: str = "auto",
                     shift: float | None = None, tol: float = RESIDUAL_TOL) -> EigenPair:
    """Smallest or largest eigenpair of ``A v = lambda B v``.

    ``B`` must be symmetric positive definite.  The eigenvector is
    B-normalized (``v^T B v = 1``) and its residual is checked against
    ``tol * (||A||_F + |lambda| ||B||_F)``.

    ``shift`` is only used by the iterative path and must lie below (for
    ``"smallest"``) or above (``"largest"``) the spectrum; if omitted it is
    estimated from the spectral radius.
    """
    if which not in ("smallest", "largest"):
        raise ValueError(f"which must be 'smallest' or 'largest', not {which!r}")
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError(f"pencil shapes differ: {A.shape} vs {B.shape}")
    n = A.shape[0]
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "iterative"
    if method == "dense" or n < 4:
        lam, v, tied = _dense(A, B, which)
    elif method == "iterative":
        lam, v, tied = _iterative(A, B, which, shift)
    else:
        raise ValueError(f"unknown method {method!r}")
    res = _residual(A, B, lam, v)
    bound = tol * (_frob(A) + abs(lam) * _frob(B))
    if not res <= bound:
        raise EigenSolveError(
            f"eigenpair residual {res:.3e} exceeds {bound:.3e}", best=(lam, v))
    return EigenPair(value=lam, vector=v, residual=res, tied=tied)


def rayleigh_map(problem: ParametricLMI, v) -> np.ndarray:
    """``y_q = v^T F_q v / v^T F_S v``."""
    v = np.asarray(v, dtype=float)
    denom = v @ (problem.F_S @ v)
    return np.array([v @ (Fq @ v) for Fq in problem.F]) / denom


@dataclass(frozen=True, eq=False)
class AlphaResult:
    alpha: float
    y: np.ndarray
    v: np.ndarray


def alpha(problem: ParametricLMI, x, mu, **eig_kwargs) -> AlphaResult:
    """Coercivity constant ``alpha(x; mu)`` with its minimizing Rayleigh vector ``y``."""
    F = problem.assemble_F(x, mu)
    pair = extremal_eigpair(F, problem.F_S, "smallest", **eig_kwargs)
    y = rayleigh_map(problem, pair.vector)
    return AlphaResult(alpha=pair.value, y=y, v=pair.vector)


def _dense_ranges(problem: ParametricLMI) -> tuple[np.ndarray, np.ndarray]:
    # one Cholesky of F_S serves every term
    L = scipy.linalg.cholesky(problem.F_S.toarray(), lower=True)
    lo, hi = [], []
    for Fq in problem.F:
        X = scipy.linalg.solve_triangular(L, Fq.toarray(), lower=True)
        C = scipy.linalg.solve_triangular(L, X.T, lower=True)
        w = scipy.linalg.eigvalsh(0.5 * (C + C.T))
        lo.append(w[0])
        hi.append(w[-1])
    return np.array(lo), np.array(hi)


def box_bounds(problem: ParametricLMI, pad: float = BOX_PAD, **eig_kwargs) -> BoxBounds:
    """Per-coordinate extent of the Rayleigh set: extremal eigenvalues of ``(F_q, F_S)``.

    Terms such as low-rank feedback matrices have hugely degenerate extremal
    eigenvalues on which Lanczos stalls, so moderate sizes use a dense
    reduction.  The box is widened by ``pad`` relative to its scale to absorb
    rounding; a slightly larger box keeps every bound valid.
    """
    if problem.dim <= DENSE_FALLBACK_LIMIT and eig_kwargs.get("method", "auto") == "auto":
        try:
            lo, hi = _dense_ranges(problem)
        except np.linalg.LinAlgError as exc:
            raise EigenSolveError("F_S not positive definite") from exc
    else:
        lo = np.empty(problem.num_terms)
        hi = np.empty(problem.num_terms)
        for q, Fq in enumerate(problem.F):
            lo[q] = extremal_eigpair(Fq, problem.F_S, "smallest", **eig_kwargs).value
            hi[q] = extremal_eigpair(Fq, problem.F_S, "largest", **eig_kwargs).value
    hi = np.maximum(hi, lo)
    margin = pad * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    return BoxBounds(lo=lo - margin, hi=hi + margin)
