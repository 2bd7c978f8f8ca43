"""Parametric LMI problem instances, their file format and training sets.

A problem file is a JSON document holding the scalar data and polynomial
coefficient maps.  Every matrix lives in a Matrix Market sidecar file whose
path is given relative to the JSON document.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .polynomial import ParameterMaps, PolynomialMap

FORMAT_NAME = "parlmi-problem"
FORMAT_VERSION = 1
SYMMETRY_RTOL = 1e-12
_DENSE_SPD_LIMIT = 4000


class ProblemError(ValueError):
    """Invalid problem data.  ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _symmetrize(name: str, mat) -> sp.csr_matrix:
    mat = sp.csr_matrix(mat, dtype=float)
    if mat.shape[0] != mat.shape[1]:
        raise ProblemError(name, f"matrix is not square, shape {mat.shape}")
    asym = abs(mat - mat.T).max() if mat.nnz else 0.0
    scale = abs(mat).max() if mat.nnz else 0.0
    if asym > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise ProblemError(name, f"matrix is not symmetric (max asymmetry {asym:.3e})")
    if asym > 0:
        mat = ((mat + mat.T) * 0.5).tocsr()
    mat.sort_indices()
    return mat


def is_positive_definite(mat) -> bool:
    """SPD test: dense Cholesky up to a few thousand rows, sparse LDL^T beyond.

    The sparse path factors with a symmetric fill-reducing ordering and
    diagonal pivots only, so the pivots are those of an LDL^T factorization
    and the matrix is positive definite iff all of them are positive.
    """
    n = mat.shape[0]
    if n <= _DENSE_SPD_LIMIT:
        dense = mat.toarray() if sp.issparse(mat) else np.asarray(mat)
        try:
            scipy.linalg.cholesky(dense, lower=True)
        except np.linalg.LinAlgError:
            return False
        return True
    try:
        lu = spla.splu(sp.csc_matrix(mat), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
    except RuntimeError:            # exactly singular
        return False
    if np.array_equal(lu.perm_r, lu.perm_c):
        return bool(np.all(lu.U.diagonal() > 0))
    # SuperLU deviated from diagonal pivoting; fall back to the spectrum edge
    lam = spla.eigsh(mat, k=1, which="SA", return_eigenvectors=False)
    return bool(lam[0] > 0)


@dataclass(frozen=True, eq=False)
class ParametricLMI:
    """``F(x; mu) = sum_q [theta0_q(mu) + thetaL_q(mu) x] F_q`` with energy matrix ``F_S``.

    Instances are immutable once constructed.  Input matrices are checked for
    symmetry (tiny asymmetries are averaged away) and ``F_S`` for positive
    definiteness.
    """

    F: tuple
    F_S: sp.csr_matrix
    maps: ParameterMaps
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        mats = tuple(_symmetrize(f"F[{q}]", Fq) for q, Fq in enumerate(self.F))
        object.__setattr__(self, "F", mats)
        object.__setattr__(self, "F_S", _symmetrize("F_S", self.F_S))
        n = self.F_S.shape[0]
        for q, Fq in enumerate(mats):
            if Fq.shape != (n, n):
                raise ProblemError(f"F[{q}]", f"shape {Fq.shape}, expected ({n}, {n})")
        if len(mats) != self.maps.num_terms:
            raise ProblemError(
                "theta0", f"{self.maps.num_terms} coefficient maps for {len(mats)} matrices F_q")
        if not is_positive_definite(self.F_S):
            raise ProblemError("F_S", "matrix is not positive definite (Cholesky failed)")

    @property
    def dim(self) -> int:
        return self.F_S.shape[0]

    @property
    def num_terms(self) -> int:
        return len(self.F)

    @property
    def num_decision(self) -> int:
        return self.maps.num_decision

    @property
    def num_params(self) -> int:
        return self.maps.num_params

    def eval_theta(self, mu):
        return self.maps.eval_theta(mu)

    def assemble_F(self, x, mu) -> sp.csr_matrix:
        """Sparse ``F(x; mu)``."""
        coefs = self.maps.coefficients(x, mu)
        return combine(self.F, coefs)

    def fingerprint(self) -> str:
        """Content hash of the problem: maps, metadata-free, plus all matrix data."""
        h = hashlib.sha256()
        h.update(json.dumps(self.maps.to_json(), sort_keys=True).encode())
        for mat in (*self.F, self.F_S):
            coo = mat.tocoo()
            order = np.lexsort((coo.col, coo.row))
            h.update(np.asarray(mat.shape, dtype=np.int64).tobytes())
            h.update(coo.row[order].astype(np.int64).tobytes())
            h.update(coo.col[order].astype(np.int64).tobytes())
            h.update(coo.data[order].astype(np.float64).tobytes())
        return h.hexdigest()


def combine(mats: Sequence, coefs) -> sp.csr_matrix:
    """``sum_q coefs[q] * mats[q]`` as a symmetric CSR matrix."""
    out = None
    for c, m in zip(coefs, mats):
        if c == 0.0:
            continue
        out = c * m if out is None else out + c * m
    if out is None:
        out = sp.csr_matrix(mats[0].shape)
    return sp.csr_matrix(out)


# --- file format -------------------------------------------------------------

def save_problem(problem: ParametricLMI, path) -> Path:
    """Write ``problem`` to ``path`` (JSON) plus ``<stem>.F<q>.mtx`` sidecars."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stem = path.stem
    names = []
    for q, Fq in enumerate(problem.F):
        name = f"{stem}.F{q}.mtx"
        _write_mtx(path.parent / name, Fq)
        names.append(name)
    fs_name = f"{stem}.FS.mtx"
    _write_mtx(path.parent / fs_name, problem.F_S)
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "dim_N": problem.dim,
        "num_decision_n": problem.num_decision,
        "num_terms_QF": problem.num_terms,
        "num_params": problem.num_params,
        "F": names,
        "F_S": fs_name,
        **problem.maps.to_json(),
        "metadata": problem.metadata,
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True))
    return path


def _write_mtx(path: Path, mat) -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(mat), symmetry="symmetric", precision=17)


def _read_mtx(path: Path, field_name: str) -> sp.csr_matrix:
    if not path.exists():
        raise ProblemError(field_name, f"matrix file {path} not found")
    try:
        return sp.csr_matrix(scipy.io.mmread(str(path)))
    except (ValueError, OSError) as exc:
        raise ProblemError(field_name, f"cannot parse {path}: {exc}") from exc


def load_problem(path) -> ParametricLMI:
    """Read a problem written by :func:`save_problem` (or by hand)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ProblemError("header", f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ProblemError("format", f"not a {FORMAT_NAME} document")
    if doc.get("version") != FORMAT_VERSION:
        raise ProblemError("version", f"unsupported version {doc.get('version')!r}")
    for key in ("F", "F_S", "theta0", "thetaL", "cost", "domain"):
        if key not in doc:
            raise ProblemError(key, "missing")
    try:
        maps = ParameterMaps.from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemError("theta0/thetaL/cost", str(exc)) from exc
    F = tuple(_read_mtx(path.parent / name, f"F[{q}]") for q, name in enumerate(doc["F"]))
    F_S = _read_mtx(path.parent / doc["F_S"], "F_S")
    if len(F) != len(maps.theta0):
        raise ProblemError("F", f"{len(F)} matrices but {len(maps.theta0)} theta0 maps")
    for key, actual in (("num_terms_QF", len(F)), ("num_decision_n", maps.num_decision),
                        ("num_params", maps.num_params), ("dim_N", F_S.shape[0])):
        if key in doc and doc[key] != actual:
            raise ProblemError(key, f"header says {doc[key]}, data says {actual}")
    return ParametricLMI(F=F, F_S=F_S, maps=maps, metadata=doc.get("metadata", {}))


# --- training sets -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrainSet:
    """Finite surrogate of the parameter domain plus the metric scaling."""

    Xi: np.ndarray
    scaling: np.ndarray

    def __post_init__(self):
        Xi = np.asarray(self.Xi, dtype=float)
        if Xi.ndim == 1:
            Xi = Xi.reshape(-1, 1)
        scaling = np.asarray(self.scaling, dtype=float).reshape(-1)
        if scaling.shape != (Xi.shape[1],) or np.any(scaling <= 0):
            raise ValueError("scaling must hold one positive width per parameter")
        if len(np.unique(Xi, axis=0)) != len(Xi):
            raise ValueError("training points must be pairwise distinct")
        object.__setattr__(self, "Xi", Xi)
        object.__setattr__(self, "scaling", scaling)

    def __len__(self):
        return len(self.Xi)

    @classmethod
    def uniform(cls, maps: ParameterMaps, count: int) -> "TrainSet":
        """Tensor grid with ``count`` points per axis (endpoints included)."""
        axes = [np.linspace(lo, hi, count) for lo, hi in maps.domain]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
        return cls(grid, maps.widths)

    @classmethod
    def random(cls, maps: ParameterMaps, count: int, seed: int = 0) -> "TrainSet":
        rng = np.random.default_rng(seed)
        lo = np.array([a for a, _ in maps.domain])
        hi = np.array([b for _, b in maps.domain])
        pts = lo + (hi - lo) * rng.random((count, len(lo)))
        return cls(pts, maps.widths)

    def check_domain(self, maps: ParameterMaps) -> None:
        for mu in self.Xi:
            if not maps.in_domain(mu):
                raise ValueError(f"training point {mu.tolist()} lies outside the domain")


__all__ = [
    "ParametricLMI", "ParameterMaps", "PolynomialMap", "ProblemError", "TrainSet",
    "combine", "is_positive_definite", "load_problem", "save_problem",
]
