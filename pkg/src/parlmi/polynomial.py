"""Polynomial parameter maps and the coefficient functions of a parametric LMI.

Nothing in this module touches a matrix of size N, so the online stage can
import it without pulling in the full-order machinery.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class PolynomialMap:
    """Real multivariate polynomial stored as a sparse list of terms.

    Each term is ``(exponents, coefficient)`` with one non-negative integer
    exponent per parameter.  An empty term list is the zero polynomial.
    """

    num_params: int
    terms: tuple[tuple[tuple[int, ...], float], ...] = ()

    def __post_init__(self):
        if self.num_params < 1:
            raise ValueError("num_params must be positive")
        seen = set()
        clean = []
        for exps, coef in self.terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.num_params:
                raise ValueError(
                    f"exponent tuple {exps} has length {len(exps)}, expected {self.num_params}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            if exps in seen:
                raise ValueError(f"duplicate exponent tuple {exps}")
            if not np.isfinite(coef):
                raise ValueError(f"non-finite coefficient for {exps}")
            seen.add(exps)
            clean.append((exps, float(coef)))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def constant(cls, value: float, num_params: int = 1) -> "PolynomialMap":
        if value == 0.0:
            return cls(num_params)
        return cls(num_params, (((0,) * num_params, value),))

    @classmethod
    def linear(cls, coefs: Sequence[float], const: float = 0.0) -> "PolynomialMap":
        """``const + sum_i coefs[i] * mu_i``."""
        p = len(coefs)
        terms = []
        if const != 0.0:
            terms.append(((0,) * p, const))
        for i, a in enumerate(coefs):
            if a != 0.0:
                e = [0] * p
                e[i] = 1
                terms.append((tuple(e), a))
        return cls(p, tuple(terms))

    def __call__(self, mu) -> float:
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if mu.shape != (self.num_params,):
            raise ValueError(
                f"parameter has shape {mu.shape}, expected ({self.num_params},)")
        vals = mu.tolist()
        total = 0.0
        for exps, coef in self.terms:
            term = coef
            for v, e in zip(vals, exps):
                if e:
                    term *= v ** e
            total += term
        return total

    def to_json(self) -> dict:
        return {"num_params": self.num_params,
                "terms": [[list(e), c] for e, c in self.terms]}

    @classmethod
    def from_json(cls, data: dict) -> "PolynomialMap":
        return cls(int(data["num_params"]),
                   tuple((tuple(e), float(c)) for e, c in data["terms"]))


@dataclass(frozen=True)
class ParameterMaps:
    """theta0 (Q_F maps), thetaL (Q_F x n maps), cost c (n maps) and the box domain.

    This is everything about a problem that the reduced (online) problems need.
    """

    theta0: tuple[PolynomialMap, ...]
    thetaL: tuple[tuple[PolynomialMap, ...], ...]
    cost: tuple[PolynomialMap, ...]
    domain: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "theta0", tuple(self.theta0))
        object.__setattr__(self, "thetaL", tuple(tuple(row) for row in self.thetaL))
        object.__setattr__(self, "cost", tuple(self.cost))
        object.__setattr__(self, "domain", tuple((float(a), float(b)) for a, b in self.domain))
        qf, n, p = self.num_terms, self.num_decision, self.num_params
        if qf < 1 or n < 1:
            raise ValueError("need at least one term and one decision variable")
        if len(self.thetaL) != qf:
            raise ValueError(f"thetaL has {len(self.thetaL)} rows, theta0 has {qf} entries")
        if any(len(row) != n for row in self.thetaL):
            raise ValueError(f"every thetaL row must have {n} entries (length of cost)")
        for poly in self._all_maps():
            if poly.num_params != p:
                raise ValueError(
                    f"polynomial with {poly.num_params} parameters in a {p}-parameter problem")
        for lo, hi in self.domain:
            if not lo <= hi:
                raise ValueError(f"empty domain interval [{lo}, {hi}]")

    def _all_maps(self):
        yield from self.theta0
        for row in self.thetaL:
            yield from row
        yield from self.cost

    @property
    def num_terms(self) -> int:
        return len(self.theta0)

    @property
    def num_decision(self) -> int:
        return len(self.cost)

    @property
    def num_params(self) -> int:
        return len(self.domain)

    @property
    def widths(self) -> np.ndarray:
        """Per-coordinate domain widths, with degenerate intervals mapped to 1."""
        w = np.array([hi - lo for lo, hi in self.domain])
        return np.where(w > 0, w, 1.0)

    def in_domain(self, mu, slack: float = 1e-12) -> bool:
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        lo = np.array([a for a, _ in self.domain])
        hi = np.array([b for _, b in self.domain])
        return bool(np.all(mu >= lo - slack) and np.all(mu <= hi + slack))

    def eval_theta(self, mu) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Evaluate ``(theta0, thetaL, c)`` at ``mu``.

        Out-of-domain parameters trigger a warning but are still evaluated;
        a parameter of the wrong length raises ``ValueError``.
        """
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if mu.shape != (self.num_params,):
            raise ValueError(
                f"parameter has shape {mu.shape}, problem has {self.num_params} parameters")
        if not self.in_domain(mu):
            warnings.warn(f"parameter {mu.tolist()} lies outside the domain {self.domain}",
                          stacklevel=2)
        t0 = np.array([f(mu) for f in self.theta0])
        tL = np.array([[f(mu) for f in row] for row in self.thetaL])
        c = np.array([f(mu) for f in self.cost])
        return t0, tL, c

    def coefficients(self, x, mu) -> np.ndarray:
        """The Q_F-vector ``theta0(mu) + thetaL(mu) x``."""
        t0, tL, _ = self.eval_theta(mu)
        return t0 + tL @ np.asarray(x, dtype=float).reshape(-1)

    def to_json(self) -> dict:
        return {
            "theta0": [f.to_json() for f in self.theta0],
            "thetaL": [[f.to_json() for f in row] for row in self.thetaL],
            "cost": [f.to_json() for f in self.cost],
            "domain": [list(iv) for iv in self.domain],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ParameterMaps":
        return cls(
            theta0=tuple(PolynomialMap.from_json(d) for d in data["theta0"]),
            thetaL=tuple(tuple(PolynomialMap.from_json(d) for d in row)
                         for row in data["thetaL"]),
            cost=tuple(PolynomialMap.from_json(d) for d in data["cost"]),
            domain=tuple(tuple(iv) for iv in data["domain"]),
        )
