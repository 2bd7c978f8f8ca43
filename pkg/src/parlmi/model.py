"""Trained reduced models and their on-disk format.

A model file is versioned JSON holding only Q_F-, n- and p-sized data (box,
cut records, inner seeds, coefficient maps), never a matrix.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .inner import InnerSet
from .outer import BoxBounds, CutRecord, OuterModel
from .polynomial import ParameterMaps

MODEL_FORMAT = "parlmi-model"
MODEL_VERSION = 1
LOG_SCHEMA = "parlmi.training-log/1"
LOG_COLUMNS = ["iteration", "selected_index", "selected_mu", "criterion",
               "criterion_kind", "C_k_size", "exact_alpha"]


class ModelFileError(ValueError):
    pass


class FingerprintMismatch(ModelFileError):
    pass


@dataclass
class LogEntry:
    iteration: int
    selected_index: int | None
    selected_mu: list | None
    criterion: float
    criterion_kind: str          # "min_alpha", "gap_abs" or "gap_rel"
    C_k_size: int
    exact_alpha: float | None = None


@dataclass(eq=False)
class TrainedModel:
    mode: str                    # "feasibility" or "sdp"
    maps: ParameterMaps
    outer: OuterModel
    fingerprint: str
    settings: dict = field(default_factory=dict)
    log: list = field(default_factory=list)
    status: str = "converged"    # or "budget"

    def inner_set(self) -> InnerSet:
        """Inner points of the exact samples, in C_k order."""
        inner = InnerSet()
        for i in self.outer.C_k:
            rec = self.outer.records[i]
            if rec.y_bar is not None:
                inner.add(rec.y_bar, rec.x_bar, rec.mu_bar)
        return inner

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _arr(v):
    return None if v is None else np.asarray(v, dtype=float).tolist()


def model_to_json(model: TrainedModel) -> dict:
    outer = model.outer
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "mode": model.mode,
        "status": model.status,
        "fingerprint": model.fingerprint,
        "maps": model.maps.to_json(),
        "box": {"lo": _arr(outer.box.lo), "hi": _arr(outer.box.hi)},
        "Xi": _arr(outer.Xi),
        "scaling": _arr(outer.scaling),
        "M_C": outer.M_C,
        "M_Xi": outer.M_Xi,
        "C_k": [int(i) for i in outer.C_k],
        "records": [{
            "mu_bar": _arr(r.mu_bar), "x_bar": _arr(r.x_bar),
            "alpha_bar": _num(r.alpha_bar), "exact": bool(r.exact),
            "y_bar": _arr(r.y_bar), "J_accurate": _num(r.J_accurate),
        } for r in outer.records],
        "settings": model.settings,
        "log": [vars(e) for e in model.log],
    }


def model_from_json(doc: dict) -> TrainedModel:
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFileError(f"not a {MODEL_FORMAT} document")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFileError(f"model version {doc.get('version')!r}, expected {MODEL_VERSION}")
    try:
        records = []
        for r in doc["records"]:
            ab = r["alpha_bar"]
            records.append(CutRecord(
                mu_bar=np.asarray(r["mu_bar"], dtype=float),
                x_bar=np.asarray(r["x_bar"], dtype=float),
                alpha_bar=-math.inf if ab is None else float(ab),
                exact=bool(r["exact"]),
                y_bar=None if r["y_bar"] is None else np.asarray(r["y_bar"], dtype=float),
                J_accurate=r["J_accurate"]))
        outer = OuterModel(box=BoxBounds(doc["box"]["lo"], doc["box"]["hi"]),
                           Xi=np.asarray(doc["Xi"], dtype=float), records=records,
                           C_k=[int(i) for i in doc["C_k"]], M_C=int(doc["M_C"]),
                           M_Xi=int(doc["M_Xi"]), scaling=np.asarray(doc["scaling"]))
        outer.check()
        return TrainedModel(mode=doc["mode"], maps=ParameterMaps.from_json(doc["maps"]),
                            outer=outer, fingerprint=doc["fingerprint"],
                            settings=doc.get("settings", {}),
                            log=[LogEntry(**e) for e in doc.get("log", [])],
                            status=doc.get("status", "converged"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"corrupt model file: {exc}") from exc


def save_model(model: TrainedModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_json(model), sort_keys=True, indent=1))
    return path


def load_model(path, problem=None) -> TrainedModel:
    """Read a model file.  With ``problem`` given, refuse a fingerprint mismatch."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"corrupt model file {path}: {exc}") from exc
    model = model_from_json(doc)
    if problem is not None and problem.fingerprint() != model.fingerprint:
        raise FingerprintMismatch(
            f"model {path} was trained on a different problem "
            f"({model.fingerprint[:12]} != {problem.fingerprint()[:12]})")
    return model


def write_log_csv(model: TrainedModel, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: {LOG_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(LOG_COLUMNS)
        for e in model.log:
            mu = "" if e.selected_mu is None else " ".join(repr(float(v)) for v in e.selected_mu)
            writer.writerow([e.iteration, "" if e.selected_index is None else e.selected_index,
                             mu, repr(float(e.criterion)), e.criterion_kind, e.C_k_size,
                             "" if e.exact_alpha is None else repr(float(e.exact_alpha))])
    return path
