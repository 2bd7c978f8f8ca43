import json

import numpy as np
import pytest

from parlmi.example_rd import build_problem
from parlmi.model import (LOG_COLUMNS, LOG_SCHEMA, FingerprintMismatch, ModelFileError,
                          load_model, save_model, write_log_csv)
from parlmi.online import online_solve


@pytest.fixture(scope="module")
def saved(tmp_path_factory, small_sdp_model):
    path = tmp_path_factory.mktemp("model") / "m.json"
    save_model(small_sdp_model, path)
    return path


def test_round_trip_gives_identical_answers(saved, small_sdp_model):
    loaded = load_model(saved)
    assert loaded.mode == small_sdp_model.mode
    assert loaded.outer.C_k == small_sdp_model.outer.C_k
    for mu in np.random.default_rng(3).uniform(0, 3, 10):
        a, b = online_solve(small_sdp_model, mu), online_solve(loaded, mu)
        assert a.status == b.status
        np.testing.assert_array_equal(a.x, b.x)
        assert (a.J_out, a.J_in) == (b.J_out, b.J_in)


def test_feasibility_round_trip(tmp_path, feas_model):
    path = save_model(feas_model, tmp_path / "f.json")
    loaded = load_model(path)
    for mu in (0.0, 1.3, 3.0):
        a, b = online_solve(feas_model, mu), online_solve(loaded, mu)
        np.testing.assert_array_equal(a.x, b.x)
        assert a.rf_value == b.rf_value


def test_model_file_holds_no_matrices(saved, rd5):
    text = saved.read_text()
    assert len(text) < 200_000
    doc = json.loads(text)
    assert "F" not in doc and "F_S" not in doc
    assert len(doc["box"]["lo"]) == rd5.num_terms


def test_fingerprint_checked_against_problem(saved, rd5):
    assert load_model(saved, problem=rd5).fingerprint == rd5.fingerprint()
    other = build_problem(nodes_per_side=5, rho=0.02)
    with pytest.raises(FingerprintMismatch):
        load_model(saved, problem=other)


def test_truncated_file_is_reported(saved, tmp_path):
    bad = tmp_path / "cut.json"
    bad.write_text(saved.read_text()[:500])
    with pytest.raises(ModelFileError, match="corrupt"):
        load_model(bad)


def test_missing_field_is_reported(saved, tmp_path):
    doc = json.loads(saved.read_text())
    del doc["records"]
    bad = tmp_path / "nofield.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(ModelFileError, match="corrupt"):
        load_model(bad)


def test_version_and_format_checked(saved, tmp_path):
    doc = json.loads(saved.read_text())
    doc["version"] = 99
    (tmp_path / "v.json").write_text(json.dumps(doc))
    with pytest.raises(ModelFileError, match="version"):
        load_model(tmp_path / "v.json")
    doc["format"] = "something-else"
    (tmp_path / "f.json").write_text(json.dumps(doc))
    with pytest.raises(ModelFileError):
        load_model(tmp_path / "f.json")


def test_exact_flags_must_match_C_k(saved, tmp_path):
    doc = json.loads(saved.read_text())
    doc["C_k"] = doc["C_k"][:-1]
    (tmp_path / "ck.json").write_text(json.dumps(doc))
    with pytest.raises(ModelFileError):
        load_model(tmp_path / "ck.json")


def test_log_csv_schema(tmp_path, small_sdp_model):
    path = write_log_csv(small_sdp_model, tmp_path / "log.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == f"# schema: {LOG_SCHEMA}"
    assert lines[1].split(",") == LOG_COLUMNS
    assert len(lines) == 2 + len(small_sdp_model.log)
    sizes = [int(l.split(",")[5]) for l in lines[2:]]
    assert sizes == sorted(sizes)
