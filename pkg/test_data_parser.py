#!/usr/bin/env python3
"""
Tests for config loading, document and CSV parsing, snapshots and saved runs
"""

import json
import math

import numpy as np
import pytest

import state
from core_hamiltonians import ModelParams
from data_export import (build_document, export_front_history, export_path_csv, write_json,
                         write_snapshot)
from data_parser import (load_config, params_from_dict, read_csv_rows, read_document,
                         read_front_history, read_snapshot)
from rd_simulator import init_state, step


@pytest.fixture(autouse=True)
def fresh_state():
    state.reset_state()
    yield
    state.reset_state()


def test_load_plain_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"D": 4.0, "n": 48, "theta": 0.5}), encoding="utf-8")
    assert load_config(str(path)) == {"D": 4.0, "n": 48, "theta": 0.5}


def test_load_emitted_document(tmp_path):
    params = ModelParams(D=4.0, D_tilde=16.0)
    document = build_document("cone", params, {"rows": []}, options={"angle": 0.5, "n": 32})
    path = tmp_path / "cone.json"
    write_json(document, str(path))

    flat = load_config(str(path))
    assert flat["command"] == "cone"
    assert flat["D"] == 4.0 and flat["Dtilde"] == 16.0
    assert flat["angle"] == 0.5 and flat["n"] == 32
    assert params_from_dict(flat) == params


def test_load_config_errors(tmp_path):
    with pytest.raises(ValueError):
        load_config(str(tmp_path / "missing.json"))

    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ValueError):
        load_config(str(broken))

    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ValueError):
        load_config(str(listing))


def test_params_from_dict():
    assert params_from_dict({}) == ModelParams()
    assert params_from_dict({"D": 3, "mu": 2, "n": 10}) == ModelParams(D=3.0, mu=2.0)
    with pytest.raises(ValueError):
        params_from_dict({"D": 0.5})


def test_read_document(tmp_path):
    path = tmp_path / "doc.json"
    write_json(build_document("speed", ModelParams(), {"road_speed": 3.1}), str(path))
    assert read_document(str(path))["results"] == {"road_speed": 3.1}

    partial = tmp_path / "partial.json"
    partial.write_text(json.dumps({"command": "speed"}), encoding="utf-8")
    with pytest.raises(ValueError):
        read_document(str(partial))


def test_front_history_and_csv_rows(tmp_path):
    path = tmp_path / "history.csv"
    history = [(0.0, 0.0, 1.0), (0.5, 0.0, 2.0), (0.5, math.pi / 2, None)]
    export_front_history(history, str(path))
    assert read_front_history(str(path)) == history

    path_csv = tmp_path / "path.csv"
    export_path_csv([(0.0, (0.0, 0.0)), (1.0, (2.0, 0.5))], str(path_csv))
    assert read_csv_rows(str(path_csv)) == [{"s": 0.0, "x": 0.0, "y": 0.0}, {"s": 1.0, "x": 2.0, "y": 0.5}]


def test_snapshot_round_trip(tmp_path):
    rd_state = init_state(ModelParams(D=4.0), 10.0, 10.0, 0.5, 1.0)
    rd_state = step(step(rd_state))
    path = tmp_path / "half.rdf"
    write_snapshot(rd_state, str(path))

    loaded = read_snapshot(str(path))
    assert np.array_equal(loaded.V, rd_state.V)
    assert np.array_equal(loaded.U, rd_state.U)
    assert (loaded.h, loaded.t, loaded.dt) == (rd_state.h, rd_state.t, rd_state.dt)
    assert loaded.params == rd_state.params
    assert loaded.U_tilde is None and loaded.cone_a is None
    assert not loaded.decouple_road


def test_decoupled_snapshot_round_trip(tmp_path):
    rd_state = init_state(ModelParams(), 10.0, 10.0, 0.5, 1.0, decouple_road=True)
    path = tmp_path / "decoupled.rdf"
    write_snapshot(step(rd_state), str(path))

    loaded = read_snapshot(str(path))
    assert loaded.decouple_road
    assert np.array_equal(step(loaded).V, step(step(rd_state)).V)


def test_cone_snapshot_round_trip(tmp_path):
    rd_state = init_state(ModelParams(D=4.0, D_tilde=9.0), 10.0, 10.0, 0.5, 1.0, cone_a=math.pi / 6)
    path = tmp_path / "cone.rdf"
    write_snapshot(rd_state, str(path))

    loaded = read_snapshot(str(path))
    assert loaded.cone_a == rd_state.cone_a
    assert loaded.params.D_tilde == 9.0
    assert np.array_equal(loaded.U_tilde, rd_state.U_tilde)
    assert np.array_equal(loaded.stencil.inside, rd_state.stencil.inside)
    assert np.array_equal(step(loaded).V, step(rd_state).V)


def test_snapshot_errors(tmp_path):
    with pytest.raises(ValueError):
        read_snapshot(str(tmp_path / "absent.rdf"))

    rd_state = init_state(ModelParams(), 10.0, 10.0, 0.5, 1.0)
    path = tmp_path / "state.rdf"
    write_snapshot(rd_state, str(path))
    raw = path.read_bytes()

    wrong_magic = tmp_path / "magic.rdf"
    wrong_magic.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        read_snapshot(str(wrong_magic))

    truncated = tmp_path / "short.rdf"
    truncated.write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        read_snapshot(str(truncated))


def test_saved_run_round_trip(tmp_path):
    state.run_config = {"command": "speed", "D": 9.0}
    state.last_results = {"road_speed": 3.0662}
    state.log_entries = ["[00:00:00] started"]
    path = tmp_path / "runs" / "session.json"
    assert state.save_run(str(path))

    state.reset_state()
    assert state.load_run(str(path))
    assert state.run_config == {"command": "speed", "D": 9.0}
    assert state.last_results == {"road_speed": 3.0662}
    assert state.log_entries == ["[00:00:00] started"]

    stale = tmp_path / "stale.json"
    stale.write_text(json.dumps({"version": "0.1"}), encoding="utf-8")
    assert not state.load_run(str(stale))
    assert not state.load_run(str(tmp_path / "nothing.json"))
