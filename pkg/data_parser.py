"""
data_parser.py - Functions for parsing configuration files, result documents and snapshots
"""

import os
import csv
import json
import math
import logging

import numpy as np

from core_hamiltonians import ModelParams
from data_export import SNAPSHOT_DECOUPLED, SNAPSHOT_HEADER, SNAPSHOT_MAGIC
from rd_simulator import RDState, build_cone_stencil
from utils import add_log_entry

PARAM_KEYS = {"D": "D", "mu": "mu", "nu": "nu", "kappa": "kappa", "Dtilde": "D_tilde", "D_tilde": "D_tilde"}


def load_config(file_path):
    """
    Load a --config file into a flat dict keyed by flag name

    Accepts either a plain object of flag values ({"D": 9, "n": 32}) or a
    document emitted by the CLI, whose "params" and "options" are merged
    and whose "command" is kept.

    Raises:
        ValueError: if the file is missing, not JSON, or not an object
    """
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except OSError as e:
        raise ValueError(f"Cannot read config file {file_path}: {str(e)}")
    except json.JSONDecodeError as e:
        raise ValueError(f"Config file {file_path} is not valid JSON: {str(e)}")

    if not isinstance(document, dict):
        raise ValueError(f"Config file {file_path} must hold a JSON object")

    if "params" in document or "options" in document:
        flat = {}
        for key, value in (document.get("params") or {}).items():
            if value is not None:
                flat["Dtilde" if key == "D_tilde" else key] = value
        flat.update(document.get("options") or {})
        if "command" in document:
            flat["command"] = document["command"]
        add_log_entry(f"Loaded emitted {document.get('command', 'result')} document from {file_path}")
        return flat

    add_log_entry(f"Loaded config file {file_path}")
    return dict(document)


def params_from_dict(values):
    """ModelParams from a flag-keyed dict, with defaults for missing keys"""
    kwargs = {}
    for key, field_name in PARAM_KEYS.items():
        if values.get(key) is not None:
            kwargs[field_name] = values[key]
    return ModelParams(**kwargs)


def read_document(file_path):
    """Parse a JSON result document written by data_export.write_json"""
    with open(file_path, 'r', encoding='utf-8') as f:
        document = json.load(f)
    missing = [key for key in ("command", "params", "results", "tolerances") if key not in document]
    if missing:
        raise ValueError(f"{file_path} is missing keys {missing}")
    return document


def read_front_history(file_path):
    """Parse a front-history CSV into (t, theta, radius) tuples; empty radius becomes None"""
    rows = []
    with open(file_path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        for record in reader:
            radius = record["radius"]
            rows.append((float(record["t"]), float(record["theta"]),
                         float(radius) if radius not in ("", None) else None))
    return rows


def read_csv_rows(file_path):
    """Parse any exported CSV into a list of dicts of floats"""
    with open(file_path, 'r', encoding='utf-8', newline='') as f:
        return [{key: float(value) for key, value in record.items()} for record in csv.DictReader(f)]


def read_snapshot(file_path):
    """
    Load an RDF1 snapshot back into an RDState

    Raises:
        ValueError: on a bad magic number or a truncated file
    """
    if not os.path.exists(file_path):
        raise ValueError(f"Snapshot {file_path} does not exist")

    with open(file_path, 'rb') as f:
        raw = f.read()

    if len(raw) < SNAPSHOT_HEADER.size:
        raise ValueError(f"Snapshot {file_path} is truncated")
    (magic, Nx, Ny, N_ray, h, t, dt, D, mu, nu, kappa,
     D_tilde, a, Lx, Ly, flags) = SNAPSHOT_HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"{file_path} is not an RDF1 snapshot (magic {magic!r})")

    expected = SNAPSHOT_HEADER.size + 8 * (Nx * Ny + Nx + N_ray)
    if len(raw) != expected:
        raise ValueError(f"Snapshot {file_path} has {len(raw)} bytes, expected {expected}")

    data = np.frombuffer(raw, dtype='<f8', offset=SNAPSHOT_HEADER.size)
    V = data[:Nx * Ny].reshape(Nx, Ny).copy()
    U = data[Nx * Ny:Nx * Ny + Nx].copy()
    U_tilde = data[Nx * Ny + Nx:].copy() if N_ray else None

    params = ModelParams(D=D, mu=mu, nu=nu, kappa=kappa,
                         D_tilde=None if math.isnan(D_tilde) else D_tilde)
    cone_a = None if math.isnan(a) else a
    stencil = None
    if cone_a is not None:
        x = -Lx + h * np.arange(Nx)
        y = h * np.arange(Ny)
        stencil = build_cone_stencil(cone_a, x, y, h)

    logging.debug(f"Read snapshot {file_path}: {Nx}x{Ny}, t={t}")
    return RDState(V=V, U=U, h=h, dt=dt, t=t, params=params, Lx=Lx, Ly=Ly,
                   U_tilde=U_tilde, cone_a=cone_a, decouple_road=bool(flags & SNAPSHOT_DECOUPLED),
                   stencil=stencil)
