"""
data_export.py - Functions for exporting results as JSON, CSV and binary snapshots

JSON documents carry "command", "params", "results", "tolerances" and the
options needed to re-run them. CSV schemas follow the shape being exported.
Snapshots are little-endian binary dumps of a simulation state headed by the
magic bytes RDF1.
"""

import os
import sys
import csv
import json
import math
import struct
import logging
from dataclasses import asdict, is_dataclass

import numpy as np

# Import state directly
import state
from front_geometry import polar_point
from utils import add_log_entry

DOCUMENT_VERSION = "1.0"
SNAPSHOT_MAGIC = b"RDF1"
# Nx, Ny, N_ray, then h, t, dt, D, mu, nu, kappa, D_tilde, a, Lx, Ly, then flags
SNAPSHOT_HEADER = struct.Struct("<4s3I11dI")
SNAPSHOT_DECOUPLED = 0x1

WULFF_COLUMNS = ["theta_rad", "speed", "x", "y"]
CONE_COLUMNS = ["theta_rad", "speed", "x", "y", "branch"]
PATH_COLUMNS = ["s", "x", "y"]
HISTORY_COLUMNS = ["t", "theta", "radius"]


def to_serializable(value):
    """Convert dataclasses, numpy scalars/arrays and non-finite floats for JSON"""
    if is_dataclass(value) and not isinstance(value, type):
        return to_serializable(asdict(value))
    if isinstance(value, dict):
        return {str(key): to_serializable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_serializable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_serializable(value.tolist())
    if isinstance(value, np.generic):
        return to_serializable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    return value


def build_document(command, params, results, tolerances=None, options=None):
    """Assemble the JSON result document for a command"""
    return {
        "version": DOCUMENT_VERSION,
        "command": command,
        "params": params.as_dict() if hasattr(params, "as_dict") else params,
        "results": to_serializable(results),
        "tolerances": to_serializable(tolerances or {}),
        "options": to_serializable(options or {}),
    }


def _ensure_directory(path):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)


def write_json(document, path=None):
    """
    Write a result document, or return its text when path is None

    Returns:
        str: The JSON text that was written
    """
    text = json.dumps(document, indent=2)
    if path is None:
        return text
    _ensure_directory(path)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text + "\n")
    state.last_results = document
    add_log_entry(f"Wrote {document.get('command', 'result')} document to {path}")
    return text


def _write_rows(f, rows, columns):
    writer = csv.writer(f)
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if value is None else repr(float(value)) if isinstance(value, float) else value
                         for value in row])


def write_csv(rows, columns, path=None):
    """Write rows (sequences matching columns) with a header line; path None writes to stdout"""
    if path is None:
        _write_rows(sys.stdout, rows, columns)
        return
    _ensure_directory(path)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        _write_rows(f, rows, columns)
    add_log_entry(f"Wrote {len(rows)} rows to {path}")


def wulff_rows(shape):
    """theta_rad, speed, x, y for the n quadrant samples of a WulffShape"""
    rows = []
    for theta, speed in shape.quadrant_samples():
        x, y = polar_point(speed, theta)
        rows.append((theta, speed, x, y))
    return rows


def cone_rows(report):
    """theta_rad, speed, x, y, branch for a ConeWulffReport"""
    rows = []
    for theta, speed, branch in report.samples:
        x, y = polar_point(speed, theta)
        rows.append((theta, speed, x, y, branch))
    return rows


def path_rows(samples):
    return [(s, x, y) for s, (x, y) in samples]


def export_wulff_csv(shape, path=None):
    write_csv(wulff_rows(shape), WULFF_COLUMNS, path)


def export_cone_csv(report, path=None):
    write_csv(cone_rows(report), CONE_COLUMNS, path)


def export_path_csv(samples, path=None):
    write_csv(path_rows(samples), PATH_COLUMNS, path)


def export_front_history(history, path=None):
    """Front history rows (t, theta, radius); a missing crossing is left empty"""
    write_csv(list(history), HISTORY_COLUMNS, path)


def write_snapshot(rd_state, path):
    """
    Dump an RDState to the RDF1 binary format

    Layout: header (magic, Nx, Ny, N_ray as uint32, then h, t, dt, D, mu,
    nu, kappa, D_tilde, a, Lx, Ly as float64, absent values NaN, then a
    uint32 flag word whose bit 0 marks a decoupled road),
    followed by V (row-major Nx x Ny), U (Nx) and U_tilde (N_ray), all
    little-endian float64.
    """
    params = rd_state.params
    Nx, Ny = rd_state.V.shape
    U_tilde = rd_state.U_tilde if rd_state.U_tilde is not None else np.zeros(0)
    header = SNAPSHOT_HEADER.pack(
        SNAPSHOT_MAGIC, Nx, Ny, len(U_tilde),
        rd_state.h, rd_state.t, rd_state.dt,
        params.D, params.mu, params.nu, params.kappa,
        params.D_tilde if params.D_tilde is not None else math.nan,
        rd_state.cone_a if rd_state.cone_a is not None else math.nan,
        rd_state.Lx, rd_state.Ly,
        SNAPSHOT_DECOUPLED if rd_state.decouple_road else 0)

    _ensure_directory(path)
    try:
        with open(path, 'wb') as f:
            f.write(header)
            for array in (rd_state.V, rd_state.U, U_tilde):
                f.write(np.ascontiguousarray(array, dtype='<f8').tobytes())
    except OSError as e:
        logging.error(f"Error writing snapshot {path}: {str(e)}")
        raise
    add_log_entry(f"Wrote {Nx}x{Ny} snapshot at t={rd_state.t:.3f} to {path}")
