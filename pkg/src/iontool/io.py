"""CSV and JSON exports.

Numbers are written with 17 significant digits in a fixed column order, so
identical inputs give byte-identical files.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError

FLOAT_FMT = "%.17g"


def write_csv(path, header, columns, fmt=FLOAT_FMT) -> Path:
    """Write equal-length ``columns`` under a comma-separated ``header``."""
    cols = [np.asarray(c).ravel() for c in columns]
    if len(cols) != len(header):
        raise InvalidArgumentError("one column per header entry")
    if len({c.size for c in cols}) > 1:
        raise InvalidArgumentError("columns differ in length")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack(cols) if cols[0].size else np.zeros((0, len(cols)))
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=",".join(header), comments="")
    return path


def read_csv(path):
    """(header, data) with data of shape (rows, columns)."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def write_potential(path, points, phi) -> Path:
    """``x,y,z,phi`` rows, metres and volts."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    return write_csv(path, ["x", "y", "z", "phi"], [p[:, 0], p[:, 1], p[:, 2], phi])


def write_trajectory(path, traj) -> Path:
    """``t,x,y,z,vx,vy,vz`` rows; several particles add a ``particle`` column."""
    x, v, t = traj.x, traj.v, np.asarray(traj.times)
    if x.ndim == 2:
        return write_csv(path, ["t", "x", "y", "z", "vx", "vy", "vz"],
                         [t, x[:, 0], x[:, 1], x[:, 2], v[:, 0], v[:, 1], v[:, 2]])
    n_t, n_p = x.shape[:2]
    tt = np.repeat(t, n_p)
    pid = np.tile(np.arange(n_p), n_t)
    x = x.reshape(-1, 3)
    v = v.reshape(-1, 3)
    return write_csv(path, ["t", "x", "y", "z", "vx", "vy", "vz", "particle"],
                     [tt, x[:, 0], x[:, 1], x[:, 2], v[:, 0], v[:, 1], v[:, 2], pid])


def write_waveform(path, voltages, electrodes) -> Path:
    """One row per time step, one column per electrode (V)."""
    u = np.atleast_2d(np.asarray(voltages, dtype=float))
    return write_csv(path, list(electrodes), list(u.T))


def write_wavefunction(path, x, psi) -> Path:
    psi = np.asarray(psi, dtype=complex)
    return write_csv(path, ["x", "re", "im", "abs2"], [x, psi.real, psi.imag, np.abs(psi) ** 2])


def write_eigen(path, energies) -> Path:
    E = np.asarray(energies, dtype=float)
    return write_csv(path, ["n", "E"], [np.arange(E.size), E])


def write_controls(path, t, values) -> Path:
    """``t,eps_1,...,eps_n`` with one row per control interval."""
    vals = np.atleast_2d(np.asarray(values, dtype=float))
    header = ["t"] + [f"eps_{i + 1}" for i in range(vals.shape[0])]
    return write_csv(path, header, [t] + list(vals))


def write_trace(path, trace) -> Path:
    rows = trace.rows()
    return write_csv(path, ["iter", "J", "fidelity"],
                     [np.array([r[0] for r in rows]), np.array([r[1] for r in rows]),
                      np.array([r[2] for r in rows])])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    return obj


def write_summary(path, summary: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return path
