"""Result files: binary matrix container, JSON snapshots, CSV tables.

Binary container layout (all little endian)::

    u64 rows | u64 cols | u64 flags | rows*cols values, row major

``flags`` bit 0 set means complex128 values stored as interleaved (re, im)
float64 pairs; clear means float64 values.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

FLAG_COMPLEX = 1
_HEADER = struct.Struct("<QQQ")


def write_matrix(path: str | Path, a: np.ndarray) -> None:
    a = np.asarray(a)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ValueError(f"container holds 2-D arrays, got shape {a.shape}")
    is_complex = np.iscomplexobj(a)
    body = np.ascontiguousarray(a, dtype="<c16" if is_complex else "<f8")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(a.shape[0], a.shape[1], FLAG_COMPLEX if is_complex else 0))
        f.write(body.tobytes(order="C"))


def read_matrix(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    rows, cols, flags = _HEADER.unpack_from(raw)
    dtype = "<c16" if flags & FLAG_COMPLEX else "<f8"
    expected = _HEADER.size + rows * cols * np.dtype(dtype).itemsize
    if len(raw) != expected:
        raise ValueError(f"{path}: size {len(raw)} does not match header ({expected} bytes expected)")
    return np.frombuffer(raw, dtype=dtype, offset=_HEADER.size).reshape(rows, cols).copy()


def complex_to_json(z) -> dict:
    z = np.asarray(z)
    return {"re": z.real.tolist(), "im": z.imag.tolist()}


def complex_from_json(d: dict) -> np.ndarray:
    return np.asarray(d["re"]) + 1j * np.asarray(d["im"])


def write_json(path: str | Path, obj: dict, config_hash: str | None = None) -> None:
    if config_hash is not None:
        obj = {"config_sha256": config_hash, **obj}
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def write_csv(path: str | Path, header: list[str], rows, config_hash: str | None = None) -> None:
    """CSV with '.' decimals and newline-terminated rows; optional leading hash comment."""
    with open(path, "w", newline="") as f:
        if config_hash is not None:
            f.write(f"# config_sha256={config_hash}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def posterior_snapshot(state) -> dict:
    """Structured-text view of a PosteriorState."""
    return {
        "alpha": float(state.alpha),
        "mu_mean": complex_to_json(state.mu.mean),
        "mu_variance": state.mu.variance.tolist(),
        "lambda_mean": state.lambda_mean.tolist(),
        "lambda_inverse": (1.0 / state.lambda_mean).tolist(),
        "zeta": float(state.lam.shape),
        "xi": state.lam.rate.tolist(),
        "gamma_mean": complex_to_json(state.gamma_mean),
        "gamma_variance": (1.0 / state.gamma_prec).tolist(),
        "transition": state.transition,
    }
