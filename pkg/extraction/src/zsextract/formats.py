"""Writers for the engine's on-disk formats.

This package talks to the classification engine exclusively through its
file formats, so the binary matrix layout is implemented here against
the published contract: magic ``ZSEM``, version byte ``0x01``, rows and
cols as little-endian uint32 (13-byte header), then row-major float32
values.  All writes go through a temp file and an atomic rename, so an
interrupted run never leaves a half-written artifact.
"""

import json
import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"ZSEM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sBII")


class ExtractionError(Exception):
    """A provider or input problem that aborts the current item."""


def write_matrix(matrix, path):
    """Write a float32 matrix file atomically."""
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ExtractionError(
            f"matrix for {path} must be 2D with positive dimensions, "
            f"got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ExtractionError(f"matrix for {path} contains non-finite values")
    rows, cols = arr.shape
    payload = _HEADER.pack(MAGIC, FORMAT_VERSION, rows, cols) + arr.tobytes()
    atomic_write_bytes(Path(path), payload)


def atomic_write_bytes(path, payload):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def write_manifest(manifest, path):
    """Write the workspace manifest JSON atomically and deterministically."""
    payload = (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode()
    atomic_write_bytes(Path(path), payload)


def unit_rows(x):
    """Unit-normalize rows, leaving all-zero rows untouched."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return x / norms
