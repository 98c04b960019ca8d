"""Flat binary field export: little-endian float64, x-fastest ordering, with a
JSON header sidecar describing the grid."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import Grid3


def save_field(path_stem, values: np.ndarray, grid: Grid3) -> tuple[Path, Path]:
    """Write <stem>.bin and <stem>.json; returns both paths."""
    stem = Path(path_stem)
    bin_path = stem.with_suffix(".bin")
    hdr_path = stem.with_suffix(".json")
    data = np.asarray(values, dtype="<f8").ravel(order="F")  # x varies fastest
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    bin_path.write_bytes(data.tobytes())
    header = {
        "dims": list(grid.dims),
        "h": grid.h,
        "origin": grid.origin.tolist(),
        "dtype": "<f8",
        "ordering": "x-fastest",
        "sponge_cells": grid.sponge_cells,
    }
    hdr_path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    return bin_path, hdr_path


def load_field(path_stem) -> tuple[np.ndarray, dict]:
    """Read a field written by save_field; returns (values, header)."""
    stem = Path(path_stem)
    header = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
    raw = np.frombuffer(stem.with_suffix(".bin").read_bytes(), dtype="<f8")
    dims = tuple(header["dims"])
    return raw.reshape(dims, order="F").copy(), header
