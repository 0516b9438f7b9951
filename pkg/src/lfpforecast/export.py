"""Matrix exports for scalograms and coherence maps (CSV and 8-bit PGM)."""
from __future__ import annotations

from pathlib import Path

import numpy as np


def _rows_by_period(grid):
    # grids are stored with ascending scale; files list the longest period first
    return np.asarray(grid, dtype=np.float64)[::-1]


def write_matrix_csv(path, grid) -> None:
    rows = _rows_by_period(grid)
    with Path(path).open("w") as fh:
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    """Inverse of write_matrix_csv, returning ascending-scale row order."""
    rows = [[float(v) for v in line.split(",")] for line in Path(path).read_text().splitlines() if line]
    return np.array(rows)[::-1]


def write_pgm(path, grid) -> None:
    """Binary P5 image, min-max scaled per image."""
    rows = _rows_by_period(grid)
    lo, hi = float(rows.min()), float(rows.max())
    scaled = np.zeros(rows.shape) if hi == lo else (rows - lo) / (hi - lo)
    pixels = np.round(scaled * 255).astype(np.uint8)
    h, w = pixels.shape
    with Path(path).open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)
