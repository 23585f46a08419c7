"""
Helper utility functions
"""
import math
import os
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from app.utils.errors import OutputDirError


# ─── dB / linear ──────────────────────────────────────────────────────────────

def db_to_linear(value_db):
    """dB (or dBm) to linear (or mW). Works on scalars and arrays."""
    return np.power(10.0, np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    """Linear (or mW) to dB (or dBm). Non-positive input maps to -inf."""
    arr = np.asarray(value, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(arr)


def db_to_linear_scalar(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db_scalar(value: float) -> float:
    if value <= 0.0:
        return -math.inf
    return 10.0 * math.log10(value)


# ─── output directories ───────────────────────────────────────────────────────

def ensure_writable_dir(path: os.PathLike) -> Path:
    """Create `path` if needed and prove it is writable."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        marker = out / ".write_check"
        marker.write_bytes(b"")
        marker.unlink()
    except OSError as exc:
        raise OutputDirError(f"output directory '{out}' is not writable: {exc}") from exc
    return out


def run_dir(output_dir: os.PathLike, policy: str, density: int, seed: int) -> Path:
    """output_dir/<policy>/<density>/<seed>/"""
    return Path(output_dir) / policy / str(density) / str(seed)


# ─── CSV ──────────────────────────────────────────────────────────────────────

FLOAT_FORMAT = "%.17g"


def write_csv(path: os.PathLike, rows: Sequence[dict], columns: List[str]) -> Path:
    """Write rows with a fixed column order and full float precision.

    Floats are printed with 17 significant digits so a reread reproduces the
    exact in-memory value.
    """
    frame = pd.DataFrame(list(rows), columns=columns)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return Path(path)


def write_frame(path: os.PathLike, frame: pd.DataFrame) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return Path(path)


def read_csv(path: os.PathLike, columns: Optional[Iterable[str]] = None) -> pd.DataFrame:
    """Read a trace CSV; an empty file yields an empty frame with `columns`."""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame(columns=list(columns or []))
    return frame
