"""Artifact writers: delimited tables, JSON reports, and figures.

Every pipeline writes the same three kinds of files: CSV tables with
fixed documented headers, JSON objects with sorted keys, and a PNG
rendered with the Agg backend next to the data it plots. Float cells
use repr-faithful formatting so identical runs produce bit-identical
files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["write_csv", "write_json", "save_figure"]


def _format_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> Path:
    """Write columns under a fixed header; floats keep full precision."""
    arrays = [np.atleast_1d(np.asarray(col)) for col in columns]
    if len(arrays) != len(header):
        raise ValueError("header and column count differ")
    n = arrays[0].shape[0]
    if any(a.shape[0] != n for a in arrays):
        raise ValueError("columns must share a length")
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(_format_cell(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n")
    return path


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def write_json(path: Path, payload: dict[str, Any]) -> Path:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def save_figure(fig, path: Path) -> Path:
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def figure(nrows: int = 1, ncols: int = 1, width: float = 6.4, height: float = 4.2):
    return plt.subplots(nrows, ncols, figsize=(width, height), constrained_layout=True)
