"""CSV and JSON writers for simulation output."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .runs import SimulationResult

__all__ = ["write_timeseries", "write_snapshots", "write_json", "read_timeseries"]


def _write_rows(path: Path, header: list[str], data: np.ndarray, manifest: str, extra: str = "") -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if manifest:
            fh.write(f"# manifest={manifest}\n")
        if extra:
            fh.write(f"# {extra}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in data:
            w.writerow(["%.17g" % v for v in row])
    return path


def write_timeseries(result: SimulationResult, path: str | Path, manifest: str = "") -> Path:
    """Time series with columns ``t, L1, L2, Linf, vx_L2, vx_Linf, H2, delta, delta_dot, energy, zeta``."""
    return _write_rows(Path(path), list(result.COLUMNS), result.table(), manifest)


def write_snapshots(result: SimulationResult, directory: str | Path, stride: int, manifest: str = "",
                    prefix: str = "snapshot") -> list[Path]:
    """One ``x, U1..Un`` CSV per stored snapshot (every ``stride`` output times)."""
    directory = Path(directory)
    out = []
    n = result.snapshots[0].shape[1] if result.snapshots else 0
    header = ["x"] + [f"U{i + 1}" for i in range(n)]
    for j, U in enumerate(result.snapshots):
        t = result.times[j * stride]
        p = directory / f"{prefix}_{j * stride:05d}.csv"
        out.append(_write_rows(p, header, np.column_stack([result.x, U]), manifest, extra="t=%.17g" % t))
    return out


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def write_json(obj: dict, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n", encoding="utf-8")
    return path


def read_timeseries(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return lines[0].strip().split(","), np.loadtxt(lines[1:], delimiter=",", ndmin=2)
