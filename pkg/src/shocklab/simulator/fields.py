"""Grid-function utilities: derivatives, discrete norms, shifts."""
from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from ..profile import _d5

__all__ = ["derivatives", "pointwise", "lp_norms", "sobolev_norm", "shift_field"]


def derivatives(f: np.ndarray, dx: float, order: int) -> list[np.ndarray]:
    """``[f, f', ..., f^(order)]`` by repeated five-point differences."""
    out = [f]
    for _ in range(order):
        out.append(_d5(out[-1], dx))
    return out


def pointwise(f: np.ndarray) -> np.ndarray:
    """Euclidean norm over the trailing component axis."""
    return np.sqrt(np.sum(f * f, axis=-1)) if f.ndim > 1 else np.abs(f)


def lp_norms(f: np.ndarray, dx: float) -> tuple[float, float, float]:
    """Discrete ``L1``, ``L2`` and ``Linf`` norms."""
    a = pointwise(f)
    return float(np.sum(a) * dx), float(np.sqrt(np.sum(a * a) * dx)), float(np.max(a, initial=0.0))


def sobolev_norm(derivs: list[np.ndarray], dx: float, order: int) -> float:
    return float(np.sqrt(sum(np.sum(d * d) * dx for d in derivs[: order + 1])))


def shift_field(x: np.ndarray, values: np.ndarray, d: float, spline: CubicSpline | None = None) -> np.ndarray:
    """Evaluate ``values(x + d)`` by cubic interpolation, constant beyond the ends."""
    if d == 0.0:
        return values.copy()
    cs = spline if spline is not None else CubicSpline(x, values, axis=0)
    y = np.clip(x + d, x[0], x[-1])
    return cs(y)
