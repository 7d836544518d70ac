"""Small numerical helpers shared across modules."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f: Callable[[float], float], a: float, b: float,
                       tol: float = 1e-10, max_iter: int = 200) -> tuple[float, float]:
    """Maximize a unimodal scalar function on ``[a, b]``.

    Returns the maximizer and the maximum value.
    """
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * (1.0 + abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    fx = f(x)
    best = max((fx, x), (fc, c), (fd, d))
    return best[1], best[0]


def golden_section_min(f: Callable[[float], float], a: float, b: float,
                       tol: float = 1e-10, max_iter: int = 200) -> tuple[float, float]:
    x, val = golden_section_max(lambda z: -f(z), a, b, tol=tol, max_iter=max_iter)
    return x, -val


def loglog_fit(t: np.ndarray, y: np.ndarray) -> dict:
    """Least-squares fit ``log y = c + k log t``; returns exponent, constant and R^2."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    mask = (t > 0) & (y > 0) & np.isfinite(y)
    if mask.sum() < 3:
        return {"exponent": float("nan"), "constant": float("nan"), "r2": float("nan"), "n": int(mask.sum())}
    X, Y = np.log(t[mask]), np.log(y[mask])
    k, c = np.polyfit(X, Y, 1)
    resid = Y - (c + k * X)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return {"exponent": float(k), "constant": float(math.exp(c)), "r2": r2, "n": int(mask.sum())}


def linear_fit(x: np.ndarray, y: np.ndarray) -> dict:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    k, c = np.polyfit(x, y, 1)
    resid = y - (c + k * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(k), "intercept": float(c), "r2": r2}


def sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + np.swapaxes(M, -1, -2))
