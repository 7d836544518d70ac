"""Power-law decay fits and the quadratic shape check of the bootstrap bound."""
from __future__ import annotations

import numpy as np

from .._numerics import loglog_fit
from ..errors import SimulationError

__all__ = ["fit_decay_rates", "claim_check", "DECAY_TARGETS"]

# expected decay rates of each series against (1 + t)
DECAY_TARGETS = {"Linf": 0.5, "L2": 0.25, "vx_Linf": 0.5, "vx_L2": 0.25, "delta_dot": 0.5}


def fit_decay_rates(times: np.ndarray, series: dict, window: tuple = (0.1, 1.0), min_horizon: float = 100.0,
                    strict: bool = True, min_samples: int = 8) -> dict:
    """Least-squares power laws ``y ~ C (1+t)^-k`` over ``t in [w0 T, w1 T]``.

    Returns ``{name: {exponent, slope, constant, r2, n}}`` where ``exponent``
    is the decay rate ``k``.

    Raises
    ------
    SimulationError
        ``insufficient horizon`` when ``T < min_horizon`` or the window holds
        fewer than ``min_samples`` samples (only with ``strict``).
    """
    times = np.asarray(times, float)
    T = float(times[-1]) if times.size else 0.0
    sel = (times >= window[0] * T) & (times <= window[1] * T)
    if T < min_horizon or sel.sum() < min_samples:
        if strict:
            raise SimulationError(f"insufficient horizon: T={T:g} (need T >= {min_horizon:g} "
                                  f"and {min_samples} samples in the fit window)")
        return {}
    out = {}
    for name, y in series.items():
        y = np.asarray(y, float)
        if y.shape != times.shape:
            continue
        f = loglog_fit(1.0 + times[sel], y[sel])
        out[name] = {"exponent": -f["exponent"], "slope": f["exponent"], "constant": f["constant"],
                     "r2": f["r2"], "n": f["n"], "window": [float(window[0] * T), float(window[1] * T)]}
    return out


def claim_check(zeta0: np.ndarray, sup_zeta: np.ndarray, tol: float = 0.2) -> dict:
    """Fit one ``C2`` to ``sup zeta <= C2 (zeta0 + sup zeta^2)`` across runs.

    ``C2`` is the mean of the per-run ratios; the check passes when every
    ratio lies within ``tol`` of it.
    """
    z0 = np.asarray(zeta0, float)
    zs = np.asarray(sup_zeta, float)
    ratios = zs / (z0 + zs**2)
    C2 = float(np.mean(ratios))
    dev = float(np.max(np.abs(ratios / C2 - 1.0)))
    return {"C2": C2, "ratios": ratios.tolist(), "max_relative_deviation": dev, "ok": bool(dev <= tol),
            "bound_holds": bool(np.all(zs <= C2 * (1 + tol) * (z0 + zs**2)))}
