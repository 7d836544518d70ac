"""Shock-location extraction from simulated snapshots.

Two definitions are provided.  ``projection`` solves the Volterra system

    delta(t)  = -int e(y,t) G0 dy + int_0^t int e_y(y,t-s) f(y,s) dy ds,
    ddelta(t) = -int e_t(y,t) G0 dy + int_0^t int e_ty(y,t-s) f(y,s) dy ds,
    f = N(G, G_x) + ddelta G,

on the output time lattice; ``fit`` minimizes the L2 distance between the
back-shifted solution and the rest state.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .._numerics import golden_section_min
from ..errors import SimulationError
from ..kernel import KernelDecomposition
from ..model import SystemDefinition
from ..profile import _d5
from .fields import shift_field

__all__ = ["RestState", "DeltaResult", "nonlinear_residual", "extract_delta", "fit_shift"]


@dataclass
class RestState:
    """Exact discrete rest state and the frozen linear coefficients on the grid."""

    sys: SystemDefinition           # comoving frame
    x: np.ndarray
    U: np.ndarray
    q: np.ndarray
    Ux: np.ndarray
    A0: np.ndarray
    A_G: np.ndarray
    B_G: np.ndarray
    width: float
    info: dict = field(default_factory=dict)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])


@dataclass
class DeltaResult:
    delta: np.ndarray
    delta_dot: np.ndarray
    method: str
    diagnostics: dict = field(default_factory=dict)


def nonlinear_residual(rest: RestState, U_shifted: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Perturbation ``G`` and the nonlinear flux residual ``N`` of a shifted field.

    ``N`` is the exact perturbation flux minus its linearization
    ``-A_G G + B_G G_x``, assembled at the nodes.
    """
    sysc, h = rest.sys, rest.dx
    G = sysc.eval_G(U_shifted) - rest.q
    Ux = _d5(U_shifted, h)
    full = -(sysc.eval_F(U_shifted) - sysc.eval_F(rest.U))
    full += (sysc.eval_B(U_shifted) @ Ux[..., None])[..., 0] - (sysc.eval_B(rest.U) @ rest.Ux[..., None])[..., 0]
    lin = -(rest.A_G @ G[..., None])[..., 0] + (rest.B_G @ _d5(G, h)[..., None])[..., 0]
    return G, full - lin


def fit_shift(rest: RestState, U: np.ndarray, guess: float = 0.0, tol: float = 1e-10) -> float:
    """``argmin_d |U(. + d) - Ubar|_L2`` over ``|d - guess| <= width`` by golden section."""
    cs = CubicSpline(rest.x, U, axis=0)
    w = rest.width
    margin = int(np.ceil((abs(guess) + w) / rest.dx)) + 2
    core = slice(margin, rest.x.size - margin)

    def obj(d):
        diff = shift_field(rest.x, U, d, cs)[core] - rest.U[core]
        return float(np.sum(diff * diff))

    a, b = guess - w, guess + w
    d, _ = golden_section_min(obj, a, b, tol=tol / (1.0 + abs(a) + abs(b)))
    return float(d)


class _KernelTables:
    """Kernel weights on the output lattice, reused across the history sums."""

    def __init__(self, kd: KernelDecomposition, x: np.ndarray, times: np.ndarray):
        dx = float(x[1] - x[0])
        faces = np.concatenate([x - 0.5 * dx, [x[-1] + 0.5 * dx]])
        lags = times[1:] - times[0]
        n, N = kd.sys.n, times.size
        self.Wy = np.zeros((N, x.size, n))          # int e_y(., lag_j) f  ~  sum Wy[j] f
        for j, tau in enumerate(lags, start=1):
            ef = kd.eval_e(faces, tau)
            self.Wy[j] = ef[1:] - ef[:-1]
        # cell averages of e and e_t by the two-point rule at x +- dx/4
        qp = np.concatenate([x - 0.25 * dx, x + 0.25 * dx])
        self.e_cell = np.zeros((N, x.size, n))
        self.et_cell = np.zeros((N, x.size, n))
        for j, tau in enumerate(times - times[0]):
            if tau <= 0:
                continue
            e = kd.eval_e(qp, tau)
            et = kd.eval_e_derivs(qp, tau)["e_t"]
            self.e_cell[j] = 0.5 * (e[: x.size] + e[x.size:]) * dx
            self.et_cell[j] = 0.5 * (et[: x.size] + et[x.size:]) * dx
        self.w0 = kd.e_t_initial_weight()


def _projection(rest: RestState, kd: KernelDecomposition, times: np.ndarray, snapshots: list,
                G0: np.ndarray, linear: bool, tol: float, max_iter: int, tables=None):
    N = times.size
    kt = tables if tables is not None else _KernelTables(kd, rest.x, times)
    dt = np.diff(times)
    if np.any(np.abs(dt - dt[0]) > 1e-9 * dt[0]):
        raise SimulationError("projection extraction needs a uniform output lattice")
    h = float(dt[0])
    delta = np.zeros(N)
    ddot = np.zeros(N)
    fs = np.zeros((N,) + rest.U.shape)
    c0 = float(G0[np.argmin(np.abs(rest.x))] @ kt.w0)
    ratios, iters = [], []
    for m in range(N):
        if m == 0:
            delta[0] = 0.0
            ddot[0] = -c0
        else:
            delta[m] = -np.sum(kt.e_cell[m] * G0)
            hist = h * (0.5 * np.sum(kt.Wy[m] * fs[0])
                        + np.einsum("jin,jin->", kt.Wy[m - 1:0:-1], fs[1:m]))
            delta[m] += hist
        if linear:
            continue
        U_sh = shift_field(rest.x, snapshots[m], delta[m])
        G, Nres = nonlinear_residual(rest, U_sh)
        if m == 0:
            fs[0] = Nres + ddot[0] * G
            continue
        base = -np.sum(kt.et_cell[m] * G0)
        if m >= 2:
            fbar = 0.5 * (fs[: m - 1] + fs[1:m])
            dW = kt.Wy[m:1:-1] - kt.Wy[m - 1:0:-1]
            base += np.einsum("jin,jin->", dW, fbar)
        # last interval (t_{m-1}, t_m): weight Wy[1] against (f_{m-1} + f_m)/2
        known = base + 0.5 * np.sum(kt.Wy[1] * (fs[m - 1] + Nres))
        lip = abs(0.5 * float(np.sum(kt.Wy[1] * G)))
        d_old = ddot[m - 1]
        for it in range(max_iter):
            d_new = known + 0.5 * np.sum(kt.Wy[1] * G) * d_old
            if abs(d_new - d_old) <= tol * max(abs(d_new), 1e-12):
                break
            d_old = d_new
        else:
            raise SimulationError(f"Volterra iteration did not converge (Lipschitz constant {lip:.3e})")
        if lip >= 1.0:
            raise SimulationError(f"Volterra map is not a contraction (Lipschitz constant {lip:.3e})")
        ratios.append(lip)
        iters.append(it + 1)
        ddot[m] = d_new
        fs[m] = Nres + d_new * G
    diag = {"max_lipschitz": float(max(ratios, default=0.0)),
            "max_picard_iterations": int(max(iters, default=0))}
    return delta, ddot, diag


def _linear_delta_dot(kt: _KernelTables, G0: np.ndarray, rest: RestState) -> np.ndarray:
    out = -np.einsum("jin,in->j", kt.et_cell, G0)
    out[0] = -float(G0[np.argmin(np.abs(rest.x))] @ kt.w0)
    return out


def extract_delta(rest: RestState, kd: KernelDecomposition | None, times: np.ndarray, snapshots: list,
                  G0: np.ndarray, method: str = "both", linear: bool = False, tol: float = 1e-8,
                  max_iter: int = 50) -> dict[str, DeltaResult]:
    """Shock location and speed by ``projection``, ``fit`` or ``both``.

    Raises
    ------
    SimulationError
        If the Volterra iteration fails to contract.
    """
    if method not in ("projection", "fit", "both"):
        raise ValueError(f"unknown delta method {method!r}")
    out = {}
    if method in ("projection", "both"):
        if kd is None:
            raise SimulationError("projection extraction needs a kernel decomposition")
        kt = _KernelTables(kd, rest.x, times)
        d, dd, diag = _projection(rest, kd, times, snapshots, G0, linear, tol, max_iter, tables=kt)
        if linear:
            dd = _linear_delta_dot(kt, G0, rest)
        out["projection"] = DeltaResult(d, dd, "projection", diag)
    if method in ("fit", "both") and not linear:
        d = np.zeros(times.size)
        guess = 0.0
        for m, U in enumerate(snapshots):
            d[m] = fit_shift(rest, U, guess)
            guess = d[m]
        dd = np.gradient(d, times) if times.size > 1 else np.zeros_like(d)
        out["fit"] = DeltaResult(d, dd, "fit", {})
    return out
