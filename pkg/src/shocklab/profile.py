"""Rankine-Hugoniot solutions, Lax admissibility and viscous shock profiles.

The profile solves the integrated traveling-wave equation

    B(U) U' = F(U) - F(U-) - s (G(U) - G(U-)) =: Phi(U).

The first ``n - r`` rows carry no viscosity and are algebraic; they are
solved for the hyperbolic part ``u`` as a function of the parabolic part
``v``.  The remaining rows form the reduced ODE ``b(U) v' = Phi_2(u(v), v)``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import spsolve

from ._numerics import loglog_fit
from .errors import DomainError, HugoniotError, ProfileError
from .model import SystemDefinition
from .structure import characteristic_speeds, _gnl_coefficient

__all__ = [
    "ShockData",
    "ShockProfile",
    "GridConfig",
    "hugoniot_solve",
    "shock_from_strength",
    "lax_check",
    "compute_profile",
    "validate_profile_decay",
    "save_profile",
    "load_profile_csv",
]

RH_TOL = 1e-10
EPS_MAX = 0.3
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


@dataclass(frozen=True)
class ShockData:
    U_minus: np.ndarray
    U_plus: np.ndarray
    s: float
    p: int
    epsilon: float
    admissible: bool = True
    rh_residual: float = 0.0
    lax: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "U_minus": self.U_minus.tolist(), "U_plus": self.U_plus.tolist(),
            "s": self.s, "p": self.p, "epsilon": self.epsilon,
            "admissible": self.admissible, "rh_residual": self.rh_residual,
            "lax": {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.lax.items()},
        }


def rh_residual(sys: SystemDefinition, U_minus, U_plus, s: float) -> float:
    Um, Up = np.asarray(U_minus, float), np.asarray(U_plus, float)
    r = s * (sys.eval_G(Up) - sys.eval_G(Um)) - (sys.eval_F(Up) - sys.eval_F(Um))
    return float(np.max(np.abs(r)))


def lax_check(sys: SystemDefinition, U_minus, U_plus, s: float, p: int) -> dict:
    """Strict Lax inequalities for a ``p``-shock, with the speeds involved."""
    am, _ = characteristic_speeds(sys, U_minus)
    ap, _ = characteristic_speeds(sys, U_plus)
    i = p - 1
    ok = bool(am[i] > s > ap[i])
    if i > 0:
        ok = ok and bool(am[i - 1] < s)
    if i < sys.n - 1:
        ok = ok and bool(s < ap[i + 1])
    noncharacteristic = bool(np.min(np.abs(am - s)) > 1e-12 and np.min(np.abs(ap - s)) > 1e-12)
    return {"ok": ok and noncharacteristic, "a_minus": am, "a_plus": ap,
            "noncharacteristic": noncharacteristic}


def _secant_matrix(sys: SystemDefinition, Um: np.ndarray, U: np.ndarray, s: float) -> np.ndarray:
    """Averaged ``s dG - dF`` along the segment ``[Um, U]`` (Gauss-Legendre)."""
    pts = Um + _GL_NODES[:, None] * (U - Um)
    mats = s * sys.jac_G(pts) - sys.jac_F(pts)
    return np.tensordot(_GL_WEIGHTS, mats, axes=1)


def _newton(fun: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, tol: float = 1e-13,
            max_iter: int = 60) -> np.ndarray:
    x = np.asarray(x0, float).copy()
    for _ in range(max_iter):
        f = fun(x)
        if not np.all(np.isfinite(f)):
            raise HugoniotError("Newton iterate left the domain of the evaluators")
        J = np.empty((f.size, x.size))
        for k in range(x.size):
            h = 1e-7 * (1.0 + abs(x[k]))
            e = np.zeros_like(x)
            e[k] = h
            J[:, k] = (fun(x + e) - fun(x - e)) / (2 * h)
        try:
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError as exc:
            raise HugoniotError(f"singular Newton matrix: {exc}") from exc
        x = x + dx
        if np.max(np.abs(dx)) <= tol * (1.0 + np.max(np.abs(x))):
            return x
    raise HugoniotError("Newton iteration diverged")


def _polish(sys: SystemDefinition, Um: np.ndarray, U: np.ndarray, s: float) -> np.ndarray:
    Gm, Fm = sys.eval_G(Um), sys.eval_F(Um)
    for _ in range(20):
        res = s * (sys.eval_G(U) - Gm) - (sys.eval_F(U) - Fm)
        if np.max(np.abs(res)) <= 1e-15:
            break
        J = s * sys.jac_G(U) - sys.jac_F(U)
        U = U - np.linalg.solve(J, res)
    return U


def _finish(sys, Um, U, s, p) -> ShockData:
    U = _polish(sys, Um, U, s)
    eps = float(np.linalg.norm(U - Um))
    if eps < 1e-12:
        raise HugoniotError("degenerate shock: U_plus coincides with U_minus")
    lax = lax_check(sys, Um, U, s, p)
    return ShockData(U_minus=Um.copy(), U_plus=U, s=float(s), p=p, epsilon=eps,
                     admissible=lax["ok"], rh_residual=rh_residual(sys, Um, U, s), lax=lax)


def hugoniot_solve(sys: SystemDefinition, U_minus, p: int, s: float, steps: int = 6) -> ShockData:
    """Endstate ``U_plus`` on the ``p``-Hugoniot curve of ``U_minus`` with speed ``s``.

    The nontrivial root is isolated by writing ``U = U- + tau w`` with ``|w| = 1``
    and solving ``Abar(U) w = 0`` for ``(tau, w)``, where ``Abar`` is the
    segment average of ``s dG - dF``.  The solve is continued in ``s`` from near
    the characteristic speed, then polished on the plain Rankine-Hugoniot
    residual.
    """
    Um = np.asarray(U_minus, float)
    if not 1 <= p <= sys.n:
        raise ValueError(f"p must be in 1..{sys.n}")
    a_base, _ = characteristic_speeds(sys, sys.base_point)
    if abs(s - a_base[p - 1]) >= sys.neighborhood_radius:
        raise DomainError("speed too far from the characteristic speed at the base point")
    a, V = characteristic_speeds(sys, Um)
    ap = a[p - 1]
    gnl = _gnl_coefficient(sys, Um, p)
    if abs(s - ap) < 1e-14 or abs(gnl) < 1e-12:
        raise HugoniotError("degenerate shock: speed equals the characteristic speed")

    def system(x, s_):
        tau, w = x[0], x[1:]
        return np.concatenate([_secant_matrix(sys, Um, Um + tau * w, s_) @ w, [w @ w - 1.0]])

    x = np.concatenate([[2.0 * (ap + (s - ap) / steps - ap) / gnl], V[:, p - 1]])
    for k in range(1, steps + 1):
        s_k = ap + (s - ap) * k / steps
        if k > 1:
            x = x.copy()
            x[0] *= k / (k - 1)
        x = _newton(lambda y: system(y, s_k), x)
    return _finish(sys, Um, Um + x[0] * x[1:], s, p)


def shock_from_strength(sys: SystemDefinition, U_minus, p: int, epsilon: float,
                        steps: int = 6) -> ShockData:
    """Lax ``p``-shock of given strength ``|U_plus - U_minus| = epsilon``.

    Solves ``Abar(U- + tau w; s) w = 0`` with ``|w| = 1`` for ``(w, s)`` at
    fixed ``tau``; the sign of ``tau`` is chosen so that ``s < a_p(U-)``.
    """
    Um = np.asarray(U_minus, float)
    if epsilon <= 0:
        raise HugoniotError("degenerate shock: epsilon must be positive")
    a, V = characteristic_speeds(sys, Um)
    ap = a[p - 1]
    gnl = _gnl_coefficient(sys, Um, p)
    if abs(gnl) < 1e-12:
        raise HugoniotError("field is not genuinely nonlinear at U_minus")
    sign = -np.sign(gnl)

    def system(x, tau):
        w, s_ = x[:-1], x[-1]
        return np.concatenate([_secant_matrix(sys, Um, Um + tau * w, s_) @ w, [w @ w - 1.0]])

    x = np.concatenate([V[:, p - 1], [ap]])
    for k in range(1, steps + 1):
        tau = sign * epsilon * k / steps
        x = x.copy()
        x[-1] = ap + 0.5 * gnl * tau
        x = _newton(lambda y: system(y, tau), x)
    return _finish(sys, Um, Um + sign * epsilon * x[:-1], float(x[-1]), p)


# -- profiles ----------------------------------------------------------------

@dataclass(frozen=True)
class GridConfig:
    M: int = 4001
    L: float | None = None
    L_factor: float = 20.0
    shift: float = 0.0
    method: str = "auto"

    @classmethod
    def from_dict(cls, d: dict | None) -> "GridConfig":
        d = dict(d or {})
        extra = set(d) - {"M", "L", "L_factor", "shift", "method"}
        if extra:
            raise ValueError(f"unknown grid keys {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class ShockProfile:
    """Sampled viscous profile.

    ``derivs[q - 1]`` holds ``d^q U / dx^q`` on the grid for ``q = 1..4``.
    """

    shock: ShockData
    grid: np.ndarray
    values: np.ndarray
    derivs: tuple
    decay_rate: float
    tail_fits: dict
    residuals: dict
    L_dom: float
    method: str
    dense: Callable[[np.ndarray], np.ndarray] | None = None
    system_name: str = ""
    G_values: np.ndarray | None = None

    @property
    def dx(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def evaluate(self, x) -> np.ndarray:
        """Profile values at arbitrary points; constant extension outside the grid."""
        x = np.asarray(x, float)
        if self.dense is not None:
            return self.dense(x)
        spline = CubicSpline(self.grid, self.values, axis=0)
        out = spline(np.clip(x, self.grid[0], self.grid[-1]))
        out[x <= self.grid[0]] = self.values[0]
        out[x >= self.grid[-1]] = self.values[-1]
        return out

    def metadata(self) -> dict:
        return {
            "shock": self.shock.to_dict(), "M": int(self.grid.size), "L_dom": self.L_dom,
            "dx": self.dx, "decay_rate": self.decay_rate, "tail_fits": self.tail_fits,
            "residuals": self.residuals, "method": self.method, "system": self.system_name,
        }


class _SlowManifold:
    """The algebraic rows solved for ``u`` given ``v``."""

    def __init__(self, sys: SystemDefinition, shock: ShockData):
        self.sys = sys
        self.k = sys.n - sys.r
        self.s = shock.s
        self.Um = shock.U_minus
        self.Gm = sys.eval_G(self.Um)
        self.Fm = sys.eval_F(self.Um)
        self._u_guess = self.Um[: self.k].copy()

    def phi(self, U: np.ndarray) -> np.ndarray:
        return (self.sys.eval_F(U) - self.Fm) - self.s * (self.sys.eval_G(U) - self.Gm)

    def lift(self, v: np.ndarray, guess: np.ndarray | None = None) -> np.ndarray:
        """Full state ``(u(v), v)`` for a batch of parabolic values ``v`` (shape (..., r))."""
        v = np.asarray(v, float)
        k = self.k
        u = np.broadcast_to(self._u_guess if guess is None else guess, v.shape[:-1] + (k,)).copy()
        for it in range(50):
            U = np.concatenate([u, v], axis=-1)
            res = self.phi(U)[..., :k]
            J = (self.sys.jac_F(U) - self.s * self.sys.jac_G(U))[..., :k, :k]
            try:
                du = np.linalg.solve(J, res[..., None])[..., 0]
            except np.linalg.LinAlgError as exc:
                raise ProfileError("algebraic rows are singular (characteristic hyperbolic block)") from exc
            u = u - du
            if np.max(np.abs(du), initial=0.0) <= 1e-15 * (1.0 + np.max(np.abs(u), initial=0.0)):
                break
        else:
            raise ProfileError("Newton solve of the algebraic rows did not converge")
        return np.concatenate([u, v], axis=-1)

    def field(self, v: np.ndarray) -> np.ndarray:
        """Reduced vector field ``v' = b^{-1} Phi_2``."""
        U = self.lift(v)
        rhs = self.phi(U)[..., self.k:]
        b = self.sys.eval_B(U)[..., self.k:, self.k:]
        return np.linalg.solve(b, rhs[..., None])[..., 0]

    def full_field(self, v: np.ndarray) -> np.ndarray:
        """``dU/dx`` on the slow manifold at parabolic value ``v``."""
        v = np.asarray(v, float)
        U = self.lift(v)
        g = self.field(v)
        k = self.k
        A = self.sys.jac_F(U) - self.s * self.sys.jac_G(U)
        du = -np.linalg.solve(A[..., :k, :k], (A[..., :k, k:] @ g[..., None]))[..., 0]
        return np.concatenate([du, g], axis=-1)

    def field_jacobian(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, float)
        r = v.shape[-1]
        cols = []
        for j in range(r):
            h = 1e-7 * (1.0 + np.abs(v[..., j]))
            e = np.zeros(v.shape)
            e[..., j] = h
            cols.append((self.field(v + e) - self.field(v - e)) / (2 * h[..., None]))
        return np.stack(cols, axis=-1)


def _d5(f: np.ndarray, h: float) -> np.ndarray:
    """First derivative by 5-point central differences along axis 0."""
    out = np.gradient(f, h, axis=0, edge_order=2)
    out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    return out


def _d5_second(f: np.ndarray, h: float) -> np.ndarray:
    out = np.gradient(np.gradient(f, h, axis=0, edge_order=2), h, axis=0, edge_order=2)
    out[2:-2] = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / (12 * h * h)
    return out


def _tail_fit(x: np.ndarray, dev: np.ndarray, amp: float) -> dict:
    """Log-linear fit of a tail deviation restricted to a clean window."""
    mask = (dev < 1e-2 * amp) & (dev > 1e-9 * amp)
    if mask.sum() < 5:
        return {"rate": float("nan"), "r2": float("nan"), "n": int(mask.sum())}
    X, Y = np.abs(x[mask]), np.log(dev[mask])
    k, c = np.polyfit(X, Y, 1)
    resid = Y - (c + k * X)
    r2 = 1.0 - float(np.sum(resid**2)) / float(np.sum((Y - Y.mean()) ** 2))
    return {"rate": float(-k), "r2": r2, "n": int(mask.sum())}


def _endpoint_rates(man: _SlowManifold, shock: ShockData) -> tuple[float, float]:
    k = man.k
    Jm = np.linalg.eigvals(man.field_jacobian(shock.U_minus[k:]))
    Jp = np.linalg.eigvals(man.field_jacobian(shock.U_plus[k:]))
    unstable_m = Jm.real[Jm.real > 0]
    stable_p = -Jp.real[Jp.real < 0]
    if unstable_m.size == 0 or stable_p.size == 0:
        raise ProfileError("endstates are not hyperbolic rest points of the reduced ODE")
    return float(np.min(unstable_m)), float(np.min(stable_p))


def compute_profile(sys: SystemDefinition, shock: ShockData, grid_config: GridConfig | dict | None = None,
                    eps_max: float = EPS_MAX) -> ShockProfile:
    """Viscous profile on a uniform grid, phase fixed by the parabolic midpoint at ``x = 0``."""
    cfg = grid_config if isinstance(grid_config, GridConfig) else GridConfig.from_dict(grid_config)
    if shock.epsilon > eps_max:
        raise ProfileError(f"epsilon {shock.epsilon:.3g} exceeds eps_max {eps_max}")
    n, k = sys.n, sys.n - sys.r
    if shock.epsilon == 0.0 or np.allclose(shock.U_minus, shock.U_plus, rtol=0, atol=0):
        L = cfg.L if cfg.L is not None else 10.0
        x = np.linspace(-L, L, cfg.M) + cfg.shift
        vals = np.broadcast_to(shock.U_minus, (cfg.M, n)).copy()
        zeros = tuple(np.zeros((cfg.M, n)) for _ in range(4))
        return ShockProfile(shock, x, vals, zeros, 0.0, {}, {"ode_residual": 0.0, "consistency_residual": 0.0},
                            L, "constant", lambda y: np.broadcast_to(shock.U_minus, np.shape(y) + (n,)).copy(),
                            sys.name, sys.eval_G(vals))
    if not shock.admissible:
        raise ProfileError("shock is not Lax admissible")
    man = _SlowManifold(sys, shock)
    rate_m, rate_p = _endpoint_rates(man, shock)
    theta_hat = min(rate_m, rate_p)
    L = cfg.L if cfg.L is not None else cfg.L_factor / theta_hat
    x = np.linspace(-L, L, cfg.M) + cfg.shift
    vm, vp = shock.U_minus[k:], shock.U_plus[k:]
    method = cfg.method
    if method == "auto":
        method = "shooting" if sys.r == 1 else "collocation"
    if method == "shooting":
        if sys.r != 1:
            raise ProfileError("shooting is implemented for a scalar parabolic block")
        v_of_x = _shoot(man, vm, vp, x)
    elif method == "collocation":
        v_of_x = _collocate(man, vm, vp, x, rate_m, rate_p)
    else:
        raise ValueError(f"unknown profile method {method!r}")

    v = v_of_x(x)
    vals = man.lift(v)
    d1 = man.full_field(v)
    g = man.field(v)
    scale = np.max(np.abs(vp - vm))
    t = 1e-4 * scale / max(np.max(np.linalg.norm(g, axis=-1)), 1e-300)
    d2 = (man.full_field(v + t * g) - man.full_field(v - t * g)) / (2 * t)
    h = x[1] - x[0]
    d3 = _d5(d2, h)
    d4 = _d5_second(d2, h)

    B = sys.eval_B(vals)
    phi = man.phi(vals)
    ode_res = float(np.max(np.abs(phi - (B @ d1[..., None])[..., 0])))
    fd_res = float(np.max(np.abs(phi - (B @ _d5(vals, h)[..., None])[..., 0])))
    end_err = float(max(np.max(np.abs(vals[0] - shock.U_minus)), np.max(np.abs(vals[-1] - shock.U_plus))))
    dev_m = np.linalg.norm(vals - shock.U_minus, axis=1)
    dev_p = np.linalg.norm(vals - shock.U_plus, axis=1)
    left, right = x < 0, x > 0
    fits = {"minus": _tail_fit(x[left], dev_m[left], shock.epsilon),
            "plus": _tail_fit(x[right], dev_p[right], shock.epsilon)}
    fits["linearized_rates"] = {"minus": rate_m, "plus": rate_p}
    rates = [f["rate"] for key, f in fits.items() if key in ("minus", "plus") and np.isfinite(f["rate"])]
    decay = float(min(rates)) if rates else theta_hat
    residuals = {"ode_residual": ode_res, "consistency_residual": fd_res, "endpoint_error": end_err}
    if end_err > 1e-6:
        raise ProfileError(f"profile does not reach its endstates (error {end_err:.2e}); enlarge the domain")

    def dense(y):
        y = np.asarray(y, float)
        return man.lift(v_of_x(y))

    return ShockProfile(shock, x, vals, (d1, d2, d3, d4), decay, fits, residuals, float(L), method, dense,
                        sys.name, sys.eval_G(vals))


def _shoot(man: _SlowManifold, vm, vp, x) -> Callable[[np.ndarray], np.ndarray]:
    """Integrate the scalar reduced ODE outward from the midpoint in both directions."""
    mid = 0.5 * (vm + vp)
    x0 = 0.0
    rhs = lambda _x, y: man.field(y)
    fwd = solve_ivp(rhs, (x0, max(x[-1], 1.0) + 1.0), mid, method="DOP853",
                    rtol=1e-12, atol=1e-14 * max(1.0, float(np.max(np.abs(mid)))), dense_output=True)
    bwd = solve_ivp(rhs, (x0, min(x[0], -1.0) - 1.0), mid, method="DOP853",
                    rtol=1e-12, atol=1e-14 * max(1.0, float(np.max(np.abs(mid)))), dense_output=True)
    if not (fwd.success and bwd.success):
        raise ProfileError("profile integration failed to connect the endstates")
    lo, hi = bwd.t[-1], fwd.t[-1]

    def v_of_x(y):
        y = np.asarray(y, float)
        flat = y.reshape(-1)
        out = np.empty(flat.shape + (vm.size,))
        pos = flat >= 0
        yp = np.clip(flat[pos], 0.0, hi)
        yn = np.clip(flat[~pos], lo, 0.0)
        out[pos] = fwd.sol(yp).T if yp.size else np.empty((0, vm.size))
        out[~pos] = bwd.sol(yn).T if yn.size else np.empty((0, vm.size))
        out[flat > hi] = vp
        out[flat < lo] = vm
        return out.reshape(y.shape + (vm.size,))

    return v_of_x


def _collocate(man: _SlowManifold, vm, vp, x, rate_m, rate_p, tol: float = 1e-13,
               max_iter: int = 40) -> Callable[[np.ndarray], np.ndarray]:
    """Midpoint finite-difference Newton solve with projection boundary conditions.

    Unknowns are ``v`` at the nodes.  Equations: the midpoint rule on each
    cell, the stable projection at the left end, the unstable projection at
    the right end, and the phase condition ``v_1(x_c) = midpoint`` at the node
    nearest ``x = 0``.
    """
    M, r = x.size, vm.size
    h = np.diff(x)
    Jm = man.field_jacobian(vm)
    Jp = man.field_jacobian(vp)

    def projector(J, keep_positive):
        w, V = np.linalg.eig(J)
        Vinv = np.linalg.inv(V)
        sel = (w.real < 0) if keep_positive else (w.real > 0)
        return np.real(Vinv[sel])

    P_left = projector(Jm, keep_positive=True)
    P_right = projector(Jp, keep_positive=False)
    c = int(np.argmin(np.abs(x)))
    mid = 0.5 * (vm[0] + vp[0])
    width = 1.0 / min(rate_m, rate_p)
    w = 0.5 * (1 + np.tanh((x - x[c]) / (2 * width)))
    v = vm[None, :] + w[:, None] * (vp - vm)[None, :]

    def residual(v):
        vmid = 0.5 * (v[1:] + v[:-1])
        cell = (v[1:] - v[:-1]) / h[:, None] - man.field(vmid)
        bl = P_left @ (v[0] - vm)
        br = P_right @ (v[-1] - vp)
        phase = np.array([v[c, 0] - mid])
        return np.concatenate([cell.ravel(), bl, br, phase])

    for _ in range(max_iter):
        F = residual(v)
        vmid = 0.5 * (v[1:] + v[:-1])
        Jf = man.field_jacobian(vmid)
        rows, cols, data = [], [], []
        eye = np.eye(r)
        for i in range(M - 1):
            blk_l = -eye / h[i] - 0.5 * Jf[i]
            blk_r = eye / h[i] - 0.5 * Jf[i]
            for a in range(r):
                for b in range(r):
                    rows += [i * r + a, i * r + a]
                    cols += [i * r + b, (i + 1) * r + b]
                    data += [blk_l[a, b], blk_r[a, b]]
        row = (M - 1) * r
        for P, node in ((P_left, 0), (P_right, M - 1)):
            for q in range(P.shape[0]):
                for b in range(r):
                    rows.append(row)
                    cols.append(node * r + b)
                    data.append(P[q, b])
                row += 1
        rows.append(row)
        cols.append(c * r)
        data.append(1.0)
        J = sparse.csc_matrix((data, (rows, cols)), shape=(M * r, M * r))
        dv = spsolve(J, -F).reshape(M, r)
        v = v + dv
        if np.max(np.abs(dv)) <= tol * (1.0 + np.max(np.abs(v))):
            break
    else:
        raise ProfileError("collocation Newton iteration did not converge")
    spline = CubicSpline(x, v, axis=0)
    x_lo, x_hi = x[0], x[-1]

    def v_of_x(y):
        y = np.asarray(y, float)
        out = spline(np.clip(y, x_lo, x_hi))
        out[y < x_lo] = vm
        out[y > x_hi] = vp
        return out

    return v_of_x


def validate_profile_decay(profiles: Sequence[ShockProfile], q_max: int = 4,
                           exponent_tol: float = 0.25, r2_min: float = 0.98) -> dict:
    """Scaling of ``|d^q U|`` with the shock strength across a sweep of profiles."""
    profiles = [p for p in profiles]
    if len({round(p.shock.epsilon, 12) for p in profiles}) < 3:
        raise ProfileError("need profiles for at least 3 distinct epsilon values")
    eps = np.array([p.shock.epsilon for p in profiles])
    per_q = {}
    ok = True
    for q in range(q_max + 1):
        sup = []
        for p in profiles:
            if q == 0:
                dev = np.where(p.grid[:, None] < 0, p.values - p.shock.U_minus, p.values - p.shock.U_plus)
                sup.append(np.max(np.abs(dev)))
            else:
                sup.append(np.max(np.abs(p.derivs[q - 1])))
        sup = np.array(sup)
        fit = loglog_fit(eps, sup)
        target = q + 1
        q_ok = bool(abs(fit["exponent"] - target) <= exponent_tol * target and fit["r2"] >= r2_min)
        ok = ok and q_ok
        per_q[q] = {"exponent": fit["exponent"], "target": target, "r2": fit["r2"],
                    "constant": float(np.max(sup / eps**target)), "ok": q_ok, "sup": sup.tolist()}
    l2 = np.array([np.sqrt(np.sum(p.derivs[0] ** 2) * p.dx) for p in profiles])
    l2_fit = loglog_fit(eps, l2)
    tail_r2 = [min(p.tail_fits["minus"]["r2"], p.tail_fits["plus"]["r2"]) for p in profiles]
    tails_ok = bool(min(tail_r2) >= r2_min)
    theta = [p.decay_rate / p.shock.epsilon for p in profiles]
    return {
        "rates_ok": bool(ok and tails_ok),
        "fitted_theta": float(np.mean(theta)),
        "theta_per_profile": theta,
        "per_q_constants": {q: d["constant"] for q, d in per_q.items()},
        "per_q": per_q,
        "l2_derivative": {"exponent": l2_fit["exponent"], "target": 1.5, "r2": l2_fit["r2"],
                          "constant": float(np.max(l2 / eps**1.5))},
        "tail_r2_min": float(min(tail_r2)),
        "tails_ok": tails_ok,
        "epsilons": eps.tolist(),
    }


# -- persistence ---------------------------------------------------------------

def save_profile(profile: ShockProfile, path: str | Path, manifest: str = "") -> tuple[Path, Path]:
    """Write ``<path>.csv`` (grid values and derivatives) and ``<path>.json`` metadata."""
    path = Path(path)
    csv_path = path.with_suffix(".csv")
    json_path = path.with_suffix(".json")
    n = profile.values.shape[1]
    header = ["x"] + [f"U{i + 1}" for i in range(n)]
    for q in range(1, 5):
        header += [f"d{q}U{i + 1}" for i in range(n)]
    data = np.column_stack([profile.grid, profile.values, *profile.derivs])
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        if manifest:
            fh.write(f"# manifest={manifest}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in data:
            w.writerow(["%.17g" % v for v in row])
    meta = profile.metadata()
    if manifest:
        meta["config_sha256"] = manifest
    json_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, json_path


def load_profile_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    header = lines[0].strip().split(",")
    data = np.array([[float(v) for v in ln.strip().split(",")] for ln in lines[1:]])
    return header, data
