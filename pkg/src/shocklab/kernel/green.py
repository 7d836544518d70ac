"""Evaluators for the hyperbolic, excited and scattering parts of the Green's function.

Conventions (comoving frame, shock at ``x = 0``):

* ``errfn(z) = (1 + erf z) / 2``.
* For ``y <= 0`` the excited window of an incoming left family ``k``
  (``a_k^- > 0``) is ``errfn((y + a t)/sqrt(4 beta t)) - errfn((y - a t)/sqrt(4 beta t))``;
  for ``y > 0`` the mirror image with an incoming right family (``a_k^+ < 0``).
* ``e(y, t) = sum_k c0_k l_k window_k(y, t)`` so that ``E = G'(x) e(y, t)``.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.special import erf

from ..errors import KernelError
from ..model import SystemDefinition
from ..profile import ShockProfile, _d5
from .modes import (EndpointModes, HyperbolicModes, LinearCoefficients, diffusion_rate_oracle,
                    endpoint_modes, hyperbolic_modes, linear_coefficients)
from .scattering import ScatteringData, scattering_coefficients

log = logging.getLogger(__name__)

__all__ = [
    "KernelDecomposition",
    "build_kernel",
    "errfn",
    "heat_kernel",
]


def errfn(z):
    return 0.5 * (1.0 + erf(z))


def heat_kernel(z, t, beta, order: int = 0):
    """``K = exp(-z^2/4 beta t)/sqrt(4 pi beta t)`` and its first two z-derivatives."""
    z = np.asarray(z, float)
    t = np.asarray(t, float)
    K = np.exp(-z * z / (4 * beta * t)) / np.sqrt(4 * np.pi * beta * t)
    if order == 0:
        return K
    if order == 1:
        return -z / (2 * beta * t) * K
    if order == 2:
        return (z * z / (4 * beta * beta * t * t) - 1.0 / (2 * beta * t)) * K
    raise ValueError("order must be 0, 1 or 2")


def _cut_plus(x):
    x = np.asarray(x, float)
    return 0.5 * (1.0 + np.tanh(x))


def _cut_minus(x):
    x = np.asarray(x, float)
    return 0.5 * (1.0 - np.tanh(x))


@dataclass
class KernelDecomposition:
    """All Green's-function ingredients for one profile."""

    sys: SystemDefinition
    profile: ShockProfile
    minus: EndpointModes
    plus: EndpointModes
    hyperbolic: HyperbolicModes
    scattering: ScatteringData
    coeffs: LinearCoefficients
    Gbar_prime: np.ndarray
    beta_floor: float = 1e-8
    checks: dict = field(default_factory=dict)

    # -- incoming families ----------------------------------------------------
    def _families(self):
        """(y-side sign, speed magnitude c, beta, weight vector c0 l) per incoming family."""
        fam = []
        for k in np.flatnonzero(self.minus.a > 0):
            fam.append((-1, float(self.minus.a[k]), float(self.minus.beta[k]),
                        self.scattering.c_excited["minus"][k] * self.minus.l[:, k]))
        for k in np.flatnonzero(self.plus.a < 0):
            fam.append((+1, float(-self.plus.a[k]), float(self.plus.beta[k]),
                        self.scattering.c_excited["plus"][k] * self.plus.l[:, k]))
        return fam

    # -- excited kernel ----------------------------------------------------------
    def eval_e(self, y, t) -> np.ndarray:
        """``e(y, t)``, shape ``broadcast(y, t) + (n,)``."""
        y, t = np.broadcast_arrays(np.asarray(y, float), np.asarray(t, float))
        if np.any(t <= 0):
            raise KernelError("e(y, t) requires t > 0")
        out = np.zeros(y.shape + (self.sys.n,))
        for side, c, beta, wvec in self._families():
            mask = (y <= 0) if side < 0 else (y > 0)
            d = np.abs(y)
            sq = np.sqrt(4 * beta * t)
            w = errfn((c * t - d) / sq) - errfn((-c * t - d) / sq)
            out += np.where(mask, w, 0.0)[..., None] * wvec
        return out

    def eval_e_derivs(self, y, t) -> dict:
        """Closed-form ``e_y``, ``e_t``, ``e_ty`` from heat kernels."""
        y, t = np.broadcast_arrays(np.asarray(y, float), np.asarray(t, float))
        if np.any(t <= 0):
            raise KernelError("e derivatives require t > 0")
        n = self.sys.n
        ey = np.zeros(y.shape + (n,))
        et = np.zeros_like(ey)
        ety = np.zeros_like(ey)
        for side, c, beta, wvec in self._families():
            mask = (y <= 0) if side < 0 else (y > 0)
            if side < 0:
                zp, zm = y + c * t, y - c * t
                sgn = 1.0
            else:
                zp, zm = -y + c * t, -y - c * t
                sgn = -1.0
            K = lambda z, o=0: heat_kernel(z, t, beta, o)
            wy = sgn * (K(zp) - K(zm))
            wt = c * (K(zp) + K(zm)) + beta * (K(zp, 1) - K(zm, 1))
            wty = sgn * (c * (K(zp, 1) + K(zm, 1)) + beta * (K(zp, 2) - K(zm, 2)))
            ey += np.where(mask, wy, 0.0)[..., None] * wvec
            et += np.where(mask, wt, 0.0)[..., None] * wvec
            ety += np.where(mask, wty, 0.0)[..., None] * wvec
        return {"e_y": ey, "e_t": et, "e_ty": ety}

    def e_t_initial_weight(self) -> np.ndarray:
        """Limit of ``int e_t(y, t) f(y) dy`` as ``t -> 0+`` equals ``w . f(0)``."""
        return sum((c * wvec for _, c, _, wvec in self._families()), np.zeros(self.sys.n))

    def gbar_prime(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        spline = CubicSpline(self.profile.grid, self.Gbar_prime, axis=0)
        out = spline(np.clip(x, self.profile.grid[0], self.profile.grid[-1]))
        out[(x < self.profile.grid[0]) | (x > self.profile.grid[-1])] = 0.0
        return out

    def eval_E(self, x, t, y) -> np.ndarray:
        """``E(x, t; y) = G'(x) e(y, t)`` as an n-by-n matrix (batched)."""
        gp = self.gbar_prime(x)
        e = self.eval_e(y, t)
        return gp[..., :, None] * e[..., None, :]

    # -- scattering term -----------------------------------------------------------
    def eval_S(self, x, t, y) -> np.ndarray:
        """Gaussian scattering term, zero for ``t < 1``; batched over broadcast inputs."""
        x, t, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float), np.asarray(y, float))
        n = self.sys.n
        out = np.zeros(x.shape + (n, n))
        active = t >= 1.0
        if not np.any(active):
            return out
        ts = np.where(active, t, 1.0)
        floor = self.beta_floor * max(np.max(self.minus.beta), np.max(self.plus.beta))
        for side_in, inc, other in (("minus", self.minus, self.plus), ("plus", self.plus, self.minus)):
            ymask = (y <= 0) if side_in == "minus" else (y > 0)
            m = active & ymask
            if not np.any(m):
                continue
            sgn_in = 1.0 if side_in == "minus" else -1.0
            for k in range(n):
                ak, bk = inc.a[k], inc.beta[k]
                rk_lk = np.outer(inc.r[:, k], inc.l[:, k])
                g = heat_kernel(x - y - ak * ts, ts, bk)
                if sgn_in * ak < 0:
                    # outgoing on the incoming side: direct transmission
                    out += np.where(m, g, 0.0)[..., None, None] * rk_lk
                    continue
                cut_in = _cut_minus(x) if side_in == "minus" else _cut_plus(x)
                out += np.where(m, g * cut_in, 0.0)[..., None, None] * rk_lk
                tau = np.abs(y) / abs(ak)
                for side_out, modes in (("minus", self.minus), ("plus", self.plus)):
                    for j in range(n):
                        aj = modes.a[j]
                        if (side_out == "minus" and aj >= 0) or (side_out == "plus" and aj <= 0):
                            continue
                        coef = self.scattering.c_out[(k, j, side_out, side_in)]
                        if coef == 0.0:
                            continue
                        z = aj * (ts - tau)
                        xpart = np.maximum(-x, 0.0) if side_out == "minus" else np.maximum(x, 0.0)
                        bbar = (xpart / abs(aj * ts)) * modes.beta[j] + \
                            (np.abs(y) / abs(ak * ts)) * (aj / ak) ** 2 * bk
                        bbar = np.maximum(bbar, floor)
                        gj = np.exp(-(x - z) ** 2 / (4 * bbar * ts)) / np.sqrt(4 * np.pi * bbar * ts)
                        cut = _cut_minus(x) if side_out == "minus" else _cut_plus(x)
                        out += np.where(m, coef * gj * cut, 0.0)[..., None, None] * \
                            np.outer(modes.r[:, j], inc.l[:, k])
        return out

    def apply_S(self, f: np.ndarray, t: float, x=None) -> np.ndarray:
        """``int S(x, t; y) f(y) dy`` by quadrature on the profile grid."""
        y = self.profile.grid
        xs = y if x is None else np.asarray(x, float)
        dy = self.profile.dx
        out = np.zeros((xs.size, self.sys.n))
        nz = np.flatnonzero(np.max(np.abs(f), axis=1) > 0)
        for i in nz:
            S = self.eval_S(xs, t, y[i])
            out += (S @ f[i]) * dy
        return out

    # -- hyperbolic term -------------------------------------------------------------
    def apply_H(self, f: np.ndarray, t: float, x=None, rtol: float = 1e-9,
                atol: float = 1e-12) -> tuple[np.ndarray, dict]:
        """Transport ``f`` along the hyperbolic characteristics with dissipative damping.

        Returns the values at ``x`` (default: the grid) and a diagnostics dict
        with the dropped mass when foot points leave the grid.
        """
        grid = self.profile.grid
        xs = grid if x is None else np.asarray(x, float)
        f = np.asarray(f, float)
        hm = self.hyperbolic
        n = self.sys.n
        out = np.zeros((xs.size, n))
        dropped = 0.0
        lo, hi = grid[0], grid[-1]
        for j in range(hm.J):
            m = hm.multiplicities[j]
            a_sp = CubicSpline(grid, hm.a_star[j])
            da_sp = CubicSpline(grid, _d5(hm.a_star[j], self.profile.dx))
            eta = hm.eta_star[j] if m > 1 else hm.eta_oracle[j][:, :, None]
            eta_sp = CubicSpline(grid, eta.reshape(grid.size, -1), axis=0)
            N = xs.size
            if t == 0:
                foot = xs.copy()
                Phi = np.broadcast_to(np.eye(m), (N, m, m)).copy()
                logJ = np.zeros(N)
            else:
                def rhs(_tau, yv):
                    Z = np.clip(yv[:N], lo, hi)
                    Ph = yv[N:N + N * m * m].reshape(N, m, m)
                    et = eta_sp(Z).reshape(N, m, m)
                    dZ = -a_sp(Z)
                    dPh = -(Ph @ et)
                    dl = -da_sp(Z)
                    return np.concatenate([dZ, dPh.ravel(), dl])
                y0 = np.concatenate([xs, np.broadcast_to(np.eye(m), (N, m, m)).ravel(), np.zeros(N)])
                sol = solve_ivp(rhs, (0.0, t), y0, method="RK45", rtol=rtol, atol=atol)
                if not sol.success:
                    raise KernelError(f"characteristic flow integration failed: {sol.message}")
                yv = sol.y[:, -1]
                foot = yv[:N]
                Phi = yv[N:N + N * m * m].reshape(N, m, m)
                logJ = yv[N + N * m * m:]
            inside = (foot >= lo) & (foot <= hi)
            fy = np.stack([np.interp(foot, grid, f[:, i]) for i in range(n)], axis=1)
            calL = hm.calL[j]
            Ly = np.stack([np.stack([np.interp(foot, grid, calL[:, a, b]) for b in range(m)], axis=-1)
                           for a in range(n)], axis=1)
            calR = hm.calR[j]
            Rx = np.stack([np.stack([np.interp(xs, grid, calR[:, a, b]) for b in range(m)], axis=-1)
                           for a in range(n)], axis=1)
            proj = np.einsum("na,nab->nb", fy, Ly)
            vals = np.einsum("nab,nb->na", Rx, np.einsum("nbc,nc->nb", Phi, proj)) * np.exp(logJ)[:, None]
            if x is None:
                dropped += float(np.sum(np.abs(vals[~inside])) * self.profile.dx)
            vals[~inside] = 0.0
            out += vals
        return out, {"mass_loss": dropped}

    # -- checks and reports -----------------------------------------------------------
    def run_checks(self) -> dict:
        hm = self.hyperbolic
        s = self.profile.shock.s
        oracle = []
        for modes in (self.minus, self.plus):
            for j in range(self.sys.n):
                b = diffusion_rate_oracle(self.sys, modes.state, j + 1, s=s)
                oracle.append(abs(b - modes.beta[j]))
        sym2_eta = float(np.max(np.abs(np.concatenate([o.ravel() for o in hm.eta_oracle]) - 1.0)))
        res = {
            "beta_minus": self.minus.beta.tolist(),
            "beta_plus": self.plus.beta.tolist(),
            "beta_positive": bool(np.all(self.minus.beta > 0) and np.all(self.plus.beta > 0)),
            "beta_oracle_max_gap": float(max(oracle)),
            "eta_positive": bool(hm.diagnostics["min_eta_oracle"] > 0
                                 and hm.diagnostics["min_re_eta_closed_form"] > 0),
            "eta_oracle_min": hm.diagnostics["min_eta_oracle"],
            "eta_oracle_max": float(max(np.max(o) for o in hm.eta_oracle)),
            "eta_oracle_max_deviation_from_one": sym2_eta,
            "eta_oracle_vs_closed_form": hm.diagnostics["eta_oracle_vs_closed_form"],
            "eta_printed_form_mean": hm.diagnostics["eta_printed_form_mean"],
            "scattering_residual": self.scattering.residual,
            "pi_mismatch": self.scattering.pi_mismatch,
            "lemma_projection_residual": hm.diagnostics["lemma_projection_residual"],
            "static_normalization_residual": hm.diagnostics["static_normalization_residual"],
            "dynamical_normalization_residual": hm.diagnostics["dynamical_normalization_residual"],
            "endpoint_residuals": {"minus": self.minus.residuals(), "plus": self.plus.residuals()},
        }
        self.checks = res
        return res

    def report(self) -> dict:
        checks = self.checks or self.run_checks()
        hm = self.hyperbolic
        return {
            "shock": self.profile.shock.to_dict(),
            "a_minus": self.minus.a.tolist(), "a_plus": self.plus.a.tolist(),
            "beta_minus": self.minus.beta.tolist(), "beta_plus": self.plus.beta.tolist(),
            "r_minus": self.minus.r.tolist(), "r_plus": self.plus.r.tolist(),
            "l_minus": self.minus.l.tolist(), "l_plus": self.plus.l.tolist(),
            "hyperbolic": {
                "J": hm.J, "multiplicities": list(hm.multiplicities),
                "a_star_range": [[float(np.min(a)), float(np.max(a))] for a in hm.a_star],
                "eta_star_range": [[float(np.min(o)), float(np.max(o))] for o in hm.eta_oracle],
            },
            "scattering": self.scattering.table(),
            "c_excited": {k: v.tolist() for k, v in self.scattering.c_excited.items()},
            "pi": self.scattering.pi.tolist(),
            "checks": checks,
        }

    def dump_e(self, path: str | Path, y: np.ndarray, t: np.ndarray, manifest: str = "") -> Path:
        """CSV of ``e``, ``e_y``, ``e_t``, ``e_ty`` on the ``(y, t)`` lattice."""
        path = Path(path)
        Y, T = np.meshgrid(np.asarray(y, float), np.asarray(t, float), indexing="ij")
        e = self.eval_e(Y, T)
        d = self.eval_e_derivs(Y, T)
        n = self.sys.n
        header = ["y", "t"] + [f"e{i+1}" for i in range(n)] + [f"e_y{i+1}" for i in range(n)] + \
            [f"e_t{i+1}" for i in range(n)] + [f"e_ty{i+1}" for i in range(n)]
        cols = [Y.ravel(), T.ravel()]
        for arr in (e, d["e_y"], d["e_t"], d["e_ty"]):
            cols += [arr[..., i].ravel() for i in range(n)]
        data = np.column_stack(cols)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if manifest:
                fh.write(f"# manifest={manifest}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in data:
                w.writerow(["%.17g" % v for v in row])
        return path

    # -- e-kernel rate studies -------------------------------------------------------------
    def e_sup_norms(self, t: np.ndarray, n_y: int = 4001) -> dict:
        """``sup_y`` of ``|e_y|``, ``|e_t|``, ``|e_ty|`` at each time on an adaptive y-lattice."""
        fam = self._families()
        cmax = max(c for _, c, _, _ in fam)
        bmax = max(b for _, _, b, _ in fam)
        out = {"t": np.asarray(t, float), "e_y": [], "e_t": [], "e_ty": []}
        for tt in out["t"]:
            span = cmax * tt + 12 * np.sqrt(bmax * tt)
            y = np.linspace(-span, span, n_y)
            d = self.eval_e_derivs(y, tt)
            for key in ("e_y", "e_t", "e_ty"):
                out[key].append(float(np.max(np.linalg.norm(d[key], axis=-1))))
        for key in ("e_y", "e_t", "e_ty"):
            out[key] = np.array(out[key])
        return out

    def gaussian_domination(self, n_samples: int = 10_000, seed: int = 0, M: float | None = None,
                            t_range=(1.0, 100.0), tol: float = 0.05) -> dict:
        """Pointwise bounds ``|e_y|, |e_t| <= C t^-1/2 g`` and ``|e_ty| <= C t^-1 g``.

        ``g = sum_k exp(-(y + a_k t)^2 / (M t))`` over the incoming families of
        the side of ``y``.  The bound is declared to hold when the constant
        needed on all samples does not exceed the constant needed in the core
        region ``|y + a t| <= 2 sqrt(M t)`` by more than the factor ``1 + tol``.
        """
        fam = self._families()
        bmax = max(max(self.minus.beta), max(self.plus.beta))
        M = 8.0 * bmax if M is None else M
        rng = np.random.default_rng(seed)
        t = np.exp(rng.uniform(np.log(t_range[0]), np.log(t_range[1]), n_samples))
        cmax = max(c for _, c, _, _ in fam)
        span = cmax * t + 6 * np.sqrt(M * t)
        y = rng.uniform(-1.0, 1.0, n_samples) * span
        d = self.eval_e_derivs(y, t)
        g = np.zeros(n_samples)
        core = np.zeros(n_samples, bool)
        for side, c, _, _ in fam:
            mask = (y <= 0) if side < 0 else (y > 0)
            z = np.abs(y) - c * t
            g += np.where(mask, np.exp(-z * z / (M * t)), 0.0)
            core |= mask & (np.abs(z) <= 2 * np.sqrt(M * t))
        res = {"M": M, "n_samples": n_samples}
        ok = True
        for key, power in (("e_y", 0.5), ("e_t", 0.5), ("e_ty", 1.0)):
            val = np.linalg.norm(d[key], axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(g > 0, val * t**power / g, np.where(val > 0, np.inf, 0.0))
            c_all = float(np.max(ratio))
            c_core = float(np.max(ratio[core])) if np.any(core) else float("nan")
            holds = bool(np.isfinite(c_all) and c_all <= c_core * (1 + tol))
            ok = ok and holds
            res[key] = {"C_all": c_all, "C_core": c_core, "holds": holds}
        res["holds"] = ok
        return res


def build_kernel(sys: SystemDefinition, profile: ShockProfile) -> KernelDecomposition:
    """Assemble endpoint modes, hyperbolic modes and scattering data for a profile."""
    minus = endpoint_modes(sys, profile, "minus")
    plus = endpoint_modes(sys, profile, "plus")
    coeffs = linear_coefficients(sys, profile)
    hm = hyperbolic_modes(sys, profile, coeffs)
    scat = scattering_coefficients(minus, plus, profile, profile.shock.p, sys=sys)
    gprime = np.einsum("xij,xj->xi", coeffs.A0, profile.derivs[0])
    kd = KernelDecomposition(sys, profile, minus, plus, hm, scat, coeffs, gprime)
    return kd


def save_kernel_report(kd: KernelDecomposition, path: str | Path, manifest: str = "") -> Path:
    rep = kd.report()
    if manifest:
        rep["config_sha256"] = manifest
    path = Path(path)
    path.write_text(json.dumps(rep, indent=2, sort_keys=True, default=float) + "\n", encoding="utf-8")
    return path
