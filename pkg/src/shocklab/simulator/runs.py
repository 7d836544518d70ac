"""Nonlinear and linearized evolution around a viscous shock profile."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from ..errors import ConfigError, SimulationError
from ..kernel import KernelDecomposition, build_kernel
from ..model import SystemDefinition
from ..profile import ShockProfile, _d5
from ..structure import find_compensator
from .delta import RestState, extract_delta
from .energy import energy_monitor
from .fields import derivatives, lp_norms, shift_field, sobolev_norm
from .rates import fit_decay_rates
from .scheme import Discretization, linear_rk3_step, ssp_rk3_step, steady_correction

__all__ = ["SimConfig", "SimulationResult", "build_rest_state", "initial_perturbation", "zeta0_norm",
           "integrate_nonlinear", "integrate_linearized"]

PERTURBATION_DEFAULTS = {"kind": "gaussian", "zeta0": 1e-3, "width": 2.0, "center": 0.0,
                         "direction": None, "h": None}


@dataclass
class SimConfig:
    """Run parameters.  ``perturbation`` keys: kind (gaussian, translate, zero,
    derivative), zeta0, width, center, direction, h."""

    profile: ShockProfile | None = None
    T: float = 200.0
    dt_out: float = 0.5
    c_h: float = 0.8
    c_p: float = 0.9
    dt: float | None = None
    perturbation: dict = field(default_factory=dict)
    U0: np.ndarray | None = None
    delta_method: str = "both"
    norm_shift: str = "projection"
    energy_M: float = 1.0
    energy_theta_factor: float = 0.1
    snapshot_stride: int = 0
    picard_tol: float = 1e-8
    picard_max_iter: int = 50
    blowup_factor: float = 10.0
    fit_window: tuple = (0.1, 1.0)
    min_horizon: float = 100.0
    seed: int = 0
    analyze: bool = True

    @classmethod
    def from_dict(cls, d: dict | None, profile: ShockProfile | None = None) -> "SimConfig":
        d = dict(d or {})
        names = {f.name for f in dc_fields(cls)} - {"profile", "U0"}
        extra = set(d) - names
        if extra:
            raise ConfigError(f"unknown simulation keys: {sorted(extra)}")
        if "fit_window" in d:
            d["fit_window"] = tuple(d["fit_window"])
        cfg = cls(profile=profile, **d)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.T <= 0 or self.dt_out <= 0 or self.dt_out > self.T:
            raise ConfigError("need 0 < dt_out <= T")
        if self.delta_method not in ("projection", "fit", "both"):
            raise ConfigError(f"unknown delta method {self.delta_method!r}")
        if self.norm_shift not in ("projection", "fit"):
            raise ConfigError(f"unknown norm shift {self.norm_shift!r}")
        extra = set(self.perturbation) - set(PERTURBATION_DEFAULTS)
        if extra:
            raise ConfigError(f"unknown perturbation keys: {sorted(extra)}")
        kind = self.perturbation.get("kind", "gaussian")
        if kind not in ("gaussian", "translate", "zero", "derivative"):
            raise ConfigError(f"unknown perturbation kind {kind!r}")

    def pert(self) -> dict:
        p = dict(PERTURBATION_DEFAULTS)
        p.update(self.perturbation)
        return p

    def to_dict(self) -> dict:
        out = {}
        for f in dc_fields(self):
            if f.name in ("profile", "U0"):
                continue
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


@dataclass
class SimulationResult:
    kind: str
    x: np.ndarray
    times: np.ndarray
    norms: dict
    delta: np.ndarray
    delta_dot: np.ndarray
    energy: np.ndarray
    zeta: np.ndarray
    zeta0: float
    fitted_exponents: dict
    mass_diagnostics: dict
    deltas: dict = field(default_factory=dict)
    energy_report: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)
    fields: list = field(default_factory=list)

    COLUMNS = ("t", "L1", "L2", "Linf", "vx_L2", "vx_Linf", "H2", "delta", "delta_dot", "energy", "zeta")

    def table(self) -> np.ndarray:
        cols = [self.times] + [self.norms[c] for c in self.COLUMNS[1:7]]
        cols += [self.delta, self.delta_dot, self.energy, self.zeta]
        return np.column_stack(cols)

    def summary(self) -> dict:
        out = {"kind": self.kind, "zeta0": self.zeta0, "T": float(self.times[-1]),
               "samples": int(self.times.size), "fitted_exponents": self.fitted_exponents,
               "sup_delta": float(np.max(np.abs(self.delta))), "final_delta": float(self.delta[-1]),
               "sup_zeta": float(self.zeta[-1]) if self.zeta.size else 0.0,
               "mass_diagnostics": self.mass_diagnostics, "diagnostics": self.diagnostics}
        if self.energy_report:
            out["energy"] = {k: v for k, v in self.energy_report.items() if not isinstance(v, np.ndarray)}
        if "fit" in self.deltas and "projection" in self.deltas:
            dp, dfit = self.deltas["projection"].delta, self.deltas["fit"].delta
            out["delta_agreement"] = {"sup_diff": float(np.max(np.abs(dp - dfit))),
                                      "sup_fit": float(np.max(np.abs(dfit)))}
        return out


# -- setup ---------------------------------------------------------------------------

def build_rest_state(sys: SystemDefinition, profile: ShockProfile,
                     kd: KernelDecomposition | None = None) -> tuple[RestState, Discretization]:
    """Comoving discretization and its exact discrete rest state near the profile."""
    sysc = sys.comoving(profile.shock.s)
    x = profile.grid
    q0 = sysc.eval_G(profile.values)
    lam = np.linalg.eigvals(np.linalg.solve(sysc.jac_G(profile.values), sysc.jac_F(profile.values)))
    alpha = 1.05 * float(np.max(np.abs(lam)))
    disc = Discretization(sysc, x, q0[0], q0[-1], alpha)
    q, _, info = steady_correction(disc, q0, _d5(q0, profile.dx))
    U = sysc.G_inverse(q)
    if kd is None:
        from ..kernel import linear_coefficients
        co = linear_coefficients(sys, profile)
    else:
        co = kd.coeffs
    width = 1.0 / max(profile.decay_rate, 1e-12)
    info["profile_shift"] = float(np.max(np.abs(q - q0)))
    rest = RestState(sysc, x, U, q, _d5(U, profile.dx), sysc.jac_G(U), co.A_G, co.B_G,
                     float(min(width, 0.1 * (x[-1] - x[0]))), info)
    return rest, disc


def zeta0_norm(U0: np.ndarray, dx: float) -> float:
    """``|U0|_L1 + |U0|_H3`` with Euclidean pointwise norms."""
    L1, _, _ = lp_norms(U0, dx)
    return L1 + sobolev_norm(derivatives(U0, dx, 3), dx, 3)


def initial_perturbation(rest: RestState, pert: dict, seed: int = 0) -> np.ndarray:
    """Gridded ``U0`` for the named perturbation family."""
    x, n = rest.x, rest.U.shape[1]
    kind = pert["kind"]
    if kind == "zero":
        return np.zeros_like(rest.U)
    if kind == "translate":
        h = pert["h"] if pert["h"] is not None else 1e-3 * rest.width
        return shift_field(x, rest.U, float(h)) - rest.U
    if kind == "derivative":
        U0 = rest.Ux / np.max(np.abs(rest.Ux))
        return U0 * pert["zeta0"] / zeta0_norm(U0, rest.dx)
    d = pert["direction"]
    if d is None:
        d = np.eye(n)[0]
    elif isinstance(d, str) and d == "random":
        d = np.random.default_rng(seed).standard_normal(n)
    d = np.asarray(d, float)
    if d.shape != (n,) or not np.any(d):
        raise ConfigError("perturbation direction must be a nonzero vector of length n")
    d = d / np.linalg.norm(d)
    g = np.exp(-0.5 * ((x - pert["center"]) / pert["width"]) ** 2)
    U0 = g[:, None] * d
    return U0 * pert["zeta0"] / zeta0_norm(U0, rest.dx)


def _check_support(x: np.ndarray, U0: np.ndarray) -> None:
    a = np.max(np.abs(U0), axis=1)
    if not np.any(a):
        return
    sup = x[a > 1e-10 * a.max()]
    L = x[-1] - x[0]
    if sup.min() < x[0] + 0.1 * L or sup.max() > x[-1] - 0.1 * L:
        raise SimulationError("perturbation support must stay inside the domain with a 10% margin")


def _time_lattice(cfg: SimConfig, dt_max: float) -> tuple[np.ndarray, int, float]:
    if cfg.dt is not None:
        if cfg.dt > dt_max * (1 + 1e-12):
            raise SimulationError(f"CFL violation: dt={cfg.dt:.4g} exceeds the stable limit {dt_max:.4g}")
        dt_lim = cfg.dt
    else:
        dt_lim = dt_max
    nsub = int(np.ceil(cfg.dt_out / dt_lim - 1e-12))
    nout = int(round(cfg.T / cfg.dt_out))
    times = cfg.dt_out * np.arange(nout + 1)
    return times, nsub, cfg.dt_out / nsub


# -- evolution -------------------------------------------------------------------------

def integrate_nonlinear(sys: SystemDefinition, config: SimConfig,
                        kd: KernelDecomposition | None = None) -> SimulationResult:
    """Evolve the full system from ``U* + U0`` and analyse the perturbation.

    Raises
    ------
    SimulationError
        On a CFL violation, blow-up, or conservation failure.
    """
    prof = config.profile
    if prof is None:
        raise ConfigError("simulation config needs a profile")
    needs_kernel = config.delta_method in ("projection", "both")
    if kd is None and needs_kernel:
        kd = build_kernel(sys, prof)
    rest, disc = build_rest_state(sys, prof, kd)
    U0 = config.U0 if config.U0 is not None else initial_perturbation(rest, config.pert(), config.seed)
    if config.pert()["kind"] not in ("translate", "derivative"):
        _check_support(rest.x, U0)
    z0 = zeta0_norm(U0, rest.dx)
    if z0 > 0.1:
        warnings.warn(f"zeta0 = {z0:.3g} is outside the small-perturbation regime", RuntimeWarning)
    q = rest.sys.eval_G(rest.U + U0)
    dt_max = min(disc.max_dt(rest.q, config.c_h, config.c_p), disc.max_dt(q, config.c_h, config.c_p))
    times, nsub, dt = _time_lattice(config, dt_max)
    bound = config.blowup_factor * max(float(np.max(np.abs(U0))), 1e-12)
    dx = rest.dx
    mass = np.sum(q[1:-1], axis=0) * dx
    mass0 = mass.tolist()
    scale = max(float(np.max(np.abs(mass))), 1.0)
    worst = 0.0
    snaps = [rest.sys.G_inverse(q)]
    for m in range(1, times.size):
        for _ in range(nsub):
            q, bflux = ssp_rk3_step(disc, q, dt)
            new_mass = np.sum(q[1:-1], axis=0) * dx
            forcing = dt * np.sum(disc.forcing[1:-1], axis=0) * dx if disc.forcing is not None else 0.0
            worst = max(worst, float(np.max(np.abs(new_mass - mass + bflux - forcing))) / scale)
            mass = new_mass
        U = rest.sys.G_inverse(q)
        dev = float(np.max(np.abs(U - rest.U)))
        if not np.isfinite(dev) or dev > bound:
            raise SimulationError(f"blow-up at t={times[m]:.4g}: |U - Ubar|_inf = {dev:.3e} > {bound:.3e}")
        snaps.append(U)
    if worst > 1e-8:
        raise SimulationError(f"conservation defect {worst:.3e} per step exceeds 1e-8")
    mass_diag = {"max_step_defect": worst, "dt": dt, "substeps": nsub, "initial_mass": mass0,
                 "steady_sigma": rest.info["sigma"], "steady_residual": rest.info["final_residual"]}
    G0 = rest.sys.eval_G(rest.U + U0) - rest.q
    res = _analyze_nonlinear(rest, kd, times, snaps, G0, U0, z0, config)
    res.mass_diagnostics = mass_diag
    return res


def _analyze_nonlinear(rest, kd, times, snaps, G0, U0, z0, cfg: SimConfig) -> SimulationResult:
    deltas = extract_delta(rest, kd, times, snaps, G0, cfg.delta_method, tol=cfg.picard_tol,
                           max_iter=cfg.picard_max_iter)
    key = cfg.norm_shift if cfg.norm_shift in deltas else next(iter(deltas))
    delta, ddot = deltas[key].delta, deltas[key].delta_dot
    if not cfg.analyze:
        shifted = []
    else:
        shifted = [shift_field(rest.x, U, d) - rest.U for U, d in zip(snaps, delta)]
    norms = _norm_series(shifted, rest.dx, rest.U.shape[1] - rest.sys.r)
    z = _zeta(times, norms, delta, ddot)
    K = find_compensator(rest.sys, seed=cfg.seed)
    erep = energy_monitor(rest.A0, K["K"], times, shifted, ddot, rest.dx, rest.sys.n - rest.sys.r,
                          M=cfg.energy_M, theta=cfg.energy_theta_factor * K["theta"])
    series = dict(norms)
    series["delta_dot"] = np.abs(ddot)
    fits = fit_decay_rates(times, series, cfg.fit_window, cfg.min_horizon, strict=False)
    diag = {k: v.diagnostics for k, v in deltas.items()}
    diag["norm_shift"] = key
    diag["compensator_theta"] = K["theta"]
    snapshots = snaps[:: cfg.snapshot_stride] if cfg.snapshot_stride else []
    return SimulationResult("nonlinear", rest.x, times, norms, delta, ddot, erep["energy"], z, z0, fits, {},
                            deltas, erep, diag, snapshots, shifted)


def _norm_series(fields: list[np.ndarray], dx: float, k: int) -> dict:
    keys = ("L1", "L2", "Linf", "vx_L2", "vx_Linf", "H2", "W2inf", "H3")
    out = {c: np.zeros(len(fields)) for c in keys}
    for m, U in enumerate(fields):
        der = derivatives(U, dx, 3)
        out["L1"][m], out["L2"][m], out["Linf"][m] = lp_norms(U, dx)
        _, out["vx_L2"][m], out["vx_Linf"][m] = lp_norms(der[1][:, k:], dx)
        out["H2"][m] = sobolev_norm(der, dx, 2)
        out["H3"][m] = sobolev_norm(der, dx, 3)
        out["W2inf"][m] = max(float(np.max(np.abs(d))) for d in der[:3])
    return out


def _zeta(times, norms, delta, ddot) -> np.ndarray:
    w = 1.0 + times
    inst = np.maximum((norms["L2"] + norms["vx_L2"]) * w**0.25, (norms["Linf"] + norms["vx_Linf"]) * w**0.5)
    inst = inst + np.abs(ddot) * w**0.5 + np.abs(delta) + norms["H2"] + norms["W2inf"]
    return np.maximum.accumulate(inst) if inst.size else inst


def integrate_linearized(sys: SystemDefinition, profile: ShockProfile, G0: np.ndarray | None = None,
                         config: SimConfig | None = None, kd: KernelDecomposition | None = None,
                         record: list | None = None) -> SimulationResult:
    """Evolve ``G_t = L_G G`` with the scheme's Jacobian at the discrete rest state.

    The recorded norms are those of ``G - phi`` with ``phi(x, t) = G'(x) int e(y, t) G0 dy``.
    ``record`` optionally lists output times whose full fields are kept in ``result.snapshots``.
    """
    cfg = config or SimConfig(profile=profile)
    if kd is None:
        kd = build_kernel(sys, profile)
    rest, disc = build_rest_state(sys, profile, kd)
    if G0 is None:
        U0 = initial_perturbation(rest, cfg.pert(), cfg.seed)
        G0 = (rest.A0 @ U0[..., None])[..., 0]
    G0 = np.asarray(G0, float)
    if cfg.pert()["kind"] != "derivative":
        _check_support(rest.x, G0)
    J = disc.jacobian(rest.q)
    times, nsub, dt = _time_lattice(cfg, disc.max_dt(rest.q, cfg.c_h, cfg.c_p))
    shape = G0.shape
    g = G0.ravel().copy()
    fields_ = [G0.copy()]
    keep = set(np.round(np.asarray(record or [], float) / cfg.dt_out).astype(int))
    kept = {0: G0.copy()} if 0 in keep else {}
    mass = [float(np.sum(G0) * rest.dx)]
    for m in range(1, times.size):
        for _ in range(nsub):
            g = linear_rk3_step(J, g, dt)
        Gm = g.reshape(shape)
        if not np.all(np.isfinite(Gm)):
            raise SimulationError(f"linear run blew up at t={times[m]:.4g}")
        fields_.append(Gm.copy())
        mass.append(float(np.sum(Gm) * rest.dx))
        if m in keep:
            kept[m] = Gm.copy()
    deltas = extract_delta(rest, kd, times, fields_, G0, "projection", linear=True)
    delta, ddot = deltas["projection"].delta, deltas["projection"].delta_dot
    gp = kd.Gbar_prime
    resid = [G - (-d) * gp for G, d in zip(fields_, delta)]
    norms = _norm_series(resid, rest.dx, rest.sys.n - rest.sys.r)
    fits = fit_decay_rates(times, norms, cfg.fit_window, cfg.min_horizon, strict=False)
    drift = [float(np.max(np.abs(G - G0))) for G in fields_]
    diag = {"drift": drift, "jacobian_nnz": int(J.nnz),
            "drift_per_time": float(max(d / t for d, t in zip(drift[1:], times[1:]))) if times.size > 1 else 0.0}
    mdiag = {"mass": mass, "dt": dt, "substeps": nsub}
    z0 = zeta0_norm(G0, rest.dx)
    res = SimulationResult("linear", rest.x, times, norms, delta, ddot, np.zeros(times.size),
                           np.zeros(times.size), z0, fits, mdiag, deltas, {}, diag,
                           [kept[k] for k in sorted(kept)], [])
    res.diagnostics["kept_times"] = [float(times[k]) for k in sorted(kept)]
    return res
