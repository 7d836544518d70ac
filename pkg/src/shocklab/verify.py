"""Acceptance suite: ten numbered criteria evaluated on the benchmark configuration.

Every criterion returns a :class:`CriterionResult` carrying the measured
quantities next to the tolerance they were judged against.  Expensive
intermediate objects (profiles, kernels, simulations) are computed lazily
and shared between criteria.
"""
from __future__ import annotations

import hashlib
import tempfile
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from ._numerics import loglog_fit
from .kernel import build_kernel
from .model import SystemDefinition, builtin_model
from .profile import GridConfig, compute_profile, shock_from_strength, validate_profile_decay
from .simulator import (DECAY_TARGETS, SimConfig, claim_check, greens_compare, integrate_linearized,
                        integrate_nonlinear, write_timeseries)
from .structure import check_hypotheses

__all__ = ["CriterionResult", "Benchmark", "AcceptanceSuite", "CRITERIA"]


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    measured: dict
    tolerance: str
    notes: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.id:2d} {self.name}"

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": self.passed, "measured": self.measured,
                "tolerance": self.tolerance, "notes": self.notes}


@dataclass
class Benchmark:
    """Benchmark parameters; the defaults are the reference configuration."""

    model: str = "SYM2"
    model_params: dict = field(default_factory=dict)
    p: int = 2
    epsilon: float = 0.1
    U_minus: list | None = None
    grid: dict = field(default_factory=lambda: {"M": 4001})
    simulation: dict = field(default_factory=dict)
    epsilon_sweep: tuple = (0.05, 0.1, 0.2)
    zeta0_sweep: tuple = (1e-4, 1e-3, 1e-2)
    seed: int = 0


def _within(val: float, target: float, tol: float) -> bool:
    return bool(np.isfinite(val) and abs(val - target) <= tol)


class AcceptanceSuite:
    """Lazily computed benchmark artifacts plus one method per criterion."""

    def __init__(self, bench: Benchmark | None = None):
        self.b = bench or Benchmark()

    # -- shared artifacts ----------------------------------------------------------
    @cached_property
    def sys(self) -> SystemDefinition:
        return builtin_model(self.b.model, self.b.model_params)

    def _profile(self, eps: float, grid: dict | None = None):
        Um = self.sys.base_point if self.b.U_minus is None else np.asarray(self.b.U_minus, float)
        sh = shock_from_strength(self.sys, Um, self.b.p, eps)
        return compute_profile(self.sys, sh, GridConfig.from_dict(grid or self.b.grid))

    @cached_property
    def profile(self):
        return self._profile(self.b.epsilon)

    @cached_property
    def kernel(self):
        kd = build_kernel(self.sys, self.profile)
        kd.run_checks()
        return kd

    def _sim_config(self, profile, **over) -> SimConfig:
        d = dict(self.b.simulation)
        d.setdefault("seed", self.b.seed)
        pert = dict(d.pop("perturbation", {}))
        pert.update(over.pop("perturbation", {}))
        d.update(over)
        return SimConfig.from_dict({**d, "perturbation": pert}, profile=profile)

    @cached_property
    def nonlinear(self):
        return integrate_nonlinear(self.sys, self._sim_config(self.profile), self.kernel)

    @property
    def translate_h(self) -> float:
        x = self.profile.grid
        return 1e-3 * min(1.0 / self.profile.decay_rate, 0.1 * (x[-1] - x[0]))

    @cached_property
    def translated(self):
        cfg = self._sim_config(self.profile, perturbation={"kind": "translate", "h": self.translate_h},
                               delta_method="both")
        return integrate_nonlinear(self.sys, cfg, self.kernel)

    @cached_property
    def linear(self):
        return integrate_linearized(self.sys, self.profile, config=self._sim_config(self.profile), kd=self.kernel)

    @cached_property
    def zero_mode(self):
        gp = self.kernel.Gbar_prime / np.max(np.abs(self.kernel.Gbar_prime))
        cfg = self._sim_config(self.profile, T=20.0, perturbation={"kind": "derivative"})
        return integrate_linearized(self.sys, self.profile, G0=gp, config=cfg, kd=self.kernel)

    @cached_property
    def greens(self):
        T = float(self._sim_config(self.profile).T)
        return greens_compare(self.sys, self.profile, self.kernel, T=T)

    @cached_property
    def zeta_sweep(self):
        runs = {}
        z_bench = self._sim_config(self.profile).pert()["zeta0"]
        for z in self.b.zeta0_sweep:
            if np.isclose(z, z_bench):
                runs[z] = self.nonlinear
            else:
                cfg = self._sim_config(self.profile, perturbation={"zeta0": z})
                runs[z] = integrate_nonlinear(self.sys, cfg, self.kernel)
        return runs

    @cached_property
    def refined(self):
        g = dict(self.b.grid)
        g["M"] = 2 * int(g.get("M", 4001)) - 1
        # same domain as the coarse grid so only the spacing changes
        g["L"] = float(self.profile.L_dom)
        prof = self._profile(self.b.epsilon, g)
        kd = build_kernel(self.sys, prof)
        nl = integrate_nonlinear(self.sys, self._sim_config(prof), kd)
        lin = integrate_linearized(self.sys, prof, config=self._sim_config(prof), kd=kd)
        return nl, lin

    # -- criteria -------------------------------------------------------------------
    def c1_hypotheses(self) -> CriterionResult:
        meas, ok = {}, True
        for name, p in (("SYM2", 2), ("isentropic-NS", 1)):
            rep = check_hypotheses(builtin_model(name), p, seed=self.b.seed)
            meas[name] = {"all_ok": rep.all_ok, "theta_symbol": rep.theta_symbol,
                          "theta_compensator": rep.theta_compensator}
            ok &= rep.all_ok and rep.theta_symbol > 0 and rep.theta_compensator > 0
            if name == "SYM2":
                ok &= abs(rep.theta_compensator - 0.5) <= 1e-6
        return CriterionResult(1, "hypothesis suite", bool(ok), meas,
                               "all hypotheses pass; theta_symbol, theta_compensator > 0; SYM2 theta = 0.5 +- 1e-6")

    def c2_profile(self) -> CriterionResult:
        profs = [self._profile(e) for e in self.b.epsilon_sweep]
        val = validate_profile_decay(profs, q_max=2)
        resid = max(p.residuals["ode_residual"] for p in profs + [self.profile])
        rel = {q: abs(d["exponent"] - d["target"]) / d["target"] for q, d in val["per_q"].items()}
        ok = resid <= 1e-8 and all(r <= 0.25 for r in rel.values()) and val["tail_r2_min"] >= 0.98
        meas = {"ode_residual_max": resid, "exponents": {q: d["exponent"] for q, d in val["per_q"].items()},
                "relative_deviation": rel, "tail_r2_min": val["tail_r2_min"]}
        return CriterionResult(2, "profile residual and strength scaling", bool(ok), meas,
                               "residual <= 1e-8; exponent q+1 within 25% for q=0..2; tail R2 >= 0.98")

    def c3_kernel(self) -> CriterionResult:
        ck = self.kernel.run_checks()
        ns = builtin_model("isentropic-NS")
        nsp = compute_profile(ns, shock_from_strength(ns, ns.base_point, 1, 0.1))
        nck = build_kernel(ns, nsp).run_checks()
        ok = True
        for c in (ck, nck):
            ok &= c["beta_positive"] and c["eta_positive"] and c["beta_oracle_max_gap"] <= 1e-6
            ok &= c["scattering_residual"] <= 1e-10 and c["pi_mismatch"] <= 1e-8
            ok &= c["lemma_projection_residual"] <= 1e-12
        if self.b.model == "SYM2":
            ok &= ck["eta_oracle_max_deviation_from_one"] <= 1e-4
        keys = ("beta_positive", "eta_positive", "beta_oracle_max_gap", "eta_oracle_max_deviation_from_one",
                "scattering_residual", "pi_mismatch", "lemma_projection_residual", "eta_oracle_min")
        meas = {"benchmark": {k: ck[k] for k in keys}, "isentropic-NS": {k: nck[k] for k in keys}}
        return CriterionResult(3, "kernel coefficients", bool(ok), meas,
                               "beta>0, Re eta>0, beta gap <= 1e-6, SYM2 eta = 1 +- 1e-4, "
                               "scattering <= 1e-10, pi <= 1e-8, projection identity <= 1e-12")

    def c4_e_rates(self) -> CriterionResult:
        t = np.geomspace(1.0, 100.0, 30)
        sn = self.kernel.e_sup_norms(t)
        fits = {k: -loglog_fit(t, sn[k])["exponent"] for k in ("e_y", "e_t", "e_ty")}
        gd = self.kernel.gaussian_domination(n_samples=10_000, seed=self.b.seed)
        bmax = max(np.max(self.kernel.minus.beta), np.max(self.kernel.plus.beta))
        ok = _within(fits["e_t"], 0.5, 0.05) and _within(fits["e_y"], 0.5, 0.05)
        ok = ok and _within(fits["e_ty"], 1.0, 0.1) and gd["holds"] and gd["M"] <= 8 * bmax
        meas = {"exponents": fits, "gaussian_domination": {"holds": gd["holds"], "M": gd["M"], "8_max_beta": 8 * bmax}}
        return CriterionResult(4, "e-kernel decay rates", bool(ok), meas,
                               "e_t, e_y exponents 0.5 +- 0.05; e_ty 1 +- 0.1; Gaussian domination with M <= 8 max beta")

    def c5_linear(self) -> CriterionResult:
        f = self.linear.fitted_exponents
        drift = self.zero_mode.diagnostics["drift_per_time"]
        ok = _within(f["Linf"]["exponent"], 0.5, 0.15) and _within(f["L2"]["exponent"], 0.25, 0.15) and drift <= 1e-6
        meas = {"Linf": f["Linf"]["exponent"], "L2": f["L2"]["exponent"], "zero_mode_drift_per_time": drift}
        return CriterionResult(5, "linear decay", bool(ok), meas,
                               "|G - phi| exponents: Linf 0.5 +- 0.15, L2 0.25 +- 0.15; zero-mode drift <= 1e-6")

    def c6_greens(self) -> CriterionResult:
        g = self.greens
        ok = g["splitting_max_error"] <= 0.15 and g["ratio_fit"]["exponent"] <= -0.3
        meas = {"splitting": g["splitting"], "ratio_exponent": g["ratio_fit"]["exponent"],
                "short_time": g["short_time"], "excited": g["excited"], "pulse": g["pulse"]}
        return CriterionResult(6, "Green's decomposition", bool(ok), meas,
                               "splitting within 15%; R_emp/S sup-ratio exponent <= -0.3")

    def c7_nonlinear(self) -> CriterionResult:
        r = self.nonlinear
        f = r.fitted_exponents
        z0 = r.zeta0
        sup_d = float(np.max(np.abs(r.delta)))
        tr = self.translated
        h = self.translate_h
        d_inf = float(tr.deltas["fit"].delta[-1])
        shift_err = abs(d_inf + h) / abs(h) if h else float("inf")
        checks = {
            "Linf": _within(f["Linf"]["exponent"], 0.5, 0.15),
            "L2": _within(f["L2"]["exponent"], 0.25, 0.15),
            "vx_Linf": _within(f["vx_Linf"]["exponent"], 0.5, 0.2),
            "delta_dot": _within(f["delta_dot"]["exponent"], 0.5, 0.15),
            "sup_delta": sup_d <= 10 * z0,
            "translate": shift_err <= 0.1,
        }
        meas = {"exponents": {k: f[k]["exponent"] for k in ("Linf", "L2", "vx_Linf", "delta_dot")},
                "sup_delta": sup_d, "zeta0": z0, "translate_h": h, "translate_delta_T": d_inf,
                "translate_relative_error": shift_err, "translate_projection_delta_T": float(tr.delta[-1]),
                "checks": checks}
        return CriterionResult(7, "nonlinear decay and shift", all(checks.values()), meas,
                               "Linf 0.5 +- 0.15, L2 0.25 +- 0.15, vx_Linf 0.5 +- 0.2, delta_dot 0.5 +- 0.15, "
                               "sup|delta| <= 10 zeta0, translate recovery within 10%")

    def c8_energy(self) -> CriterionResult:
        e = self.nonlinear.energy_report
        ok = e["theta_equiv"] > 0 and e["M"] >= e["M0"] and e["violation_fraction"] < 0.01
        ok = ok and e["log_fit"]["r2"] >= 0.95
        meas = {k: e[k] for k in ("M", "M0", "theta_equiv", "Theta_equiv", "violation_fraction", "C", "theta",
                                  "log_fit", "equiv_ratio_min", "equiv_ratio_max", "H3_constant")}
        return CriterionResult(8, "energy functional", bool(ok), meas,
                               "equivalence constants > 0 for M >= M0; violations < 1%; log fit R2 >= 0.95")

    def c9_claim(self) -> CriterionResult:
        runs = self.zeta_sweep
        z0 = np.array([runs[z].zeta0 for z in sorted(runs)])
        zs = np.array([runs[z].zeta[-1] for z in sorted(runs)])
        cc = claim_check(z0, zs, tol=0.2)
        meas = {**cc, "zeta0": z0.tolist(), "sup_zeta": zs.tolist()}
        return CriterionResult(9, "bootstrap bound shape", cc["ok"], meas,
                               "single C2 with every ratio within 20%")

    def c10_robustness(self) -> CriterionResult:
        nl_f, lin_f = self.refined
        shifts = {}
        for key in DECAY_TARGETS:
            shifts[f"nonlinear.{key}"] = abs(nl_f.fitted_exponents[key]["exponent"]
                                            - self.nonlinear.fitted_exponents[key]["exponent"])
        for key in ("L2", "Linf"):
            shifts[f"linear.{key}"] = abs(lin_f.fitted_exponents[key]["exponent"]
                                         - self.linear.fitted_exponents[key]["exponent"])
        digests = []
        with tempfile.TemporaryDirectory() as tmp:
            for i in range(2):
                res = self.nonlinear if i == 0 else integrate_nonlinear(
                    self.sys, self._sim_config(self.profile), self.kernel)
                p = write_timeseries(res, Path(tmp) / f"run{i}.csv", manifest="determinism")
                digests.append(hashlib.sha256(p.read_bytes()).hexdigest())
        ok = max(shifts.values()) <= 0.05 and digests[0] == digests[1]
        return CriterionResult(10, "grid refinement and determinism", bool(ok),
                               {"exponent_shifts": shifts, "max_shift": max(shifts.values()),
                                "identical_outputs": digests[0] == digests[1]},
                               "exponent shifts <= 0.05 under dx -> dx/2; byte-identical repeated output")

    def run(self, ids: list[int] | None = None, progress: Callable[[CriterionResult], None] | None = None
            ) -> list[CriterionResult]:
        out = []
        for i in ids or sorted(CRITERIA):
            res = getattr(self, CRITERIA[i])()
            out.append(res)
            if progress:
                progress(res)
        return out


CRITERIA = {1: "c1_hypotheses", 2: "c2_profile", 3: "c3_kernel", 4: "c4_e_rates", 5: "c5_linear",
            6: "c6_greens", 7: "c7_nonlinear", 8: "c8_energy", 9: "c9_claim", 10: "c10_robustness"}
