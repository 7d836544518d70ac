"""Command-line entry point: ``shocklab {check,profile,kernel,simulate,verify}``.

Exit status: 0 when the command passes, 1 on I/O or configuration errors,
2 on a scientific failure (failed hypothesis, inadmissible shock, failed
acceptance criterion, insufficient horizon...).
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .config import RunConfig, build_shock, load_config, manifest_hash, validate_raw
from .errors import (ConfigError, DissipativityError, DomainError, HugoniotError, KernelError, ModelError,
                     ProfileError, ShockLabError, SimulationError)
from .kernel import build_kernel, endstate_scattering, save_kernel_report
from .profile import compute_profile, save_profile, validate_profile_decay
from .simulator import (SimConfig, fit_decay_rates, integrate_linearized, integrate_nonlinear, write_json,
                        write_snapshots, write_timeseries)
from .structure import check_hypotheses

log = logging.getLogger("shocklab")

EXIT_OK, EXIT_OPERATIONAL, EXIT_SCIENTIFIC = 0, 1, 2
_OPERATIONAL = (ConfigError, ModelError, DomainError, OSError, ValueError)

# short aliases accepted by --sweep
_SWEEP_ALIASES = {"epsilon": "shock.epsilon", "eps": "shock.epsilon", "s": "shock.s", "M": "grid.M",
                  "zeta0": "simulation.perturbation.zeta0", "T": "simulation.T", "seed": "seed"}


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_sweep(spec: str) -> tuple[str, list]:
    """``KEY=v1,v2,...`` into a dotted config key and a list of JSON values."""
    if "=" not in spec:
        raise ConfigError(f"--sweep expects KEY=v1,v2,... (got {spec!r})")
    key, vals = spec.split("=", 1)
    key = _SWEEP_ALIASES.get(key.strip(), key.strip())
    values = [_parse_value(v.strip()) for v in vals.split(",") if v.strip()]
    if not values:
        raise ConfigError("--sweep needs at least one value")
    return key, values


def _tag(key: str, value: Any) -> str:
    # dots would be taken for file suffixes
    return f"{key.split('.')[-1]}_{value}".replace("/", "_").replace(".", "p")


def _variants(cfg: RunConfig, sweep: str | None) -> list[tuple[str, RunConfig]]:
    if not sweep:
        return [("", cfg)]
    key, values = parse_sweep(sweep)
    out = []
    for v in values:
        c = cfg.with_override(key, v)
        if key == "shock.s":
            # a speed sweep replaces any strength request
            raw = copy.deepcopy(c.raw)
            raw["shock"].pop("epsilon", None)
            c = RunConfig(validate_raw(raw), c.base_dir)
        out.append((_tag(key, v), c))
    return out


def _stem(name: str, tag: str) -> str:
    return f"{name}_{tag}" if tag else name


def _outdir(args, cfg: RunConfig | None) -> Path:
    out = args.out or (cfg.raw.get("out") if cfg else None) or "shocklab_out"
    p = Path(out)
    if cfg is not None and not p.is_absolute() and args.out is None and cfg.raw.get("out"):
        p = cfg.base_dir / p
    p.mkdir(parents=True, exist_ok=True)
    return p


# -- commands --------------------------------------------------------------------------

def cmd_check(cfg: RunConfig, out: Path, args) -> int:
    sysdef = cfg.system()
    shock = cfg.section("shock")
    if "p" not in shock:
        raise ConfigError("check needs shock.p (the family index)")
    chk = cfg.section("check")
    samples = sysdef.sample_neighborhood(chk["points_per_axis"]) if "points_per_axis" in chk else None
    rep = check_hypotheses(sysdef, int(shock["p"]), seed=cfg.seed, samples=samples)
    d = rep.to_dict()
    d["config_sha256"] = cfg.manifest
    path = write_json(d, out / "hypotheses.json")
    print(f"all_ok={rep.all_ok} theta_symbol={rep.theta_symbol:.6g} "
          f"theta_compensator={rep.theta_compensator} -> {path}")
    return EXIT_OK if rep.all_ok else EXIT_SCIENTIFIC


def cmd_profile(cfg: RunConfig, out: Path, args) -> int:
    profiles = []
    for tag, c in _variants(cfg, args.sweep):
        sysdef = c.system()
        shock = build_shock(sysdef, c.section("shock"))
        prof = compute_profile(sysdef, shock, c.grid())
        csv_p, _ = save_profile(prof, out / _stem("profile", tag), manifest=c.manifest)
        print(f"epsilon={shock.epsilon:.6g} s={shock.s:.10g} ode_residual={prof.residuals['ode_residual']:.3e} "
              f"method={prof.method} -> {csv_p}")
        profiles.append(prof)
    if len(profiles) > 1:
        try:
            summary = validate_profile_decay(profiles, q_max=min(4, len(profiles[0].derivs)))
        except ProfileError as exc:
            summary = {"error": str(exc)}
        summary["config_sha256"] = cfg.manifest
        summary["sweep"] = args.sweep
        path = write_json(summary, out / "profile_decay_fit.json")
        print(f"decay fit -> {path}")
        if summary.get("rates_ok") is False:
            return EXIT_SCIENTIFIC
    return EXIT_OK


def _lattice(spec: list | None, default: tuple) -> np.ndarray:
    lo, hi, num = spec if spec else default
    return np.linspace(float(lo), float(hi), int(num))


def cmd_kernel(cfg: RunConfig, out: Path, args) -> int:
    code = EXIT_OK
    for tag, c in _variants(cfg, args.sweep):
        sysdef = c.system()
        shock = build_shock(sysdef, c.section("shock"))
        if not shock.admissible:
            # the frozen-endstate scattering basis is singular for a non-Lax triple
            endstate_scattering(sysdef, shock)
            raise KernelError("shock is not Lax admissible; scattering data undefined")
        prof = compute_profile(sysdef, shock, c.grid())
        kd = build_kernel(sysdef, prof)
        checks = kd.run_checks()
        path = save_kernel_report(kd, out / f"{_stem('kernel_report', tag)}.json", manifest=c.manifest)
        print(f"beta-={np.round(kd.minus.beta, 8).tolist()} beta+={np.round(kd.plus.beta, 8).tolist()} "
              f"pi_mismatch={checks['pi_mismatch']:.3e} -> {path}")
        if args.dump_e:
            ks = c.section("kernel")
            L = prof.L_dom
            y = _lattice(ks.get("dump_y"), (-L, L, 201))
            t = _lattice(ks.get("dump_t"), (1.0, 100.0, 100))
            if np.any(t <= 0):
                raise ConfigError("kernel.dump_t must be positive")
            p = kd.dump_e(out / f"{_stem('e_kernel', tag)}.csv", y, t, manifest=c.manifest)
            print(f"e-kernel dump -> {p}")
        if not (checks["beta_positive"] and checks["eta_positive"]):
            code = EXIT_SCIENTIFIC
    return code


def _sim_setup(c: RunConfig):
    sysdef = c.system()
    shock = build_shock(sysdef, c.section("shock"))
    prof = compute_profile(sysdef, shock, c.grid())
    sim = c.section("simulation")
    mode = sim.pop("mode", "nonlinear")
    sim.setdefault("seed", c.seed)
    scfg = SimConfig.from_dict(sim, profile=prof)
    # refuse before integrating when the fit window cannot be populated
    times = scfg.dt_out * np.arange(int(round(scfg.T / scfg.dt_out)) + 1)
    fit_decay_rates(times, {}, scfg.fit_window, scfg.min_horizon, strict=True)
    return sysdef, prof, scfg, mode


def _run_sim(sysdef, prof, scfg, mode):
    kd = build_kernel(sysdef, prof)
    if mode == "linear":
        return integrate_linearized(sysdef, prof, config=scfg, kd=kd)
    return integrate_nonlinear(sysdef, scfg, kd)


def _exponents(res) -> dict:
    return {k: v["exponent"] for k, v in res.fitted_exponents.items()}


def cmd_simulate(cfg: RunConfig, out: Path, args) -> int:
    for tag, c in _variants(cfg, args.sweep):
        sysdef, prof, scfg, mode = _sim_setup(c)
        res = _run_sim(sysdef, prof, scfg, mode)
        ts = write_timeseries(res, out / f"{_stem('timeseries', tag)}.csv", manifest=c.manifest)
        snaps = []
        if scfg.snapshot_stride and res.snapshots:
            d = out / _stem("snapshots", tag)
            d.mkdir(exist_ok=True)
            snaps = [str(p.name) for p in write_snapshots(res, d, scfg.snapshot_stride, manifest=c.manifest)]
        manifest = {"config_sha256": c.manifest, "config": c.raw, "mode": mode, "seed": scfg.seed,
                    "simulation": scfg.to_dict(), "profile": prof.metadata(), "summary": res.summary(),
                    "timeseries": ts.name, "snapshots": snaps}
        if args.grid_refine:
            g = c.section("grid")
            g["M"] = 2 * prof.grid.size - 1
            g["L"] = prof.L_dom
            fine = c.with_override("grid", g)
            _, prof_f, scfg_f, _ = _sim_setup(fine)
            res_f = _run_sim(sysdef, prof_f, scfg_f, mode)
            write_timeseries(res_f, out / f"{_stem('timeseries_refined', tag)}.csv", manifest=c.manifest)
            e0, e1 = _exponents(res), _exponents(res_f)
            shifts = {k: abs(e1[k] - e0[k]) for k in e0 if k in e1}
            manifest["grid_refine"] = {"M": int(g["M"]), "exponents": e1, "shifts": shifts,
                                       "max_shift": max(shifts.values(), default=0.0)}
        mpath = write_json(manifest, out / f"{_stem('manifest', tag)}.json")
        exps = ", ".join(f"{k}={v:.4f}" for k, v in _exponents(res).items())
        print(f"{mode} run T={res.times[-1]:g}: {exps} -> {ts}, {mpath}")
    return EXIT_OK


def _suite_from_config(cfg: RunConfig | None, seed: int | None = None):
    from .verify import AcceptanceSuite, Benchmark
    if cfg is None:
        return AcceptanceSuite(Benchmark(seed=seed or 0))
    sysdef = cfg.system()
    shock_spec = cfg.section("shock") or {"p": 2, "epsilon": 0.1}
    shock = build_shock(sysdef, shock_spec)
    ver = cfg.section("verify")
    sim = cfg.section("simulation")
    sim.pop("mode", None)
    b = Benchmark(model=sysdef.name, model_params=dict(sysdef.params), p=shock.p, epsilon=shock.epsilon,
                  U_minus=shock.U_minus.tolist(), grid=cfg.section("grid") or {"M": 4001}, simulation=sim,
                  seed=cfg.seed)
    if "epsilon_sweep" in ver:
        b.epsilon_sweep = tuple(ver["epsilon_sweep"])
    if "zeta0_sweep" in ver:
        b.zeta0_sweep = tuple(ver["zeta0_sweep"])
    suite = AcceptanceSuite(b)
    suite.__dict__["sys"] = sysdef
    return suite


def cmd_verify(cfg: RunConfig | None, out: Path, args) -> int:
    suite = _suite_from_config(cfg, args.seed)
    ids = (cfg.section("verify").get("criteria") if cfg else None) or None
    if args.criteria:
        ids = [int(v) for v in args.criteria.split(",")]
    results = suite.run(ids, progress=lambda r: print(r.line(), flush=True))
    man = cfg.manifest if cfg else manifest_hash({"benchmark": "default"})
    summary = {"config_sha256": man, "all_passed": all(r.passed for r in results),
               "criteria": [r.to_dict() for r in results]}
    path = write_json(summary, out / "acceptance.json")
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed -> {path}")
    return EXIT_OK if summary["all_passed"] else EXIT_SCIENTIFIC


COMMANDS = {"check": cmd_check, "profile": cmd_profile, "kernel": cmd_kernel, "simulate": cmd_simulate,
            "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shocklab", description="Viscous shock stability toolkit.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, metavar="N", help="random seed (overrides the config)")
    common.add_argument("--sweep", metavar="KEY=v1,v2,...", help="run once per value of a config key")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="structural and dissipativity hypotheses")
    sub.add_parser("profile", parents=[common], help="viscous profile CSV and metadata")
    k = sub.add_parser("kernel", parents=[common], help="Green's-function coefficients report")
    k.add_argument("--dump-e", action="store_true", help="write e, e_y, e_t, e_ty on a (y, t) lattice")
    s = sub.add_parser("simulate", parents=[common], help="nonlinear or linearized time integration")
    s.add_argument("--grid-refine", action="store_true", help="repeat with dx/2 and report exponent shifts")
    v = sub.add_parser("verify", parents=[common], help="run the acceptance criteria")
    v.add_argument("--criteria", metavar="LIST", help="comma-separated criterion numbers")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    for name in ("dump_e", "grid_refine", "criteria"):
        if not hasattr(args, name):
            setattr(args, name, None)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config is None:
            if args.command != "verify":
                raise ConfigError(f"{args.command} needs --config")
            cfg = None
        else:
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg = cfg.with_override("seed", args.seed)
        if args.sweep and args.command == "verify":
            raise ConfigError("--sweep is not supported by verify")
        out = _outdir(args, cfg)
        return COMMANDS[args.command](cfg, out, args)
    except (HugoniotError, ProfileError, KernelError, DissipativityError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCIENTIFIC
    except _OPERATIONAL as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OPERATIONAL
    except ShockLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCIENTIFIC


if __name__ == "__main__":
    sys.exit(main())
