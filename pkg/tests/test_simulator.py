import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shocklab import ConfigError, SimulationError
from shocklab.simulator import (SimConfig, block_bounds, build_rest_state, claim_check, energy_monitor,
                                energy_threshold, fit_decay_rates, integrate_linearized, integrate_nonlinear,
                                read_timeseries, write_snapshots, write_timeseries)
from shocklab.simulator.fields import derivatives, lp_norms, shift_field


@pytest.fixture(scope="module")
def rest(sym2, coarse_profile, coarse_kernel):
    return build_rest_state(sym2, coarse_profile, coarse_kernel)


def short(profile, **kw):
    kw.setdefault("T", 20.0)
    return SimConfig.from_dict(kw, profile=profile)


@pytest.fixture(scope="module")
def gaussian_run(sym2, coarse_profile, coarse_kernel):
    return integrate_nonlinear(sym2, short(coarse_profile, snapshot_stride=10), coarse_kernel)


def test_discrete_rest_state_is_exact(rest):
    st_, disc = rest
    assert np.max(np.abs(disc.rhs(st_.q))) < 1e-13
    assert abs(st_.info["sigma"]) < 1e-12


def test_zero_perturbation_stays_zero(sym2, coarse_profile, coarse_kernel):
    r = integrate_nonlinear(sym2, short(coarse_profile, perturbation={"kind": "zero"}), coarse_kernel)
    assert np.max(r.norms["Linf"]) < 1e-13
    assert np.max(np.abs(r.deltas["projection"].delta)) < 1e-13
    assert np.max(np.abs(r.deltas["fit"].delta)) < 1e-9
    assert np.max(np.abs(r.energy)) < 1e-24


def test_conservation_and_running_sup(gaussian_run):
    assert gaussian_run.mass_diagnostics["max_step_defect"] <= 1e-8
    assert np.all(np.diff(gaussian_run.zeta) >= 0)
    assert gaussian_run.zeta0 == pytest.approx(1e-3, rel=1e-12)


def test_translation_recovered_by_fit(sym2, coarse_profile, coarse_kernel, rest):
    h = 1e-3 * rest[0].width
    cfg = short(coarse_profile, perturbation={"kind": "translate", "h": h})
    r = integrate_nonlinear(sym2, cfg, coarse_kernel)
    assert r.deltas["fit"].delta[-1] == pytest.approx(-h, rel=0.1)


def test_cfl_violation(sym2, coarse_profile, coarse_kernel):
    with pytest.raises(SimulationError, match="CFL"):
        integrate_nonlinear(sym2, short(coarse_profile, dt=2.0, dt_out=2.0), coarse_kernel)


def test_unknown_keys_rejected(coarse_profile):
    with pytest.raises(ConfigError):
        SimConfig.from_dict({"TT": 1.0}, profile=coarse_profile)
    with pytest.raises(ConfigError):
        SimConfig.from_dict({"perturbation": {"kind": "wiggle"}}, profile=coarse_profile)


def test_support_margin(sym2, coarse_profile, coarse_kernel):
    x = coarse_profile.grid
    cfg = short(coarse_profile, perturbation={"center": float(x[-1]) - 5.0})
    with pytest.raises(SimulationError, match="support"):
        integrate_nonlinear(sym2, cfg, coarse_kernel)


def test_zero_mode_preserved(sym2, coarse_profile, coarse_kernel):
    gp = coarse_kernel.Gbar_prime / np.max(np.abs(coarse_kernel.Gbar_prime))
    r = integrate_linearized(sym2, coarse_profile, G0=gp, kd=coarse_kernel,
                             config=short(coarse_profile, T=10.0, perturbation={"kind": "derivative"}))
    assert r.diagnostics["drift_per_time"] <= 1e-6


def test_determinism(tmp_path, sym2, coarse_profile, coarse_kernel, gaussian_run):
    again = integrate_nonlinear(sym2, short(coarse_profile, snapshot_stride=10), coarse_kernel)
    a = write_timeseries(gaussian_run, tmp_path / "a.csv", manifest="x")
    b = write_timeseries(again, tmp_path / "b.csv", manifest="x")
    assert hashlib.sha256(a.read_bytes()).digest() == hashlib.sha256(b.read_bytes()).digest()


def test_timeseries_and_snapshots(tmp_path, gaussian_run):
    p = write_timeseries(gaussian_run, tmp_path / "ts.csv", manifest="hash")
    header, data = read_timeseries(p)
    assert header == list(gaussian_run.COLUMNS)
    np.testing.assert_array_equal(data, gaussian_run.table())
    files = write_snapshots(gaussian_run, tmp_path, 10, manifest="hash")
    assert len(files) == len(gaussian_run.snapshots) == 5
    assert files[1].read_text().splitlines()[:2] == ["# manifest=hash", "# t=5"]


# -- fits and diagnostics on synthetic data -------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 1.5), st.floats(0.1, 10.0))
def test_power_law_recovered(k, C):
    t = np.arange(0, 200.5, 0.5)
    fits = fit_decay_rates(t, {"y": C * (1 + t) ** (-k)})
    assert fits["y"]["exponent"] == pytest.approx(k, abs=1e-10)
    assert fits["y"]["constant"] == pytest.approx(C, rel=1e-8)


def test_insufficient_horizon():
    t = np.arange(0, 50.5, 0.5)
    with pytest.raises(SimulationError, match="insufficient horizon"):
        fit_decay_rates(t, {"y": 1 / (1 + t)})
    assert fit_decay_rates(t, {"y": 1 / (1 + t)}, strict=False) == {}


def test_claim_check_exact_quadratic():
    C2 = 1.7
    z0 = np.array([1e-4, 1e-3, 1e-2])
    # sup zeta solving z = C2 (z0 + z^2), small root
    zs = (1 - np.sqrt(1 - 4 * C2 * C2 * z0)) / (2 * C2)
    out = claim_check(z0, zs)
    assert out["C2"] == pytest.approx(C2, rel=1e-10)
    assert out["ok"] and out["max_relative_deviation"] < 1e-10


def test_energy_threshold_schur():
    A0 = np.broadcast_to(np.eye(2), (5, 2, 2)).copy()
    K = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert energy_threshold(A0, K) == pytest.approx(1 / 16)
    lo, _ = block_bounds(A0, K, 1 / 16)
    assert abs(lo) < 1e-12
    assert block_bounds(A0, K, 1.0)[0] > 0


def test_energy_of_zero_field():
    A0 = np.broadcast_to(np.eye(2), (50, 2, 2)).copy()
    K = np.array([[0.0, 1.0], [-1.0, 0.0]])
    t = np.linspace(0, 5, 11)
    rep = energy_monitor(A0, K, t, [np.zeros((50, 2))] * 11, np.zeros(11), 0.1, 1)
    assert np.all(rep["energy"] == 0) and rep["violation_fraction"] == 0


def test_field_helpers():
    x = np.linspace(-10, 10, 2001)
    dx = x[1] - x[0]
    f = np.exp(-x**2)[:, None]
    d = derivatives(f, dx, 2)
    np.testing.assert_allclose(d[1][:, 0], -2 * x * np.exp(-x**2), atol=1e-8)
    L1, L2, Linf = lp_norms(f, dx)
    assert L1 == pytest.approx(np.sqrt(np.pi), rel=1e-10)
    assert L2 == pytest.approx((np.pi / 2) ** 0.25, rel=1e-10)
    assert Linf == pytest.approx(1.0)
    np.testing.assert_allclose(shift_field(x, f, 0.3)[:, 0], np.exp(-(x + 0.3) ** 2), atol=1e-6)
