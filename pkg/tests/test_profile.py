import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shocklab import (HugoniotError, ProfileError, builtin_model, compute_profile, hugoniot_solve,
                      shock_from_strength, validate_profile_decay)
from shocklab.profile import lax_check, load_profile_csv, rh_residual, save_profile
from shocklab.config import build_shock


def sym2_logistic(x, s):
    """Exact SYM2 profile from U- = 0: the reduced equation is v' = v (v - v+) / 2."""
    vp = 2.0 * (s - 1.0 / s)
    kappa = 1.0 / s - s
    v = vp / (1.0 + np.exp(-kappa * x))
    return np.stack([v / s, v], axis=-1), kappa


def test_hugoniot_closed_form(sym2):
    sh = hugoniot_solve(sym2, np.zeros(2), 2, 0.95)
    vp = 2 * (0.95 - 1 / 0.95)
    np.testing.assert_allclose(sh.U_plus, [vp / 0.95, vp], atol=1e-12)
    assert sh.admissible and sh.rh_residual < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.floats(0.02, 0.25))
def test_strength_parametrization(eps):
    sys = builtin_model("SYM2")
    sh = shock_from_strength(sys, np.zeros(2), 2, eps)
    assert np.linalg.norm(sh.U_plus - sh.U_minus) == pytest.approx(eps, rel=1e-10)
    assert rh_residual(sys, sh.U_minus, sh.U_plus, sh.s) < 1e-12
    assert lax_check(sys, sh.U_minus, sh.U_plus, sh.s, 2)["ok"]


def test_sym2_profile_matches_logistic(sym2):
    sh = hugoniot_solve(sym2, np.zeros(2), 2, 0.95)
    prof = compute_profile(sym2, sh, {"M": 2001})
    exact, kappa = sym2_logistic(prof.grid, 0.95)
    np.testing.assert_allclose(prof.values, exact, atol=1e-8)
    assert prof.residuals["ode_residual"] <= 1e-8
    assert prof.decay_rate == pytest.approx(kappa, rel=1e-3)
    # first derivative against the closed form
    w = 1.0 / (1.0 + np.exp(-kappa * prof.grid))
    dv = 2 * (0.95 - 1 / 0.95) * kappa * w * (1 - w)
    np.testing.assert_allclose(prof.derivs[0][:, 1], dv, atol=1e-9)


def test_profile_is_monotone(coarse_profile):
    v = coarse_profile.values[:, 1]
    assert np.all(np.diff(v) <= 1e-15)


def test_ns_profile(ns):
    sh = shock_from_strength(ns, ns.base_point, 1, 0.1)
    prof = compute_profile(ns, sh, {"M": 1601})
    assert sh.admissible
    assert prof.residuals["ode_residual"] <= 1e-8
    assert prof.residuals["endpoint_error"] <= 1e-6


def test_strength_scaling(sym2):
    profs = [compute_profile(sym2, shock_from_strength(sym2, np.zeros(2), 2, e), {"M": 2001})
             for e in (0.05, 0.1, 0.2)]
    rep = validate_profile_decay(profs, q_max=2)
    assert rep["rates_ok"]
    for q, d in rep["per_q"].items():
        assert d["exponent"] == pytest.approx(q + 1, rel=0.25)
    with pytest.raises(ProfileError):
        validate_profile_decay(profs[:2])


def test_degenerate_and_non_lax(sym2):
    with pytest.raises(HugoniotError):
        build_shock(sym2, {"p": 2, "epsilon": 0})
    s = 0.95
    v = 2 * (s - 1 / s)
    sh = build_shock(sym2, {"p": 2, "U_minus": [v / s, v], "U_plus": [0.0, 0.0], "s": s})
    assert not sh.admissible
    with pytest.raises(ProfileError):
        compute_profile(sym2, sh)
    with pytest.raises(HugoniotError):
        build_shock(sym2, {"p": 2, "U_minus": [0.0, 0.0], "U_plus": [0.1, 0.0], "s": s})


def test_csv_roundtrip(tmp_path, coarse_profile):
    csv_p, json_p = save_profile(coarse_profile, tmp_path / "prof", manifest="abc")
    assert csv_p.read_text().startswith("# manifest=abc\n")
    header, data = load_profile_csv(csv_p)
    assert header[:3] == ["x", "U1", "U2"]
    np.testing.assert_array_equal(data[:, 1:3], coarse_profile.values)
    assert '"config_sha256": "abc"' in json_p.read_text()
