import numpy as np
import pytest

from shocklab import builtin_model, check_hypotheses, find_compensator
from shocklab.structure import characteristic_speeds, check_dissipativity_symbol


def test_sym2_speeds_closed_form(sym2):
    for v in (-0.2, 0.0, 0.3):
        a, _ = characteristic_speeds(sym2, np.array([0.0, v]))
        root = np.sqrt(v * v + 4.0)
        np.testing.assert_allclose(np.sort(a), [(v - root) / 2, (v + root) / 2], atol=1e-12)


def test_sym2_passes_with_closed_form_compensator(sym2):
    rep = check_hypotheses(sym2, 2)
    assert rep.all_ok
    assert rep.theta_symbol > 0
    # the optimal skew weight for this system gives exactly one half
    assert rep.theta_compensator == pytest.approx(0.5, abs=1e-6)


def test_ns_passes(ns):
    rep = check_hypotheses(ns, 1)
    assert rep.all_ok and rep.theta_symbol > 0 and rep.theta_compensator > 0


def test_no_viscosity_fails_dissipativity():
    sys = builtin_model("SYM2", {"b": 0.0})
    rep = check_hypotheses(sys, 2)
    assert rep.a2_ok is False
    assert not rep.all_ok


def test_symbol_theta_scales_with_viscosity():
    # for a frozen symbol the damping rate is bounded by that of the viscous block
    lo = check_dissipativity_symbol(builtin_model("SYM2", {"b": 0.5}), np.zeros(2))
    hi = check_dissipativity_symbol(builtin_model("SYM2", {"b": 1.0}), np.zeros(2))
    assert 0 < lo < hi


def test_compensator_is_skew(sym2):
    K = find_compensator(sym2)["K"]
    np.testing.assert_allclose(K, -K.T, atol=1e-14)


def test_report_serializes(sym2):
    d = check_hypotheses(sym2, 2, samples=sym2.sample_neighborhood(3)).to_dict()
    assert d["all_ok"] is True
    assert isinstance(d["compensator"], list)
