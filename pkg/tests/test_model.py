import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shocklab import DomainError, ModelError, builtin_model, evaluate_system, register_system
from shocklab.model import load_model_file

coord = st.floats(-0.3, 0.3, allow_nan=False)


def fd_jacobian(f, U, h=1e-6):
    cols = []
    for i in range(U.size):
        e = np.zeros_like(U)
        e[i] = h
        cols.append((f(U + e) - f(U - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def test_sym2_flux_closed_form(sym2):
    U = np.array([0.2, -0.3])
    ev = evaluate_system(sym2, U)
    np.testing.assert_allclose(ev.F, [-0.3, 0.2 + 0.5 * 0.09])
    np.testing.assert_allclose(ev.G, U)
    np.testing.assert_allclose(ev.B, [[0, 0], [0, 1.0]])


@settings(max_examples=40, deadline=None)
@given(coord, coord)
def test_sym2_jacobians_match_differences(u, v):
    sys = builtin_model("SYM2")
    U = np.array([u, v])
    np.testing.assert_allclose(sys.jac_F(U), fd_jacobian(sys.eval_F, U), atol=1e-8)
    np.testing.assert_allclose(sys.jac_G(U), fd_jacobian(sys.eval_G, U), atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.1, 0.1), st.floats(-0.1, 0.1))
def test_ns_inverse_roundtrip_and_jacobian(d1, d2):
    sys = builtin_model("isentropic-NS")
    W = sys.base_point + np.array([d1, d2])
    np.testing.assert_allclose(sys.G_inverse(sys.eval_G(W)), W, rtol=1e-12, atol=1e-13)
    np.testing.assert_allclose(sys.jac_G(W), fd_jacobian(sys.eval_G, W), rtol=1e-6, atol=1e-9)
    np.testing.assert_allclose(sys.jac_B(W)[..., 1, 1, 0], fd_jacobian(lambda x: sys.eval_B(x)[1, 1], W)[0],
                               rtol=1e-6)


def test_ns_pressure_law(ns):
    # G maps W = (-p, u) to (v, u) with p = kappa v^-gamma
    v = ns.eval_G(ns.base_point)[0]
    assert v == pytest.approx(1.0)
    W = np.array([-1.1, 0.0])
    assert ns.eval_G(W)[0] == pytest.approx(1.1 ** (-1 / 1.4))


def test_comoving_subtracts_sG(sym2):
    U = np.array([0.1, 0.05])
    c = sym2.comoving(0.7)
    np.testing.assert_allclose(c.eval_F(U), sym2.eval_F(U) - 0.7 * U)
    assert c.frame_speed == pytest.approx(0.7)


def test_domain_guard(sym2):
    with pytest.raises(DomainError):
        evaluate_system(sym2, np.array([1.0, 0.0]))


@pytest.mark.parametrize("name,params", [("nope", {}), ("SYM2", {"b": -1.0}), ("isentropic-NS", {"gamma": 1.0})])
def test_bad_models_rejected(name, params):
    with pytest.raises(ModelError):
        builtin_model(name, params)


def test_register_system_fills_jacobians():
    sys = register_system(2, 1, G=lambda U: np.asarray(U, float),
                          F=lambda U: np.stack([U[..., 1], U[..., 0] ** 2], -1),
                          B=lambda U: np.array([[0.0, 0.0], [0.0, 1.0]]) + 0 * U[..., :1, None],
                          base_point=[0.0, 0.0])
    U = np.array([0.3, 0.1])
    np.testing.assert_allclose(sys.jac_F(U), [[0, 1], [0.6, 0]], atol=1e-7)


def test_model_file(tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{"name": "SYM2", "params": {"b": 2.0}}')
    assert load_model_file(p).params["b"] == 2.0
    p.write_text("{not json")
    with pytest.raises(ModelError):
        load_model_file(p)
