import numpy as np
import pytest
from scipy.integrate import quad

from shocklab import DomainError, KernelError, hugoniot_solve
from shocklab.config import build_shock
from shocklab.kernel import diffusion_rate_oracle, endstate_scattering, heat_kernel
from shocklab._numerics import loglog_fit


@pytest.mark.parametrize("beta,t", [(0.5, 1.0), (0.3, 7.0)])
def test_heat_kernel_mass_and_derivatives(beta, t):
    mass, _ = quad(lambda z: heat_kernel(z, t, beta), -np.inf, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-10)
    z, h = 0.7, 1e-5
    d1 = (heat_kernel(z + h, t, beta) - heat_kernel(z - h, t, beta)) / (2 * h)
    assert heat_kernel(z, t, beta, 1) == pytest.approx(d1, rel=1e-7)
    d2 = (heat_kernel(z + h, t, beta, 1) - heat_kernel(z - h, t, beta, 1)) / (2 * h)
    assert heat_kernel(z, t, beta, 2) == pytest.approx(d2, rel=1e-6)


def test_sym2_diffusion_rates(coarse_kernel, sym2):
    # at U- = 0 the eigenvectors are (1, +-1)/sqrt 2, so l B r = b/2
    np.testing.assert_allclose(coarse_kernel.minus.beta, [0.5, 0.5], atol=1e-10)
    for j, b in enumerate(coarse_kernel.plus.beta):
        s = coarse_kernel.profile.shock.s
        assert b == pytest.approx(diffusion_rate_oracle(sym2, coarse_kernel.plus.state, j + 1, s=s), abs=1e-8)


def test_checks_pass(coarse_kernel):
    c = coarse_kernel.run_checks()
    assert c["beta_positive"] and c["eta_positive"]
    assert c["eta_oracle_max_deviation_from_one"] <= 1e-4
    assert c["scattering_residual"] <= 1e-10
    assert c["pi_mismatch"] <= 1e-8
    assert c["lemma_projection_residual"] <= 1e-12


def test_scattering_expansion_reconstructs_modes(coarse_kernel):
    sc = coarse_kernel.scattering
    jump = sc.jump
    out = {"minus": (coarse_kernel.minus, coarse_kernel.minus.a < 0),
           "plus": (coarse_kernel.plus, coarse_kernel.plus.a > 0)}
    for side_in, modes in (("minus", coarse_kernel.minus), ("plus", coarse_kernel.plus)):
        for k in range(modes.a.size):
            rebuilt = sc.c_excited[side_in][k] * jump
            for side_out, (m, mask) in out.items():
                for j in np.flatnonzero(mask):
                    rebuilt = rebuilt + sc.c_out[(k, j, side_out, side_in)] * m.r[:, j]
            np.testing.assert_allclose(rebuilt, modes.r[:, k], atol=1e-12)
    # pi annihilates outgoing modes and normalizes the jump
    assert sc.pi @ jump == pytest.approx(1.0, abs=1e-12)
    for m, mask in out.values():
        np.testing.assert_allclose(sc.pi @ m.r[:, mask], 0.0, atol=1e-12)


def test_endstate_scattering_agrees(sym2, coarse_kernel):
    es = endstate_scattering(sym2, coarse_kernel.profile.shock)
    np.testing.assert_allclose(es.pi, coarse_kernel.scattering.pi, rtol=1e-8)


def test_excited_kernel_limit_is_pi(coarse_kernel):
    e = coarse_kernel.eval_e(np.array([-5.0, 0.0, 5.0]), 1e7)
    np.testing.assert_allclose(e, np.broadcast_to(coarse_kernel.scattering.pi, e.shape), rtol=1e-6)


def test_e_t_rate_and_domination(coarse_kernel):
    t = np.geomspace(1.0, 100.0, 20)
    sn = coarse_kernel.e_sup_norms(t, n_y=2001)
    assert -loglog_fit(t, sn["e_t"])["exponent"] == pytest.approx(0.5, abs=0.05)
    assert -loglog_fit(t, sn["e_ty"])["exponent"] == pytest.approx(1.0, abs=0.1)
    gd = coarse_kernel.gaussian_domination(n_samples=2000)
    assert gd["holds"]


def test_e_derivatives_consistent(coarse_kernel):
    y, t, h = np.array([-20.0, 3.0, 40.0]), 9.0, 1e-4
    d = coarse_kernel.eval_e_derivs(y, t)
    fd_t = (coarse_kernel.eval_e(y, t + h) - coarse_kernel.eval_e(y, t - h)) / (2 * h)
    fd_y = (coarse_kernel.eval_e(y + h, t) - coarse_kernel.eval_e(y - h, t)) / (2 * h)
    np.testing.assert_allclose(d["e_t"], fd_t, atol=1e-7)
    np.testing.assert_allclose(d["e_y"], fd_y, atol=1e-7)


def test_non_lax_triple_has_singular_basis(sym2):
    s = 0.95
    v = 2 * (s - 1 / s)
    sh = build_shock(sym2, {"p": 2, "U_minus": [v / s, v], "U_plus": [0.0, 0.0], "s": s})
    with pytest.raises(KernelError):
        endstate_scattering(sym2, sh)


def test_kernel_dump(tmp_path, coarse_kernel):
    p = coarse_kernel.dump_e(tmp_path / "e.csv", np.linspace(-5, 5, 3), np.array([1.0, 2.0]), manifest="m")
    lines = p.read_text().splitlines()
    assert lines[0] == "# manifest=m"
    assert lines[1].split(",")[:4] == ["y", "t", "e1", "e2"]
    assert len(lines) == 2 + 6


def test_far_speed_rejected(sym2):
    with pytest.raises(DomainError):
        hugoniot_solve(sym2, np.zeros(2), 2, 3.0)
