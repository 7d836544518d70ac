"""Conservative method-of-lines discretization in the comoving frame.

Cell averages of the conserved variable ``q = G(U)`` live at the grid
nodes.  The face flux is

    Phi_{i+1/2} = f+_{i+1/2} + f-_{i+1/2} - B(U_{i+1/2}) (U_{i+1} - U_i) / dx,

with the local Lax-Friedrichs splitting ``f+- = (F(U) +- alpha q) / 2`` and
third-order upwind-biased reconstruction of each split flux.  The two end
nodes carry Dirichlet data; two ghost nodes replicate them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from ..errors import SimulationError
from ..model import SystemDefinition

__all__ = ["Discretization", "ssp_rk3_step", "linear_rk3_step", "steady_correction"]


@dataclass
class Discretization:
    sys: SystemDefinition
    x: np.ndarray
    q_left: np.ndarray
    q_right: np.ndarray
    alpha: float
    forcing: np.ndarray | None = None

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def M(self) -> int:
        return self.x.size

    def to_state(self, q: np.ndarray) -> np.ndarray:
        return self.sys.G_inverse(q)

    def face_flux(self, q: np.ndarray) -> np.ndarray:
        """Total numerical flux on the ``M - 1`` interior faces."""
        U = self.to_state(q)
        F = self.sys.eval_F(U)
        fp = 0.5 * (F + self.alpha * q)
        fm = 0.5 * (F - self.alpha * q)
        fp = np.concatenate([fp[:1], fp, fp[-1:]], axis=0)
        fm = np.concatenate([fm, fm[-1:], fm[-1:]], axis=0)
        # faces i+1/2 for i = 0..M-2; padded index of node i is i+1 for fp, i for fm
        hp = (-fp[:-3] + 5.0 * fp[1:-2] + 2.0 * fp[2:-1]) / 6.0
        hm = (2.0 * fm[:-3] + 5.0 * fm[1:-2] - fm[2:-1]) / 6.0
        Umid = 0.5 * (U[1:] + U[:-1])
        visc = (self.sys.eval_B(Umid) @ ((U[1:] - U[:-1]) / self.dx)[..., None])[..., 0]
        return hp[: self.M - 1] + hm[: self.M - 1] - visc

    def rhs_and_flux(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Semi-discrete right side and the net flux out of the interior cells."""
        flux = self.face_flux(q)
        out = np.zeros_like(q)
        out[1:-1] = -(flux[1:] - flux[:-1]) / self.dx
        if self.forcing is not None:
            out += self.forcing
        return out, flux[-1] - flux[0]

    def rhs(self, q: np.ndarray) -> np.ndarray:
        return self.rhs_and_flux(q)[0]

    def max_dt(self, q: np.ndarray, c_h: float = 0.8, c_p: float = 0.9) -> float:
        U = self.to_state(q)
        k = self.sys.n - self.sys.r
        diff = self.sys.eval_B(U) @ np.linalg.inv(self.sys.jac_G(U))
        sig = np.max(np.abs(np.linalg.eigvals(diff[:, k:, k:])))
        dt_h = c_h * self.dx / self.alpha
        dt_p = c_p * self.dx**2 / (2.0 * sig) if sig > 0 else np.inf
        return float(min(dt_h, dt_p))

    def jacobian(self, q: np.ndarray, h: float = 1e-7) -> sparse.csr_matrix:
        """Sparse Jacobian of :meth:`rhs` by colored central differences.

        Each residual depends on nodes ``i-2..i+2``, so nodes congruent
        modulo 5 can be perturbed together, one state component at a time.
        """
        M, n = q.shape
        rows, cols, vals = [], [], []
        idx = np.arange(M)
        for color in range(5):
            nodes = idx[color::5]
            for comp in range(n):
                step = h * (1.0 + np.abs(q[nodes, comp]))
                dq = np.zeros_like(q)
                dq[nodes, comp] = step
                diff = (self.rhs(q + dq) - self.rhs(q - dq))
                for off in range(-2, 3):
                    tgt = nodes + off
                    ok = (tgt >= 0) & (tgt < M)
                    src, tg, st = nodes[ok], tgt[ok], step[ok]
                    for ci in range(n):
                        v = diff[tg, ci] / (2.0 * st)
                        nz = v != 0.0
                        rows.append(tg[nz] * n + ci)
                        cols.append(src[nz] * n + comp)
                        vals.append(v[nz])
        J = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(M * n, M * n))
        return J


def ssp_rk3_step(disc: Discretization, q: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """One Shu-Osher SSP-RK3 step; also returns the time-integrated boundary flux."""
    r0, b0 = disc.rhs_and_flux(q)
    q1 = q + dt * r0
    r1, b1 = disc.rhs_and_flux(q1)
    q2 = 0.75 * q + 0.25 * (q1 + dt * r1)
    r2, b2 = disc.rhs_and_flux(q2)
    q3 = q / 3.0 + 2.0 / 3.0 * (q2 + dt * r2)
    return q3, dt * (b0 + b1 + 4.0 * b2) / 6.0


def linear_rk3_step(J, g: np.ndarray, dt: float) -> np.ndarray:
    """SSP-RK3 step of ``g' = J g`` for a flattened state."""
    g1 = g + dt * (J @ g)
    g2 = 0.75 * g + 0.25 * (g1 + dt * (J @ g1))
    return g / 3.0 + 2.0 / 3.0 * (g2 + dt * (J @ g2))


def steady_correction(disc: Discretization, q0: np.ndarray, phase_vector: np.ndarray,
                      tol: float = 1e-14, max_iter: int = 20) -> tuple[np.ndarray, np.ndarray, dict]:
    """Newton solve for a discrete rest state near ``q0``.

    The near-null translation direction makes the plain Newton matrix badly
    conditioned, so the system is bordered: unknowns ``(q, sigma)`` with
    ``rhs(q) + sigma w = 0`` and the phase condition ``<w, q - q0> = 0``,
    where ``w`` is ``phase_vector`` restricted to the interior.  The returned
    forcing ``-sigma w`` is added to the scheme, which makes ``q`` an exact
    rest point; ``|sigma|`` is reported.
    """
    M, n = q0.shape
    interior = np.zeros((M, n), bool)
    interior[1:-1] = True
    w = np.where(interior, phase_vector, 0.0)
    wn = w / np.linalg.norm(w)
    mask = interior.ravel()
    q = q0.copy()
    sigma = 0.0
    disc.forcing = None
    hist = []
    for it in range(max_iter):
        R = disc.rhs(q) + sigma * wn
        res = float(np.max(np.abs(R[1:-1])))
        hist.append(res)
        if res <= tol:
            break
        J = disc.jacobian(q)[mask][:, mask]
        wv = wn.ravel()[mask]
        A = sparse.bmat([[J, wv[:, None]], [wv[None, :], None]], format="csc")
        phase = float(np.sum(wn * (q - q0)))
        rhsv = -np.concatenate([R.ravel()[mask], [phase]])
        sol = spsolve(A, rhsv)
        dq = np.zeros(M * n)
        dq[mask] = sol[:-1]
        q = q + dq.reshape(M, n)
        sigma += sol[-1]
        if np.max(np.abs(sol[:-1])) <= 1e-16 * (1 + np.max(np.abs(q))):
            break
    else:
        raise SimulationError(f"steady correction did not converge (residual {hist[-1]:.3e})")
    disc.forcing = sigma * wn
    disc.forcing[0] = 0.0
    disc.forcing[-1] = 0.0
    final = float(np.max(np.abs(disc.rhs(q))))
    return q, disc.forcing, {"iterations": len(hist), "residual_history": hist, "sigma": float(sigma),
                             "final_residual": final}
