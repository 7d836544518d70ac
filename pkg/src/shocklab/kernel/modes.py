"""Endpoint eigen-systems, diffusion rates and hyperbolic modes along a profile.

All quantities are expressed in the conservative variable ``G`` and in the
frame moving with the shock, where the profile is stationary.  The linearized
operator is ``L_G g = -(A_G g)_x + (B_G g_x)_x`` with

    B_G = B (A0)^{-1},
    A_G g = dF (A0)^{-1} g - dB[(A0)^{-1} g] U' - B ((A0)^{-1})' g,

where ``A0 = dG``.  The last two terms vanish at the endstates; the final one
accounts for the x-dependence of ``(A0)^{-1}`` inside the viscous flux so that
``L_G`` is the exact linearization written in ``G``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import KernelError
from ..model import SystemDefinition
from ..profile import ShockProfile, _d5

__all__ = [
    "EndpointModes",
    "HyperbolicModes",
    "LinearCoefficients",
    "linear_coefficients",
    "modes_from_matrices",
    "endpoint_modes",
    "diffusion_rate_oracle",
    "symbol_eta_oracle",
    "eta_closed_form",
    "eta_printed_form",
    "hyperbolic_modes",
]

GAP_TOL = 1e-8


def _orient(V: np.ndarray) -> np.ndarray:
    V = V / np.linalg.norm(V, axis=0)
    for j in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, j]) > 1e-12)
        if nz.size and V[nz[0], j] < 0:
            V[:, j] = -V[:, j]
    return V


def _clusters(vals: np.ndarray, tol: float = GAP_TOL) -> list[np.ndarray]:
    order = np.argsort(vals)
    groups = [[order[0]]]
    for a, b in zip(order[:-1], order[1:]):
        if vals[b] - vals[a] > tol:
            groups.append([b])
        else:
            groups[-1].append(b)
    return [np.array(g) for g in groups]


@dataclass(frozen=True)
class EndpointModes:
    """Eigen-system of ``A_G`` at one endstate, sorted ascending; ``l.T @ r = I``."""

    side: str
    state: np.ndarray
    a: np.ndarray
    l: np.ndarray
    r: np.ndarray
    beta: np.ndarray
    A_G: np.ndarray
    B_G: np.ndarray

    def residuals(self) -> dict:
        R = self.A_G @ self.r - self.r * self.a
        Lr = self.l.T @ self.A_G - (self.l * self.a).T
        return {
            "right_eig": float(np.max(np.abs(R))),
            "left_eig": float(np.max(np.abs(Lr))),
            "biorthonormality": float(np.max(np.abs(self.l.T @ self.r - np.eye(self.a.size)))),
        }


def modes_from_matrices(A_G: np.ndarray, B_G: np.ndarray, side: str = "minus",
                        state: np.ndarray | None = None) -> EndpointModes:
    """Sorted eigen-decomposition with repeated eigenvalues split by ``L^T B_G R``.

    Raises
    ------
    KernelError
        On complex eigenvalues or an eigenvalue within ``1e-10`` of zero.
    """
    A_G = np.asarray(A_G, float)
    B_G = np.asarray(B_G, float)
    w, V = np.linalg.eig(A_G)
    if np.max(np.abs(w.imag), initial=0.0) > 1e-10:
        raise KernelError("complex characteristic speeds: symmetrizability violated")
    w = w.real
    V = V.real
    if np.min(np.abs(w)) < 1e-10:
        raise KernelError("zero characteristic speed at an endstate (characteristic shock)")
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    R = _orient(V)
    L = np.linalg.inv(R).T
    for grp in _clusters(w):
        if grp.size < 2:
            continue
        Rj, Lj = R[:, grp], L[:, grp]
        blk = Lj.T @ B_G @ Rj
        mu, Q = np.linalg.eig(blk)
        Q = Q.real[:, np.argsort(mu.real)]
        Rj = Rj @ Q
        Lj = Lj @ np.linalg.inv(Q).T
        R[:, grp], L[:, grp] = Rj, Lj
        w[grp] = np.mean(w[grp])
    # renormalize so that l^T r = I exactly after any block rotation
    scale = np.linalg.norm(R, axis=0)
    R = R / scale
    L = L * scale
    beta = np.einsum("ij,ik,kj->j", L, B_G, R)
    return EndpointModes(side, None if state is None else np.asarray(state, float), w, L, R, beta, A_G, B_G)


@dataclass(frozen=True)
class LinearCoefficients:
    """Frozen coefficients of the linearized operator at every grid node."""

    x: np.ndarray
    A0: np.ndarray
    A0inv: np.ndarray
    A_G: np.ndarray
    A_G_frozen: np.ndarray
    B_G: np.ndarray
    k: int


def linear_coefficients(sys: SystemDefinition, profile: ShockProfile) -> LinearCoefficients:
    """``A_G(x)``, ``B_G(x)`` along the profile in the comoving frame."""
    sysc = sys.comoving(profile.shock.s)
    U = profile.values
    dU = profile.derivs[0]
    A0 = sysc.jac_G(U)
    A0inv = np.linalg.inv(A0)
    dF = sysc.jac_F(U)
    B = sysc.eval_B(U)
    dB = sysc.jac_B(U)
    frozen = dF @ A0inv
    corr = np.einsum("xijk,xj->xik", dB, dU)
    dA0inv = _d5(A0inv, profile.dx) if U.shape[0] >= 5 else np.zeros_like(A0inv)
    A_G = frozen - corr @ A0inv - B @ dA0inv
    return LinearCoefficients(profile.grid, A0, A0inv, A_G, frozen, B @ A0inv, sys.n - sys.r)


def endpoint_modes(sys: SystemDefinition, profile: ShockProfile, side: str) -> EndpointModes:
    """Eigen-system of the limiting operator at ``x -> -inf`` (``minus``) or ``+inf`` (``plus``)."""
    if side not in ("minus", "plus"):
        raise ValueError("side must be 'minus' or 'plus'")
    U = profile.shock.U_minus if side == "minus" else profile.shock.U_plus
    sysc = sys.comoving(profile.shock.s)
    A0inv = np.linalg.inv(sysc.jac_G(U))
    return modes_from_matrices(sysc.jac_F(U) @ A0inv, sysc.eval_B(U) @ A0inv, side, U)


def diffusion_rate_oracle(sys: SystemDefinition, U, j: int, s: float = 0.0,
                          xi: np.ndarray | None = None) -> float:
    """Small-frequency fit of the ``j``-th branch of ``-i xi A_G - xi^2 B_G``.

    Fits ``Re lambda_j(xi) = -beta xi^2 + c xi^4`` on ``xi`` in ``[1e-3, 1e-2]``;
    ``j`` is 1-based in ascending order of the convection speed.
    """
    sysc = sys.comoving(s) if s else sys
    U = np.asarray(U, float)
    A0inv = np.linalg.inv(sysc.jac_G(U))
    A = sysc.jac_F(U) @ A0inv
    B = sysc.eval_B(U) @ A0inv
    return _beta_fit(A, B, j, xi)


def _beta_fit(A: np.ndarray, B: np.ndarray, j: int, xi=None) -> float:
    n = A.shape[0]
    if not 1 <= j <= n:
        raise ValueError("branch index out of range")
    xi = np.logspace(-3, -2, 12) if xi is None else np.asarray(xi, float)
    a = np.sort(np.linalg.eigvals(A).real)
    groups = _clusters(a)
    # branches within a repeated speed are ordered by their diffusion rate
    lam = np.linalg.eigvals(-1j * xi[:, None, None] * A - (xi**2)[:, None, None] * B)
    speeds = -lam.imag / xi[:, None]
    target = a[j - 1]
    grp = next(g for g in groups if j - 1 in g)
    res = []
    for i, x in enumerate(xi):
        idx = np.argsort(np.abs(speeds[i] - target))[: grp.size]
        if np.max(np.abs(speeds[i, idx] - target)) > 0.25 * _min_gap(a, grp) + 1e-6:
            raise KernelError("branch tracking failed in the small-frequency fit")
        re = np.sort(lam[i, idx].real)[::-1]
        res.append(re[list(grp).index(j - 1)])
    res = np.array(res)
    X = np.column_stack([-xi**2, xi**4])
    coef, *_ = np.linalg.lstsq(X, res, rcond=None)
    return float(coef[0])


def _min_gap(a: np.ndarray, grp: np.ndarray) -> float:
    others = np.delete(a, grp)
    if others.size == 0:
        return np.inf
    return float(np.min(np.abs(others - a[grp[0]])))


def symbol_eta_oracle(A_G: np.ndarray, B_G: np.ndarray, k: int, a_star: np.ndarray,
                      xi: float = 1e3) -> np.ndarray:
    """Large-frequency damping of the hyperbolic branches of ``-i xi A_G - xi^2 B_G``.

    ``A_G``, ``B_G`` may be batched, shape ``(..., n, n)``; ``a_star`` holds the
    ``k`` hyperbolic speeds per batch element, shape ``(..., k)``.  Returns the
    damping rates ``-Re lambda`` matched to ``a_star``, Richardson-extrapolated
    from ``xi`` and ``2 xi`` to remove the ``O(xi^-2)`` correction.
    """
    def rates(x):
        lam = np.linalg.eigvals(-1j * x * A_G - x * x * B_G)
        re = lam.real
        idx = np.argsort(-re, axis=-1)[..., :k]
        hyp = np.take_along_axis(lam, idx, axis=-1)
        spd = -hyp.imag / x
        order = np.argsort(spd, axis=-1)
        hyp = np.take_along_axis(hyp, order, axis=-1)
        spd = np.take_along_axis(spd, order, axis=-1)
        if np.max(np.abs(spd - np.sort(a_star, axis=-1))) > 1e-2 * (1 + np.max(np.abs(a_star))):
            raise KernelError("large-frequency limit of the hyperbolic branches did not converge")
        return -hyp.real
    e1, e2 = rates(xi), rates(2 * xi)
    return (4 * e2 - e1) / 3


def eta_closed_form(A_G: np.ndarray, B_G: np.ndarray, k: int, Lstar: np.ndarray,
                    Rstar: np.ndarray) -> np.ndarray:
    """``L^T A12 B22^{-1} [A21 - A22 B22^{-1} B21 + B22^{-1} B21 A*] R`` (batched)."""
    A11, A12 = A_G[..., :k, :k], A_G[..., :k, k:]
    A21, A22 = A_G[..., k:, :k], A_G[..., k:, k:]
    B21, B22 = B_G[..., k:, :k], B_G[..., k:, k:]
    B22inv = np.linalg.inv(B22)
    W = B22inv @ B21
    Astar = A11 - A12 @ W
    D = A12 @ B22inv @ (A21 - A22 @ W + W @ Astar)
    return np.swapaxes(Lstar, -1, -2) @ D @ Rstar


def eta_printed_form(A_G: np.ndarray, B_G: np.ndarray, k: int, Lstar: np.ndarray,
                     Rstar: np.ndarray) -> np.ndarray | None:
    """``-L^T A12 [A21 - A22 B22^{-1} B21 + A* B22^{-1} B21] R``; ``None`` unless ``k == r``.

    Kept for comparison only: the last product is defined only for square
    blocks, and the overall sign gives negative damping on simple examples.
    """
    n = A_G.shape[-1]
    if n - k != k:
        return None
    A11, A12 = A_G[..., :k, :k], A_G[..., :k, k:]
    A21, A22 = A_G[..., k:, :k], A_G[..., k:, k:]
    B21, B22 = B_G[..., k:, :k], B_G[..., k:, k:]
    W = np.linalg.inv(B22) @ B21
    Astar = A11 - A12 @ W
    D = A12 @ (A21 - A22 @ W + Astar @ np.linalg.inv(B22) @ B21)
    return -(np.swapaxes(Lstar, -1, -2) @ D @ Rstar)


@dataclass(frozen=True)
class HyperbolicModes:
    """Hyperbolic speeds and modes of ``A*_G(x)`` sampled on the profile grid.

    For each cluster ``j``: ``a_star[j]`` (M,), ``Lstar[j]``/``Rstar[j]``
    (M, n-r, m_j), ``calL[j]``/``calR[j]`` (M, n, m_j), ``eta_star[j]``
    (M, m_j, m_j) and the oracle damping rates ``eta_oracle[j]`` (M, m_j).
    """

    x: np.ndarray
    J: int
    multiplicities: tuple
    a_star: list
    Lstar: list
    Rstar: list
    calL: list
    calR: list
    eta_star: list
    eta_oracle: list
    eta_printed: list
    diagnostics: dict


def hyperbolic_modes(sys: SystemDefinition, profile: ShockProfile,
                     coeffs: LinearCoefficients | None = None) -> HyperbolicModes:
    """Hyperbolic modes with dynamical normalization propagated outward from ``x = 0``.

    The right blocks are carried node to node by the spectral projector,
    ``R_{i+1} = P(x_{i+1}) R_i``, which makes ``L^T (R_{i+1} - R_i) = 0``
    exactly; the left blocks follow from the static normalization.
    """
    c = coeffs or linear_coefficients(sys, profile)
    k, n = c.k, sys.n
    M = c.x.size
    A11, A12 = c.A_G[:, :k, :k], c.A_G[:, :k, k:]
    B21, B22 = c.B_G[:, k:, :k], c.B_G[:, k:, k:]
    W = np.linalg.solve(B22, B21)
    Astar = A11 - A12 @ W
    sysc = sys.comoving(profile.shock.s)
    dF = sysc.jac_F(profile.values)
    alt = dF[:, :k, :k] @ np.linalg.inv(c.A0[:, :k, :k])
    identity_res = float(np.max(np.abs(Astar - alt)))

    w, V = np.linalg.eig(Astar)
    if np.max(np.abs(w.imag), initial=0.0) > 1e-10:
        raise KernelError("complex hyperbolic speeds along the profile")
    w = w.real
    order = np.argsort(w, axis=1)
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V.real, order[:, None, :], axis=2)
    center = int(np.argmin(np.abs(c.x)))
    groups = _clusters(w[center])
    mults = tuple(int(g.size) for g in groups)
    for i in range(M):
        if tuple(int(g.size) for g in _clusters(w[i])) != mults:
            raise KernelError(f"multiplicity change of the hyperbolic speeds at x={c.x[i]:.6g}")
    Vinv = np.linalg.inv(V)

    a_list, L_list, R_list, cL_list, cR_list, eta_list, orc_list, pr_list = ([] for _ in range(8))
    norm_res = 0.0
    dyn_res = 0.0
    lemma = 0.0
    a_star_all = w
    eta_orc = symbol_eta_oracle(c.A_G, c.B_G, k, a_star_all)
    for g in groups:
        P = V[:, :, g] @ Vinv[:, g, :]
        R = np.empty((M, k, g.size))
        R[center] = _orient(V[center][:, g].copy())
        for i in range(center + 1, M):
            R[i] = P[i] @ R[i - 1]
        for i in range(center - 1, -1, -1):
            R[i] = P[i] @ R[i + 1]
        Lhat = np.swapaxes(Vinv[:, g, :], 1, 2)
        Lt = np.linalg.solve(np.swapaxes(Lhat, 1, 2) @ R, np.swapaxes(Lhat, 1, 2))
        L = np.swapaxes(Lt, 1, 2)
        norm_res = max(norm_res, float(np.max(np.abs(Lt @ R - np.eye(g.size)))))
        dR = np.gradient(R, c.x, axis=0)
        dyn_res = max(dyn_res, float(np.max(np.abs(Lt @ dR))))
        calR = np.concatenate([R, -W @ R], axis=1)
        calL = np.concatenate([L, np.zeros((M, n - k, g.size))], axis=1)
        lemma = max(lemma, float(np.max(np.abs((c.A0inv @ calR)[:, k:, :]))))
        eta = eta_closed_form(c.A_G, c.B_G, k, L, R)
        a_list.append(np.mean(w[:, g], axis=1))
        L_list.append(L)
        R_list.append(R)
        cL_list.append(calL)
        cR_list.append(calR)
        eta_list.append(eta)
        orc_list.append(eta_orc[:, g])
        pr_list.append(eta_printed_form(c.A_G, c.B_G, k, L, R))
    eig_closed = [np.sort(np.linalg.eigvals(e).real, axis=1) for e in eta_list]
    oracle_gap = max(float(np.max(np.abs(np.sort(o, axis=1) - e))) for o, e in zip(orc_list, eig_closed))
    min_re = min(float(np.min(np.linalg.eigvals(e).real)) for e in eta_list)
    min_orc = min(float(np.min(o)) for o in orc_list)
    diag = {
        "astar_identity_residual": identity_res,
        "static_normalization_residual": norm_res,
        "dynamical_normalization_residual": dyn_res,
        "lemma_projection_residual": lemma,
        "eta_oracle_vs_closed_form": oracle_gap,
        "min_re_eta_closed_form": min_re,
        "min_eta_oracle": min_orc,
        "eta_printed_form_mean": [None if p is None else float(np.mean(p)) for p in pr_list],
    }
    return HyperbolicModes(c.x, len(groups), mults, a_list, L_list, R_list, cL_list, cR_list,
                           eta_list, orc_list, pr_list, diag)
