"""Checks of the standing structural hypotheses near a base state.

Every check samples the neighborhood ball of the system on a uniform lattice
and reports a verdict together with the diagnostics it was based on.  No
check raises on a failed hypothesis; errors are reserved for invalid input.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ._numerics import golden_section_max, sym
from .errors import DissipativityError, DomainError, EvaluationError
from .model import SystemDefinition

__all__ = [
    "HypothesisReport",
    "default_xi_grid",
    "check_structural",
    "check_dissipativity_symbol",
    "check_genuine_nonlinearity_and_multiplicity",
    "find_compensator",
    "compensator_theta",
    "check_hypotheses",
    "characteristic_speeds",
]

GAP_TOL = 1e-8
SYM_TOL = 1e-12


def default_xi_grid(n_points: int = 201, lo: float = 1e-2, hi: float = 1e2) -> np.ndarray:
    """Log-spaced positive frequencies reflected to negative ones."""
    pos = np.logspace(np.log10(lo), np.log10(hi), n_points)
    return np.concatenate([-pos[::-1], pos])


@dataclass
class HypothesisReport:
    a1_ok: bool | None = None
    a2_ok: bool | None = None
    a3_ok: bool | None = None
    h1_ok: bool | None = None
    h2_ok: bool | None = None
    h3_ok: bool | None = None
    theta_symbol: float | None = None
    compensator: np.ndarray | None = None
    theta_compensator: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def all_ok(self) -> bool:
        flags = [self.a1_ok, self.a2_ok, self.a3_ok, self.h1_ok, self.h2_ok, self.h3_ok]
        comp = self.theta_compensator is not None and self.theta_compensator > 0
        return all(f is True for f in flags) and comp

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            out[f.name] = _jsonable(val)
        out["all_ok"] = self.all_ok
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, **kw)


def _jsonable(val):
    if isinstance(val, np.ndarray):
        return val.tolist()
    if isinstance(val, (np.floating, np.integer, np.bool_)):
        return val.item()
    if isinstance(val, dict):
        return {str(k): _jsonable(v) for k, v in val.items()}
    if isinstance(val, (list, tuple)):
        return [_jsonable(v) for v in val]
    return val


def _asym(M: np.ndarray) -> np.ndarray:
    scale = 1.0 + np.max(np.abs(M), axis=(-1, -2))
    return np.max(np.abs(M - np.swapaxes(M, -1, -2)), axis=(-1, -2)) / scale


def check_structural(sys: SystemDefinition, samples: np.ndarray | None = None) -> HypothesisReport:
    """Symmetry, positivity and block structure of the coefficients on the sampled ball."""
    pts = sys.sample_neighborhood() if samples is None else np.asarray(samples, float)
    dF, dG, B = sys.jac_F(pts), sys.jac_G(pts), sys.eval_B(pts)
    k = sys.n - sys.r
    finite = all(np.all(np.isfinite(M)) for M in (dF, dG, B))
    asym = {"dF": float(np.max(_asym(dF))), "dG": float(np.max(_asym(dG))), "B": float(np.max(_asym(B)))}
    min_eig_dG = float(np.min(np.linalg.eigvalsh(sym(dG)))) if finite else float("nan")
    min_eig_B = float(np.min(np.linalg.eigvalsh(sym(B)))) if finite else float("nan")
    symmetric = all(v <= SYM_TOL for v in asym.values())
    a1 = bool(finite and symmetric and min_eig_dG > 0 and min_eig_B >= -SYM_TOL)

    off_block = np.concatenate(
        [B[:, :k, :].reshape(len(pts), -1), B[:, k:, :k].reshape(len(pts), -1)], axis=1
    )
    block_exact = bool(np.all(off_block == 0.0))
    b = B[:, k:, k:]
    min_eig_b = float(np.min(np.linalg.eigvalsh(sym(b)))) if finite else float("nan")
    a3 = bool(finite and block_exact and min_eig_b > 0)

    rep = HypothesisReport(a1_ok=a1, a3_ok=a3)
    rep.diagnostics.update({
        "n_samples": int(len(pts)),
        "asymmetry": asym,
        "min_eig_dG": min_eig_dG,
        "min_eig_B": min_eig_B,
        "block_form_exact": block_exact,
        "max_offblock_B": float(np.max(np.abs(off_block))) if off_block.size else 0.0,
        "min_eig_b": min_eig_b,
    })
    return rep


def _symbol_theta(A0: np.ndarray, A: np.ndarray, B: np.ndarray, xi: np.ndarray) -> tuple[float, float]:
    """Return (theta, xi at which the bound binds) for one state."""
    A0inv = np.linalg.inv(A0)
    hyp = A0inv @ A
    par = A0inv @ B
    xi = xi[xi != 0]
    sym_mats = -1j * xi[:, None, None] * hyp - (xi**2)[:, None, None] * par
    try:
        lam = np.linalg.eigvals(sym_mats)
    except np.linalg.LinAlgError as exc:
        raise EvaluationError(f"eigen-solver failure in symbol scan: {exc}") from exc
    growth = np.max(lam.real, axis=1) * (1.0 + xi**2) / xi**2
    i = int(np.argmax(growth))
    return float(-growth[i]), float(xi[i])


def check_dissipativity_symbol(sys: SystemDefinition, U, xi_grid=None,
                               coordinates: str = "U") -> float:
    """Certified ``theta`` of the frozen symbol bound at one state.

    ``theta = -max_xi max Re sigma(-i xi A0^{-1} A - xi^2 A0^{-1} B) (1 + xi^2)/xi^2``;
    the system is dissipative at ``U`` iff ``theta > 0``.  With
    ``coordinates="G"`` the similar symbol ``-i xi A_G - xi^2 B_G`` is scanned.
    """
    xi = default_xi_grid() if xi_grid is None else np.asarray(xi_grid, float)
    if xi.size == 0 or np.all(xi == 0):
        raise ValueError("xi grid must contain nonzero frequencies")
    U = np.asarray(U, float)
    A0, A, B = sys.jac_G(U), sys.jac_F(U), sys.eval_B(U)
    if coordinates == "G":
        A0inv = np.linalg.inv(A0)
        return _symbol_theta(np.eye(sys.n), A @ A0inv, B @ A0inv, xi)[0]
    if coordinates != "U":
        raise ValueError("coordinates must be 'U' or 'G'")
    return _symbol_theta(A0, A, B, xi)[0]


def characteristic_speeds(sys: SystemDefinition, U) -> tuple[np.ndarray, np.ndarray]:
    """Sorted eigenvalues of ``A_G = dF dG^{-1}`` and the matching right eigenvectors in U-space.

    The U-space vectors solve ``dF r = a dG r``; they have unit length and a
    positive first nonzero component, which keeps orientations stable along
    continuous families.
    """
    U = np.asarray(U, float)
    A0 = sys.jac_G(U)
    M = np.linalg.solve(A0, sys.jac_F(U))
    w, V = np.linalg.eig(M)
    if np.max(np.abs(w.imag), initial=0.0) > 1e-10:
        raise EvaluationError("complex characteristic speeds")
    order = np.argsort(w.real)
    w, V = w.real[order], V.real[:, order]
    V = V / np.linalg.norm(V, axis=0)
    for j in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, j]) > 1e-12)
        if nz.size and V[nz[0], j] < 0:
            V[:, j] = -V[:, j]
    return w, V


def _gnl_coefficient(sys: SystemDefinition, U, p: int, h: float = 1e-6) -> float:
    U = np.asarray(U, float)
    _, V = characteristic_speeds(sys, U)
    grad = np.empty(sys.n)
    for k in range(sys.n):
        e = np.zeros(sys.n)
        e[k] = h * (1.0 + np.linalg.norm(U))
        ap = characteristic_speeds(sys, U + e)[0][p - 1]
        am = characteristic_speeds(sys, U - e)[0][p - 1]
        grad[k] = (ap - am) / (2.0 * e[k])
    return float(grad @ V[:, p - 1])


def _multiplicity_pattern(vals: np.ndarray, tol: float = GAP_TOL) -> tuple[int, ...]:
    vals = np.sort(np.asarray(vals).real)
    if vals.size == 0:
        return ()
    groups, count = [], 1
    for d in np.diff(vals):
        if d > tol:
            groups.append(count)
            count = 1
        else:
            count += 1
    groups.append(count)
    return tuple(groups)


def check_genuine_nonlinearity_and_multiplicity(sys: SystemDefinition, p: int,
                                                samples: np.ndarray | None = None) -> dict:
    """Simplicity, genuine nonlinearity and the hyperbolic-block conditions for field ``p``."""
    if not (1 <= p <= sys.n):
        raise ValueError(f"p must be in 1..{sys.n}, got {p}")
    pts = sys.sample_neighborhood() if samples is None else np.asarray(samples, float)
    k = sys.n - sys.r
    min_gap = np.inf
    min_gnl = np.inf
    min_sep = np.inf
    patterns = set()
    complex_seen = False
    for U in pts:
        try:
            a, _ = characteristic_speeds(sys, U)
        except EvaluationError:
            complex_seen = True
            continue
        ap = a[p - 1]
        others = np.delete(a, p - 1)
        if others.size:
            min_gap = min(min_gap, float(np.min(np.abs(others - ap))))
        min_gnl = min(min_gnl, abs(_gnl_coefficient(sys, U, p)))
        dF, dG = sys.jac_F(U), sys.jac_G(U)
        star = dF[:k, :k] @ np.linalg.inv(dG[:k, :k])
        mu = np.linalg.eigvals(star)
        if np.max(np.abs(mu.imag), initial=0.0) > 1e-10:
            complex_seen = True
        patterns.add(_multiplicity_pattern(mu.real))
        min_sep = min(min_sep, float(np.min(np.abs(mu.real - ap))))
    res = {
        "h1_ok": bool(not complex_seen and min_gap > GAP_TOL),
        "h2_ok": bool(not complex_seen and min_gnl > GAP_TOL),
        "h3_ok": bool(not complex_seen and len(patterns) == 1 and min_sep > GAP_TOL),
        "min_spectral_gap": float(min_gap),
        "min_gnl_coefficient": float(min_gnl),
        "hyperbolic_block_multiplicities": [list(pat) for pat in sorted(patterns)],
        "min_separation_from_a_p": float(min_sep),
        "gnl_coefficient_at_base": _gnl_coefficient(sys, sys.base_point, p),
    }
    return res


def _skew_basis(n: int) -> list[np.ndarray]:
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            E = np.zeros((n, n))
            E[i, j], E[j, i] = 1.0, -1.0
            basis.append(E)
    return basis


def compensator_theta(sys: SystemDefinition, U, K: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetric part of ``K A0^{-1} A + B``."""
    U = np.asarray(U, float)
    M = K @ np.linalg.solve(sys.jac_G(U), sys.jac_F(U)) + sys.eval_B(U)
    return float(np.min(np.linalg.eigvalsh(sym(M))))


def find_compensator(sys: SystemDefinition, U=None, *, seed: int = 0, sweeps: int = 3,
                     bound: float = 10.0, tol: float = 1e-10) -> dict:
    """Search the skew-symmetric matrices for one making ``K A0^{-1} A + B`` positive.

    Coordinate-wise golden-section maximization of the certificate ``theta``
    over the skew basis coefficients in ``[-bound, bound]``.  The certificate
    is a concave function of ``K`` (smallest eigenvalue of an affine symmetric
    family), so each one-dimensional search is unimodal.

    Raises
    ------
    DissipativityError
        If no ``K`` with ``theta > 0`` is found.
    """
    U = sys.base_point if U is None else np.asarray(U, float)
    basis = _skew_basis(sys.n)
    rng = np.random.default_rng(seed)
    coef = rng.uniform(-1.0, 1.0, len(basis))

    def K_of(c):
        return sum((ci * E for ci, E in zip(c, basis)), np.zeros((sys.n, sys.n)))

    best = compensator_theta(sys, U, K_of(coef))
    for _ in range(sweeps):
        for idx in rng.permutation(len(basis)):
            def f(x, idx=idx):
                c = coef.copy()
                c[idx] = x
                return compensator_theta(sys, U, K_of(c))
            x, val = golden_section_max(f, -bound, bound, tol=tol)
            if val >= best:
                coef[idx], best = x, val
    K = K_of(coef)
    theta = compensator_theta(sys, U, K)
    if not theta > 0:
        raise DissipativityError(f"no compensator with positive theta found (best {theta:.3e})")
    return {"K": K, "theta": theta, "coefficients": coef}


def check_hypotheses(sys: SystemDefinition, p: int, *, seed: int = 0,
                     samples: np.ndarray | None = None, xi_grid=None) -> HypothesisReport:
    """Run every check and assemble a full report."""
    pts = sys.sample_neighborhood() if samples is None else np.asarray(samples, float)
    rep = check_structural(sys, pts)
    xi = default_xi_grid() if xi_grid is None else xi_grid
    thetas = []
    for U in pts:
        try:
            thetas.append(check_dissipativity_symbol(sys, U, xi))
        except (EvaluationError, np.linalg.LinAlgError):
            thetas.append(float("-inf"))
    theta_symbol = float(np.min(thetas))
    rep.theta_symbol = theta_symbol
    rep.a2_ok = bool(theta_symbol > 0)
    rep.diagnostics["theta_symbol_at_base"] = check_dissipativity_symbol(sys, sys.base_point, xi)
    rep.diagnostics["theta_symbol_G_coordinates_at_base"] = check_dissipativity_symbol(
        sys, sys.base_point, xi, coordinates="G")
    try:
        comp = find_compensator(sys, sys.base_point, seed=seed)
        rep.compensator = comp["K"]
        rep.theta_compensator = comp["theta"]
        rep.diagnostics["theta_compensator_min_over_samples"] = float(
            min(compensator_theta(sys, U, comp["K"]) for U in pts))
    except (DissipativityError, DomainError, np.linalg.LinAlgError) as exc:
        rep.theta_compensator = None
        rep.diagnostics["compensator_error"] = str(exc)
    h = check_genuine_nonlinearity_and_multiplicity(sys, p, pts)
    rep.h1_ok, rep.h2_ok, rep.h3_ok = h.pop("h1_ok"), h.pop("h2_ok"), h.pop("h3_ok")
    rep.diagnostics.update(h)
    rep.diagnostics["p"] = p
    rep.diagnostics["model"] = sys.name
    return rep
