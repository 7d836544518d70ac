"""Scattering of incoming characteristic modes at a Lax shock."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import KernelError
from ..model import SystemDefinition
from ..profile import ShockProfile
from .modes import EndpointModes, modes_from_matrices

__all__ = ["ScatteringData", "scattering_coefficients", "endstate_scattering"]


@dataclass(frozen=True)
class ScatteringData:
    """Decomposition of each endpoint mode into outgoing modes plus the jump ``[G]``.

    ``c_out[(k, j, side_out, side_in)]`` is the coefficient of the outgoing
    mode ``r_j`` on ``side_out`` in the expansion of ``r_k`` from ``side_in``;
    ``c_excited[side_in][k]`` is the coefficient of ``[G]``.
    """

    c_out: dict
    c_excited: dict
    pi: np.ndarray
    pi_minus: np.ndarray
    pi_plus: np.ndarray
    jump: np.ndarray
    outgoing_minus: np.ndarray
    outgoing_plus: np.ndarray
    basis: np.ndarray
    residual: float
    pi_mismatch: float

    def table(self) -> list[dict]:
        rows = []
        for (k, j, side_out, side_in), val in sorted(self.c_out.items()):
            rows.append({"k": k + 1, "j": j + 1, "outgoing_side": side_out, "incoming_side": side_in,
                         "coefficient": float(val)})
        return rows


def scattering_coefficients(modes_minus: EndpointModes, modes_plus: EndpointModes,
                            profile: ShockProfile | None = None, p: int | None = None,
                            sys: SystemDefinition | None = None,
                            jump: np.ndarray | None = None) -> ScatteringData:
    """Solve ``sum c r_out + c0 [G] = r_k`` for every mode of both endstates.

    Raises
    ------
    KernelError
        If the outgoing modes plus ``[G]`` do not form a basis (non-Lax or
        numerically characteristic configuration).
    """
    n = modes_minus.a.size
    out_m = np.flatnonzero(modes_minus.a < 0)
    out_p = np.flatnonzero(modes_plus.a > 0)
    if jump is not None:
        jump = np.asarray(jump, float)
    elif sys is not None and profile is not None:
        jump = sys.eval_G(profile.shock.U_plus) - sys.eval_G(profile.shock.U_minus)
    elif profile is not None and profile.G_values is not None:
        jump = profile.G_values[-1] - profile.G_values[0]
    else:
        raise KernelError("conserved endstate values are unavailable")
    if out_m.size + out_p.size + 1 != n:
        raise KernelError(
            f"outgoing count {out_m.size}+{out_p.size}+1 != {n}: not a Lax configuration")
    basis = np.column_stack([modes_minus.r[:, out_m], modes_plus.r[:, out_p], jump])
    cond = np.linalg.cond(basis)
    if not np.isfinite(cond) or cond > 1e12:
        raise KernelError(f"singular scattering basis (condition number {cond:.3e})")
    inv = np.linalg.inv(basis)
    c_out, c_exc = {}, {"minus": np.zeros(n), "plus": np.zeros(n)}
    resid = 0.0
    for side_in, modes in (("minus", modes_minus), ("plus", modes_plus)):
        coef = np.linalg.solve(basis, modes.r)
        resid = max(resid, float(np.max(np.abs(basis @ coef - modes.r))))
        for kk in range(n):
            for col, j in enumerate(out_m):
                c_out[(kk, int(j), "minus", side_in)] = float(coef[col, kk])
            for col, j in enumerate(out_p):
                c_out[(kk, int(j), "plus", side_in)] = float(coef[out_m.size + col, kk])
            c_exc[side_in][kk] = coef[-1, kk]
    inc_m = modes_minus.a > 0
    inc_p = modes_plus.a < 0
    pi_m = modes_minus.l[:, inc_m] @ c_exc["minus"][inc_m]
    pi_p = modes_plus.l[:, inc_p] @ c_exc["plus"][inc_p]
    pi = inv[-1]
    mismatch = float(max(np.max(np.abs(pi_m - pi_p)), np.max(np.abs(pi_m - pi))))
    return ScatteringData(c_out, c_exc, pi, pi_m, pi_p, jump, out_m, out_p, basis, resid, mismatch)


def endstate_scattering(sys: SystemDefinition, shock) -> ScatteringData:
    """Scattering data from the frozen endstate symbols alone (no profile needed).

    Useful to diagnose a triple ``(U-, U+, s)`` before any profile exists.
    """
    def frozen(U):
        A0inv = np.linalg.inv(sys.jac_G(U))
        A_G = (sys.jac_F(U) - shock.s * sys.jac_G(U)) @ A0inv
        return A_G, sys.eval_B(U) @ A0inv

    mm = modes_from_matrices(*frozen(shock.U_minus), "minus", shock.U_minus)
    mp = modes_from_matrices(*frozen(shock.U_plus), "plus", shock.U_plus)
    return scattering_coefficients(mm, mp, jump=sys.eval_G(shock.U_plus) - sys.eval_G(shock.U_minus))
