"""Hyperbolic-parabolic systems ``G(U)_t + F(U)_x = (B(U) U_x)_x``.

A :class:`SystemDefinition` bundles the three evaluators, their Jacobians and
the block sizes.  Evaluators must broadcast over leading axes: a state array
of shape ``(..., n)`` maps to ``(..., n)`` for ``G``/``F``, ``(..., n, n)`` for
``B`` and the Jacobians, and ``(..., n, n, n)`` for ``dB`` where
``dB[..., i, j, k] = dB_ij/dU_k``.

Two builtin systems are provided:

``SYM2``
    ``G(U) = U``, ``F(u, v) = (v, u + v**2/2)``, ``B = diag(0, b)``.
``isentropic-NS``
    Lagrangian isentropic gas dynamics ``v_t - u_x = 0``,
    ``u_t + p(v)_x = (mu u_x / v)_x`` with ``p(v) = kappa v**-gamma``, stored
    in the entropy variables ``W = (-p(v), u)``.  In these variables ``dF``,
    ``dG`` and ``B`` are symmetric, so the model is symmetric in the working
    coordinates although the conserved form is only symmetrizable.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, NamedTuple

import numpy as np

from .errors import DomainError, EvaluationError, ModelError

Array = np.ndarray
VectorMap = Callable[[Array], Array]

__all__ = [
    "SystemDefinition",
    "StateSplit",
    "SystemEvaluation",
    "evaluate_system",
    "builtin_model",
    "register_system",
    "load_model_file",
    "model_from_spec",
    "BUILTIN_MODELS",
]


def _fd_jacobian(func: VectorMap, U: Array) -> Array:
    """Central-difference Jacobian with step ``1e-6 * (1 + |U|)``.

    Works for vector-valued (``(..., m)``) and matrix-valued (``(..., m, m)``)
    maps; the differentiated state index is appended as the last axis.
    """
    U = np.asarray(U, dtype=float)
    h = 1e-6 * (1.0 + np.linalg.norm(U, axis=-1, keepdims=True))
    cols = []
    for k in range(U.shape[-1]):
        dU = np.zeros_like(U)
        dU[..., k] = h[..., 0]
        diff = np.asarray(func(U + dU)) - np.asarray(func(U - dU))
        scale = 2.0 * h[..., 0]
        scale = scale.reshape(scale.shape + (1,) * (diff.ndim - scale.ndim))
        cols.append(diff / scale)
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class StateSplit:
    """Hyperbolic (``u``, first ``n - r`` entries) and parabolic (``v``) parts."""

    hyperbolic: Array
    parabolic: Array

    @classmethod
    def from_state(cls, U: Array, r: int) -> "StateSplit":
        U = np.asarray(U, dtype=float)
        n = U.shape[-1]
        return cls(U[..., : n - r].copy(), U[..., n - r :].copy())

    def join(self) -> Array:
        return np.concatenate([self.hyperbolic, self.parabolic], axis=-1)


class SystemEvaluation(NamedTuple):
    G: Array
    F: Array
    B: Array
    dG: Array
    dF: Array
    dB: Array


@dataclass(frozen=True)
class SystemDefinition:
    """Immutable description of a Kawashima-class system.

    Parameters
    ----------
    n, r : int
        State dimension and size of the parabolic block (``1 <= r < n``).
    eval_G, eval_F, eval_B : callable
        Broadcasting evaluators.
    jac_G, jac_F, jac_B : callable
        Broadcasting Jacobians.
    base_point : ndarray
        The base state around which the hypotheses are checked.
    neighborhood_radius : float
        Radius of the ball around ``base_point`` that stands in for the
        neighborhood of validity.
    symmetric : bool
        Whether ``dF``, ``dG``, ``B`` are expected to be symmetric.
    inverse_G : callable, optional
        Closed-form inverse of ``G``; otherwise Newton iteration is used.
    frame_speed : float
        Speed ``s`` already subtracted from the flux (``F - s G``).
    """

    n: int
    r: int
    eval_G: VectorMap
    eval_F: VectorMap
    eval_B: VectorMap
    jac_G: VectorMap
    jac_F: VectorMap
    jac_B: VectorMap
    base_point: Array
    neighborhood_radius: float = 0.5
    name: str = "custom"
    params: dict = field(default_factory=dict)
    symmetric: bool = True
    symmetrizable: bool = False
    inverse_G: VectorMap | None = None
    frame_speed: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (1 <= self.r < self.n):
            raise ModelError(f"need 1 <= r < n, got n={self.n}, r={self.r}")
        base = np.asarray(self.base_point, dtype=float)
        if base.shape != (self.n,):
            raise ModelError(f"base_point must have shape ({self.n},)")
        object.__setattr__(self, "base_point", base)

    # -- coordinates -------------------------------------------------------
    def split(self, U: Array) -> StateSplit:
        return StateSplit.from_state(U, self.r)

    def in_neighborhood(self, U: Array, slack: float = 1e-12) -> Array:
        dist = np.linalg.norm(np.asarray(U, float) - self.base_point, axis=-1)
        return dist <= self.neighborhood_radius * (1.0 + slack)

    def sample_neighborhood(self, points_per_axis: int = 11, radius: float | None = None) -> Array:
        """Uniform lattice on the cube around the base point, clipped to the ball."""
        R = self.neighborhood_radius if radius is None else radius
        axis = np.linspace(-R, R, points_per_axis)
        mesh = np.stack(np.meshgrid(*([axis] * self.n), indexing="ij"), axis=-1)
        pts = mesh.reshape(-1, self.n)
        pts = pts[np.linalg.norm(pts, axis=1) <= R * (1 + 1e-12)]
        return self.base_point + pts

    def G_inverse(self, Gval: Array, guess: Array | None = None, tol: float = 1e-12,
                  max_iter: int = 50) -> Array:
        """Solve ``G(U) = Gval`` for ``U`` (batched over leading axes)."""
        Gval = np.asarray(Gval, dtype=float)
        if self.inverse_G is not None:
            return np.asarray(self.inverse_G(Gval), dtype=float)
        U = np.broadcast_to(self.base_point if guess is None else guess, Gval.shape).copy()
        for _ in range(max_iter):
            res = np.asarray(self.eval_G(U)) - Gval
            if np.max(np.abs(res), initial=0.0) <= tol * (1.0 + np.max(np.abs(Gval), initial=0.0)):
                return U
            U = U - np.linalg.solve(self.jac_G(U), res[..., None])[..., 0]
        raise EvaluationError("Newton iteration for G^{-1} did not converge")

    # -- derived systems ---------------------------------------------------
    def comoving(self, s: float) -> "SystemDefinition":
        """The same system in a frame moving with speed ``s`` (flux ``F - sG``)."""
        F, dF, G, dG = self.eval_F, self.jac_F, self.eval_G, self.jac_G
        return dataclasses.replace(
            self,
            eval_F=lambda U: F(U) - s * G(U),
            jac_F=lambda U: dF(U) - s * dG(U),
            frame_speed=self.frame_speed + s,
            name=f"{self.name}@s={s:.17g}" if s else self.name,
        )

    def with_viscosity(self, eval_B: VectorMap, jac_B: VectorMap | None = None) -> "SystemDefinition":
        jac = jac_B if jac_B is not None else (lambda U: _fd_jacobian(eval_B, U))
        return dataclasses.replace(self, eval_B=eval_B, jac_B=jac)

    def to_spec(self) -> dict:
        return {"name": self.name.split("@")[0], "params": dict(self.params)}


def evaluate_system(sys: SystemDefinition, U: Array, check_domain: bool = True) -> SystemEvaluation:
    """All evaluator and Jacobian values at ``U``.

    Raises
    ------
    DomainError
        If ``U`` is outside the neighborhood ball.
    EvaluationError
        If any evaluator returns a non-finite value.
    """
    U = np.asarray(U, dtype=float)
    if check_domain and not np.all(sys.in_neighborhood(U)):
        raise DomainError(
            f"state outside neighborhood radius {sys.neighborhood_radius} of {sys.base_point}"
        )
    out = SystemEvaluation(
        G=np.asarray(sys.eval_G(U), float),
        F=np.asarray(sys.eval_F(U), float),
        B=np.asarray(sys.eval_B(U), float),
        dG=np.asarray(sys.jac_G(U), float),
        dF=np.asarray(sys.jac_F(U), float),
        dB=np.asarray(sys.jac_B(U), float),
    )
    for name, val in out._asdict().items():
        if not np.all(np.isfinite(val)):
            raise EvaluationError(f"non-finite value in {name}")
    return out


def register_system(n: int, r: int, G: VectorMap, F: VectorMap, B: VectorMap, *,
                    jac_G: VectorMap | None = None, jac_F: VectorMap | None = None,
                    jac_B: VectorMap | None = None, base_point=None,
                    neighborhood_radius: float = 0.5, name: str = "custom",
                    symmetric: bool = True, inverse_G: VectorMap | None = None,
                    params: dict | None = None) -> SystemDefinition:
    """Build a system from user callables; missing Jacobians use central differences."""
    return SystemDefinition(
        n=n, r=r, eval_G=G, eval_F=F, eval_B=B,
        jac_G=jac_G or (lambda U: _fd_jacobian(G, U)),
        jac_F=jac_F or (lambda U: _fd_jacobian(F, U)),
        jac_B=jac_B or (lambda U: _fd_jacobian(B, U)),
        base_point=np.zeros(n) if base_point is None else np.asarray(base_point, float),
        neighborhood_radius=neighborhood_radius, name=name, symmetric=symmetric,
        inverse_G=inverse_G, params=dict(params or {}),
    )


# -- builtins --------------------------------------------------------------

def _sym2(params: dict) -> SystemDefinition:
    b = float(params.get("b", 1.0))
    radius = float(params.get("radius", 0.5))
    if b < 0:
        raise ModelError("SYM2 viscosity b must be nonnegative")
    if radius <= 0:
        raise ModelError("radius must be positive")

    def G(U):
        return np.array(U, dtype=float, copy=True)

    def F(U):
        U = np.asarray(U, float)
        u, v = U[..., 0], U[..., 1]
        return np.stack([v, u + 0.5 * v * v], axis=-1)

    def Bm(U):
        U = np.asarray(U, float)
        out = np.zeros(U.shape + (2,))
        out[..., 1, 1] = b
        return out

    def dG(U):
        U = np.asarray(U, float)
        return np.broadcast_to(np.eye(2), U.shape + (2,)).copy()

    def dF(U):
        U = np.asarray(U, float)
        out = np.zeros(U.shape + (2,))
        out[..., 0, 1] = 1.0
        out[..., 1, 0] = 1.0
        out[..., 1, 1] = U[..., 1]
        return out

    def dB(U):
        U = np.asarray(U, float)
        return np.zeros(U.shape + (2, 2))

    return SystemDefinition(
        n=2, r=1, eval_G=G, eval_F=F, eval_B=Bm, jac_G=dG, jac_F=dF, jac_B=dB,
        base_point=np.zeros(2), neighborhood_radius=radius, name="SYM2",
        params={"b": b, "radius": radius}, symmetric=True, inverse_G=G,
    )


def _isentropic_ns(params: dict) -> SystemDefinition:
    gamma = float(params.get("gamma", 1.4))
    mu = float(params.get("mu", 1.0))
    kappa = float(params.get("kappa", 1.0))
    v_ref = float(params.get("v_ref", 1.0))
    radius = float(params.get("radius", 0.2))
    if gamma <= 1.0:
        raise ModelError("isentropic-NS requires gamma > 1")
    if mu <= 0 or kappa <= 0 or v_ref <= 0 or radius <= 0:
        raise ModelError("isentropic-NS requires mu, kappa, v_ref, radius > 0")

    def specific_volume(w1):
        return (-np.asarray(w1, float) / kappa) ** (-1.0 / gamma)

    def G(W):
        W = np.asarray(W, float)
        return np.stack([specific_volume(W[..., 0]), W[..., 1]], axis=-1)

    def F(W):
        W = np.asarray(W, float)
        return np.stack([-W[..., 1], -W[..., 0]], axis=-1)

    def Bm(W):
        W = np.asarray(W, float)
        out = np.zeros(W.shape + (2,))
        out[..., 1, 1] = mu / specific_volume(W[..., 0])
        return out

    def dG(W):
        W = np.asarray(W, float)
        v = specific_volume(W[..., 0])
        out = np.zeros(W.shape + (2,))
        out[..., 0, 0] = v ** (gamma + 1.0) / (kappa * gamma)
        out[..., 1, 1] = 1.0
        return out

    def dF(W):
        W = np.asarray(W, float)
        out = np.zeros(W.shape + (2,))
        out[..., 0, 1] = -1.0
        out[..., 1, 0] = -1.0
        return out

    def dB(W):
        W = np.asarray(W, float)
        v = specific_volume(W[..., 0])
        dv = v ** (gamma + 1.0) / (kappa * gamma)
        out = np.zeros(W.shape + (2, 2))
        out[..., 1, 1, 0] = -mu / v**2 * dv
        return out

    def inverse_G(Gval):
        Gval = np.asarray(Gval, float)
        if np.any(Gval[..., 0] <= 0):
            raise EvaluationError("specific volume must stay positive")
        return np.stack([-kappa * Gval[..., 0] ** (-gamma), Gval[..., 1]], axis=-1)

    base = np.array([-kappa * v_ref ** (-gamma), 0.0])
    return SystemDefinition(
        n=2, r=1, eval_G=G, eval_F=F, eval_B=Bm, jac_G=dG, jac_F=dF, jac_B=dB,
        base_point=base, neighborhood_radius=radius, name="isentropic-NS",
        params={"gamma": gamma, "mu": mu, "kappa": kappa, "v_ref": v_ref, "radius": radius},
        symmetric=True, symmetrizable=True, inverse_G=inverse_G,
        metadata={
            "coordinates": "entropy variables W = (-p(v), u)",
            "conserved": "(v, u)",
            "to_working": lambda vu: inverse_G(vu),
            "to_conserved": G,
        },
    )


BUILTIN_MODELS = {"SYM2": _sym2, "isentropic-NS": _isentropic_ns}


def builtin_model(name: str, params: dict | None = None) -> SystemDefinition:
    """Instantiate a builtin system by name."""
    try:
        factory = BUILTIN_MODELS[name]
    except KeyError:
        raise ModelError(f"unknown model {name!r}; choose from {sorted(BUILTIN_MODELS)}") from None
    return factory(dict(params or {}))


def model_from_spec(spec: dict[str, Any]) -> SystemDefinition:
    if not isinstance(spec, dict) or "name" not in spec:
        raise ModelError("model spec must be an object with a 'name' key")
    extra = set(spec) - {"name", "params"}
    if extra:
        raise ModelError(f"unknown model spec keys: {sorted(extra)}")
    return builtin_model(spec["name"], spec.get("params") or {})


def load_model_file(path: str | Path) -> SystemDefinition:
    """Read a ``{"name": ..., "params": {...}}`` JSON model file."""
    with open(path, encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"malformed model file {path}: {exc}") from exc
    return model_from_spec(spec)
