"""Reaction-diffusion systems u_t = D (u_xx + u_yy) + f(u).

A system is a bundle of component count, SPD diffusion matrix, reaction
term and its exact Jacobian.  The built-in catalogue covers the
lambda-omega family

    f(u) = ( lam(r) u1 - omg(r) u2,  omg(r) u1 + lam(r) u2 ),   r^2 = u1^2 + u2^2,

with lam and omg given as polynomials in r^2 so everything stays smooth at
the origin.  The real Ginzburg-Landau system is lam(r) = 1 - r^2, omg = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionMismatch

__all__ = [
    "ReactionDiffusionSystem",
    "evaluate_reaction",
    "evaluate_jacobian",
    "builtin_lambda_omega",
    "real_ginzburg_landau",
    "builtin_from_config",
    "jacobian_fd",
]


@dataclass(frozen=True)
class ReactionDiffusionSystem:
    """Immutable description of one reaction-diffusion system."""

    n: int
    D: np.ndarray
    reaction: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        if D.shape != (self.n, self.n):
            raise DimensionMismatch(f"D must be {self.n}x{self.n}, got {D.shape}")
        if np.max(np.abs(D - D.T)) != 0.0:
            raise ValueError("diffusion matrix must be exactly symmetric")
        if np.min(np.linalg.eigvalsh(D)) <= 0.0:
            raise ValueError("diffusion matrix must be positive definite")
        object.__setattr__(self, "D", D)

    def check_state(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.n:
            raise DimensionMismatch(
                f"state has {u.shape[-1]} components, system has {self.n}"
            )
        return u


def evaluate_reaction(system: ReactionDiffusionSystem, u) -> np.ndarray:
    """f(u); broadcasts over leading axes of u."""
    u = system.check_state(u)
    return system.reaction(u)


def evaluate_jacobian(system: ReactionDiffusionSystem, u) -> np.ndarray:
    """Exact Jacobian f'(u); broadcasts over leading axes of u."""
    u = system.check_state(u)
    return system.jacobian(u)


def jacobian_fd(system: ReactionDiffusionSystem, u, scale: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian, step scale*(1+|u|).  Test oracle."""
    u = np.asarray(u, dtype=float)
    h = scale * (1.0 + np.linalg.norm(u))
    J = np.empty((system.n, system.n))
    for j in range(system.n):
        e = np.zeros(system.n)
        e[j] = h
        J[:, j] = (system.reaction(u + e) - system.reaction(u - e)) / (2 * h)
    return J


def _polyval_even(coeffs: np.ndarray, s) -> np.ndarray:
    """Evaluate sum_j coeffs[j] * s^j (polynomial in s = r^2)."""
    out = np.zeros_like(np.asarray(s, dtype=float))
    for c in coeffs[::-1]:
        out = out * s + c
    return out


def _polyder(coeffs: np.ndarray) -> np.ndarray:
    if len(coeffs) <= 1:
        return np.zeros(1)
    return coeffs[1:] * np.arange(1, len(coeffs))


def builtin_lambda_omega(lambda_coeffs, omega_coeffs, name: str = "lambda_omega") -> ReactionDiffusionSystem:
    """Two-component lambda-omega system with D = I.

    lambda_coeffs / omega_coeffs are polynomial coefficients in r^2
    (constant term first), so lam(r) = 1 - r^2 is [1.0, -1.0].
    """
    lam_c = np.asarray(lambda_coeffs, dtype=float)
    omg_c = np.asarray(omega_coeffs, dtype=float)
    if not (np.all(np.isfinite(lam_c)) and np.all(np.isfinite(omg_c))):
        raise ValueError("coefficient lists must be finite")
    dlam_c = _polyder(lam_c)
    domg_c = _polyder(omg_c)

    def reaction(u):
        u = np.asarray(u, dtype=float)
        s = u[..., 0] ** 2 + u[..., 1] ** 2
        lam = _polyval_even(lam_c, s)
        omg = _polyval_even(omg_c, s)
        return np.stack(
            [lam * u[..., 0] - omg * u[..., 1], omg * u[..., 0] + lam * u[..., 1]],
            axis=-1,
        )

    def jacobian(u):
        # f(u) = A(s) u with s = |u|^2, so f'(u) = A(s) + 2 (A'(s) u) u^T.
        u = np.asarray(u, dtype=float)
        s = u[..., 0] ** 2 + u[..., 1] ** 2
        lam = _polyval_even(lam_c, s)
        omg = _polyval_even(omg_c, s)
        dlam = _polyval_even(dlam_c, s)
        domg = _polyval_even(domg_c, s)
        J = np.zeros(u.shape[:-1] + (2, 2))
        J[..., 0, 0] = lam
        J[..., 0, 1] = -omg
        J[..., 1, 0] = omg
        J[..., 1, 1] = lam
        Apu = np.stack(
            [dlam * u[..., 0] - domg * u[..., 1], domg * u[..., 0] + dlam * u[..., 1]],
            axis=-1,
        )
        J += 2.0 * Apu[..., :, None] * u[..., None, :]
        return J

    return ReactionDiffusionSystem(
        n=2,
        D=np.eye(2),
        reaction=reaction,
        jacobian=jacobian,
        name=name,
        params={
            "lambda_coeffs": tuple(lam_c.tolist()),
            "omega_coeffs": tuple(omg_c.tolist()),
        },
    )


def real_ginzburg_landau() -> ReactionDiffusionSystem:
    """f(u) = (1 - |u|^2) u with D = I; the desk-scale test bed."""
    return builtin_lambda_omega([1.0, -1.0], [0.0], name="real_gl")


_BUILTINS = {
    "real_gl": lambda params: real_ginzburg_landau(),
    "lambda_omega": lambda params: builtin_lambda_omega(
        params.get("lambda_coeffs", [1.0, -1.0]),
        params.get("omega_coeffs", [0.0, 0.2]),
    ),
}


def builtin_from_config(name: str, params: dict | None = None) -> ReactionDiffusionSystem:
    """Instantiate a catalogue system from a config `model` section."""
    if name not in _BUILTINS:
        raise ValueError(f"unknown builtin system {name!r}; have {sorted(_BUILTINS)}")
    return _BUILTINS[name](params or {})
