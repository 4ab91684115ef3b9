"""Pointwise nonlinearities of the perturbation equations.

Two coordinate systems, two nonlinearities.  In the unshifted frame the
perturbation v~ = u - U obeys (d_t - L) v~ = N1 with the quadratic
remainder N1 = f(U + v~) - f(U) - f'(U) v~, and its derivative obeys the
companion N2 = (f'(U + v~) - f'(U)) (v~_z + U'), which carries a term
linear in v~.  In the shifted frame the residual v and phase psi obey a
perturbation equation whose right-hand side N collects every interaction
of v, psi and their derivatives; it is transcribed here group by group so
each printed block is separately testable.  All of them vanish at least
quadratically in (v, psi); `quadratic_scaling_probe` measures the log-log
slope that certifies it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DenominatorTooSmall
from .model import ReactionDiffusionSystem
from .wavetrain import WaveTrain

__all__ = [
    "ModulationState",
    "eval_unshifted_nonlinearities",
    "eval_modulated_nonlinearity",
    "modulated_nonlinearity_terms",
    "scale_state",
    "quadratic_scaling_probe",
]


@dataclass(frozen=True)
class ModulationState:
    """Point values of v, psi and the derivatives entering the shifted
    perturbation equation, at location zeta."""

    zeta: float
    v: np.ndarray
    v_z: np.ndarray
    v_y: np.ndarray
    v_zz: np.ndarray
    v_zy: np.ndarray
    psi_z: float = 0.0
    psi_y: float = 0.0
    psi_t: float = 0.0
    psi_zz: float = 0.0
    psi_zy: float = 0.0
    psi_yy: float = 0.0
    psi_zt: float = 0.0
    psi_zzz: float = 0.0
    psi_zyy: float = 0.0


_V_FIELDS = ("v", "v_z", "v_y", "v_zz", "v_zy")
_PSI_FIELDS = ("psi_z", "psi_y", "psi_t", "psi_zz", "psi_zy", "psi_yy",
               "psi_zt", "psi_zzz", "psi_zyy")


def scale_state(state: ModulationState, eps: float) -> ModulationState:
    """Scale v, psi and all their derivatives jointly by eps."""
    updates = {name: getattr(state, name) * eps for name in _V_FIELDS + _PSI_FIELDS}
    return replace(state, **updates)


def eval_unshifted_nonlinearities(system: ReactionDiffusionSystem,
                                  wavetrain: WaveTrain, zeta: float,
                                  v, v_z):
    """(N1, N2) at one point of the unshifted frame."""
    v = np.asarray(v, dtype=float)
    v_z = np.asarray(v_z, dtype=float)
    U = wavetrain.evaluate([zeta])[0]
    Up = wavetrain.evaluate([zeta], derivative=1)[0]
    fU = system.reaction(U)
    JU = system.jacobian(U)
    N1 = system.reaction(U + v) - fU - JU @ v
    N2 = (system.jacobian(U + v) - JU) @ (v_z + Up)
    return N1, N2


def modulated_nonlinearity_terms(system: ReactionDiffusionSystem,
                                 wavetrain: WaveTrain,
                                 state: ModulationState) -> dict:
    """The printed groups of the shifted-frame nonlinearity, separately.

    Keys: reaction, phase_time, advection, diffusion_linear,
    diffusion_ratio1, diffusion_ratio2.  Their sum is the nonlinearity.
    """
    one_plus = 1.0 + state.psi_z
    if abs(one_plus) <= 0.5:
        raise DenominatorTooSmall(f"1 + psi_z = {one_plus:.3g} inside the guard")
    D = system.D
    k2 = wavetrain.k ** 2
    om = wavetrain.omega
    U = wavetrain.evaluate([state.zeta])[0]
    Up = wavetrain.evaluate([state.zeta], derivative=1)[0]
    Upp = wavetrain.evaluate([state.zeta], derivative=2)[0]
    v, vz, vy = state.v, state.v_z, state.v_y
    vzz, vzy = state.v_zz, state.v_zy
    pz, py, pt = state.psi_z, state.psi_y, state.psi_t
    pzz, pzy, pyy = state.psi_zz, state.psi_zy, state.psi_yy
    pzt, pzzz, pzyy = state.psi_zt, state.psi_zzz, state.psi_zyy

    fU = system.reaction(U)
    JU = system.jacobian(U)
    reaction = (system.reaction(U + v) - fU - JU @ v) * one_plus
    phase_time = vz * pt + v * pzt
    advection = -om * (vz * pz + v * pzz)
    diffusion_linear = -D @ (
        v * (k2 * pzzz + pzyy)
        + vz * (3.0 * k2 * pzz + pyy)
        + 2.0 * vy * pzy
        + 2.0 * k2 * vzz * pz
        + vzy * (pz + py)
    )
    diffusion_ratio1 = (D @ (
        (Up + vz) * (py * pzy + pz * pzy + 2.0 * k2 * pz * pzz)
        + (Upp + vzz) * (py * pz + k2 * pz ** 2)
    )) / one_plus
    diffusion_ratio2 = -(D @ ((Up + vz) * (pz * pzz * py + k2 * pz ** 2 * pzz))) / one_plus ** 2
    return {
        "reaction": reaction,
        "phase_time": phase_time,
        "advection": advection,
        "diffusion_linear": diffusion_linear,
        "diffusion_ratio1": diffusion_ratio1,
        "diffusion_ratio2": diffusion_ratio2,
    }


def eval_modulated_nonlinearity(system: ReactionDiffusionSystem,
                                wavetrain: WaveTrain,
                                state: ModulationState) -> np.ndarray:
    """Full shifted-frame nonlinearity at one point."""
    terms = modulated_nonlinearity_terms(system, wavetrain, state)
    return sum(terms.values())


def quadratic_scaling_probe(evaluate, base_state: ModulationState, eps_list):
    """log-log slope of |evaluate(scale_state(base, eps))| against eps.

    eps_list should span at least three decades.  Returns (slope, C) with
    C = exp(intercept), the fitted prefactor.
    """
    eps = np.asarray(sorted(eps_list), dtype=float)
    if len(eps) < 3 or eps[-1] / eps[0] < 1e3 * (1 - 1e-9):
        raise ValueError("need >= 3 scales spanning >= 3 decades")
    norms = np.array([
        float(np.linalg.norm(np.atleast_1d(evaluate(scale_state(base_state, e)))))
        for e in eps
    ])
    if np.any(norms <= 0):
        raise ValueError("nonlinearity vanished at a probe scale; pick another state")
    A = np.vstack([np.log(eps), np.ones_like(eps)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(norms), rcond=None)
    return float(coef[0]), float(np.exp(coef[1]))
