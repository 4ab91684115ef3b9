"""Phase extraction and the shifted perturbation.

The perturbed solution is re-coordinatized as

    u(zeta + psi(zeta, y, t), y, t) = U(zeta) + v(zeta, y, t),

where the scalar phase field psi soaks up the translational drift and
the shifted residual v decays faster than the raw perturbation u - U.
Two routes to psi are provided: the linear-order prediction, a Gaussian
convolution of the initial data against the translational kernel, and a
direct per-point fit of the shift minimizing |u(zeta+psi, y) - U(zeta)|.

Shifted evaluations use a truncated Taylor stack of spectral
zeta-derivatives (order 10), accurate to ~1e-10 for |psi| up to about
0.15 periods; the admissible branch is |psi| < 0.5 and points leaving it
are flagged, not fatal.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import factorial

import numpy as np

from .errors import MissingSeries
from .field import Field2D, spectral_dy, spectral_dz
from .greens import scalar_kernel_convolution
from .kernel import PhaseKernelParams
from .wavetrain import WaveTrain

__all__ = [
    "PhaseField",
    "linear_phase_prediction",
    "extract_phase",
    "shifted_residual",
    "phase_time_derivatives",
]

_TAYLOR_ORDER = 10
_BRANCH = 0.5


@dataclass(frozen=True)
class PhaseField:
    """Scalar phase on the grid with spectral derivatives."""

    psi: Field2D                    # n = 1
    dpsi: dict                      # keys z, y, zz, zy, yy (t, zt when known)
    method: str                     # linear_kernel | direct_fit
    time: float
    diverged: np.ndarray | None = None  # per-point branch-violation flags

    @property
    def values(self) -> np.ndarray:
        return self.psi.values[:, :, 0]

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _spectral_dpsi(psi: Field2D) -> dict:
    dz = spectral_dz(psi)
    return {
        "z": dz,
        "y": spectral_dy(psi),
        "zz": spectral_dz(psi, 2),
        "zy": spectral_dy(dz),
        "yy": spectral_dy(psi, 2),
    }


def _phase_field(values: np.ndarray, like: Field2D, method: str, t: float,
                 diverged=None) -> PhaseField:
    psi = Field2D(Lx=like.Lx, Ly=like.Ly, values=values[:, :, None], time=t)
    return PhaseField(psi=psi, dpsi=_spectral_dpsi(psi), method=method,
                      time=t, diverged=diverged)


def linear_phase_prediction(v0: Field2D, kernel: PhaseKernelParams, t: float) -> PhaseField:
    """psi(zeta, y, t) = - integral of e(zeta, zb, y - yb, t) v0(zb, yb).

    The quadrature in zb on the uniform grid and the FFT convolution in y
    fuse into one periodic convolution of the scalar Gaussian against the
    u_ad-weighted density of v0.  Zero for t <= 1 under the cutoff.
    """
    conv = scalar_kernel_convolution(kernel, v0, t)
    return _phase_field(-conv, v0, "linear_kernel", t)


def _taylor_stack(field: Field2D, order: int) -> np.ndarray:
    """Spectral zeta-derivative stack D^p field / p!, p = 0..order."""
    out = np.empty((order + 1,) + field.values.shape)
    out[0] = field.values
    cur = field
    for p in range(1, order + 1):
        cur = spectral_dz(cur)
        out[p] = cur.values / factorial(p)
    return out


def _eval_shift(stack: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Horner evaluation of field(zeta + psi, y) from the Taylor stack."""
    out = stack[-1] * psi[..., None]
    for p in range(stack.shape[0] - 2, 0, -1):
        out = (out + stack[p]) * psi[..., None]
    return out + stack[0]


def extract_phase(snapshot: Field2D, wavetrain: WaveTrain,
                  max_iter: int = 8, tol: float = 1e-12) -> PhaseField:
    """Per-point Gauss-Newton fit of the small shift aligning u with U.

    Minimizes |u(zeta+psi, y) - U(zeta)|^2 over psi at every grid point,
    starting from the translational projection of u - U.  Points leaving
    the |psi| < 0.5 branch are flagged in `diverged` and frozen at the
    clipped value.
    """
    U = wavetrain.evaluate(snapshot.zeta() % 1.0)            # (Nx, n)
    Up = wavetrain.evaluate(snapshot.zeta() % 1.0, derivative=1)
    dev = snapshot.values - U[:, None, :]
    sup_dev = float(np.max(np.linalg.norm(dev, axis=-1)))
    sup_up = float(np.max(np.linalg.norm(Up, axis=-1)))
    if sup_up < 1e-12:
        raise ValueError("degenerate profile: no translational direction to fit")
    if sup_dev > 0.2 * sup_up:
        raise ValueError(
            f"snapshot too far from the wave train for a contraction-valid fit "
            f"(|u - U| = {sup_dev:.3g} vs 0.2 |U'| = {0.2 * sup_up:.3g})"
        )

    stack = _taylor_stack(snapshot, _TAYLOR_ORDER)
    # d/dpsi stack: derivative orders shifted down by one
    dstack = np.empty_like(stack)
    for p in range(stack.shape[0] - 1):
        dstack[p] = stack[p + 1] * (p + 1)
    dstack[-1] = 0.0

    up2 = np.sum(Up * Up, axis=-1)
    denom0 = np.maximum(up2, 1e-12 * np.max(up2))[:, None]
    psi = -np.einsum("xn,xyn->xy", Up, dev) / denom0

    diverged = np.zeros(psi.shape, dtype=bool)
    for _ in range(max_iter):
        r = _eval_shift(stack, psi) - U[:, None, :]
        rp = _eval_shift(dstack, psi)
        num = np.sum(r * rp, axis=-1)
        den = np.sum(rp * rp, axis=-1)
        step = -num / np.maximum(den, 1e-300)
        psi = psi + np.where(diverged, 0.0, step)
        bad = np.abs(psi) >= _BRANCH
        diverged |= bad
        psi = np.clip(psi, -_BRANCH + 1e-9, _BRANCH - 1e-9)
        if np.max(np.abs(step)) < tol:
            break
    return _phase_field(psi, snapshot, "direct_fit", snapshot.time,
                        diverged=diverged if diverged.any() else None)


def shifted_residual(snapshot: Field2D, psi: PhaseField, wavetrain: WaveTrain):
    """v(zeta, y) = u(zeta + psi, y) - U(zeta), plus its spectral v_z."""
    U = wavetrain.evaluate(snapshot.zeta() % 1.0)
    stack = _taylor_stack(snapshot, _TAYLOR_ORDER)
    v = _eval_shift(stack, psi.values) - U[:, None, :]
    vf = snapshot.with_values(v)
    return vf, spectral_dz(vf)


def phase_time_derivatives(phases: list) -> list:
    """Attach psi_t and psi_zt via nonuniform second-order differences.

    Input is the chronological list of PhaseFields from one run; interior
    entries get dpsi extended with keys 't' and 'zt', the endpoints are
    returned unchanged.
    """
    if len(phases) < 3:
        return list(phases)
    out = [phases[0]]
    for i in range(1, len(phases) - 1):
        pm, p0, pp = phases[i - 1], phases[i], phases[i + 1]
        h1 = p0.time - pm.time
        h2 = pp.time - p0.time
        if h1 <= 0 or h2 <= 0:
            raise MissingSeries("phase snapshots must be strictly increasing in time")
        wm = -h2 / (h1 * (h1 + h2))
        w0 = (h2 - h1) / (h1 * h2)
        wp = h1 / (h2 * (h1 + h2))
        psi_t = wm * pm.psi.values + w0 * p0.psi.values + wp * pp.psi.values
        psit_field = p0.psi.with_values(psi_t)
        dpsi = dict(p0.dpsi)
        dpsi["t"] = psit_field
        dpsi["zt"] = spectral_dz(psit_field)
        out.append(replace(p0, dpsi=dpsi))
    out.append(phases[-1])
    return out
