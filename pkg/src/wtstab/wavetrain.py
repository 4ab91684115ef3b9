"""Period-1 wave-train profiles of the co-moving steady equation.

A wave train u(x,y,t) = U(k x - omega t) satisfies, in the co-moving
variable zeta = k x - omega t,

    D k^2 U'' + omega U' + f(U) = 0,   U(zeta + 1) = U(zeta).

Profiles are represented by Fourier coefficients on [0,1) together with
grid samples of U, U', U''.  `solve_profile` runs Newton on Fourier
collocation with the frequency omega as an extra unknown closed by an
integral phase condition; `closed_form_lambda_omega` builds the exact
single-harmonic profile of lambda-omega systems, which doubles as the
test oracle for the Newton path.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NoWaveTrain, SingularJacobian
from .model import ReactionDiffusionSystem

__all__ = [
    "WaveTrain",
    "solve_profile",
    "closed_form_lambda_omega",
    "profile_residual",
    "fourier_modes",
    "resample_profile",
]


def fourier_modes(n: int) -> np.ndarray:
    """Integer mode numbers in numpy fft order for an n-point period-1 grid."""
    return np.fft.fftfreq(n, d=1.0 / n)


def _spectral_derivative(values: np.ndarray, order: int) -> np.ndarray:
    n = values.shape[0]
    m = fourier_modes(n)
    if order % 2 == 1:
        m = m.copy()
        m[n // 2] = 0.0  # drop Nyquist for odd derivatives
    factor = (2j * np.pi * m) ** order
    return np.real(np.fft.ifft(factor[:, None] * np.fft.fft(values, axis=0), axis=0))


def resample_profile(profile_hat: np.ndarray, points: np.ndarray, derivative: int = 0) -> np.ndarray:
    """Evaluate the trigonometric interpolant at arbitrary points.

    profile_hat holds true Fourier coefficients c_m (fft order, fft/n
    normalization); returns sum_m c_m (2 pi i m)^d e^{2 pi i m zeta}.
    """
    n = profile_hat.shape[0]
    m = fourier_modes(n)
    if derivative % 2 == 1:
        m = m.copy()
        m[n // 2] = 0.0
    coeff = profile_hat * (2j * np.pi * m[:, None]) ** derivative
    phase = np.exp(2j * np.pi * np.multiply.outer(np.asarray(points, dtype=float), m))
    return np.real(phase @ coeff)


@dataclass(frozen=True)
class WaveTrain:
    """Solved period-1 profile with wavenumber k and frequency omega."""

    k: float
    omega: float
    n_modes: int
    profile_hat: np.ndarray  # (n_modes, n) complex Fourier coefficients
    profile: np.ndarray      # (n_modes, n) grid samples of U
    dprofile: np.ndarray     # U'
    ddprofile: np.ndarray    # U''
    residual_norm: float

    @property
    def n(self) -> int:
        return self.profile.shape[1]

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.n_modes) / self.n_modes

    @property
    def is_degenerate(self) -> bool:
        """Constant profile: the translational mode vanishes."""
        return float(np.max(np.abs(self.dprofile))) < 1e-8

    def evaluate(self, points, derivative: int = 0) -> np.ndarray:
        return resample_profile(self.profile_hat, points, derivative)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.float64(self.k).tobytes())
        h.update(np.float64(self.omega).tobytes())
        h.update(np.ascontiguousarray(self.profile).tobytes())
        return h.hexdigest()[:16]


def _from_samples(system: ReactionDiffusionSystem, k: float, omega: float,
                  samples: np.ndarray) -> WaveTrain:
    samples = np.asarray(samples, dtype=float)
    hat = np.fft.fft(samples, axis=0) / samples.shape[0]
    wt = WaveTrain(
        k=float(k),
        omega=float(omega),
        n_modes=samples.shape[0],
        profile_hat=hat,
        profile=samples,
        dprofile=_spectral_derivative(samples, 1),
        ddprofile=_spectral_derivative(samples, 2),
        residual_norm=np.nan,
    )
    object.__setattr__(wt, "residual_norm", profile_residual(wt, system))
    return wt


def profile_residual(wavetrain: WaveTrain, system: ReactionDiffusionSystem) -> float:
    """sup-norm of D k^2 U'' + omega U' + f(U) on a 4x refined grid."""
    fine = np.arange(4 * wavetrain.n_modes) / (4 * wavetrain.n_modes)
    u = wavetrain.evaluate(fine)
    du = wavetrain.evaluate(fine, derivative=1)
    ddu = wavetrain.evaluate(fine, derivative=2)
    res = (wavetrain.k ** 2) * ddu @ system.D.T + wavetrain.omega * du + system.reaction(u)
    return float(np.max(np.abs(res)))


def closed_form_lambda_omega(system: ReactionDiffusionSystem, q: float,
                             n_modes: int = 64) -> WaveTrain:
    """Exact wave train of a lambda-omega system at scaled wavenumber q = 2 pi k.

    The rotating-wave ansatz U(zeta) = r0 (cos 2 pi zeta, sin 2 pi zeta)
    balances the steady equation iff lam(r0) = q^2 and
    2 pi omega + omg(r0) = 0.
    """
    if "lambda_coeffs" not in system.params:
        raise ValueError("closed form requires a lambda-omega system")
    lam_c = np.asarray(system.params["lambda_coeffs"], dtype=float)
    omg_c = np.asarray(system.params["omega_coeffs"], dtype=float)

    # roots of lam(s) = q^2 in s = r0^2
    poly = lam_c.copy()
    poly[0] -= q ** 2
    roots = np.roots(poly[::-1]) if len(poly) > 1 else np.array([])
    real_pos = [
        float(np.real(s)) for s in np.atleast_1d(roots)
        if abs(np.imag(s)) < 1e-12 and np.real(s) > 0.0
    ]
    if not real_pos:
        raise NoWaveTrain(f"no positive amplitude solves lam(r0^2) = q^2 = {q**2:g}")
    s0 = max(real_pos)  # outer amplitude branch (r0 = sqrt(1-q^2) for real GL)
    r0 = np.sqrt(s0)

    def polyval(c, s):
        out = 0.0
        for cj in c[::-1]:
            out = out * s + cj
        return out

    omega = -polyval(omg_c, s0) / (2 * np.pi)
    zeta = np.arange(n_modes) / n_modes
    if q == 0.0:
        # zero wavenumber: the profile collapses to a constant equilibrium
        samples = np.tile(r0 * np.array([1.0, 0.0]), (n_modes, 1))
    else:
        samples = r0 * np.stack(
            [np.cos(2 * np.pi * zeta), np.sin(2 * np.pi * zeta)], axis=1
        )
    return _from_samples(system, q / (2 * np.pi), omega, samples)


def _dealiased_reaction(system: ReactionDiffusionSystem, samples: np.ndarray) -> np.ndarray:
    """f(U) evaluated on a 2x grid, then truncated back to n modes."""
    n = samples.shape[0]
    hat = np.fft.fft(samples, axis=0) / n
    big = np.zeros((2 * n, samples.shape[1]), dtype=complex)
    half = n // 2
    big[:half] = hat[:half]
    big[-half:] = hat[-half:]
    fine = np.real(np.fft.ifft(big * (2 * n), axis=0))
    f_fine = system.reaction(fine)
    f_hat = np.fft.fft(f_fine, axis=0) / (2 * n)
    out = np.zeros((n, samples.shape[1]), dtype=complex)
    out[:half] = f_hat[:half]
    out[-half:] = f_hat[-half:]
    return np.real(np.fft.ifft(out * n, axis=0))


def _diff_matrix(n: int, order: int) -> np.ndarray:
    m = fourier_modes(n)
    if order % 2 == 1:
        m = m.copy()
        m[n // 2] = 0.0
    factor = (2j * np.pi * m) ** order
    F = np.fft.fft(np.eye(n), axis=0)
    return np.real(np.fft.ifft(factor[:, None] * F, axis=0))


def solve_profile(system: ReactionDiffusionSystem, k: float, guess: np.ndarray,
                  omega_guess: float = 0.0, n_modes: int = 64,
                  tol: float = 1e-10, max_iter: int = 50) -> WaveTrain:
    """Newton solve of the collocated steady equation with unknown omega.

    The guess must have a nonzero derivative; the translation gauge is fixed
    by the integral phase condition <U - guess, guess'> = 0.
    """
    if n_modes < 16 or n_modes % 2:
        raise ValueError("n_modes must be an even integer >= 16")
    guess = np.asarray(guess, dtype=float)
    if guess.shape != (n_modes, system.n):
        raise ValueError(f"guess must have shape ({n_modes}, {system.n})")
    gprime = _spectral_derivative(guess, 1)
    if np.max(np.abs(gprime)) < 1e-12:
        raise SingularJacobian("constant guess: phase condition is degenerate")

    n, nc = n_modes, system.n
    D1 = _diff_matrix(n, 1)
    D2 = _diff_matrix(n, 2)
    L2 = (k ** 2) * np.kron(D2, system.D)  # flatten order: point-major, comp inner
    L1 = np.kron(D1, np.eye(nc))
    phase_row = (gprime / n).reshape(-1)

    u = guess.copy()
    omega = float(omega_guess)
    for _ in range(max_iter):
        du = _spectral_derivative(u, 1)
        F = ((k ** 2) * _spectral_derivative(u, 2) @ system.D.T
             + omega * du + _dealiased_reaction(system, u))
        phase = float(np.sum((u - guess) * gprime) / n)
        rhs = np.concatenate([F.reshape(-1), [phase]])

        J = np.zeros((n * nc + 1, n * nc + 1))
        J[:-1, :-1] = L2 + omega * L1
        Jloc = system.jacobian(u)  # (n, nc, nc)
        for j in range(n):
            J[j * nc:(j + 1) * nc, j * nc:(j + 1) * nc] += Jloc[j]
        J[:-1, -1] = du.reshape(-1)
        J[-1, :-1] = phase_row

        try:
            step = np.linalg.solve(J, -rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc
        if not np.all(np.isfinite(step)):
            raise SingularJacobian("Newton step is not finite")

        u = u + step[:-1].reshape(n, nc)
        omega += step[-1]
        wt = _from_samples(system, k, omega, u)
        if wt.residual_norm < tol and np.max(np.abs(step)) < tol:
            if wt.is_degenerate:
                raise NoWaveTrain("solution collapsed to a constant state")
            return wt
    raise NoConvergence(
        f"Newton stalled after {max_iter} iterations; residual "
        f"{profile_residual(_from_samples(system, k, omega, u), system):.3e}"
    )


def local_frame(wavetrain: WaveTrain, zeta) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal (tangent, normal) pair of the profile's local frame.

    The tangent follows U' (the translational direction); the normal is the
    Gram-Schmidt complement of U against it, falling back to coordinate
    vectors when either degenerates.
    """
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    du = wavetrain.evaluate(zeta, derivative=1)
    u = wavetrain.evaluate(zeta)
    n = u.shape[1]
    tang = np.zeros_like(du)
    norm = np.zeros_like(du)
    for i in range(zeta.shape[0]):
        t = du[i]
        if np.linalg.norm(t) < 1e-12:
            t = np.eye(n)[0]
        t = t / np.linalg.norm(t)
        r = u[i] - (u[i] @ t) * t
        if np.linalg.norm(r) < 1e-12:
            for e in np.eye(n):
                r = e - (e @ t) * t
                if np.linalg.norm(r) > 1e-6:
                    break
        tang[i] = t
        norm[i] = r / np.linalg.norm(r)
    return tang, norm
