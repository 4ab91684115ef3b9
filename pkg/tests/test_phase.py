import numpy as np
import pytest

from wtstab import phase, sim2d
from wtstab.field import Field2D, spectral_dz
from wtstab.greens import make_delta_source
from wtstab.kernel import PhaseKernelParams
from wtstab.phase import (extract_phase, linear_phase_prediction,
                          phase_time_derivatives, shifted_residual)

GRID = dict(Lx=4, Ly=32.0, Nx=64, Ny=64)


def state_field(wt, delta=0.0, Lx=4, Ly=32.0, Nx=64, Ny=64, t=5.0):
    """u(zeta) = U(zeta - delta): the wave shifted right by delta."""
    zeta = Lx * np.arange(Nx) / Nx
    U = wt.evaluate((zeta - delta) % 1.0)
    return Field2D(Lx=Lx, Ly=Ly, values=np.repeat(U[:, None, :], Ny, axis=1), time=t)


@pytest.fixture(scope="module")
def kp(wt_stable, dispersion_stable):
    return PhaseKernelParams.from_dispersion(wt_stable, dispersion_stable)


class TestExtract:
    def test_exact_translate(self, wt_stable):
        snap = state_field(wt_stable, delta=0.01)
        ph = extract_phase(snap, wt_stable)
        assert np.max(np.abs(ph.values - 0.01)) < 1e-8
        v, _ = shifted_residual(snap, ph, wt_stable)
        assert v.sup_norm() < 1e-8

    def test_unperturbed_wave(self, wt_stable):
        snap = state_field(wt_stable, delta=0.0)
        ph = extract_phase(snap, wt_stable)
        assert np.max(np.abs(ph.values)) < 1e-12

    def test_polar_angle_oracle(self, real_gl, wt_stable):
        # real GL: the local phase is readable from the polar angle of u
        spec = sim2d.PerturbationSpec(kind="fully_localized", E0=1e-2, M0=0.5)
        v0, _ = sim2d.make_perturbation(spec, wt_stable, **GRID)
        out = sim2d.nonlinear_evolve(real_gl, wt_stable, v0, [5.0], dt=0.01,
                                     record_derivatives=False)
        snap = out["u"][-1][1]
        ph = extract_phase(snap, wt_stable)
        u = snap.values
        r = np.linalg.norm(u, axis=-1)
        r0 = float(np.max(np.linalg.norm(wt_stable.profile, axis=-1)))
        ang = np.arctan2(u[..., 1], u[..., 0])
        zeta = snap.zeta()[:, None] % 1.0
        psi_polar = (2 * np.pi * zeta - ang) / (2 * np.pi)
        psi_polar = (psi_polar + 0.5) % 1.0 - 0.5
        mask = r > r0 / 2
        assert np.max(np.abs(psi_polar[mask] - ph.values[mask])) < 1e-6

    def test_translate_consistency(self, wt_stable):
        # shifting a constant-phase state by delta adds delta to psi
        base = state_field(wt_stable, delta=0.02)
        ph0 = extract_phase(base, wt_stable)
        for delta in (0.05, 0.1):
            moved = state_field(wt_stable, delta=0.02 + delta)
            ph1 = extract_phase(moved, wt_stable)
            assert np.max(np.abs(ph1.values - ph0.values - delta)) < 1e-8

    def test_contraction_precondition(self, wt_stable):
        snap = state_field(wt_stable)
        bad = snap.with_values(snap.values + 2.0)
        with pytest.raises(ValueError):
            extract_phase(bad, wt_stable)

    def test_dpsi_spectral_consistency(self, real_gl, wt_stable):
        spec = sim2d.PerturbationSpec(kind="fully_localized", E0=1e-2, M0=0.5)
        v0, _ = sim2d.make_perturbation(spec, wt_stable, **GRID)
        out = sim2d.nonlinear_evolve(real_gl, wt_stable, v0, [5.0], dt=0.01,
                                     record_derivatives=False)
        ph = extract_phase(out["u"][-1][1], wt_stable)
        again = spectral_dz(ph.psi)
        assert np.max(np.abs(again.values - ph.dpsi["z"].values)) < 1e-14


class TestShiftedResidual:
    def test_zero_phase_returns_raw_perturbation(self, real_gl, wt_stable):
        spec = sim2d.PerturbationSpec(kind="fully_localized", E0=1e-2, M0=0.5)
        v0, _ = sim2d.make_perturbation(spec, wt_stable, **GRID)
        out = sim2d.nonlinear_evolve(real_gl, wt_stable, v0, [3.0], dt=0.01)
        t, snap = out["u"][-1]
        zero = extract_phase(state_field(wt_stable, 0.0), wt_stable)
        v, vz = shifted_residual(snap, zero, wt_stable)
        vt = out["v"][-1][1]
        assert np.max(np.abs(v.values - vt.values)) < 1e-10
        assert np.max(np.abs(vz.values - out["v_z"][-1][1].values)) < 1e-8

    def test_conversion_inequalities(self, real_gl, wt_stable):
        # mean-value bounds relating shifted and unshifted perturbations
        spec = sim2d.PerturbationSpec(kind="fully_localized", E0=1e-2, M0=0.5)
        v0, _ = sim2d.make_perturbation(spec, wt_stable, **GRID)
        out = sim2d.nonlinear_evolve(real_gl, wt_stable, v0, [5.0], dt=0.01)
        t, snap = out["u"][-1]
        vt = out["v"][-1][1]
        vt_z = out["v_z"][-1][1]
        vt_zz = spectral_dz(vt_z)
        ph = extract_phase(snap, wt_stable)
        v, v_z = shifted_residual(snap, ph, wt_stable)

        up = float(np.max(np.abs(wt_stable.dprofile)))
        upp = float(np.max(np.abs(wt_stable.ddprofile)))
        vtz_sup = float(np.max(np.linalg.norm(vt_z.values, axis=-1)))
        vtzz_sup = float(np.max(np.linalg.norm(vt_zz.values, axis=-1)))
        psi = np.abs(ph.values)
        psi_z = np.abs(ph.dpsi["z"].values[:, :, 0])

        lhs1 = np.linalg.norm(v.values - vt.values, axis=-1)
        rhs1 = (up + vtz_sup) * psi + 1e-8
        assert np.mean(lhs1 <= rhs1) >= 0.999

        lhs2 = np.linalg.norm(v_z.values - vt_z.values, axis=-1)
        rhs2 = (upp + vtzz_sup) * psi + (up + vtz_sup) * psi_z + 1e-8
        assert np.mean(lhs2 <= rhs2) >= 0.999


class TestLinearPrediction:
    def test_zero_data(self, kp):
        v0 = Field2D(Lx=4, Ly=32.0, values=np.zeros((64, 64, 2)))
        ph = linear_phase_prediction(v0, kp, 5.0)
        assert np.all(ph.values == 0.0)

    def test_zero_before_cutoff(self, kp, wt_stable):
        v0 = make_delta_source(wt_stable, 4, 32.0, 64, 64, sigma0=0.1)
        ph = linear_phase_prediction(v0, kp, 0.8)
        assert np.all(ph.values == 0.0)

    def test_line_case_matches_1d_gaussian_oracle(self, kp, wt_stable):
        # (0,1)-line data: psi is zeta-independent and equals the 1D
        # convolution of -<u_ad, v0> against the transverse heat kernel
        Lx, Ly, Nx, Ny = 4, 256.0, 64, 1024
        spec = sim2d.PerturbationSpec(kind="line_localized", beta_gamma=(0.0, 1.0),
                                      E0=1e-2, M0=1.0)
        v0, _ = sim2d.make_perturbation(spec, wt_stable, Lx=Lx, Ly=Ly, Nx=Nx, Ny=Ny)
        for t in (4.0, 16.0):
            ph = linear_phase_prediction(v0, kp, t)
            assert np.max(np.std(ph.values, axis=0)) < 1e-12 * np.max(np.abs(ph.values))
            y = v0.y()
            uad = kp.u_ad_at(v0.zeta() % 1.0)
            c_line = np.einsum("xj,xyj->xy", uad, v0.values).mean(axis=0)
            width = 4.0 * kp.d_perp * t
            G = np.exp(-(y[:, None] - y[None, :]) ** 2 / width) / np.sqrt(np.pi * width)
            oracle = -(G * c_line[None, :]).sum(axis=1) * (Ly / Ny)
            assert np.max(np.abs(ph.values[0] - oracle)) < 1e-8
        sup4 = np.max(np.abs(linear_phase_prediction(v0, kp, 4.0).values))
        sup16 = np.max(np.abs(linear_phase_prediction(v0, kp, 16.0).values))
        # transverse diffusion: sup decays like t^{-1/2}
        assert abs(sup4 / sup16 - 2.0) < 0.2

    def test_linear_vs_direct_agreement(self, real_gl, wt_stable, kp):
        # small amplitude: kernel prediction tracks the measured fit
        Lx, Ly, Nx, Ny = 8, 64.0, 128, 128
        spec = sim2d.PerturbationSpec(kind="fully_localized", E0=1e-3, M0=0.01)
        v0, _ = sim2d.make_perturbation(spec, wt_stable, Lx=Lx, Ly=Ly, Nx=Nx, Ny=Ny)
        times = [2.0, 4.0, 8.0, 16.0]
        out = sim2d.nonlinear_evolve(real_gl, wt_stable, v0, times, dt=0.01,
                                     record_derivatives=False)
        for (t, snap) in out["u"]:
            direct = extract_phase(snap, wt_stable)
            lin = linear_phase_prediction(v0, kp, float(t))
            err = np.max(np.abs(lin.values - direct.values))
            assert err <= 0.1 * direct.sup() + 10.0 * 1e-3 ** 2


def test_time_derivative_stencil(wt_stable):
    # psi_t via nonuniform differences is exact on quadratics in t
    phs = []
    for t in (1.0, 1.5, 2.5):
        snap = state_field(wt_stable, delta=0.0, t=t)
        ph = extract_phase(snap, wt_stable)
        quad = 0.003 * t ** 2 - 0.001 * t
        ph = phase.PhaseField(psi=ph.psi.with_values(
            np.full_like(ph.psi.values, quad), time=t),
            dpsi=ph.dpsi, method="direct_fit", time=t)
        phs.append(ph)
    out = phase_time_derivatives(phs)
    mid = out[1]
    expected = 2 * 0.003 * 1.5 - 0.001
    assert np.max(np.abs(mid.dpsi["t"].values - expected)) < 1e-12
