import numpy as np
import pytest

from wtstab import kernel
from wtstab.errors import DomainError
from wtstab.kernel import GaussianBoundTemplate, PhaseKernelParams


@pytest.fixture(scope="module")
def kp(dispersion_stable, wt_stable):
    return PhaseKernelParams.from_dispersion(wt_stable, dispersion_stable)


def unit_kp(dispersion_stable, theta=1.0, d_perp=1.0, alpha=0.0):
    return PhaseKernelParams(alpha=alpha, theta=theta, d_perp=d_perp,
                             u_ad=dispersion_stable.u_ad,
                             uprime=dispersion_stable.q0)


class TestCutoff:
    def test_plateaus(self):
        assert kernel.chi_cutoff(0.3) == 0.0
        assert kernel.chi_cutoff(1.0) == 0.0
        assert kernel.chi_cutoff(2.0) == 1.0
        assert kernel.chi_cutoff(7.0) == 1.0

    def test_monotone(self):
        t = np.linspace(0.9, 2.1, 400)
        assert np.all(np.diff(kernel.chi_cutoff(t)) >= 0.0)

    def test_smooth_junctions(self):
        # chi'(1) = chi'(2) = 0 and chi'' continuous at both junctions
        assert kernel.chi_cutoff_prime(1.0) == 0.0
        assert kernel.chi_cutoff_prime(2.0) == 0.0
        h = 1e-4
        for tj in (1.0, 2.0):
            second_in = (kernel.chi_cutoff(tj) - 2 * kernel.chi_cutoff(tj + h)
                         + kernel.chi_cutoff(tj + 2 * h)) / h ** 2
            second_out = (kernel.chi_cutoff(tj) - 2 * kernel.chi_cutoff(tj - h)
                          + kernel.chi_cutoff(tj - 2 * h)) / h ** 2
            assert abs(second_in - second_out) < 1e-2  # both -> 0 at junctions


class TestPhaseKernel:
    def test_zero_before_cutoff(self, kp):
        e = kernel.eval_phase_kernel(kp, 0.3, 0.1, 0.7, 0.5)
        assert np.all(e == 0.0)
        assert np.all(kernel.eval_phase_kernel(kp, 0.0, 0.0, 0.0, 0.0) == 0.0)

    def test_prefactor_at_unit_coefficients(self, dispersion_stable):
        p = unit_kp(dispersion_stable)
        g = kernel.gaussian_factor(p, 0.0, 0.0, 2.0)
        assert np.isclose(float(g), 1.0 / (8.0 * np.pi), rtol=1e-14)

    def test_unit_mass(self, dispersion_stable):
        # Gauss-Hermite quadrature of the scalar factor over the plane
        p = unit_kp(dispersion_stable, theta=0.0025, d_perp=1.0)
        t = 3.0
        x, w = np.polynomial.hermite.hermgauss(60)
        sx = np.sqrt(4 * p.theta * t)
        sy = np.sqrt(4 * p.d_perp * t)
        vals = kernel.gaussian_factor(p, sx * x[:, None], sy * x[None, :], t)
        mass = np.sum(w[:, None] * w[None, :] * vals
                      * np.exp(x[:, None] ** 2 + x[None, :] ** 2)) * sx * sy
        assert abs(mass - 1.0) < 1e-8

    def test_mass_equals_cutoff_mid_ramp(self, dispersion_stable):
        p = unit_kp(dispersion_stable, theta=0.0025)
        t = 1.5
        x, w = np.polynomial.hermite.hermgauss(60)
        sx = np.sqrt(4 * p.theta * t)
        sy = np.sqrt(4 * p.d_perp * t)
        vals = kernel.gaussian_factor(p, sx * x[:, None], sy * x[None, :], t)
        mass = np.sum(w[:, None] * w[None, :] * vals
                      * np.exp(x[:, None] ** 2 + x[None, :] ** 2)) * sx * sy
        assert abs(mass - kernel.chi_cutoff(1.5)) < 1e-8

    def test_periodic_covariance(self, kp):
        # integer-period shift of both arguments leaves the kernel unchanged
        a = kernel.eval_phase_kernel(kp, 0.3, 0.1, 0.4, 3.0)
        b = kernel.eval_phase_kernel(kp, 0.3 + 2.0, 0.1 + 2.0, 0.4, 3.0)
        assert np.max(np.abs(a - b)) < 1e-12

    def test_translational_part_shape(self, kp):
        G = kernel.eval_translational_greens(kp, 0.2, 0.7, 0.1, 4.0)
        assert G.shape == (2, 2)
        e = kernel.eval_phase_kernel(kp, 0.2, 0.7, 0.1, 4.0)
        up = kp.uprime_at(0.2)
        assert np.allclose(G, np.outer(up, e))


class TestBoundTemplate:
    def test_values(self):
        tmpl = GaussianBoundTemplate(C=1.0, M=1.0, time_powers=(1.0, 0.5))
        assert np.isclose(kernel.eval_bound_template(tmpl, 0, 0, 0, 1.0),
                          2.0 ** -0.5)
        assert np.isclose(kernel.eval_bound_template(tmpl, 0, 0, 0, 4.0),
                          0.25 * 5.0 ** -0.5)

    def test_constants_validated(self):
        with pytest.raises(ValueError):
            GaussianBoundTemplate(C=0.5, M=2.0, time_powers=(1.0, 0.0))
        with pytest.raises(ValueError):
            GaussianBoundTemplate(C=2.0, M=0.5, time_powers=(1.0, 0.0))

    def test_positive_time_required(self):
        tmpl = GaussianBoundTemplate(C=1.0, M=1.0, time_powers=(1.0, 0.5))
        with pytest.raises(DomainError):
            kernel.eval_bound_template(tmpl, 0, 0, 0, 0.0)


class TestIdentities:
    def test_a4_gaussian(self):
        closed, quad = kernel.check_integral_identity("A4", {"a": -1.0, "b": 0.0})
        assert np.isclose(closed.real, np.sqrt(np.pi), rtol=1e-12)
        assert abs(closed - quad) < 1e-9 * abs(closed)

    def test_a6_value(self):
        closed, quad = kernel.check_integral_identity("A6", {"b": 4.0})
        assert np.isclose(closed, np.sqrt(np.pi) / 2.0, rtol=1e-12)
        assert abs(closed - quad) < 1e-9 * closed

    def test_i58a_origin(self):
        closed, quad = kernel.check_integral_identity(
            "I58a", {"M": 2.0, "t": 1.0, "zeta": 0.0, "y": 0.0, "alpha": 0.0})
        assert np.isclose(closed, np.pi, rtol=1e-12)
        assert abs(closed - quad) < 1e-9 * closed

    def test_randomized_sweep(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            angle = rng.uniform(0, 2 * np.pi)
            base = {"M": rng.uniform(1.2, 8.0), "t": rng.uniform(0.5, 5.0),
                    "zeta": rng.uniform(-3, 3), "y": rng.uniform(-3, 3),
                    "alpha": rng.uniform(-1, 1),
                    "beta": np.cos(angle), "gamma": np.sin(angle)}
            base["s"] = rng.uniform(0.0, 0.9 * base["t"])
            cases = {
                "A4": {"a": -rng.uniform(0.2, 4.0), "b": rng.uniform(-2.0, 2.0)},
                "A5": {"a": rng.uniform(0.0, 3.0), "b": rng.uniform(0.2, 4.0)},
                "A6": {"b": rng.uniform(0.2, 4.0)},
                "I54a": base, "I54b": base, "I58a": base, "I58b": base,
            }
            for name, params in cases.items():
                closed, quad = kernel.check_integral_identity(name, params)
                assert abs(closed - quad) <= 1e-9 * abs(closed), name

    def test_a4_complex_offset(self):
        closed, quad = kernel.check_integral_identity("A4", {"a": -0.7, "b": 0.4 + 0.3j})
        assert abs(closed - quad) < 1e-9 * abs(closed)

    @pytest.mark.parametrize("name,bad", [
        ("A4", {"a": 0.5, "b": 0.0}),
        ("A5", {"a": -1.0, "b": 1.0}),
        ("A6", {"b": -2.0}),
        ("I54a", {"M": 0.5, "t": 1.0, "zeta": 0, "y": 0, "alpha": 0,
                  "beta": 0.0, "gamma": 1.0}),
        ("I54a", {"M": 2.0, "t": 1.0, "zeta": 0, "y": 0, "alpha": 0,
                  "beta": 0.5, "gamma": 1.0}),
        ("I58b", {"M": 2.0, "t": 1.0, "s": 1.5, "zeta": 0, "y": 0, "alpha": 0}),
    ])
    def test_domain_errors(self, name, bad):
        with pytest.raises(DomainError):
            kernel.check_integral_identity(name, bad)

    def test_unknown_identity(self):
        with pytest.raises(KeyError):
            kernel.check_integral_identity("A7", {})


def test_kernel_requires_positive_diffusions(dispersion_stable):
    with pytest.raises(ValueError):
        PhaseKernelParams(alpha=0.0, theta=-1.0, d_perp=1.0,
                          u_ad=dispersion_stable.u_ad,
                          uprime=dispersion_stable.q0)
