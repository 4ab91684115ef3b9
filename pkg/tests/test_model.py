import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wtstab import model
from wtstab.errors import DimensionMismatch


def test_real_gl_fixed_points(real_gl):
    assert np.allclose(model.evaluate_reaction(real_gl, [0.0, 0.0]), [0.0, 0.0])
    assert np.allclose(model.evaluate_reaction(real_gl, [1.0, 0.0]), [0.0, 0.0])


def test_real_gl_cubic_value(real_gl):
    assert np.allclose(model.evaluate_reaction(real_gl, [0.5, 0.0]), [0.375, 0.0])


def test_jacobian_at_origin_is_identity(real_gl):
    assert np.allclose(model.evaluate_jacobian(real_gl, [0.0, 0.0]), np.eye(2))


def test_jacobian_on_circle(real_gl):
    J = model.evaluate_jacobian(real_gl, [1.0, 0.0])
    assert np.allclose(J, np.diag([-2.0, 0.0]))


def test_lambda_omega_substitution():
    sys_ = model.builtin_lambda_omega([1.0, -1.0], [0.0])
    out = model.evaluate_reaction(sys_, [0.3, 0.4])  # r = 0.5, lam = 0.75
    assert np.allclose(out, [0.225, 0.3])


def test_lambda_omega_rotation_term():
    sys_ = model.builtin_lambda_omega([1.0, -1.0], [1.0])
    assert np.allclose(model.evaluate_reaction(sys_, [1.0, 0.0]), [0.0, 1.0])


@pytest.mark.parametrize("name", ["real_gl", "lambda_omega"])
def test_jacobian_matches_finite_differences(name):
    sys_ = model.builtin_from_config(name)
    rng = np.random.default_rng(7)
    for _ in range(100):
        u = rng.uniform(-2.0, 2.0, size=sys_.n)
        J = model.evaluate_jacobian(sys_, u)
        J_fd = model.jacobian_fd(sys_, u)
        err = np.linalg.norm(J - J_fd) / (1.0 + np.linalg.norm(J))
        assert err < 1e-6


@settings(max_examples=50, deadline=None)
@given(phi=st.floats(-np.pi, np.pi), ux=st.floats(-2, 2), uy=st.floats(-2, 2))
def test_rotation_equivariance(phi, ux, uy):
    sys_ = model.builtin_lambda_omega([1.0, -1.0], [0.5, -0.3])
    R = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    u = np.array([ux, uy])
    lhs = model.evaluate_reaction(sys_, R @ u)
    rhs = R @ model.evaluate_reaction(sys_, u)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_diffusion_matrix_checks(real_gl):
    assert np.max(np.abs(real_gl.D - real_gl.D.T)) == 0.0
    assert np.min(np.linalg.eigvalsh(real_gl.D)) > 0.0
    with pytest.raises(ValueError):
        model.ReactionDiffusionSystem(
            n=2, D=np.array([[1.0, 0.1], [0.0, 1.0]]),
            reaction=real_gl.reaction, jacobian=real_gl.jacobian)
    with pytest.raises(ValueError):
        model.ReactionDiffusionSystem(
            n=2, D=np.diag([1.0, -0.5]),
            reaction=real_gl.reaction, jacobian=real_gl.jacobian)


def test_dimension_mismatch(real_gl):
    with pytest.raises(DimensionMismatch):
        model.evaluate_reaction(real_gl, [1.0, 0.0, 0.0])
    with pytest.raises(DimensionMismatch):
        model.evaluate_jacobian(real_gl, [1.0])


def test_builtin_catalogue():
    with pytest.raises(ValueError):
        model.builtin_from_config("nope")
    sys_ = model.builtin_from_config("lambda_omega",
                                     {"lambda_coeffs": [1.0, -1.0],
                                      "omega_coeffs": [0.0, 0.1]})
    assert sys_.n == 2 and sys_.params["omega_coeffs"] == (0.0, 0.1)
