import numpy as np
import pytest

from wtstab import bloch, model, wavetrain


@pytest.fixture(scope="session")
def real_gl():
    return model.real_ginzburg_landau()


@pytest.fixture(scope="session")
def wt_stable(real_gl):
    """Closed-form wave train at q^2 = 0.2 (inside the stable band)."""
    return wavetrain.closed_form_lambda_omega(real_gl, np.sqrt(0.2))


@pytest.fixture(scope="session")
def dispersion_stable(real_gl, wt_stable):
    return bloch.compute_dispersion(real_gl, wt_stable, n_modes=32)
