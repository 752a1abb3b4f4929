import numpy as np
import pytest

from multidose.core import PkParams


@pytest.fixture
def canonical():
    """The well-separated reference vector used across the suite."""
    return PkParams(ka=1.0, ke=0.1, gamma=1.0, volume=1.0)


@pytest.fixture
def clarithromycin():
    """Fitted single-dose parameters for a 250 mg oral dose, V=5000 mL."""
    return PkParams(ka=0.7480, ke=0.2031, gamma=19.1933, volume=5000.0)


def rel_err(value, reference):
    reference = np.asarray(reference, dtype=float)
    scale = np.maximum(np.abs(reference), 1e-300)
    return np.max(np.abs(np.asarray(value, dtype=float) - reference) / scale)
