import numpy as np
import pytest

from bosonval.interferometer import Coupler, Circuit, compose


def random_complex(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


@pytest.fixture
def coupler50():
    """The 2-mode balanced coupler."""
    return compose(Circuit(2, (Coupler(0, 0.5),)))
