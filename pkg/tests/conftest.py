import numpy as np
import pytest

from mdrdf import LagrangePair, Spectrum, evaluate, midpoint_omega, spectrum_from_predictor
from mdrdf.spectra import PredictorCoeffs


def cosine_spectrum(n=4096):
    return Spectrum(np.cos(midpoint_omega(n)) + 1.0)


def ar1_spectrum(a=0.9, innovation=1.0, n=4096):
    return spectrum_from_predictor(
        PredictorCoeffs(coeffs=np.array([a]), innovation_variance=innovation), n
    )


@pytest.fixture(scope="session")
def cosine():
    return cosine_spectrum()


@pytest.fixture(scope="session")
def ar1():
    return ar1_spectrum()


@pytest.fixture(scope="session")
def example1_point(cosine):
    """Worked example: cosine spectrum at multipliers (0.2380, 2.700)."""
    return evaluate(cosine, LagrangePair(0.2380, 2.700))
