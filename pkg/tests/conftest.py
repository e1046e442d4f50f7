import math

import numpy as np
import pytest

from papsim.atom import AtomSpec, LevelSpec, ProbeSpec, angular_frequency, default_potassium
from papsim.experiments import DEFAULT_GRID, Setup
from papsim.shaper import TemporalField


@pytest.fixture(scope="session")
def atom():
    return default_potassium()


@pytest.fixture(scope="session")
def grid():
    return DEFAULT_GRID


@pytest.fixture(scope="session")
def setup():
    return Setup()


@pytest.fixture(scope="session")
def flat_setup():
    """Default setup with an effectively flat source spectrum."""
    return Setup(source_fwhm=1e4)


def two_level(wavelength=770.0):
    return AtomSpec("g", (LevelSpec("e", wavelength, 1.0),), ProbeSpec())


def gaussian_field(area, sigma=50.0, dt=0.5, carrier=None, wavelength=770.0, half_width=12.0):
    """Real Gaussian envelope of pulse area ``area`` (unit dipole, unit scale)."""
    carrier = angular_frequency(wavelength) if carrier is None else carrier
    n = int(2 * half_width * sigma / dt) + 1
    t = (np.arange(n) - n // 2) * dt
    env = area / (sigma * math.sqrt(2 * math.pi)) * np.exp(-0.5 * (t / sigma) ** 2)
    return TemporalField(float(t[0]), dt, env.astype(complex), carrier)
