"""Level structure, probe constants and unit conversions.

Units used throughout the package: wavelengths in nm, times in fs,
angular frequencies in rad/fs, ordinary frequencies in THz.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

SPEED_OF_LIGHT = 299.792458  # nm/fs


def angular_frequency(wavelength):
    """Convert a vacuum wavelength in nm to angular frequency in rad/fs.

    Works elementwise on arrays.
    """
    wl = np.asarray(wavelength, dtype=float)
    if np.any(wl <= 0) or not np.all(np.isfinite(wl)):
        raise DomainError(f"wavelength must be positive, got {wavelength!r}")
    omega = 2.0 * np.pi * SPEED_OF_LIGHT / wl
    return float(omega) if omega.ndim == 0 else omega


def wavelength_of(omega):
    """Inverse of :func:`angular_frequency`."""
    om = np.asarray(omega, dtype=float)
    if np.any(om <= 0):
        raise DomainError(f"angular frequency must be positive, got {omega!r}")
    wl = 2.0 * np.pi * SPEED_OF_LIGHT / om
    return float(wl) if wl.ndim == 0 else wl


@dataclass(frozen=True)
class LevelSpec:
    label: str
    transition_wavelength: float  # nm, ground -> level
    dipole_weight: float = 1.0

    @property
    def omega(self):
        return angular_frequency(self.transition_wavelength)


@dataclass(frozen=True)
class ProbeSpec:
    """Constants of the perturbative two-path ionization signal.

    ``probe_amp_1``/``probe_amp_2`` are the probe field amplitudes at the two
    upper transitions, ``d11``/``d22``/``d12`` the two-photon dipole products.
    """

    probe_amp_1: complex = 1.0
    probe_amp_2: complex = 1.0
    d11: float = 1.0
    d22: float = 1.0
    d12: complex = 1.0

    def __post_init__(self):
        if self.d11 < 0 or self.d22 < 0:
            raise ConfigurationError("d11 and d22 must be non-negative")
        if abs(self.d12) > math.sqrt(self.d11 * self.d22) * (1 + 1e-12):
            raise ConfigurationError("|d12| must not exceed sqrt(d11*d22)")

    @property
    def cross_phase(self):
        """arg of eps(w1) eps*(w2) d12, the probe's contribution to the beat phase."""
        z = complex(self.probe_amp_1) * complex(self.probe_amp_2).conjugate() * complex(self.d12)
        return cmath.phase(z) if z != 0 else 0.0


@dataclass(frozen=True)
class AtomSpec:
    ground_label: str
    excited: tuple
    probe: ProbeSpec = field(default_factory=ProbeSpec)

    def __post_init__(self):
        object.__setattr__(self, "excited", tuple(self.excited))
        if not self.excited:
            raise ConfigurationError("at least one excited level is required")
        wls = [lv.transition_wavelength for lv in self.excited]
        if any(not (w > 0) for w in wls):
            raise ConfigurationError("transition wavelengths must be positive")
        if len(set(wls)) != len(wls):
            raise ConfigurationError("transition wavelengths must be pairwise distinct")
        weights = [lv.dipole_weight for lv in self.excited]
        if any(not (w > 0) for w in weights):
            raise ConfigurationError("dipole weights must be positive")
        if 1.0 not in weights:
            raise ConfigurationError("one dipole weight must equal 1.0 (the reference transition)")

    @property
    def n_levels(self):
        return len(self.excited)

    @property
    def omegas(self):
        return np.array([lv.omega for lv in self.excited])

    @property
    def wavelengths(self):
        return np.array([lv.transition_wavelength for lv in self.excited])

    @property
    def dipole_weights(self):
        return np.array([lv.dipole_weight for lv in self.excited])

    @property
    def labels(self):
        return [lv.label for lv in self.excited]

    def nearest_level(self, wavelength):
        return int(np.argmin(np.abs(self.wavelengths - wavelength)))


def fine_structure_splitting(spec):
    """Splitting between the first two excited levels, in THz."""
    if spec.n_levels < 2:
        raise ConfigurationError("need at least two excited levels")
    l1, l2 = spec.wavelengths[:2]
    # c in nm/fs -> 1/fs = 1000 THz
    return float(SPEED_OF_LIGHT * abs(1.0 / l1 - 1.0 / l2) * 1e3)


def beat_period(spec):
    """Quantum-beat period of the first two excited levels, in fs."""
    f = fine_structure_splitting(spec)
    if f == 0:
        raise DomainError("degenerate levels have no beat period")
    return 1e3 / f


def default_potassium(d2_weight=math.sqrt(2.0)):
    """The K 4S1/2 -> {4P1/2, 4P3/2} system with equal-efficiency probing."""
    return AtomSpec(
        ground_label="4S1/2",
        excited=(
            LevelSpec("4P1/2", 769.9, 1.0),
            LevelSpec("4P3/2", 766.5, d2_weight),
        ),
        probe=ProbeSpec(1.0, 1.0, 1.0, 1.0, 1.0),
    )
