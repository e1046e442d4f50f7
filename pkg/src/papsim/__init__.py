"""Simulation of shaped femtosecond excitation of a fine-structure doublet.

Builds shaped pump fields, propagates a ground state coupled to several
excited levels in the rotating-wave approximation and analyses the
resulting quantum beats in a pump-probe ionization signal.
"""

__version__ = "0.1.0"

from .atom import AtomSpec, LevelSpec, ProbeSpec, default_potassium, fine_structure_splitting
from .dynamics import IntegratorParams, analytic_rabi, landau_zener, propagate, pulse_areas
from .errors import (
    ConfigurationError,
    ControlFailure,
    DomainError,
    GridTooCoarseError,
    IntegratorFailure,
    NotATrainError,
    NumericalInvariantError,
    PapError,
    SamplingError,
)
from .shaper import ShapeSpec, SpectralGrid, WindowSpec, apply_shape, source_spectrum, synthesize

__all__ = [
    "AtomSpec",
    "ConfigurationError",
    "ControlFailure",
    "DomainError",
    "GridTooCoarseError",
    "IntegratorFailure",
    "IntegratorParams",
    "LevelSpec",
    "NotATrainError",
    "NumericalInvariantError",
    "PapError",
    "ProbeSpec",
    "SamplingError",
    "ShapeSpec",
    "SpectralGrid",
    "WindowSpec",
    "analytic_rabi",
    "apply_shape",
    "default_potassium",
    "fine_structure_splitting",
    "landau_zener",
    "propagate",
    "pulse_areas",
    "source_spectrum",
    "synthesize",
]
