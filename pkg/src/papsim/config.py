"""Run configuration: YAML text validated into typed blocks.

Units follow the key names: wavelengths in nm, times in fs, chirps in fs^2,
phases in rad. Pulse areas on experiment axes are given in units of pi
(``areas_pi``). Every run is fully determined by one config file.
"""

from __future__ import annotations

import math
from importlib import resources
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import atom as atom_mod
from .dynamics import IntegratorParams
from .errors import ConfigurationError, PapError
from .shaper import ShapeSpec, SpectralGrid, WindowSpec

EXPERIMENTS = (
    "synthesize",
    "simulate",
    "scan_rabi",
    "scan_ap",
    "scan_2d",
    "completeness",
    "phase_control",
    "amplitude_control",
)


class ConfigError(ConfigurationError):
    """All problems found in a config; ``errors`` holds ``(location, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{loc}: {msg}" if loc else msg for loc, msg in self.errors))


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LevelBlock(_Block):
    label: str
    wavelength: float = Field(gt=0)
    dipole_weight: float = Field(1.0, gt=0)


class ProbeBlock(_Block):
    probe_amp_1: float = 1.0
    probe_amp_2: float = 1.0
    d11: float = Field(1.0, ge=0)
    d22: float = Field(1.0, ge=0)
    d12: float = 1.0


class AtomBlock(_Block):
    ground_label: str = "4S1/2"
    levels: list[LevelBlock] = Field(min_length=1)
    probe: ProbeBlock = ProbeBlock()

    @model_validator(mode="after")
    def _domain(self):
        self.build()
        return self

    def build(self):
        try:
            p = self.probe
            probe = atom_mod.ProbeSpec(p.probe_amp_1, p.probe_amp_2, p.d11, p.d22, p.d12)
            levels = tuple(atom_mod.LevelSpec(lv.label, lv.wavelength, lv.dipole_weight) for lv in self.levels)
            return atom_mod.AtomSpec(self.ground_label, levels, probe)
        except PapError as exc:
            raise ValueError(str(exc)) from None


class GridBlock(_Block):
    wavelength_min: float = Field(740.0, gt=0)
    wavelength_max: float = Field(800.0, gt=0)
    n_points: int = 2**15

    @field_validator("n_points")
    @classmethod
    def _pow2(cls, n):
        if n < 4096 or n & (n - 1):
            raise ValueError("must be a power of two >= 4096")
        return n

    @model_validator(mode="after")
    def _order(self):
        if not self.wavelength_min < self.wavelength_max:
            raise ValueError("wavelength_min must be below wavelength_max")
        return self

    def build(self):
        return SpectralGrid.from_wavelengths(self.wavelength_min, self.wavelength_max, self.n_points)


class SourceBlock(_Block):
    center_wavelength: float = Field(768.2, gt=0)
    fwhm: float = Field(9.5, gt=0)
    carrier_wavelength: Optional[float] = Field(None, gt=0)


class WindowBlock(_Block):
    center_wavelength: float = Field(gt=0)
    fwhm: float = Field(1.8, gt=0)
    rel_amplitude: float = Field(1.0, ge=0)
    chirp_alpha: float = 0.0
    phase_offset: float = 0.0
    delay: float = 0.0

    def build(self):
        return WindowSpec(**self.model_dump())


class ShapeBlock(_Block):
    windows: list[WindowBlock] = Field(default_factory=list)
    window_fwhm: float = Field(1.8, gt=0)
    pixel_width: Optional[float] = Field(None, gt=0)
    fwhm_convention: Literal["intensity", "amplitude"] = "intensity"

    def build(self):
        return ShapeSpec(tuple(w.build() for w in self.windows), self.pixel_width, self.fwhm_convention)


class IntegratorBlock(_Block):
    dt_max: float = Field(0.5, gt=0, le=0.5)
    method: Literal["rk4"] = "rk4"
    record_stride: int = Field(2, ge=1)
    convergence_check: bool = False


class ModelBlock(_Block):
    cross_talk: bool = True


class AxisRange(_Block):
    start: float
    stop: float
    num: int = Field(ge=1)

    def values(self):
        return np.linspace(self.start, self.stop, self.num)


Axis = Union[list[float], AxisRange]


def _axis(v):
    return np.asarray(v.values() if isinstance(v, AxisRange) else v, dtype=float)


def _check_increasing(v):
    a = _axis(v)
    if a.size == 0 or np.any(np.diff(a) <= 0):
        raise ValueError("axis must be non-empty and strictly increasing")
    return v


class SynthesizeParams(_Block):
    pass


class SimulateParams(_Block):
    area_pi: float = Field(1.0, ge=0)


class ScanRabiParams(_Block):
    line: Literal["D1", "D2"] = "D1"
    areas_pi: Axis = AxisRange(start=0.0, stop=3.0, num=61)

    @field_validator("areas_pi")
    @classmethod
    def _inc(cls, v):
        return _check_increasing(v)


class ScanAPParams(ScanRabiParams):
    chirp_alpha: float = Field(270e3, ge=0)
    compare_pixel_width: Optional[float] = Field(0.14, gt=0)


class Scan2DParams(_Block):
    areas_pi: Axis = AxisRange(start=0.5, stop=3.0, num=26)
    delays: Optional[Axis] = None

    @field_validator("areas_pi", "delays")
    @classmethod
    def _inc(cls, v):
        return v if v is None else _check_increasing(v)


class CompletenessParams(_Block):
    delay: float = Field(8000.0, gt=0)
    chirp_alpha: float = Field(270e3, ge=0)
    first_area_pi: float = Field(1.0, ge=0)
    second_area_pi: float = Field(1.0, gt=0)
    span_after: float = Field(6000.0, gt=0)


class PhaseControlParams(_Block):
    offsets: list[float] = Field(default_factory=lambda: [0.0, math.pi / 2, math.pi], min_length=1)
    line: Literal["D1", "D2"] = "D1"
    chirp_alpha: float = Field(270e3, ge=0)
    area_pi: float = Field(1.0, gt=0)


class AmplitudeControlParams(_Block):
    targets: list[float] = Field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0], min_length=1)
    max_iterations: int = Field(2, ge=0)
    window_fwhm: float = Field(1.8, gt=0)
    narrowband_fwhm: Optional[float] = Field(0.18, gt=0)
    chirp_alpha: float = Field(270e3, ge=0)

    @field_validator("targets")
    @classmethod
    def _positive(cls, v):
        if any(not t > 0 for t in v):
            raise ValueError("targets must be positive")
        return v


class ExperimentBlock(_Block):
    synthesize: Optional[SynthesizeParams] = None
    simulate: Optional[SimulateParams] = None
    scan_rabi: Optional[ScanRabiParams] = None
    scan_ap: Optional[ScanAPParams] = None
    scan_2d: Optional[Scan2DParams] = None
    completeness: Optional[CompletenessParams] = None
    phase_control: Optional[PhaseControlParams] = None
    amplitude_control: Optional[AmplitudeControlParams] = None

    @model_validator(mode="after")
    def _single(self):
        set_ = [n for n in EXPERIMENTS if getattr(self, n) is not None]
        if len(set_) > 1:
            raise ValueError(f"ambiguous experiment: {' and '.join(set_)} set together")
        return self

    @property
    def name(self):
        for n in EXPERIMENTS:
            if getattr(self, n) is not None:
                return n
        return None


class OutputBlock(_Block):
    directory: Optional[str] = None


class RunConfig(_Block):
    atom: AtomBlock
    grid: GridBlock = GridBlock()
    source: SourceBlock = SourceBlock()
    shape: ShapeBlock = ShapeBlock()
    integrator: IntegratorBlock = IntegratorBlock()
    model: ModelBlock = ModelBlock()
    experiment: ExperimentBlock = ExperimentBlock()
    output: OutputBlock = OutputBlock()

    def setup(self, threads=1):
        """The :class:`~papsim.experiments.Setup` described by this config."""
        from .experiments import Setup

        i = self.integrator
        return Setup(
            atom=self.atom.build(),
            grid=self.grid.build(),
            source_center=self.source.center_wavelength,
            source_fwhm=self.source.fwhm,
            carrier_wavelength=self.source.carrier_wavelength,
            window_fwhm=self.shape.window_fwhm,
            fwhm_convention=self.shape.fwhm_convention,
            pixel_width=self.shape.pixel_width,
            cross_talk=self.model.cross_talk,
            integrator=IntegratorParams(i.dt_max, i.method, i.convergence_check, i.record_stride),
            threads=threads,
        )

    def shape_spec(self, setup=None):
        """Configured windows, or one flat window per level when none are listed."""
        if self.shape.windows:
            return self.shape.build()
        setup = setup or self.setup()
        return setup.shape(setup.window(k) for k in range(setup.atom.n_levels))

    def params(self, name):
        """Parameters of experiment ``name`` (defaults when the block is absent)."""
        cfg = self.experiment.name
        if cfg is not None and cfg != name:
            raise ConfigError([("experiment", f"config is for {cfg!r}, not {name!r}")])
        model = ExperimentBlock.model_fields[name].annotation.__args__[0]
        got = getattr(self.experiment, name)
        return got if got is not None else model()

    def to_yaml(self):
        return yaml.safe_dump(self.model_dump(mode="json", exclude_none=True), sort_keys=False)


def _loc(loc):
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        elif part in ("list[float]", "AxisRange") or part.startswith("function-"):
            continue
        else:
            out += ("." if out else "") + str(part)
    return out


def parse_config(text):
    """Validate YAML ``text`` into a :class:`RunConfig`.

    Raises :class:`ConfigError` listing every violation with its key path,
    or the line and column of a YAML syntax error.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError([(where, f"YAML syntax error: {getattr(exc, 'problem', exc)}")]) from None
    if not isinstance(data, dict):
        raise ConfigError([("", "config must be a mapping of blocks")])
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        errs = []
        for e in exc.errors():
            msg = e["msg"].removeprefix("Value error, ")
            errs.append((_loc(e["loc"]), msg))
        raise ConfigError(errs) from None


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def default_config_text():
    return resources.files("papsim").joinpath("data/default.yaml").read_text(encoding="utf-8")


def default_config():
    return parse_config(default_config_text())


def axis_values(axis, unit=1.0):
    return _axis(axis) * unit


__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "default_config", "axis_values"]
