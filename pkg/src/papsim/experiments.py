"""Recipes for the single-line, two-line, completeness and control studies.

Every recipe takes a :class:`Setup` (atom, grid, source, integrator and
shaper defaults) and returns a plain result object. Grid points are
independent; ``threads > 1`` evaluates them in a thread pool (the compiled
kernel releases the GIL) and results are assembled in input order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .atom import AtomSpec, angular_frequency, default_potassium, fine_structure_splitting
from .dynamics import (
    IntegratorParams,
    calibrate_scale_for_area,
    match_windows,
    propagate,
    pulse_areas,
    window_field,
)
from .errors import ConfigurationError, ControlFailure
from .observables import BeatTrace, FinalState, analyze_beat, beat_trace, ion_signal, trace_power_spectrum
from .shaper import (
    ShapeSpec,
    SpectralGrid,
    WindowSpec,
    apply_shape,
    check_time_window,
    crop,
    source_spectrum,
    synthesize,
)

DEFAULT_CHIRP = 270e3  # fs^2
DEFAULT_GRID = SpectralGrid.from_wavelengths(740.0, 800.0, 2**15)
LINES = {"D1": 0, "D2": 1}


def _map(fn, items, threads=1):
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _line_index(line):
    if isinstance(line, int):
        return line
    try:
        return LINES[line]
    except KeyError:
        raise ConfigurationError(f"unknown line {line!r}; use D1 or D2") from None


@dataclass(frozen=True)
class Setup:
    """Everything but the shape: atom, grid, source pulse, shaper and integrator defaults."""

    atom: AtomSpec = field(default_factory=default_potassium)
    grid: SpectralGrid = DEFAULT_GRID
    source_center: float = 768.2
    source_fwhm: float = 9.5
    carrier_wavelength: Optional[float] = None
    window_fwhm: float = 1.8
    fwhm_convention: str = "intensity"
    pixel_width: Optional[float] = None
    cross_talk: bool = True
    integrator: IntegratorParams = IntegratorParams()
    threads: int = 1

    @property
    def carrier(self):
        return angular_frequency(self.carrier_wavelength or self.source_center)

    def source(self):
        return source_spectrum(self.grid, self.source_center, self.source_fwhm, self.fwhm_convention)

    def window(self, level, **kw):
        """Window centred on the resonance of excited level ``level``."""
        kw.setdefault("fwhm", self.window_fwhm)
        return WindowSpec(self.atom.excited[level].transition_wavelength, **kw)

    def shape(self, windows):
        return ShapeSpec(tuple(windows), self.pixel_width, self.fwhm_convention)

    def line_shape(self, line, chirp=0.0, **kw):
        return self.shape([self.window(_line_index(line), chirp_alpha=chirp, **kw)])

    def pair_shape(self, chirp=0.0, amplitudes=(1.0, 1.0), offsets=(0.0, 0.0), delays=(0.0, 0.0)):
        return self.shape(
            self.window(i, rel_amplitude=a, chirp_alpha=chirp, phase_offset=o, delay=d)
            for i, (a, o, d) in enumerate(zip(amplitudes, offsets, delays))
        )


@dataclass(frozen=True, eq=False)
class Simulation:
    shape: ShapeSpec
    scale: float
    areas: tuple
    field: object
    trajectory: object

    @property
    def populations(self):
        return self.trajectory.final_populations

    @property
    def final_state(self):
        return FinalState.from_trajectory(self.trajectory)

    @property
    def pump_end(self):
        return float(self.trajectory.times[-1])


def simulate(setup, shape, area=None, scale=None):
    """Shape, calibrate to effective ``area`` (or use ``scale``), synthesize and propagate."""
    src = setup.source()
    check_time_window(setup.grid, shape)
    if scale is None:
        scale = calibrate_scale_for_area(shape, src, setup.atom, area)
    areas = pulse_areas(shape, src, setup.atom, scale).areas
    fld = synthesize(apply_shape(src, shape), setup.carrier).with_scale(scale)
    level_fields = None
    if not setup.cross_talk:
        level_fields = [fld.with_scale(0.0)] * setup.atom.n_levels
        for k, lv in enumerate(match_windows(shape, setup.atom)):
            wf = window_field(shape, k, src, setup.carrier)
            if wf is not None:
                level_fields[lv] = wf.with_scale(scale)
    traj = propagate(fld, setup.atom, setup.integrator, level_fields=level_fields)
    return Simulation(shape, scale, areas, fld, traj)


def shape_for_areas(setup, windows, targets):
    """Set window amplitudes so that window k alone has pulse area ``targets[k]``.

    Returns ``(shape, scale)``.
    """
    src = setup.source()
    unit = []
    for w in windows:
        rep = pulse_areas(setup.shape([replace(w, rel_amplitude=1.0)]), src, setup.atom, 1.0)
        unit.append(rep.effective)
    amps = [t / u for t, u in zip(targets, unit)]
    top = max(amps)
    if top == 0:
        raise ConfigurationError("all target areas are zero")
    shape = setup.shape(replace(w, rel_amplitude=a / top) for w, a in zip(windows, amps))
    return shape, top


# ---------------------------------------------------------------- single line


@dataclass(frozen=True, eq=False)
class LineScanResult:
    line: str
    chirp: float
    areas: np.ndarray
    populations: np.ndarray  # (n_areas, n_levels + 1), ground first
    target_level: int
    fit_scale: float
    first_max_area: float

    @property
    def target_population(self):
        return self.populations[:, self.target_level + 1]

    def plateau(self, start=1.2 * math.pi):
        sel = self.areas >= start - 1e-12
        p = self.target_population[sel]
        return float(p.min()), float(p.max())


def _first_maximum(x, y):
    for i in range(1, len(y) - 1):
        if y[i] >= y[i - 1] and y[i] > y[i + 1]:
            a, b, c = y[i - 1], y[i], y[i + 1]
            den = a - 2 * b + c
            off = 0.0 if den == 0 else 0.5 * (a - c) / den
            return float(x[i] + off * (x[i + 1] - x[i]))
    return float(x[int(np.argmax(y))])


def fit_area_scale(areas, population):
    """Best ``s`` in population = sin^2(s A / 2), searched over [0.5, 1.5]."""
    areas = np.asarray(areas)
    res = minimize_scalar(
        lambda s: float(np.sum((np.sin(0.5 * s * areas) ** 2 - population) ** 2)),
        bounds=(0.5, 1.5),
        method="bounded",
        options={"xatol": 1e-8},
    )
    return float(res.x)


def _line_scan(setup, line, chirp, areas):
    lv = _line_index(line)
    shape = setup.line_shape(line, chirp)
    areas = np.asarray(areas, dtype=float)

    def one(a):
        if a == 0:
            return np.r_[1.0, np.zeros(setup.atom.n_levels)]
        return simulate(setup, shape, a).populations

    pops = np.array(_map(one, areas, setup.threads))
    target = pops[:, lv + 1]
    name = line if isinstance(line, str) else setup.atom.labels[lv]
    return LineScanResult(name, chirp, areas, pops, lv, fit_area_scale(areas, target), _first_maximum(areas, target))


def run_rabi_calibration(setup, line="D1", areas=None):
    """Flat-phase single-window population versus pulse area."""
    if areas is None:
        areas = np.linspace(0.0, 3.0 * math.pi, 61)
    return _line_scan(setup, line, 0.0, areas)


def run_single_line_ap(setup, line="D1", chirp=DEFAULT_CHIRP, areas=None):
    """Chirped single-window population versus pulse area."""
    if chirp < 0:
        raise ConfigurationError("chirp must be non-negative")
    if areas is None:
        areas = np.linspace(0.0, 3.0 * math.pi, 61)
    return _line_scan(setup, line, chirp, areas)


def plateau_ripple(result, start=1.2 * math.pi):
    """Peak-to-peak population over the plateau region."""
    lo, hi = result.plateau(start)
    return hi - lo


def compare_pixelization(setup, line="D1", chirp=DEFAULT_CHIRP, areas=None, pixel_width=0.14):
    """Single-line AP sweeps without and with shaper pixelization."""
    plain = run_single_line_ap(replace(setup, pixel_width=None), line, chirp, areas)
    pix = run_single_line_ap(replace(setup, pixel_width=pixel_width), line, chirp, areas)
    return plain, pix


# ---------------------------------------------------------------- 2-D scans


@dataclass(frozen=True)
class ScanSpec:
    shape: ShapeSpec
    areas: tuple
    delays: Optional[tuple] = None  # fs; default pump end + 0.5 ps .. + 4.5 ps

    def __post_init__(self):
        object.__setattr__(self, "areas", tuple(float(a) for a in self.areas))
        if not self.areas or np.any(np.diff(self.areas) <= 0):
            raise ConfigurationError("area axis must be non-empty and strictly increasing")
        if self.delays is not None:
            object.__setattr__(self, "delays", tuple(float(d) for d in self.delays))
            if not self.delays or np.any(np.diff(self.delays) <= 0):
                raise ConfigurationError("delay axis must be non-empty and strictly increasing")


@dataclass(frozen=True, eq=False)
class Scan2DResult:
    areas: np.ndarray
    delays: np.ndarray
    signal: np.ndarray  # (n_areas, n_delays)
    populations: np.ndarray  # (n_areas, n_levels + 1)
    phase12: np.ndarray
    contrast: np.ndarray
    beat_amplitude: np.ndarray
    reference_level: float

    @property
    def relative_contrast(self):
        """Beat amplitude over the mean signal of the first area column.

        The first area plays the role of the calibrated pi-pulse level.
        """
        return self.beat_amplitude / self.reference_level


def default_delays(pump_end, start=500.0, stop=4500.0, step=10.0):
    n = int(round((stop - start) / step)) + 1
    return pump_end + start + step * np.arange(n)


def run_scan_2d(setup, spec):
    """Propagate once per area, then sample the ion signal over the delay axis."""
    f0 = fine_structure_splitting(setup.atom)
    upper = setup.atom.omegas[1] > setup.atom.omegas[0]
    sims = _map(lambda a: simulate(setup, spec.shape, a), spec.areas, setup.threads)
    pump_end = max(s.pump_end for s in sims)
    delays = default_delays(pump_end) if spec.delays is None else np.asarray(spec.delays)
    if delays[0] < pump_end:
        raise ConfigurationError(f"delay axis starts at {delays[0]:.0f} fs, before the pump ends at {pump_end:.0f} fs")
    rows, phases, contrasts, amps, means = [], [], [], [], []
    for s in sims:
        st = s.final_state
        sig = ion_signal(st, setup.atom, delays)
        rows.append(sig)
        an = analyze_beat(BeatTrace(delays, sig), f0, upper)
        phases.append(an.phase)
        contrasts.append(an.contrast)
        amps.append(an.contrast * an.mean_level)
        means.append(an.mean_level)
    pops = np.array([s.populations for s in sims])
    return Scan2DResult(
        np.array(spec.areas),
        delays,
        np.array(rows),
        pops,
        np.array(phases),
        np.array(contrasts),
        np.array(amps),
        float(means[0]) if means[0] > 0 else float("nan"),
    )


# ---------------------------------------------------------------- completeness


@dataclass(frozen=True, eq=False)
class CompletenessResult:
    populations: np.ndarray
    before: tuple  # (freq THz, power)
    after: tuple
    reference_peak: float
    beat_frequency: float
    pulse_windows: tuple  # ((start1, end1), (start2, end2)) in fs
    traces: tuple = ()  # (before, after) BeatTrace

    @property
    def residual(self):
        """Final population of the level excited by the delayed pulse."""
        return float(self.populations[1])

    def peak_ratio(self, which="after"):
        """Power near the beat frequency (±1 bin) relative to the reference peak."""
        freq, power = self.after if which == "after" else self.before
        df = freq[1] - freq[0]
        sel = np.abs(freq - self.beat_frequency) <= df * (1 + 1e-9)
        return float(power[sel].max() / self.reference_peak)


def _pulse_extent(fld, threshold=1e-3):
    i0, i1 = crop(fld, threshold, pad=0)
    return float(fld.times[i0]), float(fld.times[i1 - 1])


def run_completeness(setup, delay=8000.0, chirp=DEFAULT_CHIRP, first_area=math.pi, second_area=math.pi, span_after=6000.0):
    """D2 pulse first, D1 pulse ``delay`` fs later, each of its own area.

    Returns final populations and the beat spectra between the pulses
    ("before") and after the second pulse ("after").
    """
    d1, d2 = LINES["D1"], LINES["D2"]
    windows = [setup.window(d2, chirp_alpha=chirp), setup.window(d1, chirp_alpha=chirp, delay=delay)]
    targets = [first_area, second_area]
    shape, scale = shape_for_areas(setup, windows, targets)
    sim = simulate(setup, shape, scale=scale)
    src = setup.source()
    extents = []
    for k in range(2):
        wf = window_field(replace(shape, windows=tuple(replace(w, rel_amplitude=1.0) for w in shape.windows)), k, src, setup.carrier)
        extents.append(_pulse_extent(wf))
    (s1, e1), (s2, e2) = extents
    if e1 >= s2:
        raise ConfigurationError("pulses overlap; increase the delay")
    atom = setup.atom
    f0 = fine_structure_splitting(atom)
    t_b, amps_b = sim.trajectory.state_at(e1)
    state_b = FinalState(tuple(amps_b[1:]), t_b)
    n_b = max(64, int(round((s2 - t_b) / 10.0)) + 1)
    trace_b = beat_trace(state_b, atom, t_b, s2, n_b)
    state_a = sim.final_state
    t_a = max(state_a.t_ref, e2)
    n_a = int(round(span_after / 10.0)) + 1
    trace_a = beat_trace(state_a, atom, t_a, t_a + span_after, n_a)
    ref_state = FinalState((1 / math.sqrt(2), 1 / math.sqrt(2)), t_a)
    ref = trace_power_spectrum(beat_trace(ref_state, atom, t_a, t_a + span_after, n_a))[1].max()
    return CompletenessResult(
        sim.populations,
        trace_power_spectrum(trace_b),
        trace_power_spectrum(trace_a),
        float(ref),
        f0,
        ((s1, e1), (s2, e2)),
        (trace_b, trace_a),
    )


# ---------------------------------------------------------------- phase control


@dataclass(frozen=True, eq=False)
class PhaseControlResult:
    offsets: np.ndarray
    phase12: np.ndarray
    shifts: np.ndarray
    populations: np.ndarray

    def errors(self):
        """Deviation of each shift from its offset, wrapped to (-pi, pi]."""
        d = np.remainder(self.shifts - self.offsets + np.pi, 2 * np.pi) - np.pi
        return d


def _beat_phase(setup, sim):
    atom = setup.atom
    st = sim.final_state
    delays = default_delays(sim.pump_end)
    tr = BeatTrace(delays, ion_signal(st, atom, delays))
    return analyze_beat(tr, fine_structure_splitting(atom), atom.omegas[1] > atom.omegas[0])


def run_phase_control(setup, offsets=(0.0, math.pi / 2, math.pi), line="D1", chirp=DEFAULT_CHIRP, area=math.pi):
    """Constant spectral phase on one window; beat phase shift relative to offset 0.

    The returned shift is that of arg(b_D1 b_D2*), i.e. of the beat pattern,
    so an offset on D1 shifts it by +offset and one on D2 by -offset.
    """
    lv = _line_index(line)
    offsets = np.asarray(offsets, dtype=float)
    if offsets[0] != 0.0:
        offsets = np.r_[0.0, offsets]
        strip = True
    else:
        strip = False

    def one(theta):
        offs = [0.0] * setup.atom.n_levels
        offs[lv] = theta
        sim = simulate(setup, setup.pair_shape(chirp, offsets=offs), area)
        an = _beat_phase(setup, sim)
        if not an.has_beat:
            raise ControlFailure(f"no quantum beat found for offset {theta:.3f} rad")
        return an.phase, sim.populations

    out = _map(one, offsets, setup.threads)
    phases = np.array([o[0] for o in out])
    pops = np.array([o[1] for o in out])
    shifts = -(phases - phases[0])
    shifts = np.remainder(shifts + np.pi, 2 * np.pi) - np.pi
    if strip:
        offsets, phases, shifts, pops = offsets[1:], phases[1:], shifts[1:], pops[1:]
    return PhaseControlResult(offsets, phases, shifts, pops)


# ---------------------------------------------------------------- amplitude control


@dataclass(frozen=True)
class ControlStep:
    ratio: float  # D1 / D2 window amplitude
    beta: float  # |b1|^2 / |b2|^2
    ground: float


@dataclass(frozen=True)
class ControlReport:
    target_beta: float
    window_fwhm: float
    iterations: tuple

    @property
    def errors(self):
        return [abs(s.beta / self.target_beta - 1.0) for s in self.iterations]


def run_amplitude_control(setup, target_beta, max_iterations=2, window_fwhm=None, chirp=DEFAULT_CHIRP, area=math.pi, tol=1e-3):
    """Adaptive D1/D2 amplitude ratio towards ``|b1|^2/|b2|^2 = target_beta``.

    Iteration 0 uses the Stark-free prediction (areas in the ratio
    sqrt(target_beta)); each further iteration multiplies the amplitude
    ratio by sqrt(target / achieved). The effective area is renormalised
    to ``area`` every time.
    """
    if not target_beta > 0:
        raise ConfigurationError("target_beta must be positive")
    if window_fwhm is not None:
        setup = replace(setup, window_fwhm=window_fwhm)
    src = setup.source()
    unit = [pulse_areas(setup.line_shape(i), src, setup.atom, 1.0).effective for i in range(2)]
    ratio = math.sqrt(target_beta) * unit[1] / unit[0]
    steps = []
    for it in range(max_iterations + 1):
        sim = simulate(setup, setup.pair_shape(chirp, amplitudes=(ratio, 1.0)), area)
        p = sim.populations
        if p[1] == 0 or p[2] == 0:
            raise ControlFailure("an excited level is numerically empty")
        beta = p[1] / p[2]
        steps.append(ControlStep(ratio, float(beta), float(p[0])))
        if abs(beta / target_beta - 1) < tol:
            break
        ratio *= math.sqrt(target_beta / beta)
    return ControlReport(target_beta, setup.window_fwhm, tuple(steps))


def run_narrowband_comparison(setup, target_betas=(0.25, 0.5, 1.0, 2.0, 4.0), widths=(1.8, 0.18), chirp=DEFAULT_CHIRP):
    """Iteration-0 reports for each window width; keyed by width."""
    out = {}
    for w in widths:
        out[w] = _map(
            lambda b: run_amplitude_control(setup, b, 0, window_fwhm=w, chirp=chirp),
            target_betas,
            setup.threads,
        )
    return out
