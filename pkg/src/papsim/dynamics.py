"""Rotating-wave Schroedinger dynamics of a ground state coupled to N levels.

In the frame rotating at the field carrier ``wc`` the amplitudes obey

    i db0/dt = sum_i conj(chi_i(t)) / 2 * b_i
    i db_i/dt = D_i b_i + chi_i(t) / 2 * b0,      D_i = w_i - wc,

with ``chi_i = d_i * scale * E(t)``. By default every transition is driven
by the full envelope, which is what produces the dynamic Stark shifts and
cross-talk between channels. ``level_fields`` switches to independent
channels, each level seeing only its own drive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import ConfigurationError, DomainError, IntegratorFailure
from .shaper import ShapeSpec, apply_shape, crop, synthesize, upsample

MAX_PHASE_PER_STEP = 0.1


@dataclass(frozen=True)
class IntegratorParams:
    """Fixed-step RK4 settings.

    ``dt_max`` bounds the step (fs); ``record_stride`` is the number of
    steps between stored trajectory samples.
    """

    dt_max: float = 0.5
    method: str = "rk4"
    convergence_check: bool = False
    record_stride: int = 2
    crop_threshold: float = 1e-10

    def __post_init__(self):
        if not 0 < self.dt_max <= 0.5:
            raise ConfigurationError(f"dt_max must lie in (0, 0.5] fs, got {self.dt_max}")
        if self.method != "rk4":
            raise ConfigurationError(f"unknown integration method {self.method!r}")
        if self.record_stride < 1:
            raise ConfigurationError("record_stride must be >= 1")

    def halved(self):
        return replace(self, dt_max=0.5 * self.dt_max, record_stride=2 * self.record_stride)


@dataclass(frozen=True, eq=False)
class AmplitudeTrajectory:
    times: np.ndarray
    b0: np.ndarray
    b_excited: np.ndarray  # shape (n_samples, n_levels)
    frame: dict = field(default_factory=dict)

    @property
    def populations(self):
        """|b|^2 with the ground state in column 0."""
        return np.column_stack([np.abs(self.b0) ** 2, np.abs(self.b_excited) ** 2])

    @property
    def final_populations(self):
        return self.populations[-1]

    @property
    def norm_drift(self):
        return float(np.max(np.abs(self.populations.sum(axis=1) - 1.0)))

    def state_at(self, t):
        """Amplitudes (b0, b1, ...) at the stored sample nearest to ``t``."""
        i = int(np.argmin(np.abs(self.times - t)))
        return self.times[i], np.concatenate([[self.b0[i]], self.b_excited[i]])


@dataclass(frozen=True)
class AreaReport:
    areas: tuple
    effective: float

    @classmethod
    def from_areas(cls, areas):
        areas = tuple(float(a) for a in areas)
        if any(a < 0 for a in areas):
            raise DomainError("pulse areas are non-negative")
        return cls(areas, math.sqrt(sum(a * a for a in areas)))


def analytic_rabi(area):
    """Resonant two-level excited population, sin^2(A/2)."""
    return np.sin(0.5 * np.asarray(area)) ** 2


def landau_zener(rabi, sweep_rate):
    """Adiabatic transfer probability for H = 1/2 [[-b t, W], [W, b t]]."""
    if sweep_rate <= 0:
        raise DomainError("sweep rate must be positive")
    if rabi < 0:
        raise DomainError("Rabi frequency must be non-negative")
    return 1.0 - math.exp(-math.pi * rabi * rabi / (2.0 * sweep_rate))


def match_windows(shape, atom):
    """Level index for every window (nearest resonance); no level may get two windows."""
    idx = [atom.nearest_level(w.center_wavelength) for w in shape.windows]
    if len(set(idx)) != len(idx):
        raise ConfigurationError("two windows are nearest to the same level")
    return idx


def window_field(shape, k, source, carrier, flat=False):
    """Envelope of window ``k`` synthesized alone (None if it is closed)."""
    w = shape.windows[k]
    if w.rel_amplitude == 0:
        return None
    if flat:
        w = replace(w, chirp_alpha=0.0)
    single = ShapeSpec((w,), shape.pixel_width, shape.fwhm_convention)
    return synthesize(apply_shape(source, single), carrier)


def pulse_areas(shape, source, atom, amplitude_scale=1.0):
    """Per-transition pulse areas ``d_i * scale * int |E_i| dt`` and their rms sum.

    Areas are evaluated on the un-chirped windows, so adding chirp leaves
    the reported area unchanged.
    """
    levels = match_windows(shape, atom)
    areas = [0.0] * atom.n_levels
    for k, lv in enumerate(levels):
        wf = window_field(shape, k, source, shape.windows[k].omega, flat=True)
        if wf is None:
            continue
        areas[lv] = atom.excited[lv].dipole_weight * amplitude_scale * float(np.sum(np.abs(wf.envelope)) * wf.dt)
    return AreaReport.from_areas(areas)


def calibrate_scale_for_area(shape, source, atom, target):
    """Field scale giving effective area ``target`` (linear in the scale)."""
    if target < 0:
        raise DomainError("target area must be non-negative")
    ref = pulse_areas(shape, source, atom, 1.0).effective
    if ref == 0:
        raise DomainError("shape has zero total amplitude")
    return target / ref


def _drives(field, atom, level_fields):
    weights = atom.dipole_weights
    if level_fields is None:
        return [field] * atom.n_levels, weights * field.amplitude_scale
    if len(level_fields) != atom.n_levels:
        raise ConfigurationError("need one drive field per excited level")
    for f in level_fields:
        if f.n != field.n or f.dt != field.dt or f.t_start != field.t_start or f.carrier != field.carrier:
            raise ConfigurationError("level drive fields must share the time grid and carrier")
    return list(level_fields), weights * np.array([f.amplitude_scale for f in level_fields])


def _check_band(field, atom):
    omegas = atom.omegas
    if field.omega_band is not None:
        lo, hi = field.omega_band
        bad = [lv.label for lv, w in zip(atom.excited, omegas) if not lo <= w <= hi]
    else:
        nyq = math.pi / field.dt
        bad = [lv.label for lv, w in zip(atom.excited, omegas) if abs(w - field.carrier) >= nyq]
    if bad:
        raise ConfigurationError(f"transition(s) {bad} lie outside the spectral grid")


def propagate(field, atom, params=IntegratorParams(), initial=None, level_fields=None):
    """Integrate the amplitudes through the field; returns the sampled trajectory.

    The envelope is cropped to where it exceeds ``params.crop_threshold`` of
    its peak and band-limited-interpolated to half-step spacing. The state
    starts in ``initial`` (default: ground state) at the first retained sample.
    """
    _check_band(field, atom)
    n = atom.n_levels
    psi0 = np.zeros(n + 1, dtype=complex)
    if initial is None:
        psi0[0] = 1.0
    else:
        psi0[:] = initial
    drives, coupling = _drives(field, atom, level_fields)
    detuning = atom.omegas - field.carrier
    frame = {"carrier": field.carrier, "convention": "E(t) exp(-i wc t); b_i rotating at wc"}

    ranges = [crop(f, params.crop_threshold) for f in drives]
    ranges = [r for r, c in zip(ranges, coupling) if r[1] > r[0] and c != 0]
    if not ranges:
        t = np.array([field.t_start, field.times[-1]])
        return AmplitudeTrajectory(t, np.full(2, psi0[0]), np.tile(psi0[1:], (2, 1)), frame)
    i0 = min(r[0] for r in ranges)
    i1 = max(r[1] for r in ranges)

    if params.dt_max * np.max(np.abs(detuning)) > MAX_PHASE_PER_STEP:
        raise ConfigurationError(
            f"dt_max {params.dt_max} fs too coarse for detuning {np.max(np.abs(detuning)):.3g} rad/fs"
        )
    peak = max(c * np.abs(f.envelope[i0:i1]).max() for f, c in zip(drives, np.abs(coupling)))
    if params.dt_max * peak > MAX_PHASE_PER_STEP:
        raise ConfigurationError(f"dt_max {params.dt_max} fs too coarse for Rabi frequency {peak:.3g} rad/fs")

    half = 0.5 * params.dt_max
    factor = max(1, math.ceil(field.dt / half - 1e-12))
    if factor == 1:
        if (i1 - i0) % 2 == 0:
            i1 = i1 + 1 if i1 < field.n else i1 - 1
        segs = [f.envelope[i0:i1] for f in drives]
        h, t0 = field.dt, field.t_start + i0 * field.dt
    else:
        fine = [upsample(f, factor, i0, i1) for f in drives]
        m = fine[0].n - (1 - fine[0].n % 2)
        segs = [f.envelope[:m] for f in fine]
        h, t0 = fine[0].dt, fine[0].t_start
    chi = np.ascontiguousarray(np.vstack([c * s for c, s in zip(coupling, segs)]))

    stride = params.record_stride
    rec = kernels.rk4_propagate(chi, np.ascontiguousarray(detuning, dtype=float), 2.0 * h, psi0, stride)
    n_steps = (chi.shape[1] - 1) // 2
    steps = np.arange(0, n_steps + 1, stride)
    if steps[-1] != n_steps:
        steps = np.append(steps, n_steps)
    traj = AmplitudeTrajectory(t0 + 2.0 * h * steps, rec[:, 0].copy(), rec[:, 1:].copy(), frame)
    drift = traj.norm_drift
    if not drift <= 1e-6:
        raise IntegratorFailure(drift)
    return traj


def convergence_report(field, atom, params=IntegratorParams(), level_fields=None):
    """Largest change of any final population when the step is halved."""
    a = propagate(field, atom, params, level_fields=level_fields).final_populations
    b = propagate(field, atom, params.halved(), level_fields=level_fields).final_populations
    return float(np.max(np.abs(a - b)))
