"""Bichromatic ionization signal, quantum-beat traces and their analysis."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .atom import fine_structure_splitting
from .errors import ConfigurationError, SamplingError

SAMPLES_PER_PERIOD = 16
NO_BEAT_RESIDUAL = 0.2


@dataclass(frozen=True)
class FinalState:
    """Excited amplitudes (rotating frame) at time ``t_ref`` in fs."""

    amplitudes: tuple
    t_ref: float = 0.0

    def __post_init__(self):
        amps = tuple(complex(a) for a in self.amplitudes)
        object.__setattr__(self, "amplitudes", amps)
        if len(amps) < 2:
            raise ConfigurationError("the beat signal needs two excited amplitudes")
        if sum(abs(a) ** 2 for a in amps) > 1 + 1e-9:
            raise ConfigurationError("excited populations exceed 1")

    @property
    def b1(self):
        return self.amplitudes[0]

    @property
    def b2(self):
        return self.amplitudes[1]

    @classmethod
    def from_trajectory(cls, traj, index=-1):
        return cls(tuple(traj.b_excited[index]), float(traj.times[index]))

    def interaction_amplitudes(self, atom):
        """Amplitudes with free evolution removed, referred to t = 0."""
        w = atom.omegas[:2]
        return self.b1 * cmath.exp(1j * w[0] * self.t_ref), self.b2 * cmath.exp(1j * w[1] * self.t_ref)

    def phase12(self, atom):
        """Relative phase arg(b1* b2) at t = 0 minus the probe's cross phase.

        This is the phase :func:`analyze_beat` recovers from a trace.
        """
        a1, a2 = self.interaction_amplitudes(atom)
        return _wrap(cmath.phase(a1.conjugate() * a2) - atom.probe.cross_phase)


def _wrap(phi):
    """Map to (-pi, pi]."""
    out = math.remainder(phi, 2.0 * math.pi)
    return math.pi if out == -math.pi else out


def ion_signal(state, atom, delay):
    """Two-path ionization probability at pump-probe ``delay`` (fs, scalar or array)."""
    delay = np.asarray(delay, dtype=float)
    if np.any(delay < state.t_ref - 1e-9):
        raise ConfigurationError("probe delay precedes the reference time of the state")
    p = atom.probe
    w1, w2 = atom.omegas[:2]
    tau = delay - state.t_ref
    b1 = state.b1 * np.exp(-1j * w1 * tau)
    b2 = state.b2 * np.exp(-1j * w2 * tau)
    e1, e2 = complex(p.probe_amp_1), complex(p.probe_amp_2)
    sig = (
        np.abs(b1) ** 2 * abs(e1) ** 2 * p.d11
        + np.abs(b2) ** 2 * abs(e2) ** 2 * p.d22
        + 2.0 * np.real(b1 * np.conj(b2) * e1 * e2.conjugate() * complex(p.d12))
    )
    return float(sig) if sig.ndim == 0 else sig


@dataclass(frozen=True, eq=False)
class BeatTrace:
    delays: np.ndarray
    signal: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=float)
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "signal", np.asarray(self.signal, dtype=float))
        if d.size < 2 or np.any(np.diff(d) <= 0):
            raise ConfigurationError("delays must be strictly increasing")

    @property
    def step(self):
        return float(self.delays[1] - self.delays[0])


def beat_trace(state, atom, delay_start, delay_end, n):
    """Uniformly sampled ion signal over ``[delay_start, delay_end]``."""
    period = 1e3 / fine_structure_splitting(atom)
    need = int(math.ceil(SAMPLES_PER_PERIOD * (delay_end - delay_start) / period)) + 1
    if n < need:
        raise SamplingError(f"{n} samples undersample the {period:.0f} fs beat", need)
    delays = np.linspace(delay_start, delay_end, n)
    return BeatTrace(delays, ion_signal(state, atom, delays))


@dataclass(frozen=True)
class BeatAnalysis:
    """Fit of ``mean + B sin(2 pi f tau + phi_fit)``.

    ``phase`` is the wavepacket phase recovered from ``phi_fit`` (see
    :meth:`FinalState.phase12`); it is NaN when no beat was found.
    """

    frequency: float  # THz
    contrast: float
    phase: float
    mean_level: float
    fit_phase: float = float("nan")
    has_beat: bool = True
    residual: float = 0.0


def _linear_fit(tau, y, f):
    w = 2.0 * np.pi * f * 1e-3
    x = np.column_stack([np.ones_like(tau), np.sin(w * tau), np.cos(w * tau)])
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    r = y - x @ coef
    return coef, float(np.mean(r * r))


def analyze_beat(trace, expected_frequency, upper_level_higher=True):
    """Least-squares sinusoid fit seeded at ``expected_frequency`` (THz).

    The frequency is refined by a bounded 1-D search (±20 %) with the
    amplitude, offset and phase solved linearly at every trial frequency.
    ``upper_level_higher`` states whether level 2 lies above level 1 in
    energy, which fixes the sign relating the fit phase to arg(b1* b2).
    """
    tau, y = trace.delays, trace.signal
    span = tau[-1] - tau[0]
    if span * expected_frequency * 1e-3 < 3.0 - 1e-9:
        raise ConfigurationError("trace spans fewer than three beat periods")
    var = float(np.var(y))
    scale = max(float(np.mean(np.abs(y))), 1e-300)
    mean = float(np.mean(y))
    if var <= (1e-12 * scale) ** 2:
        return BeatAnalysis(expected_frequency, 0.0, float("nan"), mean, has_beat=False)
    res = minimize_scalar(
        lambda f: _linear_fit(tau, y, f)[1],
        bounds=(0.8 * expected_frequency, 1.2 * expected_frequency),
        method="bounded",
        options={"xatol": 1e-10 * expected_frequency},
    )
    f = float(res.x)
    # the bounded search may stop in a side minimum; keep the better of f and the seed
    if _linear_fit(tau, y, expected_frequency)[1] < _linear_fit(tau, y, f)[1]:
        f = expected_frequency
    (a, s, c), mse = _linear_fit(tau, y, f)
    rel = mse / var
    amp = math.hypot(s, c)
    if rel > NO_BEAT_RESIDUAL or a <= 0:
        return BeatAnalysis(f, 0.0, float("nan"), float(a), has_beat=False, residual=rel)
    fit_phase = math.atan2(c, s)
    phase = 0.5 * math.pi - fit_phase if upper_level_higher else fit_phase - 0.5 * math.pi
    return BeatAnalysis(f, amp / a, _wrap(phase), float(a), _wrap(fit_phase), True, rel)


def trace_power_spectrum(trace, window="hann"):
    """Power spectrum of the mean-subtracted trace; returns (freq THz, power)."""
    y = trace.signal - np.mean(trace.signal)
    n = y.size
    if n < 64:
        raise SamplingError("power spectrum needs at least 64 samples", 64)
    if window == "hann":
        y = y * np.hanning(n)
    elif window is not None:
        raise ConfigurationError(f"unknown window {window!r}")
    power = np.abs(np.fft.rfft(y)) ** 2
    freq = np.fft.rfftfreq(n, d=trace.step) * 1e3
    return freq, power
