import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from papsim.atom import AtomSpec, ProbeSpec, beat_period, fine_structure_splitting
from papsim.errors import ConfigurationError, SamplingError
from papsim.observables import (
    BeatTrace,
    FinalState,
    analyze_beat,
    beat_trace,
    ion_signal,
    trace_power_spectrum,
)

@pytest.fixture(scope="module")
def f0(atom):
    return fine_structure_splitting(atom)


def superposition(phi=0.0, t_ref=0.0):
    r = 1 / math.sqrt(2)
    return FinalState((r, r * cmath.exp(1j * phi)), t_ref)


def test_single_level_constant(atom):
    s = FinalState((1.0, 0.0))
    sig = ion_signal(s, atom, np.linspace(0, 3000, 50))
    assert np.allclose(sig, atom.probe.d11)


def test_equal_superposition_full_contrast(atom, f0):
    tr = beat_trace(superposition(0.3), atom, 0.0, 4000.0, 401)
    res = analyze_beat(tr, f0)
    assert res.contrast == pytest.approx(1.0, abs=1e-6)
    assert res.frequency == pytest.approx(f0, rel=1e-6)
    assert tr.signal.min() == pytest.approx(0.0, abs=1e-3)


def test_phase_pi_inverts_trace(atom):
    d = np.linspace(0, 3000, 300)
    a = ion_signal(superposition(0.4), atom, d)
    b = ion_signal(superposition(0.4 + math.pi), atom, d)
    assert np.allclose(a - a.mean(), -(b - b.mean()), atol=1e-12)


def test_delay_before_reference(atom):
    with pytest.raises(ConfigurationError):
        ion_signal(superposition(t_ref=100.0), atom, 50.0)


def test_final_state_norm():
    with pytest.raises(ConfigurationError):
        FinalState((1.0, 0.5))


def test_beat_trace_sampling(atom):
    with pytest.raises(SamplingError) as err:
        beat_trace(superposition(), atom, 0.0, 4000.0, 50)
    need = err.value.required_n
    assert need == math.ceil(16 * 4000.0 / beat_period(atom)) + 1
    beat_trace(superposition(), atom, 0.0, 4000.0, need)


def test_single_level_flat_trace(atom):
    tr = beat_trace(FinalState((0.0, 0.8)), atom, 0.0, 2000.0, 200)
    assert np.ptp(tr.signal) < 1e-15


def test_three_periods(atom):
    p = beat_period(atom)
    # start at a maximum: phi12 = pi/2 makes the trace a cosine at delay 0
    tr = beat_trace(superposition(-math.pi / 2), atom, 0.0, 3 * p, 3001)
    y = tr.signal - tr.signal.mean()
    crossings = np.count_nonzero(np.diff(np.sign(y)) != 0)
    assert crossings == 6
    assert 4000.0 / p == pytest.approx(6.9, abs=0.05)


def test_synthetic_sine(f0):
    tau = np.linspace(0, 4000, 801)
    tr = BeatTrace(tau, 1 + 0.5 * np.sin(2 * np.pi * f0 * 1e-3 * tau))
    res = analyze_beat(tr, f0)
    assert res.contrast == pytest.approx(0.5, abs=1e-6)
    assert res.frequency == pytest.approx(1.73, abs=0.01)
    assert res.fit_phase == pytest.approx(0.0, abs=1e-6)


def test_flat_no_beat(f0):
    tr = BeatTrace(np.linspace(0, 4000, 401), np.full(401, 0.7))
    res = analyze_beat(tr, f0)
    assert not res.has_beat and res.contrast == 0 and math.isnan(res.phase)


def test_noise_no_beat(f0):
    rng = np.random.default_rng(1)
    tr = BeatTrace(np.linspace(0, 4000, 401), 1 + 0.1 * rng.standard_normal(401))
    assert not analyze_beat(tr, f0).has_beat


def test_short_trace_rejected(f0):
    tr = BeatTrace(np.linspace(0, 1000, 200), np.ones(200))
    with pytest.raises(ConfigurationError):
        analyze_beat(tr, f0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(0.05, 0.95), st.floats(0.0, 3000.0))
def test_fit_phase_matches_phase12(atom, phi, p1, t_ref):
    f0 = fine_structure_splitting(atom)
    s = FinalState((math.sqrt(p1) * cmath.exp(0.7j), math.sqrt(1 - p1) * cmath.exp(1j * (0.7 + phi))), t_ref)
    tr = beat_trace(s, atom, t_ref, t_ref + 4000.0, 401)
    res = analyze_beat(tr, f0)
    assert math.remainder(res.phase - s.phase12(atom), 2 * math.pi) == pytest.approx(0.0, abs=0.02)


@pytest.mark.parametrize("theta", [0.3, 1.5, 3.0, -2.0])
def test_phase_on_b2_shifts_phase(atom, f0, theta):
    a = FinalState((0.6, 0.7))
    b = FinalState((0.6, 0.7 * cmath.exp(1j * theta)))
    pa = analyze_beat(beat_trace(a, atom, 0, 4000, 401), f0).phase
    pb = analyze_beat(beat_trace(b, atom, 0, 4000, 401), f0).phase
    assert math.remainder(pb - pa - theta, 2 * math.pi) == pytest.approx(0.0, abs=0.02)


def test_probe_scaling(atom, f0):
    s = FinalState((0.6, 0.7 * cmath.exp(0.4j)))
    scaled = AtomSpec(atom.ground_label, atom.excited, ProbeSpec(2.0, 2.0))
    a = beat_trace(s, atom, 0, 4000, 401)
    b = beat_trace(s, scaled, 0, 4000, 401)
    assert np.allclose(b.signal, 4 * a.signal, rtol=1e-13)
    ra, rb = analyze_beat(a, f0), analyze_beat(b, f0)
    assert rb.contrast == pytest.approx(ra.contrast, rel=1e-9)
    assert rb.phase == pytest.approx(ra.phase, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0, 1),
    st.floats(-math.pi, math.pi),
    st.floats(0.1, 3),
    st.floats(0.1, 3),
    st.floats(0.1, 3),
    st.floats(0.1, 3),
    st.floats(-1, 1),
)
def test_signal_positive(p1, phi, e1, e2, d11, d22, c):
    from papsim.atom import LevelSpec

    probe = ProbeSpec(e1, e2, d11, d22, c * math.sqrt(d11 * d22))
    atom = AtomSpec("g", (LevelSpec("a", 769.9), LevelSpec("b", 766.5)), probe)
    s = FinalState((math.sqrt(p1), math.sqrt(1 - p1) * cmath.exp(1j * phi)))
    assert np.all(ion_signal(s, atom, np.linspace(0, 2000, 100)) >= -1e-12)


def test_power_spectrum_flat():
    tr = BeatTrace(np.arange(256) * 10.0, np.full(256, 3.0))
    f, p = trace_power_spectrum(tr)
    assert np.all(p < 1e-12)


def test_power_spectrum_peak(atom, f0):
    tr = beat_trace(superposition(), atom, 0.0, 6000.0, 601)
    f, p = trace_power_spectrum(tr)
    assert abs(f[np.argmax(p)] - 1.73) <= f[1] - f[0]


def test_power_spectrum_two_tones():
    tau = np.arange(2048) * 10.0
    y = np.sin(2 * np.pi * 1e-3 * 1.0 * tau) + 0.6 * np.sin(2 * np.pi * 1e-3 * 3.0 * tau)
    f, p = trace_power_spectrum(BeatTrace(tau, y))
    inner = p[1:-1]
    peaks = np.nonzero((inner > p[:-2]) & (inner > p[2:]) & (inner > 0.05 * p.max()))[0] + 1
    assert f[peaks] == pytest.approx([1.0, 3.0], abs=f[1] - f[0])


def test_power_spectrum_min_samples():
    with pytest.raises(SamplingError):
        trace_power_spectrum(BeatTrace(np.arange(32.0), np.zeros(32)))


def test_beat_frequency_from_run(setup):
    from papsim.experiments import ScanSpec, run_scan_2d

    res = run_scan_2d(setup, ScanSpec(setup.pair_shape(270e3), (math.pi,)))
    an = analyze_beat(BeatTrace(res.delays, res.signal[0]), fine_structure_splitting(setup.atom))
    assert an.frequency == pytest.approx(fine_structure_splitting(setup.atom), rel=0.005)
