import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gaussian_field, two_level
from papsim.atom import AtomSpec, LevelSpec, ProbeSpec, angular_frequency
from papsim.dynamics import (
    AreaReport,
    IntegratorParams,
    analytic_rabi,
    calibrate_scale_for_area,
    convergence_report,
    landau_zener,
    propagate,
    pulse_areas,
)
from papsim.errors import ConfigurationError, DomainError
from papsim.shaper import ShapeSpec, TemporalField, WindowSpec, apply_shape, source_spectrum, synthesize


def lz_field(rabi, beta, span, dt=0.25, wavelength=770.0):
    """Linearly chirped envelope (instantaneous detuning beta * t) of constant amplitude.

    The coupling is ramped on and off smoothly over the outer fifth of the
    sweep so that switching far from the crossing does not add transitions.
    """
    n = int(2 * span / dt) + 1
    t = (np.arange(n) - n // 2) * dt
    x = np.clip((span - np.abs(t)) / (0.2 * span), 0.0, 1.0)
    env = rabi * np.sin(0.5 * np.pi * x) ** 2 * np.exp(-0.5j * beta * t * t)
    return TemporalField(float(t[0]), dt, env, angular_frequency(wavelength))


@pytest.mark.parametrize("value,expect", [(math.pi, 1.0), (0.0, 0.0), (math.pi / 2, 0.5)])
def test_analytic_rabi(value, expect):
    assert analytic_rabi(value) == pytest.approx(expect, abs=1e-15)


def test_landau_zener_closed_form():
    assert landau_zener(0.0, 1e-6) == 0.0
    beta = 2e-6
    assert landau_zener(math.sqrt(2 * beta), beta) == pytest.approx(1 - math.exp(-math.pi), rel=1e-14)
    assert landau_zener(math.sqrt(2 * beta), beta) == pytest.approx(0.9568, abs=1e-4)
    assert landau_zener(math.sqrt(20 * beta), beta) >= 0.999999
    with pytest.raises(DomainError):
        landau_zener(1e-3, 0.0)


def test_area_report():
    r = AreaReport.from_areas([3.0, 4.0])
    assert r.effective == 5.0
    with pytest.raises(DomainError):
        AreaReport.from_areas([-1.0])


def test_rabi_oracle():
    atom = two_level()
    areas = np.linspace(0, 4 * math.pi, 17)
    for a in areas:
        traj = propagate(gaussian_field(a), atom)
        assert traj.final_populations[1] == pytest.approx(analytic_rabi(a), abs=1e-6)
        assert traj.norm_drift < 1e-9


def test_zero_field(atom):
    f = gaussian_field(0.0, wavelength=768.2)
    traj = propagate(f, atom)
    assert np.all(traj.b0 == 1)
    assert not np.any(traj.b_excited)
    assert convergence_report(f, atom) == 0.0


@pytest.mark.parametrize("ratio", [0.5, 1.0, 2.0, 5.0])
@pytest.mark.parametrize("widths", [20, 50])
def test_landau_zener_oracle(ratio, widths):
    beta = 2e-6
    rabi = math.sqrt(ratio * beta)
    # detuning sweeps over +-widths Rabi frequencies
    span = widths * rabi / beta
    # the sweep edges reach ~0.16 rad/fs; resolve them with quarter-fs steps
    traj = propagate(lz_field(rabi, beta, span, dt=0.125), two_level(), IntegratorParams(dt_max=0.25, record_stride=64))
    assert traj.final_populations[1] == pytest.approx(landau_zener(rabi, beta), abs=1e-3)
    assert traj.norm_drift < 1e-9


def test_preconditions_reject_coarse_steps(atom):
    with pytest.raises(ConfigurationError):
        IntegratorParams(dt_max=1.0)
    with pytest.raises(ConfigurationError):
        IntegratorParams(method="euler")
    far = AtomSpec("g", (LevelSpec("a", 700.0),), ProbeSpec())
    # 0.4 rad/fs detuning: 0.5 fs steps would exceed 0.1 rad per step
    f = gaussian_field(math.pi, carrier=angular_frequency(700.0) - 0.4)
    with pytest.raises(ConfigurationError):
        propagate(f, far)
    strong = gaussian_field(200 * math.pi, sigma=50.0)
    with pytest.raises(ConfigurationError):
        propagate(strong, two_level())


def test_out_of_band_level(atom, grid):
    src = source_spectrum(grid, 768.2, 9.5)
    f = synthesize(apply_shape(src, ShapeSpec((WindowSpec(769.9, 1.8),))), angular_frequency(768.2))
    bad = AtomSpec("g", (LevelSpec("a", 820.0),), ProbeSpec())
    with pytest.raises(ConfigurationError):
        propagate(f, bad)


def _shaped(setup, shape, area):
    src = setup.source()
    scale = calibrate_scale_for_area(shape, src, setup.atom, area)
    return synthesize(apply_shape(src, shape), setup.carrier).with_scale(scale)


def test_pulse_area_operations(setup):
    src = setup.source()
    shape = setup.pair_shape()
    r1 = pulse_areas(shape, src, setup.atom, 1.0)
    r2 = pulse_areas(shape, src, setup.atom, 2.0)
    assert np.allclose(r2.areas, 2 * np.array(r1.areas), rtol=1e-14)
    assert r2.effective == pytest.approx(2 * r1.effective, rel=1e-14)
    half = setup.pair_shape(amplitudes=(1.0, 0.0))
    r = pulse_areas(half, src, setup.atom, 1.0)
    assert r.areas[1] == 0.0 and r.effective == r.areas[0]
    # chirp does not change the reported area
    assert pulse_areas(setup.pair_shape(270e3), src, setup.atom, 1.0) == r1


def test_calibration(setup):
    src = setup.source()
    shape = setup.pair_shape(270e3)
    s1 = calibrate_scale_for_area(shape, src, setup.atom, math.pi)
    assert pulse_areas(shape, src, setup.atom, s1).effective == pytest.approx(math.pi, abs=1e-6)
    assert calibrate_scale_for_area(shape, src, setup.atom, 2 * math.pi) == pytest.approx(2 * s1, rel=1e-14)
    assert calibrate_scale_for_area(shape, src, setup.atom, 0.0) == 0.0
    with pytest.raises(DomainError):
        calibrate_scale_for_area(setup.pair_shape(amplitudes=(0.0, 0.0)), src, setup.atom, math.pi)


def test_two_windows_same_level(setup):
    shape = setup.shape([WindowSpec(769.9, 1.8), WindowSpec(769.5, 1.8)])
    with pytest.raises(ConfigurationError):
        pulse_areas(shape, setup.source(), setup.atom)


def test_frame_invariance(setup):
    f = _shaped(setup, setup.pair_shape(270e3), 2 * math.pi)
    w = 0.002
    g = replace(f, envelope=f.envelope * np.exp(1j * w * f.times), carrier=f.carrier + w)
    a = propagate(f, setup.atom)
    b = propagate(g, setup.atom)
    assert np.allclose(a.populations, b.populations, atol=1e-8)


def test_time_reversal(setup):
    f = _shaped(setup, setup.pair_shape(270e3), 1.7 * math.pi)
    fwd = propagate(f, setup.atom)
    lo, hi = f.omega_band
    c = f.carrier
    rev = replace(
        f,
        t_start=-float(f.times[-1]),
        envelope=np.conj(f.envelope[::-1]),
        omega_band=(2 * c - hi, 2 * c - lo),
    )
    psi_end = np.concatenate([[fwd.b0[-1]], fwd.b_excited[-1]])
    back = propagate(rev, setup.atom, initial=np.conj(psi_end))
    assert abs(back.b0[-1]) ** 2 == pytest.approx(1.0, abs=1e-6)


def test_relabeling_symmetry(setup):
    from papsim.experiments import Setup

    atom = setup.atom
    swapped = AtomSpec(atom.ground_label, atom.excited[::-1], atom.probe)
    shape = setup.pair_shape(270e3, amplitudes=(1.0, 0.7))
    s2 = Setup(atom=swapped)
    a = propagate(_shaped(setup, shape, 1.5 * math.pi), atom)
    b = propagate(_shaped(s2, shape.with_windows(shape.windows[::-1]), 1.5 * math.pi), swapped)
    assert np.allclose(a.final_populations, b.final_populations[[0, 2, 1]], atol=1e-12)


def test_initial_condition_and_unitarity(setup):
    f = _shaped(setup, setup.pair_shape(0.0), 2 * math.pi)
    traj = propagate(f, setup.atom)
    assert traj.b0[0] == 1 and not np.any(traj.b_excited[0])
    assert traj.norm_drift < 1e-9


@pytest.mark.parametrize("chirp", [0.0, 270e3])
def test_dt_halving(setup, chirp):
    f = _shaped(setup, setup.pair_shape(chirp), 3 * math.pi)
    assert convergence_report(f, setup.atom) < 1e-6


def test_independent_channels_differ(setup):
    from papsim.experiments import simulate

    shape = setup.pair_shape(0.0)
    a = simulate(setup, shape, math.pi).populations
    b = simulate(replace(setup, cross_talk=False), shape, math.pi).populations
    assert np.max(np.abs(a - b)) > 1e-3


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 4 * math.pi), st.floats(30.0, 120.0))
def test_rabi_oracle_property(area, sigma):
    traj = propagate(gaussian_field(area, sigma=sigma), two_level())
    assert traj.final_populations[1] == pytest.approx(analytic_rabi(area), abs=1e-6)
