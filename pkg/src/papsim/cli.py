"""Command-line front end: ``papsim <subcommand> [--config F] [--out D] [--threads N] [--check]``.

Every subcommand writes ``summary.json``, one or more CSV files and
``manifest.json`` into the output directory. Exit codes: 0 success,
2 configuration error, 3 numerical-invariant failure, 4 failed built-in
check (only with ``--check``).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from . import experiments as ex
from .atom import beat_period
from .config import ConfigError, axis_values, default_config_text, parse_config
from .dynamics import convergence_report
from .errors import NotATrainError, NumericalInvariantError, PapError
from .io import now, write_csv, write_json, write_manifest
from .shaper import apply_shape, check_time_window, synthesize, train_spacing

OUT_ENV = "PAPSIM_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4


class Checks(dict):
    def add(self, name, value, passed, limit):
        self[name] = {"value": value, "limit": limit, "passed": bool(passed)}

    @property
    def passed(self):
        return all(c["passed"] for c in self.values())


def _pop_header(atom):
    return ["p_" + atom.ground_label] + ["p_" + lb for lb in atom.labels]


def _envelope_csv(path, fld):
    e = fld.scaled_envelope
    write_csv(path, ["t_fs", "re", "im", "abs"], [fld.times, e.real, e.imag, np.abs(e)])


# ---------------------------------------------------------------- subcommands


def cmd_synthesize(cfg, setup, par, out):
    shape = cfg.shape_spec(setup)
    check_time_window(setup.grid, shape)
    src = setup.source()
    shaped = apply_shape(src, shape)
    fld = synthesize(shaped, setup.carrier)
    files = [os.path.join(out, "envelope.csv"), os.path.join(out, "spectrum.csv")]
    _envelope_csv(files[0], fld)
    write_csv(files[1], ["wavelength_nm", "source", "shaped"], [setup.grid.wavelength, src.intensity, shaped.intensity])
    checks = Checks()
    summary = {"time_window_fs": setup.grid.time_window, "dt_fs": fld.dt}
    try:
        spacing = train_spacing(fld)
    except NotATrainError:
        spacing = None
    summary["train_spacing_fs"] = spacing
    if setup.atom.n_levels >= 2:
        period = beat_period(setup.atom)
        summary["beat_period_fs"] = period
        checks.add("train_spacing", spacing, spacing is not None and abs(spacing - period) <= 2.0, f"{period:.1f} +- 2 fs")
    return files, summary, checks


def cmd_simulate(cfg, setup, par, out):
    shape = cfg.shape_spec(setup)
    area = par.area_pi * math.pi
    sim = ex.simulate(setup, shape, area)
    tr = sim.trajectory
    files = [os.path.join(out, "envelope.csv"), os.path.join(out, "trajectory.csv")]
    _envelope_csv(files[0], sim.field)
    cols = [tr.times] + list(tr.populations.T)
    head = ["t_fs"] + _pop_header(setup.atom)
    if setup.atom.n_levels >= 2:
        cols.append(np.angle(np.conj(tr.b_excited[:, 0]) * tr.b_excited[:, 1]))
        head.append("arg_b1c_b2")
    write_csv(files[1], head, cols)
    checks = Checks()
    checks.add("norm_drift", tr.norm_drift, tr.norm_drift < 1e-9, "< 1e-9")
    summary = {
        "effective_area": area,
        "areas": sim.areas,
        "amplitude_scale": sim.scale,
        "final_populations": dict(zip(head[1:], sim.populations)),
        "norm_drift": tr.norm_drift,
    }
    if cfg.integrator.convergence_check:
        conv = convergence_report(sim.field, setup.atom, setup.integrator)
        summary["dt_halving_change"] = conv
        checks.add("dt_halving", conv, conv < 1e-6, "< 1e-6")
    return files, summary, checks


def _line_csv(path, res, atom):
    write_csv(path, ["area_rad"] + _pop_header(atom), [res.areas] + list(res.populations.T))


def cmd_scan_rabi(cfg, setup, par, out):
    res = ex.run_rabi_calibration(setup, par.line, axis_values(par.areas_pi, math.pi))
    files = [os.path.join(out, "populations.csv")]
    _line_csv(files[0], res, setup.atom)
    checks = Checks()
    rel = res.first_max_area / math.pi
    checks.add("first_maximum", rel, abs(rel - 1) <= 0.05, "pi +- 5%")
    checks.add("area_scale_fit", res.fit_scale, abs(res.fit_scale - 1) <= 0.05, "1 +- 0.05")
    summary = {"line": par.line, "first_max_area_pi": rel, "fit_scale": res.fit_scale}
    return files, summary, checks


def cmd_scan_ap(cfg, setup, par, out):
    areas = axis_values(par.areas_pi, math.pi)
    res = ex.run_single_line_ap(setup, par.line, par.chirp_alpha, areas)
    files = [os.path.join(out, "populations.csv")]
    _line_csv(files[0], res, setup.atom)
    lo, hi = res.plateau()
    summary = {"line": par.line, "chirp_fs2": par.chirp_alpha, "plateau_min": lo, "plateau_max": hi}
    checks = Checks()
    checks.add("plateau_min", lo, lo >= 0.95, ">= 0.95 for A >= 1.2 pi")
    if par.compare_pixel_width is not None and setup.pixel_width is None:
        pix = ex.run_single_line_ap(replace(setup, pixel_width=par.compare_pixel_width), par.line, par.chirp_alpha, areas)
        files.append(os.path.join(out, "populations_pixelized.csv"))
        _line_csv(files[-1], pix, setup.atom)
        summary["ripple"] = ex.plateau_ripple(res)
        summary["ripple_pixelized"] = ex.plateau_ripple(pix)
        summary["pixel_width_nm"] = par.compare_pixel_width
    return files, summary, checks


def cmd_scan_2d(cfg, setup, par, out):
    shape = cfg.shape_spec(setup)
    areas = axis_values(par.areas_pi, math.pi)
    delays = None if par.delays is None else tuple(axis_values(par.delays))
    res = ex.run_scan_2d(setup, ex.ScanSpec(shape, tuple(areas), delays))
    files = [os.path.join(out, "signal.csv"), os.path.join(out, "per_area.csv")]
    aa, dd = np.meshgrid(res.areas, res.delays, indexing="ij")
    write_csv(files[0], ["area_rad", "delay_fs", "signal"], [aa, dd, res.signal])
    write_csv(
        files[1],
        ["area_rad"] + _pop_header(setup.atom) + ["phase12", "contrast", "beat_amplitude", "relative_contrast"],
        [res.areas] + list(res.populations.T) + [res.phase12, res.contrast, res.beat_amplitude, res.relative_contrast],
    )
    checks = Checks()
    ok = bool(np.all((res.populations >= -1e-12) & (res.populations <= 1 + 1e-12)))
    checks.add("populations_in_range", ok, ok, "[0, 1]")
    summary = {"n_areas": len(res.areas), "n_delays": len(res.delays), "delay_start_fs": res.delays[0]}
    chirped = all(w.chirp_alpha != 0 for w in shape.windows)
    if chirped:
        sel = res.areas >= 1.2 * math.pi - 1e-12
        if sel.sum() >= 2:
            drift = float(np.ptp(np.unwrap(res.phase12[sel])))
            ground = float(res.populations[sel, 0].max())
            checks.add("phase_drift", drift, drift < 0.2, "< 0.2 rad for A >= 1.2 pi")
            checks.add("ground_residual", ground, ground <= 0.05, "<= 0.05 for A >= 1.2 pi")
    else:
        i1 = np.flatnonzero(np.isclose(res.areas, math.pi))
        i2 = np.flatnonzero(np.isclose(res.areas, 2 * math.pi))
        if i1.size and i2.size:
            ratio = float(res.beat_amplitude[i2[0]] / res.beat_amplitude[i1[0]])
            summary["contrast_ratio_2pi_to_pi"] = ratio
            checks.add("contrast_collapse", ratio, ratio < 0.25, "< 0.25")
    return files, summary, checks


def cmd_completeness(cfg, setup, par, out):
    res = ex.run_completeness(
        setup, par.delay, par.chirp_alpha, par.first_area_pi * math.pi, par.second_area_pi * math.pi, par.span_after
    )
    files = []
    for name, (f, p), tr in zip(("before", "after"), (res.before, res.after), res.traces):
        files.append(os.path.join(out, f"spectrum_{name}.csv"))
        write_csv(files[-1], ["freq_THz", "power"], [f, p])
        files.append(os.path.join(out, f"trace_{name}.csv"))
        write_csv(files[-1], ["delay_fs", "signal"], [tr.delays, tr.signal])
    ratio = res.peak_ratio("after")
    checks = Checks()
    checks.add("residual", res.residual, res.residual <= 0.03, "<= 0.03")
    checks.add("post_pulse_peak", ratio, ratio <= 0.05, "<= 0.05 of reference")
    summary = {
        "final_populations": dict(zip(_pop_header(setup.atom), res.populations)),
        "residual": res.residual,
        "peak_ratio_after": ratio,
        "peak_ratio_before": res.peak_ratio("before"),
        "pulse_windows_fs": res.pulse_windows,
    }
    return files, summary, checks


def cmd_phase_control(cfg, setup, par, out):
    res = ex.run_phase_control(setup, par.offsets, par.line, par.chirp_alpha, par.area_pi * math.pi)
    files = [os.path.join(out, "phase.csv")]
    err = res.errors()
    write_csv(
        files[0],
        ["offset_rad", "phase12", "shift", "error"] + _pop_header(setup.atom),
        [res.offsets, res.phase12, res.shifts, err] + list(res.populations.T),
    )
    dpop = float(np.max(np.abs(res.populations[:, 1:] - res.populations[0, 1:]))) if len(res.offsets) else 0.0
    checks = Checks()
    checks.add("shift_error", float(np.max(np.abs(err))), np.max(np.abs(err)) <= 0.1, "<= 0.1 rad")
    checks.add("population_change", dpop, dpop < 0.02, "< 0.02")
    return files, {"line": par.line, "shifts": res.shifts}, checks


def cmd_amplitude_control(cfg, setup, par, out):
    reports = ex._map(
        lambda b: ex.run_amplitude_control(setup, b, par.max_iterations, par.window_fwhm, par.chirp_alpha),
        par.targets,
        setup.threads,
    )
    rows = [(r.target_beta, i, s.ratio, s.beta, e, s.ground) for r in reports for i, (s, e) in enumerate(zip(r.iterations, r.errors))]
    files = [os.path.join(out, "control.csv")]
    write_csv(files[0], ["target_beta", "iteration", "ratio", "beta", "error", "ground"], list(zip(*rows)))
    final = max(r.errors[-1] for r in reports)
    ground = max(s.ground for r in reports for s in r.iterations)
    checks = Checks()
    checks.add("final_error", final, final <= 0.002, "<= 0.002")
    checks.add("ground_residual", ground, ground <= 0.05, "<= 0.05 every iteration")
    summary = {"iteration0_errors": [r.errors[0] for r in reports], "final_errors": [r.errors[-1] for r in reports]}
    if par.narrowband_fwhm is not None:
        nb = ex.run_narrowband_comparison(setup, par.targets, (par.window_fwhm, par.narrowband_fwhm), par.chirp_alpha)
        e_wide = [r.errors[0] for r in nb[par.window_fwhm]]
        e_narrow = [r.errors[0] for r in nb[par.narrowband_fwhm]]
        files.append(os.path.join(out, "narrowband.csv"))
        write_csv(files[-1], ["target_beta", "error_wide", "error_narrow"], [par.targets, e_wide, e_narrow])
        summary["narrowband_errors"] = e_narrow
        better = all(n < w for n, w in zip(e_narrow, e_wide))
        checks.add("narrowband_better", better, better, "error(narrow) < error(wide) for every target")
    return files, summary, checks


COMMANDS = {
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "scan-rabi": cmd_scan_rabi,
    "scan-ap": cmd_scan_ap,
    "scan-2d": cmd_scan_2d,
    "completeness": cmd_completeness,
    "phase-control": cmd_phase_control,
    "amplitude-control": cmd_amplitude_control,
}


def build_parser():
    p = argparse.ArgumentParser(prog="papsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML run config (default: bundled potassium config)")
        s.add_argument("--out", help=f"output directory (default: config output.directory, else ${OUT_ENV}/<command>)")
        s.add_argument("--threads", type=int, default=1, help="worker threads for independent grid points")
        s.add_argument("--check", action="store_true", help="exit with code 4 if a built-in check fails")
    return p


def _out_dir(args, cfg):
    if args.out:
        return args.out
    if cfg is not None and cfg.output.directory:
        return cfg.output.directory
    return os.path.join(os.environ.get(OUT_ENV, "papsim-output"), args.command)


def run(command, config_text, out_dir=None, threads=1, check=False):
    """Run one subcommand; returns ``(exit_code, summary or None)``."""
    args = argparse.Namespace(command=command, out=out_dir)
    started = now()
    cfg = None
    try:
        cfg = parse_config(config_text)
        par = cfg.params(command.replace("-", "_"))
        if threads < 1:
            raise ConfigError([("--threads", "must be >= 1")])
    except ConfigError as exc:
        _report(args, cfg, config_text, started, "config-error", [f"{loc}: {m}" if loc else m for loc, m in exc.errors])
        return EXIT_CONFIG, None
    out = _out_dir(args, cfg)
    try:
        setup = cfg.setup(threads)
        files, summary, checks = COMMANDS[command](cfg, setup, par, out)
    except NumericalInvariantError as exc:
        _report(args, cfg, config_text, started, "numerical-error", [f"{type(exc).__name__}: {exc}"])
        return EXIT_NUMERIC, None
    except PapError as exc:
        _report(args, cfg, config_text, started, "config-error", [str(exc)])
        return EXIT_CONFIG, None
    summary = {"command": command, "version": __version__, **summary, "checks": checks, "checks_passed": checks.passed}
    spath = os.path.join(out, "summary.json")
    write_json(spath, summary)
    failed = [k for k, c in checks.items() if not c["passed"]]
    status = "ok" if not failed else "checks-failed"
    write_manifest(out, command, config_text, files + [spath], started, status, [f"check failed: {k}" for k in failed])
    return (EXIT_CHECK if check and failed else EXIT_OK), summary


def _report(args, cfg, text, started, status, errors):
    for e in errors:
        print(f"papsim: {e}", file=sys.stderr)
    try:
        write_manifest(_out_dir(args, cfg), args.command, text, [], started, status, errors)
    except OSError:
        pass


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"papsim: cannot read config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        text = default_config_text()
    code, summary = run(args.command, text, args.out, args.threads, args.check)
    if summary is not None:
        for name, c in summary["checks"].items():
            print(f"{'PASS' if c['passed'] else 'FAIL'} {name}: {c['value']} (limit {c['limit']})")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
