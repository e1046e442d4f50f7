import pytest

from papsim.config import ConfigError, default_config, default_config_text, parse_config


def errors_of(text):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    return err.value.errors


def test_default_config_valid():
    cfg = default_config()
    assert cfg.atom.build().labels == ["4P1/2", "4P3/2"]
    assert cfg.experiment.name is None
    s = cfg.setup()
    assert s.source_center == 768.2 and s.source_fwhm == 9.5
    assert s.grid.n_points == 2**15


def test_round_trip():
    cfg = default_config()
    again = parse_config(cfg.to_yaml())
    assert again == cfg
    text = default_config_text() + "experiment:\n  scan_2d:\n    areas_pi: {start: 1, stop: 3, num: 5}\n"
    cfg = parse_config(text)
    assert parse_config(cfg.to_yaml()) == cfg


def test_negative_fwhm_location():
    text = default_config_text().replace("fwhm: 1.8", "fwhm: -1", 1)
    locs = [loc for loc, _ in errors_of(text)]
    assert "shape.windows[0].fwhm" in locs


def test_ambiguous_experiment():
    text = default_config_text() + "experiment:\n  simulate: {}\n  completeness: {}\n"
    errs = errors_of(text)
    assert any("ambiguous" in msg for _, msg in errs)


def test_unknown_keys_reported_with_location():
    text = default_config_text().replace("  n_points: 32768", "  n_points: 32768\n  n_pionts: 4") + "extra: 1\n"
    locs = [loc for loc, _ in errors_of(text)]
    assert "grid.n_pionts" in locs and "extra" in locs


def test_all_errors_reported():
    text = (
        default_config_text()
        .replace("fwhm: 1.8", "fwhm: -1", 1)
        .replace("n_points: 32768", "n_points: 1000")
        .replace("dt_max: 0.5", "dt_max: 2.0")
    )
    locs = {loc for loc, _ in errors_of(text)}
    assert {"shape.windows[0].fwhm", "grid.n_points", "integrator.dt_max"} <= locs


def test_syntax_error_line_column():
    (loc, msg), = errors_of("atom:\n  levels: [1,\n")
    assert loc.startswith("line ") and "column" in loc
    assert "syntax" in msg


def test_atom_semantics():
    text = default_config_text().replace("wavelength: 766.5", "wavelength: 769.9")
    errs = errors_of(text)
    assert any(loc == "atom" and "distinct" in msg for loc, msg in errs)


def test_experiment_mismatch():
    cfg = parse_config(default_config_text() + "experiment:\n  simulate:\n    area_pi: 2\n")
    assert cfg.params("simulate").area_pi == 2
    with pytest.raises(ConfigError):
        cfg.params("completeness")


def test_axis_must_increase():
    text = default_config_text() + "experiment:\n  scan_rabi:\n    areas_pi: [1, 0.5]\n"
    assert any("increasing" in msg for _, msg in errors_of(text))


def test_not_a_mapping():
    assert errors_of("- 1\n- 2\n")
