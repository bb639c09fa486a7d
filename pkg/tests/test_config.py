"""Scenario configuration: parsing, validation, round trips, builders."""
import math

import numpy as np
import pytest

from mobman.config import (ChassisControlConfig, DisturbanceConfig,
                           ScenarioConfig, build_chassis_gains,
                           build_circuit_spec, build_fires, build_geometry,
                           build_inertial, build_sweep_spec,
                           disturbance_series, load_config, parse_config,
                           save_config, serialize_config, validate_config)
from mobman.errors import ParseError, ValidationError

DEG = math.pi / 180.0


def test_empty_and_none_yield_defaults():
    assert parse_config({}) == ScenarioConfig()
    assert parse_config(None) == ScenarioConfig()


def test_dt_zero_is_named():
    with pytest.raises(ValidationError) as err:
        parse_config({"dt": 0.0})
    assert any("dt" in m for m in err.value.messages)


def test_unknown_key_reported():
    with pytest.raises(ValidationError) as err:
        parse_config({"chasis_control": {}})
    assert any("unknown key" in m for m in err.value.messages)


def test_section_must_be_mapping():
    with pytest.raises(ValidationError) as err:
        parse_config({"circuit": 7})
    assert any("expected a mapping" in m for m in err.value.messages)


def test_integrator_choices():
    assert parse_config({"integrator": "euler"}).integrator == "euler"
    with pytest.raises(ValidationError) as err:
        parse_config({"integrator": "rk2"})
    assert any("integrator" in m for m in err.value.messages)


def test_multiple_problems_collected():
    with pytest.raises(ValidationError) as err:
        parse_config({"dt": -1.0, "circuit": {"speed": 0.0}})
    assert len(err.value.messages) >= 2


def test_disturbance_must_fit_bounds():
    data = {"disturbance": {"kind": "constant", "amplitude": [0.5, 0.0]}}
    with pytest.raises(ValidationError) as err:
        parse_config(data)
    assert any("amplitude" in m for m in err.value.messages)
    # Raising the plant bound makes the same amplitude legal.
    data["chassis_control"] = {"f_bounds": [0.6, 0.1]}
    parse_config(data)


def test_sweep_passes_validation():
    with pytest.raises(ValidationError):
        parse_config({"sweep": {"passes": 0}})
    with pytest.raises(ValidationError):
        parse_config({"sweep": {"passes": 2.5}})


def test_yaml_round_trip(tmp_path):
    config = parse_config({
        "dt": 0.002,
        "circuit": {"edge_length": 3.0, "corner_radius": 0.6},
        "fires": [{"ident": "A", "position": [0.1, 0.2, 0.3]}],
        "disturbance": {"kind": "sine", "amplitude": [0.05, 0.05]},
    })
    path = tmp_path / "scenario.yaml"
    save_config(config, path)
    again = load_config(path)
    assert again == config
    # Serialization is plain data keyed by field names.
    data = serialize_config(config)
    assert data["dt"] == 0.002
    assert parse_config(data) == config


def test_yaml_syntax_error_raises_parse_error(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("dt: [unclosed\n")
    with pytest.raises(ParseError):
        load_config(path)


def test_fires_overlay_assigns_idents():
    config = parse_config({"fires": [{"position": [1.0, 0.0, 0.3]},
                                     {"position": [0.0, 1.0, 0.3]}]})
    assert [f.ident for f in config.fires] == ["F1", "F2"]
    fires = build_fires(config)
    assert fires[0].position == (1.0, 0.0, 0.3)


def test_default_fires_match_worked_example():
    fires = build_fires(ScenarioConfig())
    assert [f.ident for f in fires] == ["F1", "F2"]
    assert fires[0].position == (0.30, 0.20, 0.30)
    assert fires[1].position == (0.20, 0.30, 0.30)


def test_build_geometry_mirrors_config():
    geometry, tool = build_geometry(ScenarioConfig())
    assert geometry.a == (100.0, 1000.0, 1700.0, 100.0, 80.0)
    assert geometry.d1 == 185.0
    assert tool.y5p == 0.0
    cfg = parse_config({"geometry": {"tool_y_offset": 120.0}})
    assert build_geometry(cfg)[1].y5p == 120.0


def test_build_inertial_paths():
    cfg = ScenarioConfig()
    params = build_inertial(cfg, build_geometry(cfg)[0])
    assert sum(params.masses) == pytest.approx(400.0)
    explicit = parse_config({"inertial": {
        "masses": [50.0, 150.0, 150.0, 50.0],
        "com_offsets": [0.05, 0.5, 0.85, 0.09],
        "inertias": [5.0, 50.0, 120.0, 2.0]}})
    params = build_inertial(explicit, build_geometry(explicit)[0])
    assert params.masses == (50.0, 150.0, 150.0, 50.0)
    # Bad values are rejected at parse time...
    with pytest.raises(ValidationError):
        parse_config({"inertial": {"masses": [50.0, -1.0, 150.0, 50.0],
                                   "com_offsets": [0.05, 0.5, 0.85, 0.09],
                                   "inertias": [5.0, 50.0, 120.0, 2.0]}})
    # ...and again by the builder if a config is mutated after parsing.
    bad = ScenarioConfig()
    bad.inertial.masses = [50.0, -1.0, 150.0, 50.0]
    bad.inertial.com_offsets = [0.05, 0.5, 0.85, 0.09]
    bad.inertial.inertias = [5.0, 50.0, 120.0, 2.0]
    with pytest.raises(ValidationError):
        build_inertial(bad, build_geometry(bad)[0])


def test_build_chassis_gains_defaults():
    gains = build_chassis_gains(ScenarioConfig())
    assert (gains.k1, gains.k2, gains.k3) == (4.0, 100.0, 18.0)
    assert (gains.q1, gains.q2) == (15.0, 15.0)
    assert (gains.p1, gains.p2) == (0.2, 0.2)
    assert gains.f_bounds == (0.1, 0.1)
    assert gains.boundary_layer == 0.0


def test_build_circuit_and_sweep_specs():
    spec = build_circuit_spec(ScenarioConfig())
    assert spec.edge_length == 2.60128 and spec.speed == 0.88
    sweep = build_sweep_spec(ScenarioConfig())
    assert sweep.pitch == pytest.approx(30.0 * DEG)
    assert sweep.speed == 1.4


def test_validate_config_returns_list():
    problems = validate_config(ScenarioConfig())
    assert problems == []
    broken = ScenarioConfig(dt=-5.0)
    assert any("dt" in p for p in validate_config(broken))


def test_disturbance_series_kinds():
    t = np.arange(0, 1.0, 0.01)
    none = disturbance_series(DisturbanceConfig(), t)
    assert none.shape == (len(t), 2) and not none.any()
    const = disturbance_series(
        DisturbanceConfig(kind="constant", amplitude=[0.05, 0.02]), t)
    np.testing.assert_allclose(const, np.tile([0.05, 0.02], (len(t), 1)))
    sine = disturbance_series(
        DisturbanceConfig(kind="sine", amplitude=[0.1, 0.1], frequency=0.5), t)
    np.testing.assert_allclose(sine[:, 0],
                               0.1 * np.sin(2 * math.pi * 0.5 * t), atol=1e-12)
    n1 = disturbance_series(
        DisturbanceConfig(kind="noise", amplitude=[0.1, 0.1], seed=3), t)
    n2 = disturbance_series(
        DisturbanceConfig(kind="noise", amplitude=[0.1, 0.1], seed=3), t)
    np.testing.assert_array_equal(n1, n2)
    assert np.abs(n1).max() <= 0.1


def test_chassis_config_dataclass_defaults():
    cfg = ChassisControlConfig()
    assert cfg.surface_gains == [4.0, 100.0, 18.0]
    assert cfg.reaching_gains == [15.0, 15.0]
    assert cfg.track_width == 0.8
