import json

import pytest

from mhdsim.config import RunConfig, parse_config
from mhdsim.errors import ParseError, ValidationError


def test_minimal_config_fills_defaults():
    cfg = parse_config('{"scenario": "equilibrium"}')
    assert cfg == RunConfig()
    assert cfg.N == 32 and cfg.s == 3 and cfg.mode == "direct"


def test_non_power_of_two_grid():
    with pytest.raises(ValidationError, match="power of two"):
        parse_config('{"N": 31}')


def test_low_regularity_index():
    with pytest.raises(ValidationError, match="s must be"):
        parse_config('{"s": 2}')


def test_all_violations_listed():
    with pytest.raises(ValidationError) as info:
        parse_config('{"N": 31, "s": 2, "mode": "bogus", "t_end": -1}')
    msg = str(info.value)
    for part in ("N must", "s must", "mode must", "t_end must"):
        assert part in msg


def test_malformed_json_and_unknown_keys():
    with pytest.raises(ParseError):
        parse_config("{")
    with pytest.raises(ParseError):
        parse_config("[1, 2]")
    with pytest.raises(ParseError, match="unknown"):
        parse_config('{"grid": 32}')


def test_scenario_and_current_specs():
    cfg = parse_config(
        json.dumps(
            {
                "scenario": {"name": "perturbed", "eps": 0.01, "k": [1, 1]},
                "current": {"mean": [1, 0], "profile": "ramp", "rate": 0.5, "modes": [[1, 0, 0.1]]},
            }
        )
    )
    sc = cfg.scenario_config()
    assert sc.name == "perturbed" and sc.k == (1, 1) and sc.eps == 0.01
    cur = cfg.surface_current()
    assert cur.profile == "ramp" and cur.rate == 0.5 and len(cur.modes) == 1
    assert parse_config('{"current": [0, -2]}').surface_current().mean == (0.0, -2.0)


def test_bad_scenario_name():
    with pytest.raises(ValidationError, match="scenario"):
        parse_config('{"scenario": "vortex"}')
