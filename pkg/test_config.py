#!/usr/bin/env python3
"""
Tests for configuration loading, merging and validation.
Usage: python test_config.py
"""

import copy
import sys
from pathlib import Path

import pytest
import yaml

sys.path.insert(0, str(Path(__file__).parent / 'maxsurf'))

from config import DEFAULT_CONFIG, build_config, chart_of, load_config, validate_config
from errors import ConfigError
from scenarios import SCENARIOS, sweep_pairs

REPO = Path(__file__).parent


def test_missing_file_uses_defaults(tmp_path):
    config = load_config(tmp_path / 'missing.yaml')
    assert config['scenario']['name'] == DEFAULT_CONFIG['scenario']['name']
    assert config['metric']['name'] == 'flat'
    assert chart_of(config) == (-1.0, 1.0, -1.0, 1.0)
    assert config['tolerances'] == DEFAULT_CONFIG['tolerances']


def test_scenario_fills_missing_sections():
    config = build_config({'scenario': {'name': 'catenoid-annulus'}})
    assert config['domain']['kind'] == 'annulus'
    assert config['boundary']['name'] == 'radial_asinh'
    assert config['disc']['center'] == [1.5, 0.0]
    assert config['grid']['nx'] == DEFAULT_CONFIG['grid']['nx']
    assert config['grid']['residual_margin'] == 0.75
    assert build_config({})['grid']['residual_margin'] == 0.0


def test_partial_sections_are_merged():
    config = build_config({'tolerances': {'maximal': 0.2}, 'chart': {'x1': 2.0}})
    assert config['tolerances']['maximal'] == 0.2
    assert config['tolerances']['ineq_relative'] == 0.05
    assert chart_of(config) == (-1.0, 2.0, -1.0, 1.0)


def test_defaults_are_not_mutated():
    before = copy.deepcopy(DEFAULT_CONFIG)
    build_config({'grid': {'nx': 17}, 'solver': {'max_newton_iters': 3}})
    assert DEFAULT_CONFIG == before


def test_unparsable_files(tmp_path):
    broken = tmp_path / 'broken.yaml'
    broken.write_text('grid: [1, 2\n')
    with pytest.raises(ConfigError):
        load_config(broken)
    listing = tmp_path / 'list.yaml'
    listing.write_text('- a\n- b\n')
    with pytest.raises(ConfigError):
        load_config(listing)


def test_unknown_scenario():
    with pytest.raises(ConfigError):
        build_config({'scenario': {'name': 'helicoid'}})


@pytest.mark.parametrize('user', [
    {'grid': {'nx': 5}},
    {'grid': {'resolutions': [65, 33]}},
    {'disc': {'pairs': [[0.5, 0.2]]}},
    {'sweep': {'R_factors': [1.0, 2.0]}},
    {'sweep': {'r': -0.1}},
    {'solver': {'spacelike_guard': 0.0}},
    {'metric': {'name': 'hyperbolic'}},
    {'boundary': {'name': 'spiral'}},
    {'chart': {'x0': 1.0}},
    {'disc': {'pairs': [[0.2]]}},
    {'disc': {'pairs': [['small', 0.4]]}},
    {'disc': {'center': [5.0, 0.0]}},
    {'disc': {'center': 0.3}},
    {'grid': {'residual_margin': -0.1}},
    {'grid': {'residual_margin': 1.0}},
])
def test_invalid_entries(user):
    with pytest.raises(ConfigError):
        validate_config(build_config(user))


def test_shipped_configs_are_valid():
    paths = [REPO / 'maxsurf' / 'config.yaml'] + sorted((REPO / 'experiments').glob('*.yaml'))
    for path in paths:
        config = validate_config(load_config(path))
        assert config['scenario']['name'] in SCENARIOS, path


def test_yaml_round_trip():
    config = build_config({'scenario': {'name': 'sphere-perturbed'}})
    assert build_config(yaml.safe_load(yaml.safe_dump(config))) == config


def test_sweep_pairs():
    scenario = SCENARIOS['flat-plane']
    pairs = sweep_pairs(scenario, DEFAULT_CONFIG['sweep'])
    assert len(pairs) == 9
    assert pairs[0] == pytest.approx((0.15 * 0.85, 1.5 * 0.15 * 0.85))
    assert max(R for _, R in pairs) < 1.0
    fixed = sweep_pairs(scenario, {'r': 0.2, 'R_factors': [2.0, 4.0]})
    assert fixed == [(0.2, 0.4), (0.2, 0.8)]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, '-v']))
