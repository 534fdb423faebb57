"""
Scenario file and evaluation suite tests.
"""

import numpy as np
import pytest
import yaml

from environment.curriculum import level_by_index, sample_scenario
from tools.scenario_io import (
    ScenarioFormatError,
    generate_suite,
    load_scenario,
    load_suite,
    save_scenario,
)


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data), encoding='utf-8')
    return path


def minimal_scenario():
    return {
        'bounds': [-6, -6, 6, 6],
        'start': [0, 0, 0],
        'goal': [2, 1],
        'obstacles': [
            {'type': 'circle', 'center': [1, 1], 'radius': 0.3},
            {'type': 'rectangle', 'min': [-2, -2], 'max': [-1, -1.5]},
        ],
    }


class TestScenarioFiles:
    def test_round_trip(self, tmp_path):
        scenario = sample_scenario(level_by_index(3), np.random.default_rng(8), scenario_id="level3_x", seed=8)
        path = save_scenario(scenario, str(tmp_path / "level3_x.yaml"))
        assert load_scenario(str(path)) == scenario

    def test_minimal_file(self, tmp_path):
        path = write_yaml(tmp_path / "small.yaml", minimal_scenario())
        scenario = load_scenario(str(path))
        assert scenario.scenario_id == "small"
        assert scenario.goal == (2.0, 1.0)
        assert len(scenario.world.obstacles) == 2
        assert scenario.world.robot_radius == 0.3
        assert scenario.level == -1

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_scenario(str(tmp_path / "nope.yaml"))

    def test_malformed_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("bounds: [1, 2\n", encoding='utf-8')
        with pytest.raises(ScenarioFormatError):
            load_scenario(str(path))

    @pytest.mark.parametrize("mutate", [
        lambda d: d.pop('goal'),
        lambda d: d['obstacles'].append({'type': 'triangle'}),
        lambda d: d.update(bounds=[0, 0, 1]),
        lambda d: d.update(start=['a', 0, 0]),
        lambda d: d['obstacles'].append({'type': 'circle', 'center': [0, 0], 'radius': -1}),
        lambda d: d['obstacles'].append({'type': 'rectangle', 'min': [1, 1], 'max': [0, 0]}),
    ])
    def test_invalid_content(self, tmp_path, mutate):
        data = minimal_scenario()
        mutate(data)
        path = write_yaml(tmp_path / "broken.yaml", data)
        with pytest.raises(ScenarioFormatError):
            load_scenario(str(path))

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n", encoding='utf-8')
        with pytest.raises(ScenarioFormatError):
            load_scenario(str(path))


class TestSuites:
    def test_generation_is_byte_identical(self, tmp_path):
        first = generate_suite(level=2, count=5, seed=7, out_dir=str(tmp_path / "a"))
        second = generate_suite(level=2, count=5, seed=7, out_dir=str(tmp_path / "b"))
        names = sorted(p.name for p in first.parent.iterdir())
        assert names == sorted(p.name for p in second.parent.iterdir())
        assert len(names) == 6
        for name in names:
            assert (first.parent / name).read_bytes() == (second.parent / name).read_bytes()

    def test_different_seed_differs(self, tmp_path):
        a = generate_suite(level=1, count=2, seed=1, out_dir=str(tmp_path / "a"))
        b = generate_suite(level=1, count=2, seed=2, out_dir=str(tmp_path / "b"))
        assert (a.parent / "level1_000.yaml").read_bytes() != (b.parent / "level1_000.yaml").read_bytes()

    def test_load_resolves_relative_paths(self, tmp_path):
        path = generate_suite(level=0, count=3, seed=4, out_dir=str(tmp_path / "suite"))
        suite = load_suite(str(path))
        assert len(suite) == 3
        assert [e.scenario_id for e in suite.entries] == ["level0_000", "level0_001", "level0_002"]
        scenarios = suite.load_scenarios()
        assert all(s.level == 0 for s in scenarios)
        assert len({e.seed for e in suite.entries}) == 3

    def test_with_noise(self, tmp_path):
        suite = load_suite(str(generate_suite(level=0, count=2, seed=4, out_dir=str(tmp_path))))
        noisy = suite.with_noise(0.1)
        assert all(e.noise_sigma == 0.1 for e in noisy.entries)
        assert all(e.noise_sigma == 0.0 for e in suite.entries)
        assert [e.seed for e in noisy.entries] == [e.seed for e in suite.entries]

    def test_suite_level_noise_default(self, tmp_path):
        write_yaml(tmp_path / "s.yaml", minimal_scenario())
        path = write_yaml(tmp_path / "suite.yaml", {
            'noise_sigma': 0.05,
            'episodes': [{'scenario': 's.yaml', 'seed': 1}, {'scenario': 's.yaml', 'seed': 2, 'noise_sigma': 0.0}],
        })
        suite = load_suite(str(path))
        assert [e.noise_sigma for e in suite.entries] == [0.05, 0.0]
        assert suite.name == "suite"

    def test_bad_suites(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_suite(str(tmp_path / "missing.yaml"))
        with pytest.raises(ScenarioFormatError):
            load_suite(str(write_yaml(tmp_path / "a.yaml", {'episodes': []})))
        with pytest.raises(ScenarioFormatError):
            load_suite(str(write_yaml(tmp_path / "b.yaml", {'episodes': [{'seed': 1}]})))
        with pytest.raises(ScenarioFormatError):
            load_suite(str(write_yaml(tmp_path / "c.yaml", {'name': 'x'})))

    def test_count_must_be_positive(self, tmp_path):
        with pytest.raises(ValueError):
            generate_suite(level=0, count=0, seed=1, out_dir=str(tmp_path))
