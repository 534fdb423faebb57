"""
Training log and run manifest tests.
"""

import pytest

from memory.run_manifest import RunManifest
from memory.train_log import EpisodeRecord, TrainLog, UpdateRecord


def episode(n, env_step, level=0, outcome='arrived', ret=100.0):
    return EpisodeRecord(n, env_step, level, ret, outcome, 10, 0.125)


class TestTrainLog:
    def test_append_only(self):
        log = TrainLog()
        log.add_episode(episode(1, 10))
        log.add_episode(episode(2, 10))
        with pytest.raises(ValueError):
            log.add_episode(episode(3, 5))
        log.add_update(UpdateRecord(1, 10, 0.5, 0.2, 0.9))
        with pytest.raises(ValueError):
            log.add_update(UpdateRecord(1, 11, 0.5, 0.2, 0.9))
        with pytest.raises(ValueError):
            log.add_update(UpdateRecord(2, 9, 0.5, 0.2, 0.9))

    def test_history(self):
        log = TrainLog()
        for i in range(6):
            log.add_episode(episode(i + 1, 10 * i, level=i // 3))
        history = log.get_history(limit=2)
        assert [e.episode for e in history] == [6, 5]
        assert [e.episode for e in log.get_history(level=0)] == [3, 2, 1]

    def test_statistics(self):
        log = TrainLog()
        assert log.get_statistics()['total_episodes'] == 0
        log.add_episode(episode(1, 5, outcome='arrived', ret=495.0))
        log.add_episode(episode(2, 9, outcome='collided', ret=-505.0))
        log.add_episode(episode(3, 20, level=1, outcome='running', ret=-60.0))
        stats = log.get_statistics()
        assert stats['total_episodes'] == 3
        assert (stats['arrived'], stats['collided'], stats['timeouts']) == (1, 1, 1)
        assert stats['average_return'] == pytest.approx(-70.0 / 3)
        assert stats['level_distribution'] == {0: 2, 1: 1}
        assert log.get_statistics(last=1)['total_episodes'] == 1

    def test_save_and_load(self, tmp_path):
        log = TrainLog(str(tmp_path))
        log.add_episode(episode(1, 7, ret=1.0 / 3.0))
        log.add_update(UpdateRecord(1, 7, 0.1 + 0.2, 2.0 / 3.0, 0.55))
        log.save()
        assert (tmp_path / "episodes.csv").exists()
        assert TrainLog.load(str(tmp_path)).identical_to(log)

    def test_save_needs_directory(self):
        with pytest.raises(ValueError):
            TrainLog().save()


class TestRunManifest:
    def test_lifecycle(self, tmp_path):
        manifest = RunManifest(str(tmp_path / "run"))
        manifest.create({'train': {'seed': 3}}, seed=3)
        assert manifest.status == 'running'
        assert manifest.last_checkpoint() is None

        manifest.add_checkpoint("run/checkpoint_10.bin", 10)
        manifest.update_state({'env_step': 10})
        manifest.set_status('completed')

        reloaded = RunManifest(str(tmp_path / "run"))
        assert reloaded.status == 'completed'
        assert reloaded.checkpoints == [{'path': "run/checkpoint_10.bin", 'step': 10}]
        assert reloaded.last_checkpoint() == "run/checkpoint_10.bin"
        assert reloaded.data['state'] == {'env_step': 10}
        assert reloaded.data['config'] == {'train': {'seed': 3}}

    def test_failure_records_error(self, tmp_path):
        manifest = RunManifest(str(tmp_path))
        manifest.create({}, seed=0)
        manifest.set_status('failed', error="non-finite loss")
        assert RunManifest(str(tmp_path)).data['error'] == "non-finite loss"

    def test_corrupt_manifest_is_ignored(self, tmp_path):
        (tmp_path / "manifest.json").write_text("{not json", encoding='utf-8')
        manifest = RunManifest(str(tmp_path))
        assert manifest.data == {}
        assert manifest.status is None
