"""
Trainer tests on a deliberately tiny run.
"""

import csv
import json
from dataclasses import replace

import numpy as np
import pytest

import training.trainer as trainer_module
from config_loader import AppConfig, TrainConfig
from memory.train_log import TrainLog
from network.checkpoint import load_checkpoint
from network.qnetwork import NonFiniteLossError
from tools.scenario_io import generate_suite
from training.trainer import Trainer

from conftest import transition_chain


def tiny_config(run_dir, **overrides):
    train = dict(
        total_steps=30,
        minibatch=4,
        buffer_size=64,
        warmup=4,
        episode_length=12,
        eps_decay_steps=20,
        target_sync_interval=5,
        checkpoint_interval=0,
        log_interval=10,
        seed=3,
        run_dir=str(run_dir),
    )
    train.update(overrides)
    return AppConfig(train=TrainConfig(**train))


def test_warmup_means_no_updates(tmp_path):
    trainer = Trainer(tiny_config(tmp_path / "run", warmup=1000, total_steps=15))
    result = trainer.train()
    assert result.updates == 0
    assert result.env_steps == 15
    assert trainer.log.updates == []
    assert trainer.target.identical_to(trainer.online)


def test_sync_every_update_keeps_networks_equal(tmp_path):
    trainer = Trainer(tiny_config(tmp_path / "run", target_sync_interval=1, total_steps=12))
    result = trainer.train()
    assert result.updates > 0
    assert trainer.target.identical_to(trainer.online)


def test_target_is_stale_between_syncs(tmp_path):
    trainer = Trainer(tiny_config(tmp_path / "run", target_sync_interval=3))
    for transition in transition_chain(10):
        trainer.buffer.push(transition)
    initial = trainer.target.copy()

    trainer.learn()
    trainer.learn()
    assert trainer.target.identical_to(initial)
    assert not trainer.online.identical_to(initial)

    trainer.learn()
    assert trainer.target.identical_to(trainer.online)
    assert trainer.updates == 3


def test_learn_waits_for_warmup(tmp_path):
    trainer = Trainer(tiny_config(tmp_path / "run", warmup=20))
    for transition in transition_chain(10):
        trainer.buffer.push(transition)
    assert trainer.learn() is None
    assert trainer.updates == 0


def test_episode_ends_are_stored_terminal(tmp_path):
    # episode_length 3 with total 9: every episode ends by arrival, collision or time limit
    trainer = Trainer(tiny_config(tmp_path / "run", episode_length=3, total_steps=9))
    result = trainer.train()
    stored = trainer.buffer.gather(np.arange(len(trainer.buffer))).dones
    assert len(stored) == 9

    expected = []
    for record in result.log.episodes:
        ended = record.outcome != 'running' or record.steps == 3
        expected.extend([False] * (record.steps - 1) + [ended])
    assert stored.tolist() == expected
    timeouts = [r for r in result.log.episodes if r.outcome == 'running' and r.steps == 3]
    assert timeouts


def test_same_seed_same_run(tmp_path):
    first = Trainer(tiny_config(tmp_path / "a")).train()
    second = Trainer(tiny_config(tmp_path / "b")).train()
    assert first.log.identical_to(second.log)
    params_a, _, _ = load_checkpoint(str(first.checkpoint))
    params_b, _, _ = load_checkpoint(str(second.checkpoint))
    assert params_a.identical_to(params_b)


def test_schedules_are_monotone(tmp_path):
    result = Trainer(tiny_config(tmp_path / "run")).train()
    levels = [record.level for record in result.log.episodes]
    assert levels == sorted(levels)
    epsilons = [record.epsilon for record in result.log.updates]
    assert all(a >= b for a, b in zip(epsilons, epsilons[1:]))
    steps = [record.env_step for record in result.log.updates]
    assert steps == sorted(steps)


def test_run_directory_contents(tmp_path):
    run_dir = tmp_path / "run"
    trainer = Trainer(tiny_config(run_dir))
    result = trainer.train()

    assert result.checkpoint == run_dir / "checkpoint_final.bin"
    params, adam, metadata = load_checkpoint(str(result.checkpoint))
    assert params.identical_to(trainer.online)
    assert adam.t == result.updates
    assert metadata['step'] == 30

    manifest = json.loads((run_dir / "manifest.json").read_text(encoding='utf-8'))
    assert manifest['status'] == 'completed'
    assert manifest['seed'] == 3
    assert manifest['config']['train']['total_steps'] == 30
    assert manifest['checkpoints'][-1]['step'] == 30

    reloaded = TrainLog.load(str(run_dir))
    assert reloaded.identical_to(result.log)


def test_periodic_checkpoints(tmp_path):
    run_dir = tmp_path / "run"
    Trainer(tiny_config(run_dir, checkpoint_interval=10)).train()
    for step in (10, 20, 30):
        assert (run_dir / f"checkpoint_{step}.bin").exists()


def test_eval_curve(tmp_path):
    suite = generate_suite(level=0, count=2, seed=1, out_dir=str(tmp_path / "suite"))
    run_dir = tmp_path / "run"
    Trainer(tiny_config(run_dir, eval_interval=15, eval_suite=str(suite))).train()
    with open(run_dir / "eval_curve.csv", encoding='utf-8', newline='') as f:
        rows = list(csv.DictReader(f))
    assert [int(r['env_step']) for r in rows] == [15, 30]
    assert all(0.0 <= float(r['success_rate']) <= 1.0 for r in rows)


def test_non_finite_loss_marks_run_failed(tmp_path, monkeypatch):
    def exploding(*args, **kwargs):
        raise NonFiniteLossError("non-finite loss nan")

    monkeypatch.setattr(trainer_module, "loss_and_gradients", exploding)
    run_dir = tmp_path / "run"
    trainer = Trainer(tiny_config(run_dir))
    with pytest.raises(NonFiniteLossError):
        trainer.train()
    manifest = json.loads((run_dir / "manifest.json").read_text(encoding='utf-8'))
    assert manifest['status'] == 'failed'
    assert 'nan' in manifest['error']
    assert not (run_dir / "checkpoint_final.bin").exists()


def test_parallel_collection(tmp_path):
    config = tiny_config(tmp_path / "run", num_workers=2)
    trainer = Trainer(config)
    result = trainer.train()
    assert result.env_steps == 30
    assert result.checkpoint.exists()
    assert result.updates > 0
    assert trainer.manifest.status == 'completed'


def test_metrics_follow_training(tmp_path):
    trainer = Trainer(tiny_config(tmp_path / "run"))
    result = trainer.train()
    metrics = trainer.metrics.get_metrics()
    assert metrics['updates'] == result.updates
    assert metrics['episodes_total'] == len(result.log.episodes)
    assert metrics['arrived'] + metrics['collided'] + metrics['timeouts'] == metrics['episodes_total']
    assert sum(metrics['episodes_by_level'].values()) == metrics['episodes_total']


def test_config_is_not_mutated(tmp_path):
    config = tiny_config(tmp_path / "run")
    snapshot = replace(config.train)
    Trainer(config).train()
    assert config.train == snapshot
