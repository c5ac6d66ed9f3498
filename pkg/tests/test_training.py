"""Tests for training configs, the episode loss and the training loop."""

import math
import sys
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from twoway_coding.channel import ChannelStreams
from twoway_coding.errors import CheckpointError, ConfigError, TrainingDivergedError
from twoway_coding.harness import read_bler_csv
from twoway_coding.models import ModelKind, create_model
from twoway_coding.settings import Settings
from twoway_coding.training import (
    TrainConfig,
    audit_power,
    calibrate,
    cross_entropy_loss,
    episode_loss,
    load_config,
    load_trained,
    parse_config,
    train,
    train_step,
    validate,
)

QUIET = Settings(progress=False)


def _tiny_config(**overrides):
    values = {
        "name": "tiny",
        "K": 2,
        "M": 2,
        "T": 2,
        "snr1_db": 10.0,
        "snr2_db": 10.0,
        "batch_size": 32,
        "steps": 4,
        "eval_every": 2,
        "val_episodes": 200,
        "restarts": 0,
        "model": {"hidden_dim": 8, "head_dim": 4},
    }
    values.update(overrides)
    return TrainConfig.model_validate(values)


# Config


def test_two_way_rate_accounting():
    """Test T_M = T*M/K and rate K/T for two-way codes."""
    config = TrainConfig(K=6, M=3, T=18)
    assert config.t_uses == 9
    assert config.rate == pytest.approx(1 / 3)
    assert config.tokens == 1
    assert config.episodes_per_block == 2
    assert config.channel().block_uses == 18


def test_twbaf_packs_all_sub_blocks_into_one_episode():
    """Test that TWBAF carries K/M tokens per episode."""
    config = TrainConfig.model_validate({"K": 6, "M": 3, "T": 18, "model": {"kind": "twbaf"}})
    assert config.tokens == 2
    assert config.episodes_per_block == 1
    spec = config.encoder_spec()
    assert spec.message_len == 6
    assert spec.t_uses == 9


def test_one_way_rate_accounting():
    """Test that one-way codes spend T/2 uses per direction."""
    config = TrainConfig.model_validate(
        {"K": 6, "M": 6, "T": 18, "mode": "one_way", "model": {"kind": "alc"}}
    )
    assert config.uses_per_direction == 9
    assert config.t_uses == 9
    assert config.rate == pytest.approx(2 / 3)


def test_lc_dims_halve_hidden_width():
    """Test the LC-width option for the feedback codes."""
    config = TrainConfig.model_validate(
        {
            "K": 3,
            "M": 3,
            "T": 18,
            "mode": "one_way",
            "model": {"kind": "lc", "hidden_dim": 32, "alc_dims": "lc"},
        }
    )
    assert config.encoder_spec().hidden_dim == 16


def test_parse_config_reports_rate_errors():
    """Test that a non-dividing M is reported as a ConfigError."""
    with pytest.raises(ConfigError) as info:
        parse_config({"K": 6, "M": 4})
    assert "must divide" in str(info.value)
    with pytest.raises(ConfigError):
        parse_config({"K": 6, "M": 3, "T": 9})
    with pytest.raises(ConfigError):
        parse_config({"model": {"kind": "alc"}})
    with pytest.raises(ConfigError):
        parse_config({"model": {"kind": "alc"}, "mode": "one_way", "T": 9})


def test_parse_config_reports_field_paths():
    """Test dotted field paths and JSON positions in error messages."""
    with pytest.raises(ConfigError) as info:
        parse_config({"model": {"hidden_dim": 0}}, source="run.json")
    assert "run.json" in str(info.value)
    assert "model.hidden_dim" in str(info.value)
    with pytest.raises(ConfigError) as info:
        parse_config('{"K": 3,\n', source="broken.json")
    assert "invalid JSON at line" in str(info.value)
    with pytest.raises(ConfigError):
        parse_config({"unknown_field": 1})


def test_load_config_missing_file(tmp_path):
    """Test that a missing config path is a ConfigError."""
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")


def test_load_config_from_file(tmp_path):
    """Test reading a JSON config from disk."""
    path = tmp_path / "run.json"
    path.write_text('{"name": "demo", "K": 6, "M": 3, "T": 18}', encoding="utf-8")
    config = load_config(path)
    assert config.name == "demo"
    assert config.t_uses == 9


def test_fingerprint_tracks_architecture_only():
    """Test that the fingerprint ignores optimizer and SNR settings."""
    base = TrainConfig(K=6, M=3, T=18)
    retuned = TrainConfig(K=6, M=3, T=18, seed=5, steps=10, snr2_db=1.0)
    assert base.fingerprint() == retuned.fingerprint()
    wider = TrainConfig.model_validate({"K": 6, "M": 3, "T": 18, "model": {"hidden_dim": 64}})
    assert base.fingerprint() != wider.fingerprint()
    assert len(base.fingerprint()) == 64


def test_reversed_link_swaps_directions():
    """Test the reverse-link config of a one-way code."""
    config = TrainConfig.model_validate(
        {
            "name": "alc",
            "K": 6,
            "M": 6,
            "T": 18,
            "mode": "one_way",
            "snr1_db": 1.0,
            "snr2_db": 20.0,
            "reverse_link": True,
            "model": {"kind": "alc"},
        }
    )
    reverse = config.reversed()
    assert reverse.name == "alc-reverse"
    assert (reverse.snr1_db, reverse.snr2_db) == (20.0, 1.0)
    assert reverse.reverse_link is False
    assert reverse.fingerprint() == config.fingerprint()


# Loss


def test_episode_loss_uniform_prediction():
    """Test that uniform predictions over 2^3 messages cost 2 log 8."""
    d = np.full((1, 8), 1 / 8)
    bits = np.array([[0, 1, 1]])
    assert episode_loss(d, d, bits, bits) == pytest.approx(2 * math.log(8), abs=1e-4)
    assert episode_loss(d, None, bits, None) == pytest.approx(math.log(8), abs=1e-4)


def test_episode_loss_perfect_prediction():
    """Test that one-hot predictions on the right index cost nothing."""
    d1 = np.zeros((1, 4))
    d1[0, 2] = 1.0
    d2 = np.zeros((1, 4))
    d2[0, 0] = 1.0
    assert episode_loss(d1, d2, [[1, 0]], [[0, 0]]) == pytest.approx(0.0)


def test_episode_loss_rejects_off_simplex():
    """Test the simplex precondition."""
    with pytest.raises(ValueError):
        episode_loss(np.full((1, 4), 0.5), None, [[0, 1]], None)
    with pytest.raises(ValueError):
        episode_loss(np.full((1, 8), 1 / 8), None, [[0, 1]], None)


def test_cross_entropy_matches_episode_loss():
    """Test that the differentiable loss equals the probability-space loss."""
    config = _tiny_config(model={"hidden_dim": 8, "head_dim": 4}, dtype="float64")
    model = create_model(config.encoder_spec(), seed=0, dtype=np.float64)
    rng = np.random.default_rng(1)
    b1 = rng.integers(0, 2, size=(16, 2))
    b2 = rng.integers(0, 2, size=(16, 2))
    out = model.episode(b1, b2, config.channel(), streams=ChannelStreams(2))
    expected = episode_loss(out.probabilities(1), out.probabilities(2), b1, b2)
    assert cross_entropy_loss(out).item() == pytest.approx(expected, rel=1e-9)


# Loop


def test_train_step_zero_lr_keeps_parameters(tmp_path):
    """Test that lr = 0 changes no parameter."""
    config = _tiny_config()
    model = create_model(config.encoder_spec(), seed=0)
    before = [params.snapshot() for params in model.param_sets]
    metrics = train_step(model, config, ChannelStreams(0), lr=0.0, dump_dir=tmp_path)
    assert math.isfinite(metrics.loss)
    for params, snapshot in zip(model.param_sets, before):
        for name, value in params.snapshot().items():
            np.testing.assert_allclose(value, snapshot[name], rtol=1e-6)


def test_train_step_reaches_every_parameter():
    """Test that one step produces a nonzero gradient for every trainable tensor."""
    config = _tiny_config(T=3, K=1, M=1)
    model = create_model(config.encoder_spec(), seed=1)
    train_step(model, config, ChannelStreams(1), lr=1e-3)
    for user, params in ((1, model.params1), (2, model.params2)):
        for name, tensor in params:
            if name == "enc.head2.bias":
                # batch standardization cancels a constant output shift
                continue
            assert np.any(tensor.grad != 0), f"user {user}: {name} received no gradient"


def test_train_step_is_deterministic():
    """Test that identical seeds give identical parameters after two steps."""
    config = _tiny_config()
    results = []
    for _ in range(2):
        model = create_model(config.encoder_spec(), seed=3)
        streams = ChannelStreams(4)
        for step in range(2):
            train_step(model, config, streams, lr=1e-2, step=step)
        results.append(model.params1.snapshot())
    for name, value in results[0].items():
        np.testing.assert_array_equal(value, results[1][name])


def test_train_step_dumps_trace_on_divergence(tmp_path):
    """Test that a NaN parameter aborts the step and dumps the offending batch."""
    config = _tiny_config()
    model = create_model(config.encoder_spec(), seed=0)
    weight = model.params1["enc.fe1.weight"]
    weight.data[0, 0] = np.nan
    with pytest.raises(TrainingDivergedError) as info:
        train_step(model, config, ChannelStreams(0), lr=1e-3, step=7, dump_dir=tmp_path)
    dump = Path(info.value.dump_path)
    assert dump.name == "diverged_step7.npz"
    with np.load(dump) as arrays:
        assert "b1" in arrays.files
        assert "user1/enc.fe1.weight" in arrays.files


def test_validate_and_audit_after_calibration():
    """Test held-out BLER and the power audit of a calibrated model."""
    config = _tiny_config(batch_size=512)
    model = create_model(config.encoder_spec(), seed=0)
    calibrate(model, config, ChannelStreams(0))
    point = validate(model, config, QUIET, seed=0)
    assert point.trials == config.val_episodes
    assert 0.0 <= point.sum_bler <= 2.0
    assert model.training
    ratio1, ratio2 = audit_power(model, config, episodes=500, seed=0)
    assert 0.5 < ratio1 < 1.5
    assert 0.5 < ratio2 < 1.5


def test_train_writes_checkpoint_and_curve(tmp_path):
    """Test a tiny end-to-end training run."""
    config = _tiny_config()
    result = train(config, tmp_path / "run", QUIET)
    assert result.checkpoint_path.exists()
    assert result.attempts == 1
    assert len(result.curve) == 2
    assert [row["step"] for row in read_bler_csv(result.curve_path)] == ["2", "4"]
    assert not result.trained.model.training
    assert result.trained.metadata["config"]["name"] == "tiny"
    assert result.best_sum_bler == min(row["val_sum_bler"] for row in result.curve)


def test_train_with_zero_steps_calibrates(tmp_path):
    """Test that steps = 0 still produces a usable frozen checkpoint."""
    result = train(_tiny_config(steps=0), tmp_path, QUIET)
    assert result.checkpoint_path.exists()
    assert len(result.curve) == 1
    assert result.trained.model.reallocators[1].has_statistics()


def test_load_trained_checks_fingerprint(tmp_path):
    """Test fingerprint matching and config recovery from the checkpoint."""
    config = _tiny_config(steps=0)
    result = train(config, tmp_path, QUIET)
    restored = load_trained(result.checkpoint_path)
    assert restored.config == config
    assert restored.model.spec == config.encoder_spec()
    other = _tiny_config(model={"hidden_dim": 16, "head_dim": 4})
    with pytest.raises(CheckpointError):
        load_trained(result.checkpoint_path, other)


def test_train_restarts_then_gives_up(tmp_path):
    """Test that divergence is retried restarts + 1 times before failing."""
    config = _tiny_config(restarts=2)
    error = TrainingDivergedError("boom", dump_path="somewhere.npz")
    with patch("twoway_coding.training.loop.train_step", side_effect=error) as mock_step:
        with pytest.raises(TrainingDivergedError) as info:
            train(config, tmp_path, QUIET)
    assert mock_step.call_count == 3
    assert info.value.dump_path == "somewhere.npz"


def test_one_way_training_with_reverse_link(tmp_path):
    """Test that a reverse-link ALC config also trains the reverse direction."""
    config = TrainConfig.model_validate(
        {
            "name": "alc",
            "K": 2,
            "M": 2,
            "T": 4,
            "mode": "one_way",
            "batch_size": 16,
            "steps": 1,
            "val_episodes": 50,
            "restarts": 0,
            "reverse_link": True,
            "model": {"kind": "alc", "hidden_dim": 8, "head_dim": 4},
        }
    )
    result = train(config, tmp_path, QUIET)
    assert result.trained.model.spec.kind is ModelKind.ALC
    assert result.reverse is not None
    assert result.reverse.checkpoint_path == tmp_path / "reverse" / "checkpoint.twck"
    assert result.reverse.trained.config.snr1_db == config.snr2_db


if __name__ == "__main__":
    pytest.main([__file__])
