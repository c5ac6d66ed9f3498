# Copyright 2025 The Two-Way Coding Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Joint training of both users' encoders and decoders.

Every step samples fresh messages and noise at the training SNRs, unrolls
the episode on a tape, back-propagates the summed cross-entropy through
all channel uses and applies one Adam update to both users' parameters.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from ..channel import ChannelStreams, empirical_power
from ..errors import NonFiniteError, TrainingDivergedError
from ..harness.bler import BlerPoint, EvalConfig, NeuralCoder, evaluate_point
from ..harness.persistence import write_training_curve
from ..knowledge import random_bits
from ..models.base import TwoWayModel
from ..models.factory import create_model
from ..nnkernel.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from ..nnkernel.optim import StepDecaySchedule, adam_step
from ..nnkernel.tensor import Tape, backward
from ..settings import Settings, load_settings
from .config import TrainConfig
from .loss import cross_entropy_loss

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.twck"
CURVE_NAME = "curve.csv"
RESTART_SEED_STRIDE = 1000
VALIDATION_STREAM = 7
POWER_SLACK = 1.01


@dataclass
class StepMetrics:
    step: int
    loss: float
    grad_norm: float
    lr: float


@dataclass
class TrainedModel:
    """A model with frozen statistics and the config it was trained under."""

    model: TwoWayModel
    config: TrainConfig
    fingerprint: str
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass
class TrainResult:
    trained: TrainedModel
    checkpoint_path: Path
    curve_path: Path
    curve: List[Dict[str, Any]]
    best_sum_bler: float
    attempts: int
    reverse: Optional["TrainResult"] = None


def sample_messages(
    model: TwoWayModel, streams: ChannelStreams, batch: int
) -> Tuple[np.ndarray, np.ndarray]:
    shape = (batch, model.spec.message_len)
    return random_bits(streams.bits_rng, shape), random_bits(streams.bits_rng, shape)


def calibrate(model: TwoWayModel, config: TrainConfig, streams: ChannelStreams) -> None:
    """Populate running statistics with one untaped batch in training mode."""
    b1, b2 = sample_messages(model, streams, config.batch_size)
    model.train()
    model.episode(b1, b2, config.channel(), streams=streams)


def _dump_trace(
    dump_dir: Path, step: int, model: TwoWayModel, b1, b2, n1, n2, error: Exception
) -> Path:
    dump_dir.mkdir(parents=True, exist_ok=True)
    path = dump_dir / f"diverged_step{step}.npz"
    arrays = {"b1": b1, "b2": b2, "noise1": n1, "noise2": n2}
    for user, params in ((1, model.params1), (2, model.params2)):
        for name, tensor in params:
            arrays[f"user{user}/{name}"] = tensor.data
    np.savez(path, **arrays)
    logger.error(f"Non-finite values at step {step} ({error}); trace dumped to {path}")
    return path


def train_step(
    model: TwoWayModel,
    config: TrainConfig,
    streams: ChannelStreams,
    lr: float,
    step: int = 0,
    dump_dir: Optional[Path] = None,
) -> StepMetrics:
    """
    One joint optimization step over a freshly sampled batch.

    Args:
        model: Model to update in place
        config: Batch size, channel and optimizer settings
        streams: Source of messages and noise
        lr: Learning rate for this step
        step: Step index used in diagnostics
        dump_dir: Where to write the offending trace on divergence

    Returns:
        StepMetrics of the step
    """
    spec = model.spec
    channel = config.channel()
    b1, b2 = sample_messages(model, streams, config.batch_size)
    noise_shape = (config.batch_size,) + model.symbol_shape + (spec.t_uses,)
    n1, n2 = streams.draw_noise(noise_shape, channel)

    model.train()
    for params in model.param_sets:
        params.zero_grad()
    try:
        with Tape() as tape:
            output = model.episode(b1, b2, channel, noise=(n1, n2))
            loss = cross_entropy_loss(output)
        backward(tape, loss)
        grad_norm = adam_step(
            model.param_sets,
            lr,
            beta1=config.beta1,
            beta2=config.beta2,
            eps=config.adam_eps,
            clip_norm=config.clip_norm,
        )
    except NonFiniteError as e:
        dump = None
        if dump_dir is not None:
            dump = str(_dump_trace(dump_dir, step, model, b1, b2, n1, n2, e))
        raise TrainingDivergedError(f"step {step}: {e}", dump_path=dump) from e
    model.project_power()
    return StepMetrics(step=step, loss=float(loss.data), grad_norm=grad_norm, lr=lr)


def validate(
    model: TwoWayModel, config: TrainConfig, settings: Settings, seed: int
) -> BlerPoint:
    """Held-out BLER at the training SNRs on a fixed validation stream."""
    eval_config = EvalConfig(
        min_trials=config.val_episodes,
        max_trials=config.val_episodes,
        chunk_trials=min(config.val_episodes, 10_000),
        seed=seed,
    )
    quiet = dataclasses.replace(
        settings,
        workers=1,
        progress=False,
        max_trials=max(settings.max_trials, config.val_episodes),
    )
    coder = NeuralCoder(model, config.K)
    sequence = np.random.SeedSequence((seed, VALIDATION_STREAM))
    try:
        return evaluate_point(coder, config.channel(), eval_config, sequence, quiet)
    finally:
        model.train()


def audit_power(
    model: TwoWayModel, config: TrainConfig, episodes: int, seed: int
) -> Tuple[float, float]:
    """Mean per-episode energy of both users relative to P * (symbols per episode)."""
    streams = ChannelStreams(np.random.SeedSequence((seed, VALIDATION_STREAM + 1)))
    b1, b2 = sample_messages(model, streams, episodes)
    was_training = model.training
    model.eval()
    try:
        trace = model.episode(b1, b2, config.channel(), streams=streams).trace
    finally:
        if was_training:
            model.train()
    budget1 = model.spec.power1 * trace.block_uses
    budget2 = model.spec.power2 * trace.block_uses
    ratio1 = empirical_power(trace, 1) / budget1
    ratio2 = empirical_power(trace, 2) / budget2
    for user, ratio in ((1, ratio1), (2, ratio2)):
        if ratio > POWER_SLACK:
            logger.warning(f"User {user} uses {ratio:.4f} of its power budget")
    return ratio1, ratio2


def _save(
    path: Path, model: TwoWayModel, config: TrainConfig, metadata: Dict[str, Any]
) -> Path:
    checkpoint = Checkpoint(
        param_sets={"user1": model.params1, "user2": model.params2},
        fingerprint=config.fingerprint(),
        metadata={"config": config.model_dump(mode="json"), **metadata},
    )
    return save_checkpoint(path, checkpoint)


def _train_once(
    config: TrainConfig, seed: int, output_dir: Path, settings: Settings
) -> Tuple[Path, Path, List[Dict[str, Any]], float]:
    model = create_model(config.encoder_spec(), seed=seed, dtype=config.np_dtype)
    streams = ChannelStreams(seed)
    schedule = StepDecaySchedule(
        config.lr,
        warmup_steps=config.warmup_steps,
        patience=config.patience,
        factor=config.decay_factor,
        min_lr=config.min_lr,
    )
    checkpoint_path = output_dir / CHECKPOINT_NAME
    dump_dir = output_dir / "diagnostics"
    best = math.inf
    curve: List[Dict[str, Any]] = []
    window: List[float] = []

    def checkpoint_if_best(step: int, loss: float, lr: float) -> None:
        nonlocal best
        point = validate(model, config, settings, seed)
        curve.append(
            {
                "step": step,
                "loss": loss,
                "val_bler_user1": point.bler_1,
                "val_bler_user2": point.bler_2,
                "val_sum_bler": point.sum_bler,
                "lr": lr,
            }
        )
        if point.sum_bler < best:
            best = point.sum_bler
            ratio1, ratio2 = audit_power(model, config, min(config.val_episodes, 10_000), seed)
            _save(
                checkpoint_path,
                model,
                config,
                {
                    "step": step,
                    "seed": seed,
                    "val_sum_bler": best,
                    "power_ratio1": ratio1,
                    "power_ratio2": ratio2,
                },
            )
        logger.info(
            f"[{config.name}] step {step}: loss={loss:.4f} val sum BLER={point.sum_bler:.3e} "
            f"(best {best:.3e}) lr={lr:.2e}"
        )
        schedule.observe(point.sum_bler)

    logger.info(
        f"Training {config.name}: {config.model.kind.value} K={config.K} M={config.M} "
        f"T={config.T} T_M={config.t_uses} SNR=({config.snr1_db:g}, {config.snr2_db:g}) dB "
        f"for {config.steps} steps (seed {seed})"
    )
    if config.steps == 0:
        calibrate(model, config, streams)
        checkpoint_if_best(0, float("nan"), schedule.lr(0))

    steps = tqdm(
        range(1, config.steps + 1),
        desc=f"Training {config.name}",
        unit="step",
        disable=not settings.progress,
    )
    for step in steps:
        lr = schedule.lr(step - 1)
        metrics = train_step(model, config, streams, lr, step=step, dump_dir=dump_dir)
        window.append(metrics.loss)
        logger.debug(
            f"step {step}: loss={metrics.loss:.5f} |g|={metrics.grad_norm:.3e} lr={lr:.2e}"
        )
        if step % config.eval_every == 0 or step == config.steps:
            checkpoint_if_best(step, float(np.mean(window)), lr)
            window.clear()

    curve_path = write_training_curve(curve, output_dir / CURVE_NAME)
    return checkpoint_path, curve_path, curve, best


def train(
    config: TrainConfig,
    output_dir: Optional[Union[str, Path]] = None,
    settings: Optional[Settings] = None,
) -> TrainResult:
    """
    Train to the step budget, keeping the checkpoint with the best validation sum BLER.

    Non-finite losses restart training from a re-seeded initialization up
    to ``config.restarts`` times.

    Args:
        config: Training configuration
        output_dir: Run directory (defaults to <TWOWAY_OUTPUT_DIR>/<name>)
        settings: Environment-derived settings

    Returns:
        TrainResult with the best model loaded in frozen mode
    """
    settings = settings or load_settings()
    out = Path(output_dir) if output_dir is not None else Path(settings.output_dir) / config.name
    last_error: Optional[TrainingDivergedError] = None

    for attempt in range(config.restarts + 1):
        seed = config.seed + attempt * RESTART_SEED_STRIDE
        try:
            checkpoint_path, curve_path, curve, best = _train_once(config, seed, out, settings)
            break
        except TrainingDivergedError as e:
            last_error = e
            logger.warning(f"[{config.name}] attempt {attempt + 1} diverged: {e}")
    else:
        logger.error(f"[{config.name}] non-finite loss persisted after {config.restarts} restarts")
        raise TrainingDivergedError(
            f"{config.name}: training diverged on all {config.restarts + 1} attempts",
            dump_path=last_error.dump_path if last_error else None,
        )

    result = TrainResult(
        trained=load_trained(checkpoint_path, config),
        checkpoint_path=checkpoint_path,
        curve_path=curve_path,
        curve=curve,
        best_sum_bler=best,
        attempts=attempt + 1,
    )
    if config.reverse_link:
        result.reverse = train(config.reversed(), out / "reverse", settings)
    return result


def load_trained(
    path: Union[str, Path], config: Optional[TrainConfig] = None
) -> TrainedModel:
    """
    Rebuild a frozen model from a checkpoint.

    Args:
        path: Checkpoint file
        config: Expected config; its fingerprint must match. When omitted the
            config stored in the checkpoint is used.

    Returns:
        TrainedModel in evaluation mode
    """
    expected = config.fingerprint() if config is not None else None
    checkpoint = load_checkpoint(path, expected_fingerprint=expected)
    if config is None:
        config = TrainConfig.model_validate(checkpoint.metadata["config"])
    model = create_model(
        config.encoder_spec(),
        params1=checkpoint.param_sets["user1"],
        params2=checkpoint.param_sets["user2"],
    )
    model.eval()
    return TrainedModel(
        model=model,
        config=config,
        fingerprint=checkpoint.fingerprint,
        metadata=checkpoint.metadata,
    )
