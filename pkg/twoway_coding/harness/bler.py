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
Monte Carlo block error rate estimation.

Each trial draws a length-K message per user, codes it as K/M sub-blocks
(episodes), concatenates the decoded sub-blocks and counts a block error
when any bit differs. Trials run in seeded chunks until the Wilson
confidence interval is tight enough or the trial cap is reached.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import norm
from tqdm import tqdm

from ..channel import ChannelConfig, ChannelStreams, make_channel, with_snr
from ..errors import ConfigError, ShapeError
from ..knowledge import random_bits
from ..models.base import TwoWayModel
from ..settings import Settings, load_settings

logger = logging.getLogger(__name__)


def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """
    Wilson score interval for a binomial proportion.

    Args:
        errors: Observed block errors
        trials: Number of trials
        confidence: Two-sided confidence level in (0, 1)

    Returns:
        (low, high) bounds on the error probability
    """
    if trials <= 0:
        raise ValueError("wilson_interval needs at least one trial")
    if not 0 <= errors <= trials:
        raise ValueError(f"errors={errors} outside [0, {trials}]")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    z = float(norm.ppf(1.0 - (1.0 - confidence) / 2.0))
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


class SnrPoint(BaseModel):
    model_config = ConfigDict(extra="forbid")

    snr1_db: float
    snr2_db: float


class EvalConfig(BaseModel):
    """Monte Carlo budget and SNR grid of one evaluation."""

    model_config = ConfigDict(extra="forbid")

    checkpoint: Optional[str] = None
    K: Optional[int] = Field(None, ge=1)
    M: Optional[int] = Field(None, ge=1)
    T: Optional[int] = Field(None, ge=1)
    snr_grid: List[SnrPoint] = Field(default_factory=list)
    min_trials: int = Field(10_000, ge=1)
    max_trials: int = Field(1_000_000, ge=1)
    chunk_trials: int = Field(10_000, ge=1)
    target_rel_ci: float = Field(0.1, gt=0.0)
    confidence: float = Field(0.95, gt=0.0, lt=1.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_budget(self) -> "EvalConfig":
        if self.min_trials > self.max_trials:
            raise ValueError(f"min_trials {self.min_trials} exceeds max_trials {self.max_trials}")
        return self

    def require_grid(self) -> None:
        if not self.snr_grid:
            raise ConfigError("evaluation needs a non-empty snr_grid")


@dataclass(frozen=True)
class BlerPoint:
    """Counts at one SNR pair; ``errors2`` is None when user 2 sends no message."""

    snr1_db: float
    snr2_db: float
    errors1: int
    errors2: Optional[int]
    trials: int
    confidence: float = 0.95

    @property
    def bler_1(self) -> float:
        return self.errors1 / self.trials

    @property
    def bler_2(self) -> float:
        return 0.0 if self.errors2 is None else self.errors2 / self.trials

    @property
    def sum_bler(self) -> float:
        return self.bler_1 + self.bler_2

    def halfwidth(self, user: int) -> float:
        errors = self.errors1 if user == 1 else self.errors2
        if errors is None:
            return 0.0
        low, high = wilson_interval(errors, self.trials, self.confidence)
        return (high - low) / 2.0

    @property
    def ci(self) -> float:
        """Half-width for the sum BLER (per-user half-widths added)."""
        return self.halfwidth(1) + self.halfwidth(2)


@dataclass
class BlerReport:
    model: str
    K: int
    M: int
    T: int
    points: List[BlerPoint] = field(default_factory=list)
    seed: int = 0
    metadata: Dict[str, Any] = field(default_factory=dict)

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "snr1_db": p.snr1_db,
                "snr2_db": p.snr2_db,
                "bler_1": p.bler_1,
                "bler_2": p.bler_2,
                "sum_bler": p.sum_bler,
                "trials": p.trials,
                "ci": p.ci,
                "seed": self.seed,
                "model": self.model,
                "K": self.K,
                "M": self.M,
                "T": self.T,
            }
            for p in self.points
        ]


class BlockCoder(Protocol):
    """Anything that can send one batch of sub-block episodes each way."""

    name: str
    message_len: int
    sub_block_len: int
    tokens_per_episode: int
    single_user: bool

    def transmit(
        self,
        blocks1: np.ndarray,
        blocks2: np.ndarray,
        channel: ChannelConfig,
        streams: ChannelStreams,
    ) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """Decoded (hat1, hat2) for (episodes, tokens * M) inputs."""
        ...


def _episode_width(coder: BlockCoder) -> int:
    return coder.sub_block_len * coder.tokens_per_episode


def _check_coder(coder: BlockCoder) -> None:
    width = _episode_width(coder)
    if width < 1 or coder.message_len % width != 0:
        raise ShapeError(
            f"{coder.name}: episode width {width} does not divide K={coder.message_len}"
        )


class NeuralCoder:
    """BlockCoder over a trained two-way model (frozen statistics)."""

    def __init__(
        self,
        model: TwoWayModel,
        message_len: int,
        name: Optional[str] = None,
        reverse: Optional[TwoWayModel] = None,
    ):
        self.model = model.eval()
        self.reverse = reverse.eval() if reverse is not None else None
        spec = model.spec
        self.name = name or spec.kind.value
        self.message_len = message_len
        self.sub_block_len = spec.sub_block_len
        self.tokens_per_episode = spec.tokens
        self.single_user = spec.single_user and reverse is None
        _check_coder(self)

    def transmit(self, blocks1, blocks2, channel, streams):
        m = self.sub_block_len
        out = self.model.episode(blocks1, blocks2, channel, streams=streams)
        hat1 = out.decoded_bits(1, m)
        if not self.model.spec.single_user:
            return hat1, out.decoded_bits(2, m)
        if self.reverse is None:
            return hat1, None
        swapped = make_channel(
            channel.snr2_db,
            channel.snr1_db,
            block_uses=channel.block_uses,
            power1=channel.power2,
            power2=channel.power1,
        )
        back = self.reverse.episode(blocks2, None, swapped, streams=streams)
        return hat1, back.decoded_bits(1, m)


class OracleCoder:
    """Perfect decoder stub."""

    tokens_per_episode = 1

    def __init__(self, message_len: int, sub_block_len: int, name: str = "oracle"):
        self.name = name
        self.message_len = message_len
        self.sub_block_len = sub_block_len
        self.single_user = False

    def transmit(self, blocks1, blocks2, channel, streams):
        return np.array(blocks1, copy=True), np.array(blocks2, copy=True)


class UniformRandomCoder(OracleCoder):
    """Guesses every sub-block uniformly at random."""

    def __init__(self, message_len: int, sub_block_len: int, name: str = "uniform"):
        super().__init__(message_len, sub_block_len, name)

    def transmit(self, blocks1, blocks2, channel, streams):
        return (
            random_bits(streams.rng1, np.shape(blocks1)),
            random_bits(streams.rng2, np.shape(blocks2)),
        )


class SubBlockFaultCoder(OracleCoder):
    """Decodes correctly except that each sub-block is corrupted with probability ``fault_rate``.

    A corrupted sub-block has its first bit flipped, so the block error rate
    is 1 - (1 - fault_rate)^(K/M).
    """

    def __init__(
        self, message_len: int, sub_block_len: int, fault_rate: float, name: str = "fault"
    ):
        super().__init__(message_len, sub_block_len, name)
        if not 0.0 <= fault_rate <= 1.0:
            raise ValueError("fault_rate must lie in [0, 1]")
        self.fault_rate = fault_rate

    def _corrupt(self, blocks: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        hat = np.array(blocks, copy=True)
        faulty = rng.random(hat.shape[0]) < self.fault_rate
        hat[faulty, 0] ^= 1
        return hat

    def transmit(self, blocks1, blocks2, channel, streams):
        return self._corrupt(blocks1, streams.rng1), self._corrupt(blocks2, streams.rng2)


def run_trials(
    coder: BlockCoder, channel: ChannelConfig, trials: int, streams: ChannelStreams
) -> Tuple[int, Optional[int]]:
    """
    Block-error counts for ``trials`` full-length messages per user.

    Args:
        coder: Coder under test
        channel: Channel at this SNR point
        trials: Number of length-K messages per user
        streams: Bits and noise source for this chunk

    Returns:
        (errors1, errors2); errors2 is None for single-user coders
    """
    _check_coder(coder)
    k = coder.message_len
    width = _episode_width(coder)
    b1 = random_bits(streams.bits_rng, (trials, k))
    b2 = random_bits(streams.bits_rng, (trials, k))
    hat1, hat2 = coder.transmit(
        b1.reshape(-1, width), b2.reshape(-1, width), channel, streams
    )
    # episodes of one trial are consecutive rows; concatenate them back
    hat1 = np.asarray(hat1).reshape(trials, k)
    errors1 = int(np.sum(np.any(hat1 != b1, axis=1)))
    if hat2 is None:
        return errors1, None
    hat2 = np.asarray(hat2).reshape(trials, k)
    return errors1, int(np.sum(np.any(hat2 != b2, axis=1)))


def _converged(point: BlerPoint, target_rel_ci: float) -> bool:
    if point.sum_bler == 0.0:
        return False
    return point.ci <= target_rel_ci * point.sum_bler


def evaluate_point(
    coder: BlockCoder,
    channel: ChannelConfig,
    config: EvalConfig,
    seed_sequence: np.random.SeedSequence,
    settings: Optional[Settings] = None,
) -> BlerPoint:
    """Adaptive Monte Carlo at one SNR pair, merged in deterministic chunk order."""
    settings = settings or load_settings()
    max_trials = min(config.max_trials, settings.max_trials)
    min_trials = min(config.min_trials, max_trials)
    workers = max(1, settings.workers)

    errors1, errors2, trials = 0, None if coder.single_user else 0, 0
    point = BlerPoint(channel.snr1_db, channel.snr2_db, 0, errors2, 0, config.confidence)
    progress = tqdm(
        total=max_trials,
        desc=f"{coder.name} @ ({channel.snr1_db:g}, {channel.snr2_db:g}) dB",
        unit="trial",
        disable=not settings.progress,
        leave=False,
    )
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while trials < max_trials:
            sizes = []
            remaining = max_trials - trials
            for _ in range(workers):
                if remaining <= 0:
                    break
                size = min(config.chunk_trials, remaining)
                sizes.append(size)
                remaining -= size
            children = seed_sequence.spawn(len(sizes))
            jobs = [
                (coder, channel, size, ChannelStreams(child))
                for size, child in zip(sizes, children)
            ]
            if executor is None:
                results = [run_trials(*job) for job in jobs]
            else:
                results = list(executor.map(lambda job: run_trials(*job), jobs))
            for (e1, e2), size in zip(results, sizes):
                errors1 += e1
                if errors2 is not None:
                    errors2 += e2
                trials += size
            progress.update(sum(sizes))
            point = BlerPoint(
                channel.snr1_db, channel.snr2_db, errors1, errors2, trials, config.confidence
            )
            if trials >= min_trials and _converged(point, config.target_rel_ci):
                break
    finally:
        progress.close()
        if executor is not None:
            executor.shutdown()

    if not _converged(point, config.target_rel_ci):
        logger.warning(
            f"{coder.name} at ({channel.snr1_db:g}, {channel.snr2_db:g}) dB: "
            f"CI half-width {point.ci:.3g} after {point.trials} trials "
            f"(sum BLER {point.sum_bler:.3g}) is above the {config.target_rel_ci:g} relative target"
        )
    return point


def _check_dims(coder: BlockCoder, config: EvalConfig) -> None:
    if config.K is not None and config.K != coder.message_len:
        raise ShapeError(f"config K={config.K} but {coder.name} carries K={coder.message_len}")
    if config.M is not None and config.M != coder.sub_block_len:
        raise ShapeError(f"config M={config.M} but {coder.name} uses M={coder.sub_block_len}")


def evaluate(
    coder: BlockCoder,
    config: EvalConfig,
    base_channel: ChannelConfig,
    settings: Optional[Settings] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> BlerReport:
    """
    BLER of a coder at every SNR pair of the grid.

    Args:
        coder: Neural, polar or stub coder
        config: Grid and Monte Carlo budget
        base_channel: Powers and block length; SNRs are replaced per point
        settings: Worker count, trial cap and progress flag
        metadata: Extra fields (fingerprint, ...) stored on the report

    Returns:
        BlerReport with one point per grid entry
    """
    config.require_grid()
    _check_dims(coder, config)
    settings = settings or load_settings()
    started = time.time()
    root = np.random.SeedSequence(config.seed)
    point_seeds = root.spawn(len(config.snr_grid))

    report = BlerReport(
        model=coder.name,
        K=coder.message_len,
        M=coder.sub_block_len,
        T=config.T if config.T is not None else base_channel.block_uses,
        seed=config.seed,
        metadata=dict(metadata or {}),
    )
    for snr, seed_sequence in zip(config.snr_grid, point_seeds):
        channel = with_snr(base_channel, snr.snr1_db, snr.snr2_db)
        point = evaluate_point(coder, channel, config, seed_sequence, settings)
        logger.info(
            f"{coder.name} SNR=({snr.snr1_db:g}, {snr.snr2_db:g}) dB: "
            f"BLER1={point.bler_1:.3e} BLER2={point.bler_2:.3e} sum={point.sum_bler:.3e} "
            f"trials={point.trials}"
        )
        report.points.append(point)
    report.metadata.update(
        {"wall_time_s": time.time() - started, "workers": settings.workers, "seed": config.seed}
    )
    return report


def ood_sweep(
    coder: BlockCoder,
    config: EvalConfig,
    base_channel: ChannelConfig,
    snr2_grid: Sequence[float],
    settings: Optional[Settings] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> BlerReport:
    """
    Evaluate a fixed model across SNR2 values with SNR1 held at its training value.

    No parameters are updated; the coder's frozen statistics are reused at
    every point.
    """
    if not snr2_grid:
        raise ConfigError("ood_sweep needs a non-empty snr2 grid")
    grid = [SnrPoint(snr1_db=base_channel.snr1_db, snr2_db=float(s)) for s in snr2_grid]
    sweep = config.model_copy(update={"snr_grid": grid})
    report = evaluate(coder, sweep, base_channel, settings, metadata)
    report.metadata["protocol"] = "fixed-model"
    return report
