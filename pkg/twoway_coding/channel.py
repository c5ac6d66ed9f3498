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

"""Gaussian two-way channel simulation, SNR conversions and power audits.

Symbols are real-valued. User i's transmission c_i is received by the other
user as y_j = c_i + n_i with n_i ~ N(0, sigma_i^2), independently in each
direction and at each channel use.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)


def power_db_to_linear(power_db: float) -> float:
    """Convert a power in dB to linear scale (0 dB -> 1.0)."""
    return float(10.0 ** (power_db / 10.0))


def snr_to_noise_variance(snr_db: float, power: float) -> float:
    """
    Noise variance that realizes a given SNR for a transmitter of given power.

    Args:
        snr_db: Signal-to-noise ratio in dB
        power: Linear transmit power, must be positive

    Returns:
        power * 10^(-snr_db / 10)
    """
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")
    if not power > 0:
        raise ValueError(f"power must be positive, got {power}")
    return float(power * 10.0 ** (-snr_db / 10.0))


def _variance_or_noiseless(snr_db: float, power: float) -> float:
    # +inf dB is accepted by configs as an explicit noiseless direction
    if snr_db == math.inf:
        return 0.0
    return snr_to_noise_variance(snr_db, power)


@dataclass(frozen=True)
class ChannelConfig:
    """Static description of a Gaussian two-way channel.

    snr1_db is the SNR of user 1's transmissions (received at user 2),
    snr2_db the SNR of user 2's transmissions.
    """

    snr1_db: float
    snr2_db: float
    power1: float = 1.0
    power2: float = 1.0
    block_uses: int = 1

    def __post_init__(self):
        if not self.power1 > 0 or not self.power2 > 0:
            raise ValueError("channel powers must be positive")
        if self.block_uses < 1:
            raise ValueError(f"block_uses must be >= 1, got {self.block_uses}")
        for snr in (self.snr1_db, self.snr2_db):
            if math.isnan(snr) or snr == -math.inf:
                raise ValueError(f"invalid SNR {snr}")

    @property
    def sigma1_sq(self) -> float:
        return _variance_or_noiseless(self.snr1_db, self.power1)

    @property
    def sigma2_sq(self) -> float:
        return _variance_or_noiseless(self.snr2_db, self.power2)


def make_channel(
    snr1_db: float,
    snr2_db: float,
    block_uses: int,
    power1: float = 1.0,
    power2: float = 1.0,
) -> ChannelConfig:
    """Build a ChannelConfig with linear powers (P_i = 0 dB by default)."""
    return ChannelConfig(
        snr1_db=float(snr1_db),
        snr2_db=float(snr2_db),
        power1=float(power1),
        power2=float(power2),
        block_uses=int(block_uses),
    )


def with_snr(
    config: ChannelConfig,
    snr1_db: Optional[float] = None,
    snr2_db: Optional[float] = None,
) -> ChannelConfig:
    """Copy of config with one or both SNRs replaced."""
    changes = {}
    if snr1_db is not None:
        changes["snr1_db"] = float(snr1_db)
    if snr2_db is not None:
        changes["snr2_db"] = float(snr2_db)
    return replace(config, **changes)


class ChannelStreams:
    """Independent random substreams derived from one master seed.

    Each instance owns a stream for user 1's direction, one for user 2's
    direction and one for message bits. ``spawn`` derives children for
    episodes or workers so that parallel evaluation never aliases streams.
    """

    def __init__(self, seed: Union[int, np.random.SeedSequence]):
        if isinstance(seed, np.random.SeedSequence):
            self._sequence = seed
        else:
            self._sequence = np.random.SeedSequence(int(seed))
        direction1, direction2, bits = self._sequence.spawn(3)
        self.rng1 = np.random.default_rng(direction1)
        self.rng2 = np.random.default_rng(direction2)
        self.bits_rng = np.random.default_rng(bits)

    def spawn(self, count: int) -> List["ChannelStreams"]:
        return [ChannelStreams(child) for child in self._sequence.spawn(count)]

    def draw_noise(
        self, shape: Tuple[int, ...], config: ChannelConfig
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Draw (n1, n2) of the given shape at the configured variances."""
        n1 = self.rng1.standard_normal(shape) * math.sqrt(config.sigma1_sq)
        n2 = self.rng2.standard_normal(shape) * math.sqrt(config.sigma2_sq)
        return n1, n2


def exchange_step(
    c1,
    c2,
    sigma1_sq: float,
    sigma2_sq: float,
    rng: np.random.Generator,
    rng2: Optional[np.random.Generator] = None,
):
    """
    One simultaneous channel use in both directions.

    Args:
        c1: Symbol(s) sent by user 1
        c2: Symbol(s) sent by user 2
        sigma1_sq: Noise variance on user 1's direction
        sigma2_sq: Noise variance on user 2's direction
        rng: Stream for user 1's direction (and user 2's if rng2 is None)
        rng2: Optional separate stream for user 2's direction

    Returns:
        (y1, y2) where y1 = c2 + n2 is received by user 1 and y2 = c1 + n1 by user 2
    """
    if sigma1_sq < 0 or sigma2_sq < 0:
        raise ValueError("noise variances must be non-negative")
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    second = rng if rng2 is None else rng2
    n1 = rng.standard_normal(c1.shape) * math.sqrt(sigma1_sq)
    n2 = second.standard_normal(c2.shape) * math.sqrt(sigma2_sq)
    y1 = c2 + n2
    y2 = c1 + n1
    if y1.ndim == 0:
        return float(y1), float(y2)
    return y1, y2


@dataclass(frozen=True)
class EpisodeTrace:
    """Full record of a (batch of) two-way exchanges.

    Arrays have shape (..., T). ``received1`` is what user 1 observed.
    ``weights1``/``weights2`` hold the power-reallocation weights in force.
    """

    sent1: np.ndarray
    sent2: np.ndarray
    received1: np.ndarray
    received2: np.ndarray
    noise1: np.ndarray
    noise2: np.ndarray
    weights1: Optional[np.ndarray] = None
    weights2: Optional[np.ndarray] = None

    @property
    def block_uses(self) -> int:
        return int(self.sent1.shape[-1])

    @property
    def episodes(self) -> int:
        return int(np.prod(self.sent1.shape[:-1], dtype=int))

    def sent(self, user: int) -> np.ndarray:
        if user == 1:
            return self.sent1
        if user == 2:
            return self.sent2
        raise ValueError(f"user must be 1 or 2, got {user}")

    def additivity_residual(self) -> float:
        """Largest deviation from y_j = c_i + n_i over the trace."""
        r1 = np.abs(self.received1 - (self.sent2 + self.noise2))
        r2 = np.abs(self.received2 - (self.sent1 + self.noise1))
        return float(max(r1.max(initial=0.0), r2.max(initial=0.0)))


def empirical_power(trace_batch: Union[EpisodeTrace, Iterable[EpisodeTrace]], user: int) -> float:
    """
    Audit of the average power constraint.

    Args:
        trace_batch: One (possibly batched) trace or a collection of traces
        user: 1 or 2

    Returns:
        Sample mean over episodes of sum_t (c_i^t)^2
    """
    if isinstance(trace_batch, EpisodeTrace):
        traces: Sequence[EpisodeTrace] = [trace_batch]
    else:
        traces = list(trace_batch)
    if not traces:
        raise ValueError("empirical_power needs at least one episode")

    energies = []
    for trace in traces:
        symbols = np.asarray(trace.sent(user), dtype=np.float64)
        energies.append(np.sum(symbols**2, axis=-1).reshape(-1))
    energy = np.concatenate(energies)
    if energy.size == 0:
        raise ValueError("empirical_power needs at least one episode")
    return float(np.mean(energy))
