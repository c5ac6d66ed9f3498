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
Training configuration, rate accounting and config fingerprints.

Two-way mode splits each user's K bits into K/M sub-blocks sent over
T_M = T*M/K uses (rate K/T per user). One-way mode gives each direction
T/2 uses (rate 2K/T), which is how the feedback codes are compared.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Literal, Optional, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..channel import ChannelConfig, make_channel
from ..errors import ConfigError
from ..knowledge import FeedbackMode
from ..models.base import EncoderSpec, ModelKind

logger = logging.getLogger(__name__)

ConfigT = TypeVar("ConfigT", bound=BaseModel)

TWO_WAY = "two_way"
ONE_WAY = "one_way"


class ModelDims(BaseModel):
    """Architecture section of a run config."""

    model_config = ConfigDict(extra="forbid")

    kind: ModelKind = ModelKind.TWLC
    hidden_dim: int = Field(32, ge=1)
    head_dim: int = Field(16, ge=1)
    heads: int = Field(1, ge=1)
    encoder_layers: int = Field(2, ge=0)
    decoder_layers: int = Field(3, ge=0)
    feedback_mode: FeedbackMode = FeedbackMode.RAW
    activation: Literal["relu", "gelu", "tanh"] = "relu"
    positional: bool = True
    # ALC/LC only: "lc" halves the feature-extractor width
    alc_dims: Literal["lc", "twlc"] = "twlc"

    @model_validator(mode="after")
    def _check_heads(self) -> "ModelDims":
        if self.kind is ModelKind.TWBAF and self.hidden_dim % self.heads != 0:
            raise ValueError(f"hidden_dim {self.hidden_dim} not divisible by heads {self.heads}")
        return self

    def effective_hidden(self) -> int:
        if self.kind in (ModelKind.ALC, ModelKind.LC) and self.alc_dims == "lc":
            return max(1, self.hidden_dim // 2)
        return self.hidden_dim


class TrainConfig(BaseModel):
    """Everything needed to train (and re-identify) one model."""

    model_config = ConfigDict(extra="forbid")

    name: str = "twlc"
    K: int = Field(3, ge=1)
    M: int = Field(3, ge=1)
    T: int = Field(9, ge=1)
    mode: Literal["two_way", "one_way"] = TWO_WAY
    snr1_db: float = 20.0
    snr2_db: float = 20.0
    power1_db: float = 0.0
    power2_db: float = 0.0
    model: ModelDims = Field(default_factory=ModelDims)

    batch_size: int = Field(512, ge=1)
    steps: int = Field(2000, ge=0)
    lr: float = Field(1e-3, ge=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(1e-8, gt=0.0)
    clip_norm: Optional[float] = Field(1.0, gt=0.0)
    warmup_steps: int = Field(0, ge=0)
    patience: int = Field(10, ge=1)
    decay_factor: float = Field(0.5, gt=0.0, le=1.0)
    min_lr: float = Field(1e-7, ge=0.0)

    eval_every: int = Field(500, ge=1)
    val_episodes: int = Field(10_000, ge=1)
    restarts: int = Field(3, ge=0)
    seed: int = 0
    reverse_link: bool = False
    dtype: Literal["float32", "float64"] = "float32"

    @model_validator(mode="after")
    def _check_rates(self) -> "TrainConfig":
        kind = self.model.kind
        if self.K % self.M != 0:
            raise ValueError(f"M={self.M} must divide K={self.K}")
        if self.mode == TWO_WAY:
            if kind in (ModelKind.ALC, ModelKind.LC):
                raise ValueError(f"{kind.value} is a one-way feedback code; use mode 'one_way'")
            if (self.T * self.M) % self.K != 0:
                raise ValueError(f"T*M/K = {self.T}*{self.M}/{self.K} is not an integer")
        else:
            if kind not in (ModelKind.ALC, ModelKind.LC):
                raise ValueError(f"{kind.value} is a two-way code; use mode 'two_way'")
            if self.T % 2 != 0:
                raise ValueError(f"one-way mode splits T={self.T} into two halves; T must be even")
            if ((self.T // 2) * self.M) % self.K != 0:
                raise ValueError(f"(T/2)*M/K = {self.T // 2}*{self.M}/{self.K} is not an integer")
        if self.reverse_link and self.mode != ONE_WAY:
            raise ValueError("reverse_link only applies to one-way codes")
        return self

    @property
    def uses_per_direction(self) -> int:
        return self.T if self.mode == TWO_WAY else self.T // 2

    @property
    def t_uses(self) -> int:
        """T_M: channel uses spent on one sub-block."""
        return self.uses_per_direction * self.M // self.K

    @property
    def tokens(self) -> int:
        return self.K // self.M if self.model.kind is ModelKind.TWBAF else 1

    @property
    def episodes_per_block(self) -> int:
        """Episodes needed to carry all K bits of one user."""
        return self.K // (self.M * self.tokens)

    @property
    def rate(self) -> float:
        return self.K / self.uses_per_direction

    @property
    def power1(self) -> float:
        return 10.0 ** (self.power1_db / 10.0)

    @property
    def power2(self) -> float:
        return 10.0 ** (self.power2_db / 10.0)

    @property
    def np_dtype(self) -> np.dtype:
        return np.dtype(self.dtype)

    def encoder_spec(self) -> EncoderSpec:
        dims = self.model
        return EncoderSpec(
            kind=dims.kind,
            sub_block_len=self.M,
            t_uses=self.t_uses,
            tokens=self.tokens,
            hidden_dim=dims.effective_hidden(),
            head_dim=dims.head_dim,
            heads=dims.heads,
            encoder_layers=dims.encoder_layers,
            decoder_layers=dims.decoder_layers,
            power1=self.power1,
            power2=self.power2,
            feedback_mode=dims.feedback_mode,
            activation=dims.activation,
            positional=dims.positional,
        )

    def channel(
        self, snr1_db: Optional[float] = None, snr2_db: Optional[float] = None
    ) -> ChannelConfig:
        return make_channel(
            self.snr1_db if snr1_db is None else snr1_db,
            self.snr2_db if snr2_db is None else snr2_db,
            block_uses=self.uses_per_direction,
            power1=self.power1,
            power2=self.power2,
        )

    def reversed(self) -> "TrainConfig":
        """The reverse link of a one-way code: user 2 sends, SNRs swapped."""
        return self.model_copy(
            update={
                "name": f"{self.name}-reverse",
                "snr1_db": self.snr2_db,
                "snr2_db": self.snr1_db,
                "power1_db": self.power2_db,
                "power2_db": self.power1_db,
                "seed": self.seed + 1,
                "reverse_link": False,
            }
        )

    def fingerprint(self) -> str:
        """SHA-256 of the fields that define the model's parameters."""
        payload = {
            "K": self.K,
            "M": self.M,
            "T": self.T,
            "mode": self.mode,
            "power1_db": self.power1_db,
            "power2_db": self.power2_db,
            "model": self.model.model_dump(mode="json"),
        }
        encoded = json.dumps(payload, sort_keys=True, ensure_ascii=True)
        return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


def _field_path(location) -> str:
    return ".".join(str(part) for part in location) or "<root>"


def parse_config(
    data: Union[str, dict], config_class: Type[ConfigT] = TrainConfig, source: str = "<config>"
) -> ConfigT:
    """
    Validate a config from JSON text or an already-decoded mapping.

    Args:
        data: JSON text or dict
        config_class: Pydantic model to validate against
        source: Name used in error messages

    Returns:
        Validated config instance
    """
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{source}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")
    try:
        return config_class.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{_field_path(err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"{source}: {problems}")


def load_config(path: Union[str, Path], config_class: Type[ConfigT] = TrainConfig) -> ConfigT:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    config = parse_config(path.read_text(encoding="utf-8"), config_class, source=str(path))
    logger.info(f"Loaded {config_class.__name__} from {path}")
    return config
