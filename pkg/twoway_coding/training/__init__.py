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

"""Training configuration, objective and loop."""

from .config import ModelDims, TrainConfig, load_config, parse_config
from .loop import (
    StepMetrics,
    TrainedModel,
    TrainResult,
    audit_power,
    calibrate,
    load_trained,
    train,
    train_step,
    validate,
)
from .loss import cross_entropy_loss, episode_loss

__all__ = [
    "ModelDims",
    "TrainConfig",
    "load_config",
    "parse_config",
    "StepMetrics",
    "TrainedModel",
    "TrainResult",
    "audit_power",
    "calibrate",
    "load_trained",
    "train",
    "train_step",
    "validate",
    "cross_entropy_loss",
    "episode_loss",
]
