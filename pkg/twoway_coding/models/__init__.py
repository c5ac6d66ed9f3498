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

"""Two-way coding models: TWLC, ALC/LC and TWBAF."""

from . import alc, twbaf, twlc
from .base import (
    EncoderSpec,
    EpisodeOutput,
    KnowledgeTrack,
    ModelKind,
    TwoWayModel,
)
from .factory import create_model, episode_forward, parameter_count
from .power import PowerReallocator, reallocate

__all__ = [
    "alc",
    "twbaf",
    "twlc",
    "EncoderSpec",
    "EpisodeOutput",
    "KnowledgeTrack",
    "ModelKind",
    "TwoWayModel",
    "create_model",
    "episode_forward",
    "parameter_count",
    "PowerReallocator",
    "reallocate",
]
