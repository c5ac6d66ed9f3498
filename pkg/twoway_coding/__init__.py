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

"""Learned feedback codes over Gaussian two-way channels."""

__version__ = "0.1.0"

from .channel import ChannelConfig, ChannelStreams, EpisodeTrace, make_channel
from .errors import TwoWayCodingError
from .flops import DimProfile, estimate
from .harness import BlerReport, EvalConfig, NeuralCoder, evaluate, ood_sweep
from .models import EncoderSpec, ModelKind, create_model
from .polar import PolarOpenLoopCoder, open_loop_bler
from .training import TrainConfig, load_trained, train

__all__ = [
    "__version__",
    "ChannelConfig",
    "ChannelStreams",
    "EpisodeTrace",
    "make_channel",
    "TwoWayCodingError",
    "DimProfile",
    "estimate",
    "BlerReport",
    "EvalConfig",
    "NeuralCoder",
    "evaluate",
    "ood_sweep",
    "EncoderSpec",
    "ModelKind",
    "create_model",
    "PolarOpenLoopCoder",
    "open_loop_bler",
    "TrainConfig",
    "load_trained",
    "train",
]
