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

"""Two-way lightweight code (TWLC)."""

from .model import (
    TWLCModel,
    feature_extractor,
    init_feature_extractor,
    init_twlc_decoder,
    init_twlc_encoder,
    twlc_decode,
    twlc_decoder_logits,
    twlc_encode,
)

__all__ = [
    "TWLCModel",
    "feature_extractor",
    "init_feature_extractor",
    "init_twlc_decoder",
    "init_twlc_encoder",
    "twlc_decode",
    "twlc_decoder_logits",
    "twlc_encode",
]
