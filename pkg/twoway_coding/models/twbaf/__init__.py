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

"""Two-way block attention feedback code (TWBAF)."""

from .model import (
    TokenCentering,
    TWBAFModel,
    init_twbaf_decoder,
    init_twbaf_encoder,
    twbaf_decode,
    twbaf_decoder_logits,
    twbaf_encode,
    twbaf_raw_symbols,
)

__all__ = [
    "TokenCentering",
    "TWBAFModel",
    "init_twbaf_decoder",
    "init_twbaf_encoder",
    "twbaf_decode",
    "twbaf_decoder_logits",
    "twbaf_encode",
    "twbaf_raw_symbols",
]
