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

"""BLER evaluation harness and result persistence."""

from .bler import (
    BlerPoint,
    BlerReport,
    BlockCoder,
    EvalConfig,
    NeuralCoder,
    OracleCoder,
    SnrPoint,
    SubBlockFaultCoder,
    UniformRandomCoder,
    evaluate,
    evaluate_point,
    ood_sweep,
    run_trials,
    wilson_interval,
)
from .persistence import (
    BLER_FIELDS,
    CURVE_FIELDS,
    meta_path,
    write_rows,
    read_bler_csv,
    write_bler_csv,
    write_metadata,
    write_training_curve,
)

__all__ = [
    "BlerPoint",
    "BlerReport",
    "BlockCoder",
    "EvalConfig",
    "NeuralCoder",
    "OracleCoder",
    "SnrPoint",
    "SubBlockFaultCoder",
    "UniformRandomCoder",
    "evaluate",
    "evaluate_point",
    "ood_sweep",
    "run_trials",
    "wilson_interval",
    "BLER_FIELDS",
    "CURVE_FIELDS",
    "meta_path",
    "write_rows",
    "read_bler_csv",
    "write_bler_csv",
    "write_metadata",
    "write_training_curve",
]
