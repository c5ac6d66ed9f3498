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

"""Exceptions raised across the two-way coding package."""

from typing import Optional


class TwoWayCodingError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(TwoWayCodingError):
    """A configuration file or object violates its schema."""


class ShapeError(TwoWayCodingError, ValueError):
    """Tensor or vector dimensions do not agree."""


class NonFiniteError(TwoWayCodingError, FloatingPointError):
    """A kernel op or gradient produced NaN/Inf."""

    def __init__(self, message: str, name: Optional[str] = None):
        super().__init__(message)
        self.name = name


class TapeError(TwoWayCodingError):
    """Misuse of the differentiation tape."""


class PowerStatisticsError(TwoWayCodingError):
    """Frozen power reallocation was requested before statistics exist."""


class CheckpointError(TwoWayCodingError):
    """A checkpoint cannot be read or does not match its configuration."""


class TrainingDivergedError(TwoWayCodingError):
    """Training kept producing non-finite losses after every restart."""

    def __init__(self, message: str, dump_path: Optional[str] = None):
        super().__init__(message)
        self.dump_path = dump_path
