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
Closed-form FLOPS estimates for the two-way models.

Each estimate follows the order-of-growth expression of its architecture with
explicit constants. A dense layer in -> out costs 2 * in * out; an attention
layer costs 24 * l * h^2 (projections plus a 4h feed-forward block) plus
4 * l^2 * h (scores and values); a GRU step costs 12 * h^2. Encode and decode
counts are for one user; the total covers both users.
"""

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Union

from .harness.persistence import write_rows
from .models.base import ModelKind

logger = logging.getLogger(__name__)

FLOPS_KINDS = ("TWLC", "TWBAF", "TWRNN")

FLOPS_FIELDS = [
    "model",
    "K",
    "M",
    "T",
    "T_M",
    "h_c",
    "h_b",
    "h_r",
    "encode_flops",
    "decode_flops",
    "total_flops",
]

# TWLC: feature extractor plus head, per channel use and per sub-block
TWLC_ENCODE_MIXING = 36
TWLC_ENCODE_HIDDEN = 10
TWLC_DECODE_MIXING = 30
TWLC_DECODE_HIDDEN = 10
TWLC_DECODE_CLASSES = 2

# TWBAF
ATTENTION_PROJECTION = 24
ATTENTION_SCORES = 4
TWBAF_FEATURES = 14

# TWRNN (GRU cells)
GRU_RECURRENT = 12
GRU_INPUT = 12
GRU_CLASSES = 2


@dataclass(frozen=True)
class DimProfile:
    """Message, block and hidden dimensions of one comparison point."""

    K: int
    M: int
    T: int
    h_c: int = 32
    h_b: int = 32
    h_r: int = 50
    encoder_layers: int = 2
    decoder_layers: int = 3

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 1:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.K % self.M:
            raise ValueError(f"M={self.M} does not divide K={self.K}")
        if (self.T * self.M) % self.K:
            raise ValueError(f"T*M/K is not an integer for T={self.T}, M={self.M}, K={self.K}")

    @property
    def t_m(self) -> int:
        return self.T * self.M // self.K

    @property
    def ell(self) -> int:
        return self.K // self.M


# (K=6, M=3, T=18): two sub-blocks of 9 uses, the rate-1/3 operating point
REFERENCE_PROFILE = DimProfile(K=6, M=3, T=18)


@dataclass(frozen=True)
class FlopsEstimate:
    model: str
    encode: int
    decode: int
    terms: Dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return 2 * (self.encode + self.decode)


def _twlc(p: DimProfile) -> FlopsEstimate:
    h = p.h_c
    terms = {
        "encode_mixing": TWLC_ENCODE_MIXING * p.T * h * (p.M + p.t_m),
        "encode_hidden": TWLC_ENCODE_HIDDEN * h * h,
        "decode_mixing": TWLC_DECODE_MIXING * p.ell * h * (p.M + p.t_m),
        "decode_hidden": TWLC_DECODE_HIDDEN * h * h,
        "decode_classes": TWLC_DECODE_CLASSES * h * 2**p.M,
    }
    encode = terms["encode_mixing"] + terms["encode_hidden"]
    decode = terms["decode_mixing"] + terms["decode_hidden"] + terms["decode_classes"]
    return FlopsEstimate("TWLC", encode, decode, terms)


def _attention(p: DimProfile, layers: int) -> int:
    h, ell = p.h_b, p.ell
    return layers * (ATTENTION_PROJECTION * ell * h * h + ATTENTION_SCORES * ell * ell * h)


def _twbaf(p: DimProfile) -> FlopsEstimate:
    features = TWBAF_FEATURES * p.ell * p.h_b * (p.t_m + p.M)
    terms = {
        "encode_attention": p.t_m * _attention(p, p.encoder_layers),
        "encode_features": p.t_m * features,
        "decode_attention": _attention(p, p.decoder_layers),
        "decode_features": features,
        "decode_classes": 2 ** (p.M + 1) * p.ell * p.h_b,
    }
    encode = terms["encode_attention"] + terms["encode_features"]
    decode = terms["decode_attention"] + terms["decode_features"] + terms["decode_classes"]
    return FlopsEstimate("TWBAF", encode, decode, terms)


def _twrnn(p: DimProfile) -> FlopsEstimate:
    h = p.h_r
    terms = {
        "encode_recurrent": GRU_RECURRENT * p.T * h * h,
        "encode_input": GRU_INPUT * p.M * h,
        "decode_recurrent": p.ell * p.t_m * (GRU_RECURRENT * h * h + GRU_INPUT * p.M * h),
        "decode_classes": p.ell * GRU_CLASSES * 2**p.M * h,
    }
    encode = terms["encode_recurrent"] + terms["encode_input"]
    decode = terms["decode_recurrent"] + terms["decode_classes"]
    return FlopsEstimate("TWRNN", encode, decode, terms)


_ESTIMATORS = {"TWLC": _twlc, "TWBAF": _twbaf, "TWRNN": _twrnn}


def estimate(kind: Union[str, ModelKind], profile: DimProfile) -> FlopsEstimate:
    """
    FLOPS to process one bitstream.

    Args:
        kind: "TWLC", "TWBAF" or "TWRNN"
        profile: Dimensions to evaluate at

    Returns:
        FlopsEstimate with per-user encode/decode counts, the two-user
        total and a per-term breakdown
    """
    name = (kind.value if isinstance(kind, ModelKind) else str(kind)).upper()
    if name not in _ESTIMATORS:
        raise ValueError(f"no FLOPS model for {kind!r}; choose from {', '.join(FLOPS_KINDS)}")
    return _ESTIMATORS[name](profile)


def report(profiles: Sequence[DimProfile]) -> List[Dict[str, int]]:
    """One row per (profile, model kind)."""
    rows = []
    for profile in profiles:
        for kind in FLOPS_KINDS:
            result = estimate(kind, profile)
            rows.append(
                {
                    "model": kind,
                    "K": profile.K,
                    "M": profile.M,
                    "T": profile.T,
                    "T_M": profile.t_m,
                    "h_c": profile.h_c,
                    "h_b": profile.h_b,
                    "h_r": profile.h_r,
                    "encode_flops": result.encode,
                    "decode_flops": result.decode,
                    "total_flops": result.total,
                }
            )
    return rows


def write_csv(rows: Sequence[Dict[str, int]], path: Union[str, Path]) -> Path:
    return write_rows(Path(path), FLOPS_FIELDS, rows)
