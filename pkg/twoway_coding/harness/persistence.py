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

"""CSV results and JSON metadata sidecars."""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Union

from .bler import BlerReport

logger = logging.getLogger(__name__)

BLER_FIELDS = [
    "snr1_db",
    "snr2_db",
    "bler_1",
    "bler_2",
    "sum_bler",
    "trials",
    "ci",
    "seed",
    "model",
    "K",
    "M",
    "T",
]

CURVE_FIELDS = ["step", "loss", "val_bler_user1", "val_bler_user2", "val_sum_bler", "lr"]


def write_rows(path: Path, fieldnames: List[str], rows: Iterable[Mapping[str, Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in fieldnames})
    logger.info(f"Wrote {path}")
    return path


def meta_path(csv_path: Union[str, Path]) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(f"{csv_path.stem}.meta.json")


def write_metadata(path: Union[str, Path], metadata: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(dict(metadata), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_bler_csv(report: BlerReport, path: Union[str, Path]) -> Path:
    """Write the fixed-schema BLER table plus ``<name>.meta.json``."""
    path = write_rows(Path(path), BLER_FIELDS, report.rows())
    write_metadata(meta_path(path), {"model": report.model, **report.metadata})
    return path


def read_bler_csv(path: Union[str, Path]) -> List[Dict[str, str]]:
    with Path(path).open("r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def write_training_curve(rows: Iterable[Mapping[str, Any]], path: Union[str, Path]) -> Path:
    return write_rows(Path(path), CURVE_FIELDS, rows)
