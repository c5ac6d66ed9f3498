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
Experiment pipelines: optional training, BLER evaluation, the fixed-model
SNR2 sweep and the open-loop polar baseline, each persisted as CSV plus a
metadata sidecar.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

from .. import __version__
from ..channel import make_channel
from ..errors import CheckpointError, ConfigError
from ..polar import PolarOpenLoopCoder
from ..settings import Settings, load_settings
from ..training.config import TrainConfig, load_config
from ..training.loop import CHECKPOINT_NAME, TrainedModel, load_trained, train
from .bler import BlerReport, EvalConfig, NeuralCoder, SnrPoint, evaluate, ood_sweep
from .persistence import write_bler_csv

logger = logging.getLogger(__name__)

BLER_NAME = "bler.csv"
OOD_NAME = "ood.csv"
POLAR_NAME = "polar.csv"
REVERSE_DIR = "reverse"


class OodConfig(BaseModel):
    """SNR2 values for the fixed-model sweep; SNR1 stays at its training value."""

    model_config = ConfigDict(extra="forbid")

    snr2_grid: List[float] = Field(min_length=1)


class PolarConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    decoder: Literal["sc", "ml"] = "sc"
    puncture_seed: int = 0


class ExperimentConfig(BaseModel):
    """One experiment file under configs/."""

    model_config = ConfigDict(extra="forbid")

    name: str
    train: TrainConfig
    evaluation: EvalConfig = Field(default_factory=EvalConfig)
    run_training: bool = True
    checkpoint: Optional[str] = None
    ood: Optional[OodConfig] = None
    polar: Optional[PolarConfig] = None

    def resolved_evaluation(self) -> EvalConfig:
        """Evaluation config with dims and grid defaulted from the training config."""
        ev = self.evaluation
        update = {}
        if ev.K is None:
            update["K"] = self.train.K
        if ev.M is None:
            update["M"] = self.train.M
        if ev.T is None:
            update["T"] = self.train.T
        if not ev.snr_grid:
            update["snr_grid"] = [SnrPoint(snr1_db=self.train.snr1_db, snr2_db=self.train.snr2_db)]
        return ev.model_copy(update=update) if update else ev

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return self.model_copy(
            update={
                "train": self.train.model_copy(update={"seed": seed}),
                "evaluation": self.evaluation.model_copy(update={"seed": seed}),
            }
        )


@dataclass
class ExperimentResult:
    name: str
    output_dir: Path
    checkpoint: Optional[Path] = None
    reports: Dict[str, BlerReport] = field(default_factory=dict)
    files: Dict[str, Path] = field(default_factory=dict)


def load_experiment(path: Union[str, Path]) -> ExperimentConfig:
    return load_config(path, ExperimentConfig)


def _metadata(config: ExperimentConfig, trained: Optional[TrainedModel] = None) -> Dict:
    meta = {"experiment": config.name, "version": __version__}
    if trained is not None:
        meta["fingerprint"] = trained.fingerprint
        meta["train_snr1_db"] = trained.config.snr1_db
        meta["train_snr2_db"] = trained.config.snr2_db
    return meta


def resolve_checkpoint(config: ExperimentConfig, checkpoint: Optional[str] = None) -> Path:
    """Explicit argument, then the experiment's checkpoint, then the evaluation's."""
    path = checkpoint or config.checkpoint or config.evaluation.checkpoint
    if path is None:
        raise ConfigError(
            f"{config.name}: training is disabled and no checkpoint was given"
        )
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"{config.name}: checkpoint not found: {path}")
    return path


def load_models(
    config: ExperimentConfig, checkpoint: Path
) -> Tuple[TrainedModel, Optional[TrainedModel]]:
    """Forward model plus, for one-way codes with a reverse link, the reverse model."""
    trained = load_trained(checkpoint, config.train)
    reverse = None
    if config.train.reverse_link:
        reverse_path = checkpoint.parent / REVERSE_DIR / CHECKPOINT_NAME
        if reverse_path.exists():
            reverse = load_trained(reverse_path, config.train.reversed())
        else:
            logger.warning(
                f"{config.name}: no reverse-link checkpoint at {reverse_path}; "
                "reporting user 1 only"
            )
    return trained, reverse


def run_training(
    config: ExperimentConfig, output_dir: Path, settings: Settings
) -> Tuple[Path, TrainedModel, Optional[TrainedModel]]:
    result = train(config.train, output_dir, settings)
    reverse = result.reverse.trained if result.reverse is not None else None
    logger.info(
        f"{config.name}: best validation sum BLER {result.best_sum_bler:.3e} "
        f"after {result.attempts} attempt(s)"
    )
    return result.checkpoint_path, result.trained, reverse


def neural_coder(
    config: ExperimentConfig, trained: TrainedModel, reverse: Optional[TrainedModel] = None
) -> NeuralCoder:
    return NeuralCoder(
        trained.model,
        config.train.K,
        name=config.train.name,
        reverse=reverse.model if reverse is not None else None,
    )


def run_evaluation(
    config: ExperimentConfig,
    trained: TrainedModel,
    output_dir: Path,
    settings: Settings,
    reverse: Optional[TrainedModel] = None,
) -> Tuple[BlerReport, Path]:
    coder = neural_coder(config, trained, reverse)
    report = evaluate(
        coder,
        config.resolved_evaluation(),
        config.train.channel(),
        settings,
        metadata=_metadata(config, trained),
    )
    return report, write_bler_csv(report, output_dir / BLER_NAME)


def run_ood(
    config: ExperimentConfig,
    trained: TrainedModel,
    output_dir: Path,
    settings: Settings,
    reverse: Optional[TrainedModel] = None,
) -> Tuple[BlerReport, Path]:
    if config.ood is None:
        raise ConfigError(f"{config.name}: no 'ood' section in the experiment config")
    coder = neural_coder(config, trained, reverse)
    report = ood_sweep(
        coder,
        config.resolved_evaluation(),
        config.train.channel(),
        config.ood.snr2_grid,
        settings,
        metadata=_metadata(config, trained),
    )
    return report, write_bler_csv(report, output_dir / OOD_NAME)


def polar_baseline(
    config: ExperimentConfig, output_dir: Path, settings: Optional[Settings] = None
) -> Tuple[BlerReport, Path]:
    """
    Open-loop (T, K) polar BLER on the experiment's SNR grid.

    Args:
        config: Experiment whose K, T and grid are reused
        output_dir: Directory receiving polar.csv
        settings: Worker count and trial cap

    Returns:
        (report, csv path)
    """
    settings = settings or load_settings()
    polar = config.polar or PolarConfig()
    coder = PolarOpenLoopCoder(
        config.train.K,
        config.train.T,
        seed=polar.puncture_seed,
        decoder=polar.decoder,
        name=f"polar-{polar.decoder}",
    )
    # the polar code spans the whole message in one episode
    evaluation = config.resolved_evaluation().model_copy(update={"M": None})
    t = config.train
    channel = make_channel(t.snr1_db, t.snr2_db, block_uses=t.T, power1=t.power1, power2=t.power2)
    report = evaluate(coder, evaluation, channel, settings, metadata=_metadata(config))
    return report, write_bler_csv(report, output_dir / POLAR_NAME)


def run_experiment(
    config_file: Union[str, Path],
    output_dir: Optional[Union[str, Path]] = None,
    settings: Optional[Settings] = None,
    seed: Optional[int] = None,
) -> ExperimentResult:
    """
    Train (optionally), evaluate and persist one experiment.

    Args:
        config_file: JSON experiment config
        output_dir: Defaults to <TWOWAY_OUTPUT_DIR>/<experiment name>
        settings: Environment-derived settings
        seed: Overrides both the training and evaluation seeds

    Returns:
        ExperimentResult naming every written file
    """
    settings = settings or load_settings()
    config = load_experiment(config_file)
    if seed is not None:
        config = config.with_seed(seed)
    out = Path(output_dir) if output_dir is not None else Path(settings.output_dir) / config.name
    result = ExperimentResult(name=config.name, output_dir=out)
    logger.info(f"Running experiment {config.name} into {out}")

    if config.run_training:
        checkpoint, trained, reverse = run_training(config, out, settings)
    else:
        checkpoint = resolve_checkpoint(config)
        trained, reverse = load_models(config, checkpoint)
    result.checkpoint = checkpoint

    report, path = run_evaluation(config, trained, out, settings, reverse)
    result.reports["bler"], result.files["bler"] = report, path

    if config.ood is not None:
        report, path = run_ood(config, trained, out, settings, reverse)
        result.reports["ood"], result.files["ood"] = report, path

    if config.polar is not None:
        report, path = polar_baseline(config, out, settings)
        result.reports["polar"], result.files["polar"] = report, path

    logger.info(f"Experiment {config.name} finished: {', '.join(str(p) for p in result.files.values())}")
    return result
