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

"""Command line entry point: twoway-coding <subcommand> --config=<file>."""

import dataclasses
import logging
import sys
from pathlib import Path

from absl import app, flags

from .errors import ConfigError, TwoWayCodingError
from .flops import REFERENCE_PROFILE, DimProfile, report, write_csv
from .harness.experiment import (
    ExperimentConfig,
    load_experiment,
    load_models,
    polar_baseline,
    resolve_checkpoint,
    run_evaluation,
    run_experiment,
    run_ood,
    run_training,
)
from .settings import Settings, load_settings

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("train", "eval", "ood-sweep", "flops", "polar-baseline", "run")

FLAGS = flags.FLAGS

flags.DEFINE_string("config", None, "Experiment config (JSON).")
flags.DEFINE_integer("seed", None, "Overrides the training and evaluation seeds.")
flags.DEFINE_string("output_dir", None, "Run directory; defaults to $TWOWAY_OUTPUT_DIR/<name>.")
flags.DEFINE_integer("workers", None, "Evaluation worker threads.")
flags.DEFINE_string("checkpoint", None, "Checkpoint to evaluate instead of the config's.")
flags.DEFINE_string("log_level", None, "Logging level; defaults to $TWOWAY_LOG_LEVEL.")


def _settings() -> Settings:
    settings = load_settings()
    if FLAGS.workers is not None:
        if FLAGS.workers < 1:
            raise ConfigError(f"--workers must be positive, got {FLAGS.workers}")
        settings = dataclasses.replace(settings, workers=FLAGS.workers)
    if FLAGS.log_level:
        settings = dataclasses.replace(settings, log_level=FLAGS.log_level.upper())
    return settings


def _experiment() -> ExperimentConfig:
    if not FLAGS.config:
        raise ConfigError("--config is required")
    config = load_experiment(FLAGS.config)
    if FLAGS.seed is not None:
        config = config.with_seed(FLAGS.seed)
    return config


def _output_dir(settings: Settings, name: str) -> Path:
    return Path(FLAGS.output_dir) if FLAGS.output_dir else Path(settings.output_dir) / name


def _trained_models(config: ExperimentConfig):
    checkpoint = resolve_checkpoint(config, FLAGS.checkpoint)
    return load_models(config, checkpoint)


def _flops(settings: Settings) -> Path:
    profiles = [REFERENCE_PROFILE]
    name = "flops"
    if FLAGS.config:
        config = load_experiment(FLAGS.config)
        t = config.train
        dims = t.model
        profile = DimProfile(
            K=t.K,
            M=t.M,
            T=t.T,
            h_c=dims.effective_hidden(),
            h_b=dims.hidden_dim,
            encoder_layers=dims.encoder_layers,
            decoder_layers=dims.decoder_layers,
        )
        profiles = [profile]
        name = config.name
    rows = report(profiles)
    for row in rows:
        print(
            f"   {row['model']:<6} K={row['K']} M={row['M']} T={row['T']}: "
            f"encode={row['encode_flops']:,} decode={row['decode_flops']:,} "
            f"total={row['total_flops']:,}"
        )
    return write_csv(rows, _output_dir(settings, name) / "flops.csv")


def dispatch(command: str, settings: Settings) -> Path:
    """Run one subcommand and return the main file it wrote."""
    if command == "flops":
        return _flops(settings)
    if command == "run":
        if not FLAGS.config:
            raise ConfigError("--config is required")
        result = run_experiment(
            FLAGS.config, output_dir=FLAGS.output_dir, settings=settings, seed=FLAGS.seed
        )
        return result.files["bler"]

    config = _experiment()
    out = _output_dir(settings, config.name)
    if command == "train":
        checkpoint, _, _ = run_training(config, out, settings)
        return checkpoint
    if command == "polar-baseline":
        _, path = polar_baseline(config, out, settings)
        return path
    trained, reverse = _trained_models(config)
    if command == "eval":
        _, path = run_evaluation(config, trained, out, settings, reverse)
        return path
    _, path = run_ood(config, trained, out, settings, reverse)
    return path


def main(argv):
    """Main CLI function."""
    if len(argv) != 2 or argv[1] not in SUBCOMMANDS:
        print(f"usage: twoway-coding {{{'|'.join(SUBCOMMANDS)}}} --config=<file> [flags]")
        sys.exit(2)
    command = argv[1]

    try:
        settings = _settings()
        logging.getLogger().setLevel(settings.log_level)
        print(f"🚀 twoway-coding {command}")
        path = dispatch(command, settings)
        print(f"✅ {command} finished: {path}")
    except TwoWayCodingError as e:
        logger.error(f"{command} failed: {e}")
        print(f"❌ {command} failed: {e}")
        sys.exit(1)


def run():
    app.run(main)


if __name__ == "__main__":
    run()
