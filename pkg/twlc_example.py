#!/usr/bin/env python3
"""
Example script: train a small TWLC, evaluate it, and compare against the
open-loop polar baseline and the FLOPS estimates.
"""

import dataclasses
import os
import sys

# Add the project root to the path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from twoway_coding.flops import REFERENCE_PROFILE, report
from twoway_coding.harness import EvalConfig, NeuralCoder, SnrPoint, evaluate
from twoway_coding.polar import PolarOpenLoopCoder
from twoway_coding.settings import load_settings
from twoway_coding.training import TrainConfig, audit_power, train


def demonstrate_training(settings):
    """Train a TWLC at K=M=3, T=9 for a short budget."""

    print("🔧 Training TWLC (K=3, M=3, T=9, SNR1=1 dB, SNR2=20 dB)")
    print("=" * 50)

    config = TrainConfig.model_validate(
        {
            "name": "twlc_example",
            "K": 3,
            "M": 3,
            "T": 9,
            "snr1_db": 1.0,
            "snr2_db": 20.0,
            "batch_size": 256,
            "steps": 2000,
            "eval_every": 250,
            "val_episodes": 5000,
        }
    )
    result = train(config, os.path.join(settings.output_dir, config.name), settings)
    for row in result.curve:
        print(f"   step {row['step']:>5}: best validation sum BLER {row['val_sum_bler']:.3e}")

    ratio1, ratio2 = audit_power(result.trained.model, config, episodes=5000, seed=1)
    print(f"⚡ Power use: user 1 {ratio1:.3f}, user 2 {ratio2:.3f} of budget")
    print(f"💾 Checkpoint: {result.checkpoint_path}")
    return config, result.trained


def demonstrate_evaluation(config, trained, settings):
    """Compare the trained model with open-loop polar coding."""

    print("\n📊 BLER at the training SNRs")
    print("=" * 50)

    evaluation = EvalConfig(
        snr_grid=[SnrPoint(snr1_db=config.snr1_db, snr2_db=config.snr2_db)],
        min_trials=20_000,
        max_trials=200_000,
        chunk_trials=20_000,
    )
    coders = [
        NeuralCoder(trained.model, config.K),
        PolarOpenLoopCoder(config.K, config.T, decoder="ml", name="polar-ml"),
    ]
    for coder in coders:
        point = evaluate(coder, evaluation, config.channel(), settings).points[0]
        print(
            f"   {coder.name:<9} BLER1={point.bler_1:.3e} BLER2={point.bler_2:.3e} "
            f"sum={point.sum_bler:.3e} (±{point.ci:.1e}, {point.trials} trials)"
        )


def demonstrate_flops():
    """Print the per-bitstream FLOPS of the three architectures."""

    print("\n🧮 FLOPS at K=6, M=3, T=18")
    print("=" * 50)
    for row in report([REFERENCE_PROFILE]):
        print(f"   {row['model']:<6} {row['total_flops']:>12,}")


def main():
    """Main example function."""
    settings = dataclasses.replace(load_settings(), progress=False)
    try:
        config, trained = demonstrate_training(settings)
        demonstrate_evaluation(config, trained, settings)
        demonstrate_flops()
        print("\n✅ Example finished")
    except Exception as e:
        print(f"❌ Example failed: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
