"""Tests for the open-loop polar baseline."""

import itertools
import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from twoway_coding.channel import make_channel
from twoway_coding.errors import ShapeError
from twoway_coding.harness import EvalConfig, ood_sweep
from twoway_coding.knowledge import index_to_bits
from twoway_coding.polar import (
    PolarOpenLoopCoder,
    PolarSpec,
    bhattacharyya,
    channel_llrs,
    codebook,
    construct,
    encode,
    make_polar_spec,
    ml_decode,
    open_loop_bler,
    polar_transform,
    sc_decode,
)
from twoway_coding.settings import Settings, load_settings

slow = pytest.mark.skipif(
    not load_settings().run_slow, reason="long Monte Carlo runs need TWOWAY_RUN_SLOW=1"
)


def _all_messages(k):
    return np.array([index_to_bits(i, k) for i in range(2**k)])


def test_construct_small_codes():
    """Test frozen sets of tiny codes."""
    assert construct(2, 1, 0.0) == (0,)
    assert construct(4, 4, 0.0) == ()
    assert construct(4, 0, 0.0) == (0, 1, 2, 3)


def test_construct_length_eight():
    """Test the (8, 4) frozen set at 0 dB design SNR."""
    assert construct(8, 4, 0.0) == (0, 1, 2, 4)


def test_construct_freezes_punctured_synthetic_channels():
    """Test that puncturing makes the affected synthetic channels least reliable."""
    frozen = construct(4, 3, 0.0, punctured=(3,))
    assert frozen == (0,)


def test_construct_rejects_bad_sizes():
    """Test that N must be a power of two and K <= N."""
    with pytest.raises(ValueError):
        construct(6, 3, 0.0)
    with pytest.raises(ValueError):
        construct(4, 5, 0.0)


def test_polar_spec_validation():
    """Test the consistency checks of a code description."""
    with pytest.raises(ValueError):
        PolarSpec(block_len=6, info_count=3, frozen=(0, 1, 2), design_snr_db=0.0, transmit_len=6)
    with pytest.raises(ValueError):
        PolarSpec(block_len=4, info_count=2, frozen=(0,), design_snr_db=0.0, transmit_len=4)
    with pytest.raises(ValueError):
        PolarSpec(block_len=4, info_count=2, frozen=(0, 1), design_snr_db=0.0, transmit_len=3)


def test_make_polar_spec_punctures_to_length():
    """Test that T = 6 uses an N = 8 mother code with two punctured positions."""
    spec = make_polar_spec(6, 3, 0.0, seed=1)
    assert spec.block_len == 8
    assert len(spec.punctured) == 2
    assert len(spec.kept_positions) == 6
    assert spec.punctured == make_polar_spec(6, 3, 0.0, seed=1).punctured
    assert make_polar_spec(8, 4, 0.0).punctured == ()
    with pytest.raises(ValueError):
        make_polar_spec(2, 3, 0.0)


def test_polar_transform_examples():
    """Test the kernel on length two and linearity over GF(2)."""
    np.testing.assert_array_equal(polar_transform([0, 1]), [1, 1])
    np.testing.assert_array_equal(polar_transform([1, 0]), [1, 0])
    rng = np.random.default_rng(0)
    u = rng.integers(0, 2, size=(10, 8))
    v = rng.integers(0, 2, size=(10, 8))
    np.testing.assert_array_equal(
        polar_transform(u ^ v), polar_transform(u) ^ polar_transform(v)
    )


def test_encode_bpsk_mapping():
    """Test that bit 0 maps to +sqrt(P)."""
    spec = PolarSpec(block_len=2, info_count=2, frozen=(), design_snr_db=0.0, transmit_len=2)
    np.testing.assert_array_equal(encode([0, 0], spec), [1.0, 1.0])
    np.testing.assert_array_equal(encode([0, 1], spec), [-1.0, -1.0])
    np.testing.assert_allclose(encode([0, 0], spec, power=4.0), [2.0, 2.0])
    with pytest.raises(ShapeError):
        encode([0, 1, 1], spec)


def test_channel_llrs_zero_at_punctured_positions():
    """Test the BPSK LLR 2 sqrt(P) y / sigma^2 and zero-LLR puncturing."""
    spec = make_polar_spec(6, 3, 0.0, seed=2)
    received = np.arange(1.0, 7.0)
    llrs = channel_llrs(received, spec, sigma_sq=2.0)
    np.testing.assert_array_equal(llrs[list(spec.punctured)], 0.0)
    np.testing.assert_allclose(llrs[spec.kept_positions], received)
    with pytest.raises(ShapeError):
        channel_llrs(np.zeros(5), spec, sigma_sq=1.0)


@pytest.mark.parametrize("transmit_len, info_count", [(8, 4), (6, 3), (9, 3)])
def test_sc_decode_noiseless_recovery(transmit_len, info_count):
    """Test that SC recovers every message from noiseless symbols."""
    spec = make_polar_spec(transmit_len, info_count, 0.0, seed=3)
    messages = _all_messages(info_count)
    llrs = channel_llrs(encode(messages, spec), spec, sigma_sq=0.0)
    np.testing.assert_array_equal(sc_decode(llrs, spec), messages)
    np.testing.assert_array_equal(ml_decode(llrs, spec), messages)


def test_sc_decode_rejects_wrong_length():
    """Test the LLR length check."""
    spec = make_polar_spec(8, 4, 0.0)
    with pytest.raises(ShapeError):
        sc_decode(np.zeros((2, 6)), spec)


def test_ml_is_no_worse_than_sc():
    """Test that exhaustive ML decoding does not lose to SC on shared noise."""
    channel = make_channel(0.0, 0.0, block_uses=9)
    sc = open_loop_bler(3, 9, channel, trials=3000, seed=4, decoder="sc")
    ml = open_loop_bler(3, 9, channel, trials=3000, seed=4, decoder="ml")
    assert ml.bler_1 <= sc.bler_1 + 0.01
    assert ml.bler_2 <= sc.bler_2 + 0.01


def test_open_loop_bler_noiseless_is_zero():
    """Test that noiseless channels give zero BLER in both directions."""
    channel = make_channel(math.inf, math.inf, block_uses=9)
    result = open_loop_bler(3, 9, channel, trials=500, seed=5)
    assert result.bler_1 == 0.0
    assert result.sum_bler == 0.0
    assert result.trials == 500


def test_open_loop_bler_decreases_with_snr():
    """Test that a cleaner channel does not raise the BLER."""
    low = open_loop_bler(3, 9, make_channel(-2.0, -2.0, block_uses=9), trials=4000, seed=6)
    high = open_loop_bler(3, 9, make_channel(4.0, 4.0, block_uses=9), trials=4000, seed=6)
    assert high.sum_bler < low.sum_bler


def test_coder_caches_codes_and_validates_decoder():
    """Test code caching per SNR and the decoder choice."""
    coder = PolarOpenLoopCoder(3, 9)
    assert coder.spec_for(1.0) is coder.spec_for(1.0)
    assert coder.spec_for(1.0).transmit_len == 9
    with pytest.raises(ValueError):
        PolarOpenLoopCoder(3, 9, decoder="list")
    with pytest.raises(ValueError):
        open_loop_bler(3, 9, make_channel(0.0, 0.0, block_uses=9), trials=0)


@pytest.mark.parametrize("block_len", [2**p for p in range(1, 9)])
def test_sc_noiseless_round_trip_up_to_256(block_len):
    """Test that SC inverts the encoder on noiseless symbols for every N <= 256."""
    spec = make_polar_spec(block_len, min(block_len // 2, 8), 0.0)
    messages = _all_messages(spec.info_count)
    llrs = channel_llrs(encode(messages, spec), spec, sigma_sq=0.0)
    np.testing.assert_array_equal(sc_decode(llrs, spec), messages)

    if block_len // 2 > 8:
        wide = make_polar_spec(block_len, block_len // 2, 0.0)
        rng = np.random.default_rng(block_len)
        messages = rng.integers(0, 2, size=(256, wide.info_count))
        llrs = channel_llrs(encode(messages, wide), wide, sigma_sq=0.0)
        np.testing.assert_array_equal(sc_decode(llrs, wide), messages)


def test_construct_sixteen_four_matches_exhaustive_search():
    """Test the (16, 4) information set against all C(16, 4) candidates."""
    design_snr_db = 10.0
    spec = make_polar_spec(16, 4, design_snr_db)
    assert spec.punctured == ()
    info = tuple(int(i) for i in spec.info_positions)

    z0 = math.exp(-1.0 / (2.0 * 10.0 ** (-design_snr_db / 10.0)))
    reliability = bhattacharyya(np.full(16, z0))
    candidates = list(itertools.combinations(range(16), 4))
    best = min(sum(reliability[list(c)]) for c in candidates)
    assert math.isclose(sum(reliability[list(info)]), best, rel_tol=1e-12)

    generator = polar_transform(np.eye(16, dtype=np.int64))
    messages = _all_messages(4)[1:]

    def min_distance(rows):
        return int(((messages @ generator[list(rows)]) % 2).sum(axis=1).min())

    assert min_distance(info) == max(min_distance(c) for c in candidates)
    _, words = codebook(spec)
    assert int(words[1:].sum(axis=1).min()) == min_distance(info)


# Long Monte Carlo runs


@slow
def test_sixteen_four_bler_at_ten_db():
    """Test that the (16, 4) code stays below 1e-4 BLER at 10 dB."""
    channel = make_channel(10.0, 10.0, block_uses=16)
    result = open_loop_bler(4, 16, channel, trials=100_000, seed=7)
    assert result.bler_1 < 1e-4
    assert result.bler_2 < 1e-4


@slow
@pytest.mark.parametrize("snr_db", [3.0, 5.0])
def test_sc_within_factor_two_of_ml_on_eight_three(snr_db):
    """Test that SC loses at most a factor of two to ML for the (8, 3) code."""
    channel = make_channel(snr_db, snr_db, block_uses=8)
    sc = open_loop_bler(3, 8, channel, trials=100_000, seed=8, decoder="sc")
    ml = open_loop_bler(3, 8, channel, trials=100_000, seed=8, decoder="ml")
    assert 0.0 < ml.sum_bler <= sc.sum_bler + 1e-3
    assert sc.sum_bler <= 2.0 * ml.sum_bler


@slow
def test_snr2_sweep_of_polar_baseline():
    """Test a five-point SNR2 sweep at 1e5 trials per point with SNR1 held fixed."""
    coder = PolarOpenLoopCoder(3, 9, seed=9)
    base = make_channel(1.0, 5.0, block_uses=9)
    config = EvalConfig(min_trials=100_000, max_trials=100_000, chunk_trials=10_000, seed=9)
    grid = [5.0, 10.0, 15.0, 20.0, 25.0]
    report = ood_sweep(coder, config, base, grid, Settings(progress=False))

    points = report.points
    assert [p.snr2_db for p in points] == grid
    assert all(p.trials == 100_000 for p in points)
    # direction 1 never changes, so its BLER agrees across the sweep
    for p in points[1:]:
        assert abs(p.bler_1 - points[0].bler_1) <= p.halfwidth(1) + points[0].halfwidth(1)
    for lower, higher in zip(points, points[1:]):
        assert higher.bler_2 <= lower.bler_2 + lower.halfwidth(2) + higher.halfwidth(2)
    assert points[-1].bler_2 < points[0].bler_2


if __name__ == "__main__":
    pytest.main([__file__])
