"""Tests for power reallocation and the TWLC, ALC, LC and TWBAF models."""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from twoway_coding.channel import ChannelStreams, empirical_power, make_channel
from twoway_coding.errors import PowerStatisticsError, ShapeError
from twoway_coding.models import (
    EncoderSpec,
    ModelKind,
    PowerReallocator,
    create_model,
    episode_forward,
    parameter_count,
    reallocate,
)
from twoway_coding.models.alc import alc_episode
from twoway_coding.models.power import FROZEN
from twoway_coding.models.twbaf import TokenCentering, twbaf_raw_symbols
from twoway_coding.models.twlc import twlc_decode, twlc_encode
from twoway_coding.nnkernel import gradient_check, softmax_cross_entropy
from twoway_coding.nnkernel.params import ParameterSet


def _twlc_spec(**overrides):
    values = dict(kind="twlc", sub_block_len=2, t_uses=3, hidden_dim=8, head_dim=4)
    values.update(overrides)
    return EncoderSpec(**values)


def _twbaf_spec(**overrides):
    values = dict(
        kind="twbaf",
        sub_block_len=2,
        t_uses=3,
        tokens=2,
        hidden_dim=8,
        heads=2,
        encoder_layers=1,
        decoder_layers=1,
    )
    values.update(overrides)
    return EncoderSpec(**values)


def _messages(batch, width, seed=0):
    return np.random.default_rng(seed).integers(0, 2, size=(batch, width))


def _run(model, batch=16, seed=0, channel=None):
    width = model.spec.message_len
    channel = channel or make_channel(0.0, 0.0, block_uses=model.spec.t_uses)
    return model.episode(
        _messages(batch, width, seed),
        _messages(batch, width, seed + 1),
        channel,
        streams=ChannelStreams(seed),
    )


# Power reallocation


def test_reallocation_meets_energy_budget():
    """Test that standardized symbols carry P * T_M energy per episode."""
    params = ParameterSet(dtype=np.float64)
    reallocator = PowerReallocator(params, "power", t_uses=4, power=2.0)
    rng = np.random.default_rng(0)
    energy = 0.0
    for t in range(4):
        symbols = reallocate(rng.normal(3.0, 5.0, size=1000), t, reallocator)
        energy += float(np.mean(symbols.data**2))
    assert energy == pytest.approx(8.0, rel=1e-9)
    assert reallocator.has_statistics()


def test_reallocation_zero_variance_is_finite():
    """Test that a constant batch is guarded by the variance floor."""
    params = ParameterSet(dtype=np.float64)
    reallocator = PowerReallocator(params, "power", t_uses=2)
    out = reallocate(np.full(8, 3.0), 0, reallocator)
    assert np.all(np.isfinite(out.data))
    np.testing.assert_allclose(out.data, 0.0)


def test_normalized_weights_keep_budget():
    """Test that arbitrary stored weights normalize onto sum w^2 = P * T_M."""
    params = ParameterSet(dtype=np.float64)
    reallocator = PowerReallocator(params, "power", t_uses=9, power=1.0)
    params.assign("power.weights", np.array([3.0] + [0.0] * 8))
    weights = reallocator.normalized_weights().data
    assert np.sum(weights**2) == pytest.approx(9.0, abs=1e-6)
    assert weights[0] == pytest.approx(3.0)

    params.assign("power.weights", np.arange(1.0, 10.0))
    reallocator.project()
    assert np.sum(params["power.weights"].data ** 2) == pytest.approx(9.0, abs=1e-6)


def test_reallocation_starts_uniform():
    """Test that fresh weights are sqrt(P) at every use."""
    params = ParameterSet(dtype=np.float64)
    reallocator = PowerReallocator(params, "power", t_uses=5, power=4.0)
    np.testing.assert_allclose(reallocator.normalized_weights().data, 2.0)


def test_frozen_reallocation_needs_statistics():
    """Test that inference without running statistics is rejected."""
    params = ParameterSet(dtype=np.float64)
    reallocator = PowerReallocator(params, "power", t_uses=3)
    reallocator.mode = FROZEN
    with pytest.raises(PowerStatisticsError):
        reallocate(np.ones(4), 0, reallocator)


def test_reallocation_rejects_out_of_range_use():
    """Test that t must lie in [0, T_M)."""
    reallocator = PowerReallocator(ParameterSet(), "power", t_uses=3)
    with pytest.raises(ShapeError):
        reallocate(np.ones(4), 3, reallocator)


# TWLC


def test_twlc_episode_shapes_and_simplex():
    """Test logits, trace and decoded bit shapes of a TWLC episode."""
    model = create_model(_twlc_spec(), seed=0)
    out = _run(model)
    assert out.logits1.shape == (16, 4)
    assert out.logits2.shape == (16, 4)
    assert out.trace.sent1.shape == (16, 3)
    np.testing.assert_allclose(out.probabilities(1).sum(axis=-1), 1.0, atol=1e-6)
    assert out.decoded_bits(2, 2).shape == (16, 2)
    assert set(np.unique(out.decoded_bits(1, 2))) <= {0, 1}


def test_twlc_power_audit():
    """Test that a training-mode batch meets P * T_M exactly in expectation."""
    model = create_model(_twlc_spec(power1=2.0, power2=0.5), seed=1)
    out = _run(model, batch=256)
    assert empirical_power(out.trace, 1) == pytest.approx(6.0, rel=1e-3)
    assert empirical_power(out.trace, 2) == pytest.approx(1.5, rel=1e-3)


def test_twlc_noiseless_trace_is_additive():
    """Test y_j = c_i exactly when both directions are noiseless."""
    model = create_model(_twlc_spec(), seed=2)
    out = _run(model, channel=make_channel(math.inf, math.inf, block_uses=3))
    assert out.trace.additivity_residual() < 1e-12
    np.testing.assert_allclose(out.trace.received1, out.trace.sent2)


def test_twlc_symbols_are_causal():
    """Test that perturbing noise at use t leaves symbols up to t bit-identical."""
    spec = _twlc_spec(t_uses=4)
    model = create_model(spec, seed=3, dtype=np.float64)
    rng = np.random.default_rng(4)
    b1, b2 = _messages(32, 2, 5), _messages(32, 2, 6)
    n1, n2 = rng.standard_normal((32, 4)), rng.standard_normal((32, 4))
    m1, m2 = n1.copy(), n2.copy()
    m1[:, 2] += 1.0
    m2[:, 2] -= 1.0
    channel = make_channel(0.0, 0.0, block_uses=4)

    base = model.episode(b1, b2, channel, noise=(n1, n2)).trace
    moved = model.episode(b1, b2, channel, noise=(m1, m2)).trace
    np.testing.assert_array_equal(base.sent1[:, :3], moved.sent1[:, :3])
    np.testing.assert_array_equal(base.sent2[:, :3], moved.sent2[:, :3])
    assert not np.array_equal(base.sent1[:, 3], moved.sent1[:, 3])


def test_twlc_zero_parameters_give_zero_symbol():
    """Test that an all-zero encoder emits zero."""
    model = create_model(_twlc_spec(), seed=0)
    params = model.params1
    for name, tensor in params:
        params.assign(name, np.zeros(tensor.shape))
    out = twlc_encode(params, np.ones((3, model.spec.input_dim)))
    np.testing.assert_array_equal(out.data, np.zeros(3))


def test_twlc_input_length_is_checked():
    """Test dimension mismatches in the encoder and decoder."""
    model = create_model(_twlc_spec(), seed=0)
    with pytest.raises(ShapeError):
        twlc_encode(model.params1, np.ones((2, model.spec.input_dim + 1)))
    with pytest.raises(ShapeError):
        twlc_decode(model.params1, np.ones((2, model.spec.input_dim)))
    probs = twlc_decode(model.params1, np.random.default_rng(0).normal(size=(5, 8)))
    np.testing.assert_allclose(probs.data.sum(axis=-1), 1.0, atol=1e-6)


def test_twlc_episode_gradients():
    """Test end-to-end gradients through the unrolled episode."""
    model = create_model(_twlc_spec(activation="tanh"), seed=7, dtype=np.float64)
    rng = np.random.default_rng(8)
    b1, b2 = _messages(8, 2, 9), _messages(8, 2, 10)
    noise = (rng.standard_normal((8, 3)), rng.standard_normal((8, 3)))
    channel = make_channel(0.0, 0.0, block_uses=3)

    def loss_fn():
        out = model.episode(b1, b2, channel, noise=noise)
        return softmax_cross_entropy(out.logits1, out.targets1) + softmax_cross_entropy(
            out.logits2, out.targets2
        )

    assert gradient_check(loss_fn, model.param_sets, max_entries=4) < 1e-4


def test_eval_mode_needs_running_statistics():
    """Test that a fresh model cannot run frozen before seeing a training batch."""
    model = create_model(_twlc_spec(), seed=0).eval()
    with pytest.raises(PowerStatisticsError):
        _run(model)
    model.train()
    _run(model)
    model.eval()
    assert _run(model).logits1.shape == (16, 4)


def test_episode_input_validation():
    """Test message and noise shape checks."""
    model = create_model(_twlc_spec(), seed=0)
    channel = make_channel(0.0, 0.0, block_uses=3)
    with pytest.raises(ShapeError):
        model.episode(_messages(4, 3), _messages(4, 3), channel, streams=ChannelStreams(0))
    with pytest.raises(ValueError):
        model.episode(np.full((4, 2), 2), _messages(4, 2), channel, streams=ChannelStreams(0))
    with pytest.raises(ValueError):
        model.episode(_messages(4, 2), _messages(4, 2), channel)
    with pytest.raises(ShapeError):
        model.episode(
            _messages(4, 2), _messages(4, 2), channel, noise=(np.zeros((4, 2)), np.zeros((4, 2)))
        )


def test_episode_forward_matches_model():
    """Test the functional entry point against the model method."""
    spec = _twlc_spec()
    model = create_model(spec, seed=11)
    b1, b2 = _messages(8, 2, 1), _messages(8, 2, 2)
    rng = np.random.default_rng(3)
    noise = (rng.standard_normal((8, 3)), rng.standard_normal((8, 3)))
    channel = make_channel(1.0, 5.0, block_uses=3)

    direct = model.episode(b1, b2, channel, noise=noise)
    functional = episode_forward(model.params1, model.params2, b1, b2, channel, spec, noise=noise)
    np.testing.assert_array_equal(direct.logits1.data, functional.logits1.data)
    np.testing.assert_array_equal(direct.trace.sent2, functional.trace.sent2)


# ALC and LC


def test_alc_decoder_sees_only_received_and_sent():
    """Test that the single decoder input is [y_2, c_2] of length 2 T_M."""
    spec = _twlc_spec(kind="alc", t_uses=4)
    model = create_model(spec, seed=0)
    assert model.params2["dec.fe1.weight"].shape[0] == 8
    assert "enc.fe1.weight" in model.params2
    out = alc_episode(model, _messages(16, 2), make_channel(0.0, 10.0, block_uses=4), ChannelStreams(1))
    assert out.logits2 is None
    assert out.targets2 is None
    assert out.logits1.shape == (16, 4)
    np.testing.assert_array_equal(out.tracks[1].bits, 0)


def test_alc_feedback_power_budget():
    """Test that the feedback encoder respects the same P * T_M budget."""
    model = create_model(_twlc_spec(kind="alc", t_uses=9), seed=1)
    out = alc_episode(model, _messages(256, 2), make_channel(0.0, 20.0, block_uses=9), ChannelStreams(2))
    assert empirical_power(out.trace, 2) <= 9.0 * 1.01


def test_lc_echoes_received_symbols():
    """Test passive feedback: no feedback encoder and a zero first echo."""
    model = create_model(_twlc_spec(kind="lc", t_uses=4), seed=0)
    assert "enc.fe1.weight" not in model.params2
    assert not model.reallocators[2].trainable
    out = alc_episode(model, _messages(32, 2), make_channel(0.0, 10.0, block_uses=4), ChannelStreams(3))
    np.testing.assert_array_equal(out.trace.sent2[:, 0], 0.0)
    # Echo t is a standardized copy of y^{t-1}; the last received symbol is never sent back
    for t in range(1, 4):
        received = out.trace.received2[:, t - 1]
        echo = out.trace.sent2[:, t]
        assert np.corrcoef(received, echo)[0, 1] == pytest.approx(1.0, abs=1e-5)
    assert out.trace.sent2.shape[-1] == out.trace.received2.shape[-1] == 4


def test_alc_episode_rejects_two_way_models():
    """Test that alc_episode only accepts ALC and LC models."""
    with pytest.raises(TypeError):
        alc_episode(create_model(_twlc_spec()), _messages(2, 2), make_channel(0.0, 0.0, block_uses=3))


# TWBAF


def test_twbaf_episode_shapes():
    """Test per-token logits and time-major traces."""
    model = create_model(_twbaf_spec(), seed=0)
    assert model.symbol_shape == (2,)
    out = _run(model, batch=8)
    assert out.logits1.shape == (8, 2, 4)
    assert out.trace.sent1.shape == (8, 6)
    assert out.decoded_bits(1, 2).shape == (8, 4)
    np.testing.assert_allclose(out.probabilities(2).sum(axis=-1), 1.0, atol=1e-6)


def test_twbaf_power_audit():
    """Test that each token column meets P * T_M."""
    model = create_model(_twbaf_spec(), seed=1)
    out = _run(model, batch=128)
    assert empirical_power(out.trace, 1) == pytest.approx(2 * 3.0, rel=1e-3)


def test_token_centering_is_bounded():
    """Test that tanh centering keeps values in [-1, 1]."""
    params = ParameterSet(dtype=np.float64)
    centering = TokenCentering(params, "center", t_uses=2, tokens=3)
    x = np.random.default_rng(0).normal(0.0, 100.0, size=(10, 3))
    out = centering(x, 0).data
    assert np.all(np.abs(out) <= 1.0)
    centering.mode = FROZEN
    with pytest.raises(PowerStatisticsError):
        centering(x, 1)


def test_twbaf_token_permutation_equivariance():
    """Test that without positional encoding permuting tokens permutes the symbols."""
    model = create_model(_twbaf_spec(tokens=3, positional=False), seed=2, dtype=np.float64)
    Q = np.random.default_rng(1).normal(size=(4, 3, model.spec.input_dim))
    order = [2, 0, 1]
    kwargs = dict(layers=1, heads=2, positional=False)
    base = twbaf_raw_symbols(model.params1, Q, **kwargs).data
    permuted = twbaf_raw_symbols(model.params1, Q[:, order], **kwargs).data
    np.testing.assert_allclose(permuted, base[:, order], atol=1e-10)


def test_twbaf_episode_gradients():
    """Test gradients on a tiny two-token TWBAF episode."""
    model = create_model(_twbaf_spec(activation="tanh"), seed=3, dtype=np.float64)
    rng = np.random.default_rng(4)
    b1, b2 = _messages(4, 4, 5), _messages(4, 4, 6)
    noise = (rng.standard_normal((4, 2, 3)), rng.standard_normal((4, 2, 3)))
    channel = make_channel(0.0, 0.0, block_uses=6)

    def loss_fn():
        out = model.episode(b1, b2, channel, noise=noise)
        return softmax_cross_entropy(out.logits1, out.targets1)

    assert gradient_check(loss_fn, model.param_sets, max_entries=3) < 1e-4


def test_spec_validation():
    """Test head divisibility and the one-token rule for non-TWBAF kinds."""
    with pytest.raises(ShapeError):
        _twbaf_spec(hidden_dim=8, heads=3)
    with pytest.raises(ValueError):
        _twlc_spec(tokens=2)
    with pytest.raises(ValueError):
        _twlc_spec(power1=0.0)
    spec = _twbaf_spec()
    assert spec.kind is ModelKind.TWBAF
    assert spec.message_len == 4
    assert spec.receive_dim == 2 + 6


def test_twlc_is_much_smaller_than_twbaf():
    """Test the TWLC to TWBAF parameter ratio at the reference dimensions."""
    twlc = parameter_count(EncoderSpec(kind="twlc", sub_block_len=3, t_uses=9, hidden_dim=32))
    twbaf = parameter_count(
        EncoderSpec(kind="twbaf", sub_block_len=3, t_uses=9, tokens=2, hidden_dim=32)
    )
    assert twlc / twbaf < 0.35


if __name__ == "__main__":
    pytest.main([__file__])
