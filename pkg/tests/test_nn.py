# -*- coding: utf-8 -*-

import numpy as np
import pytest

from cicstone.core.errors import ConfigurationError, TrainingError
from cicstone.core.nn import (AdamState, MlpParams, adam_step, mlp_backward, mlp_forward, parse_architecture,
                              polyak_update)

from conftest import assert_grads_close, numeric_param_grads


def test_forward_shapes_and_relu(rng):
    params = MlpParams.initialize([3, 8, 8, 2], rng)
    out, cache = mlp_forward(params, rng.normal(size=(5, 3)))
    assert out.shape == (5, 2)
    assert all(np.all(x >= 0.0) for x in cache.inputs[1:])


def test_initialization_is_seeded_glorot():
    first = MlpParams.initialize([4, 6], np.random.default_rng(3))
    second = MlpParams.initialize([4, 6], np.random.default_rng(3))
    bound = np.sqrt(6.0 / 10.0)
    assert np.array_equal(first.layers[0][0], second.layers[0][0])
    assert np.all(np.abs(first.layers[0][0]) <= bound)
    assert np.all(first.layers[0][1] == 0.0)


def test_dimension_mismatch_names_layer(rng):
    params = MlpParams.initialize([3, 4, 1], rng)
    with pytest.raises(ConfigurationError, match="Layer 0"):
        mlp_forward(params, np.zeros((2, 5)))


def test_inconsistent_layers_rejected():
    with pytest.raises(ConfigurationError, match="Layer 1"):
        MlpParams([(np.zeros((4, 3)), np.zeros(4)), (np.zeros((1, 5)), np.zeros(1))])


def test_tanh_output_stays_in_box(rng):
    params = MlpParams.initialize([2, 8, 3], rng, "tanh")
    out = params(100.0 * rng.normal(size=(50, 2)))
    assert np.all(np.abs(out) <= 1.0)


@pytest.mark.parametrize("activation", ["identity", "tanh"])
def test_backward_matches_finite_differences(rng, activation):
    params = MlpParams.initialize([3, 6, 5, 2], rng, activation)
    x = rng.normal(size=(4, 3))
    weights = rng.normal(size=(4, 2))

    def loss():
        return float(np.sum(weights * params(x) ** 2))

    out, cache = mlp_forward(params, x)
    grads, input_grad = mlp_backward(params, cache, 2.0 * weights * out)
    assert_grads_close(grads, numeric_param_grads(params, loss))
    assert input_grad.shape == x.shape


def test_stale_cache_is_rejected(rng):
    params = MlpParams.initialize([2, 3, 1], rng)
    out, cache = mlp_forward(params, np.ones((1, 2)))
    adam_step(params, params.zeros_like(), AdamState(params))
    with pytest.raises(RuntimeError, match="Internal error"):
        mlp_backward(params, cache, np.ones_like(out))


def test_adam_first_step_moves_by_lr(rng):
    params = MlpParams.initialize([2, 1], rng)
    before = params.layers[0][0].copy()
    grads = [(np.ones((1, 2)), np.ones(1))]
    adam_step(params, grads, AdamState(params), lr=0.1)
    assert np.allclose(params.layers[0][0], before - 0.1, atol=1e-6)


def test_adam_minimizes_quadratic(rng):
    params = MlpParams.initialize([1, 1], rng)
    state = AdamState(params)
    for _ in range(2000):
        weight, bias = params.layers[0]
        adam_step(params, [(2.0 * (weight - 3.0), 2.0 * (bias + 1.0))], state, lr=0.05)
    assert params.layers[0][0][0, 0] == pytest.approx(3.0, abs=5e-2)
    assert params.layers[0][1][0] == pytest.approx(-1.0, abs=5e-2)


def test_non_finite_gradient_raises_with_step(rng):
    params = MlpParams.initialize([2, 1], rng)
    state = AdamState(params)
    before = params.layers[0][0].copy()
    with pytest.raises(TrainingError, match="step 1"):
        adam_step(params, [(np.full((1, 2), np.nan), np.zeros(1))], state)
    assert np.array_equal(params.layers[0][0], before)


def test_polyak_single_sync_from_zero():
    online = MlpParams([(np.full((1, 1), 5.0), np.full(1, 2.0))])
    target = MlpParams([(np.zeros((1, 1)), np.zeros(1))])
    polyak_update(target, online, 0.01)
    assert target.layers[0][0][0, 0] == pytest.approx(0.05)
    assert target.layers[0][1][0] == pytest.approx(0.02)


def test_polyak_converges_to_online():
    online = MlpParams([(np.full((1, 1), 5.0), np.full(1, 2.0))])
    target = MlpParams([(np.zeros((1, 1)), np.zeros(1))])
    for _ in range(3000):
        polyak_update(target, online, 0.01)
    assert target.layers[0][0][0, 0] == pytest.approx(5.0, abs=1e-9)


def test_polyak_architecture_mismatch(rng):
    with pytest.raises(ConfigurationError):
        polyak_update(MlpParams.initialize([2, 3], rng), MlpParams.initialize([2, 4], rng))


def test_parse_architecture():
    assert parse_architecture("8 -> 128 -> 128 -> 16") == [8, 128, 128, 16]
    with pytest.raises(ConfigurationError):
        parse_architecture("8 -> x")


def test_arrays_round_trip_into_fresh_params(rng):
    source = MlpParams.initialize([3, 4, 2], rng)
    target = MlpParams.initialize([3, 4, 2], np.random.default_rng(99))
    target.load_arrays(source.arrays("net"), "net")
    x = rng.normal(size=(2, 3))
    assert np.array_equal(source(x), target(x))
