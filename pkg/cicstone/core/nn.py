# -*- coding: utf-8 -*-
""" Dense Network Substrate.

Every learned function in cicstone (transition and skill encoders, prediction head,
actor, critic, skill classifiers) is a small ReLU multilayer perceptron built here.
Arrays are row-major float64 numpy arrays; a batch is a (batch, features) matrix.

This module contains:
- MlpParams, the layer weights of one perceptron,
- forward and reverse-mode passes over it,
- the Adam optimizer, and
- Polyak averaging for target networks.
"""

import numpy as np

from cicstone.core.errors import ConfigurationError, TrainingError

__all__ = ["INIT_SCHEME", "MlpParams", "MlpCache", "AdamState", "as_batch", "mlp_forward", "mlp_backward",
           "adam_step", "polyak_update", "parse_architecture"]

INIT_SCHEME = "glorot_uniform"
"""str: Name of the weight initialization, recorded in checkpoint metadata."""

_output_activations = {
    "identity": (lambda x: x, lambda grad, out, pre: grad),
    "none": (lambda x: x, lambda grad, out, pre: grad),
    "tanh": (np.tanh, lambda grad, out, pre: grad * (1.0 - out * out)),
    "relu": (lambda x: np.maximum(x, 0.0), lambda grad, out, pre: grad * (pre > 0.0)),
}
"""dict: Output activation name -> (function, backward rule given grad, output and pre-activation)."""


def as_batch(x, width: int = None, name: str = "input") -> np.ndarray:
    """ Coerce a vector or matrix into a float64 (batch, width) matrix.

    :param x: Array-like of rank 1 or 2.
    :param width: Expected number of columns, if known.
    :param name: Label used in error messages.
    :return: A 2-d float64 array.
    """
    array = np.asarray(x, dtype=np.float64)
    if array.ndim == 1:
        array = array[None, :]
    if array.ndim != 2:
        raise ConfigurationError("{} must be a vector or a matrix, got rank {}".format(name, array.ndim))
    if width is not None and array.shape[1] != width:
        raise ConfigurationError("{} has width {} but {} was expected".format(name, array.shape[1], width))
    return array


def parse_architecture(spec: str) -> list:
    """ Resolve an architecture string such as '8 -> 128 -> 128 -> 16' into layer sizes. """
    tokens = spec.replace("→", "->").split("->")
    try:
        sizes = [int(token.strip()) for token in tokens]
    except ValueError:
        raise ConfigurationError("Architecture '{}' is not a chain of integers".format(spec))
    if len(sizes) < 2 or min(sizes) < 1:
        raise ConfigurationError("Architecture '{}' needs at least two positive sizes".format(spec))
    return sizes


class MlpParams:
    """ Multilayer perceptron parameters.

    Hidden layers use ReLU; the output activation is configurable. Weight matrices are
    stored as (out, in) and biases as (out,).
    """

    def __init__(self, layers: list, output_activation: str = "identity"):
        if output_activation not in _output_activations:
            raise ConfigurationError("Unknown output activation '{}'. Allowed: {}".format(
                output_activation, ", ".join(_output_activations)))
        if not layers:
            raise ConfigurationError("A perceptron needs at least one layer")
        self.layers = []
        for index, (weight, bias) in enumerate(layers):
            weight = np.array(weight, dtype=np.float64, ndmin=2)
            bias = np.array(bias, dtype=np.float64).reshape(-1)
            if bias.shape[0] != weight.shape[0]:
                raise ConfigurationError("Layer {} has {} outputs but a bias of length {}".format(
                    index, weight.shape[0], bias.shape[0]))
            if self.layers and self.layers[-1][0].shape[0] != weight.shape[1]:
                raise ConfigurationError("Layer {} expects {} inputs but layer {} produces {}".format(
                    index, weight.shape[1], index - 1, self.layers[-1][0].shape[0]))
            self.layers.append((weight, bias))
        self.output_activation = output_activation
        # incremented on every in-place update so stale caches can be detected
        self.version = 0

    @classmethod
    def initialize(cls, sizes: list, rng: np.random.Generator, output_activation: str = "identity"):
        """ Create a perceptron with seeded Glorot-uniform weights and zero biases.

        :param sizes: Layer sizes from input to output, e.g. [4, 128, 128, 1].
        :param rng: Source of randomness.
        :param output_activation: One of identity, none, tanh or relu.
        :return: New parameters.
        """
        if isinstance(sizes, str):
            sizes = parse_architecture(sizes)
        layers = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            layers.append((rng.uniform(-bound, bound, size=(fan_out, fan_in)), np.zeros(fan_out)))
        return cls(layers, output_activation)

    def __call__(self, x) -> np.ndarray:
        return mlp_forward(self, x)[0]

    def __repr__(self) -> str:
        return "MlpParams({}, output={})".format(self.architecture, self.output_activation)

    @property
    def sizes(self) -> list:
        return [self.layers[0][0].shape[1]] + [weight.shape[0] for weight, _ in self.layers]

    @property
    def architecture(self) -> str:
        return " -> ".join(str(size) for size in self.sizes)

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def copy(self):
        return MlpParams([(weight.copy(), bias.copy()) for weight, bias in self.layers], self.output_activation)

    def same_architecture(self, other) -> bool:
        return self.sizes == other.sizes and self.output_activation == other.output_activation

    def zeros_like(self) -> list:
        return [(np.zeros_like(weight), np.zeros_like(bias)) for weight, bias in self.layers]

    def arrays(self, prefix: str) -> dict:
        """ Named arrays for the checkpoint container, in layer order. """
        named = {}
        for index, (weight, bias) in enumerate(self.layers):
            named["{}.{}.weight".format(prefix, index)] = weight
            named["{}.{}.bias".format(prefix, index)] = bias
        return named

    def load_arrays(self, arrays: dict, prefix: str):
        for index, (weight, bias) in enumerate(self.layers):
            for name, target in (("weight", weight), ("bias", bias)):
                key = "{}.{}.{}".format(prefix, index, name)
                if key not in arrays:
                    raise ConfigurationError("Array '{}' is missing".format(key))
                if arrays[key].shape != target.shape:
                    raise ConfigurationError("Array '{}' has shape {} but {} was expected".format(
                        key, arrays[key].shape, target.shape))
                target[...] = arrays[key]
        self.version += 1


class MlpCache:
    """ Activations recorded by a forward pass for the matching backward pass. """

    def __init__(self, params: MlpParams, inputs: list, pre_activations: list, output: np.ndarray):
        self.owner = id(params)
        self.version = params.version
        self.inputs = inputs
        self.pre_activations = pre_activations
        self.output = output


def mlp_forward(params: MlpParams, x) -> tuple:
    """ Evaluate a perceptron on a batch.

    :param params: Perceptron parameters.
    :param x: Input batch (batch, in).
    :return: Tuple of (output batch, cache for mlp_backward).
    """
    activation = as_batch(x)
    inputs = []
    pre_activations = []
    last = len(params.layers) - 1
    for index, (weight, bias) in enumerate(params.layers):
        if activation.shape[1] != weight.shape[1]:
            raise ConfigurationError("Layer {} expects {} inputs, got {}".format(
                index, weight.shape[1], activation.shape[1]))
        inputs.append(activation)
        pre = activation @ weight.T + bias
        pre_activations.append(pre)
        activation = np.maximum(pre, 0.0) if index < last else _output_activations[params.output_activation][0](pre)
    return activation, MlpCache(params, inputs, pre_activations, activation)


def mlp_backward(params: MlpParams, cache: MlpCache, output_grad) -> tuple:
    """ Back-propagate an output gradient through a perceptron.

    :param params: The parameters used for the forward pass.
    :param cache: Cache returned by the matching mlp_forward call.
    :param output_grad: Gradient of the loss with respect to the output batch.
    :return: Tuple of (parameter gradients as [(dW, db), ...], input gradient).
    """
    if cache.owner != id(params) or cache.version != params.version:
        raise RuntimeError("Internal error: backward pass called with a stale or foreign cache")
    grad = as_batch(output_grad, params.out_dim, "output gradient")
    if grad.shape[0] != cache.output.shape[0]:
        raise RuntimeError("Internal error: gradient batch {} does not match cached batch {}".format(
            grad.shape[0], cache.output.shape[0]))
    grad = _output_activations[params.output_activation][1](grad, cache.output, cache.pre_activations[-1])
    grads = [None] * len(params.layers)
    for index in range(len(params.layers) - 1, -1, -1):
        weight, _ = params.layers[index]
        grads[index] = (grad.T @ cache.inputs[index], grad.sum(axis=0))
        grad = grad @ weight
        if index > 0:
            grad = grad * (cache.pre_activations[index - 1] > 0.0)
    return grads, grad


class AdamState:
    """ Adam optimizer state for one perceptron.

    :param params: Parameters whose shapes the moment buffers mirror.
    """

    def __init__(self, params: MlpParams, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.m = params.zeros_like()
        self.v = params.zeros_like()
        self.t = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def arrays(self, prefix: str) -> dict:
        named = {"{}.t".format(prefix): np.array([float(self.t)])}
        for index, ((m_weight, m_bias), (v_weight, v_bias)) in enumerate(zip(self.m, self.v)):
            named["{}.{}.m_weight".format(prefix, index)] = m_weight
            named["{}.{}.m_bias".format(prefix, index)] = m_bias
            named["{}.{}.v_weight".format(prefix, index)] = v_weight
            named["{}.{}.v_bias".format(prefix, index)] = v_bias
        return named

    def load_arrays(self, arrays: dict, prefix: str):
        self.t = int(arrays["{}.t".format(prefix)][0])
        for index, ((m_weight, m_bias), (v_weight, v_bias)) in enumerate(zip(self.m, self.v)):
            m_weight[...] = arrays["{}.{}.m_weight".format(prefix, index)]
            m_bias[...] = arrays["{}.{}.m_bias".format(prefix, index)]
            v_weight[...] = arrays["{}.{}.v_weight".format(prefix, index)]
            v_bias[...] = arrays["{}.{}.v_bias".format(prefix, index)]


def adam_step(params: MlpParams, grads: list, state: AdamState, lr: float = 1e-4) -> tuple:
    """ Apply one bias-corrected Adam update in place.

    :param params: Parameters to update.
    :param grads: Gradients shaped like params.layers.
    :param state: Optimizer state for these parameters.
    :param lr: Learning rate.
    :return: Tuple of (params, state).
    """
    if len(grads) != len(params.layers):
        raise ConfigurationError("Got gradients for {} layers, the perceptron has {}".format(
            len(grads), len(params.layers)))
    for index, ((weight, bias), (d_weight, d_bias)) in enumerate(zip(params.layers, grads)):
        if d_weight.shape != weight.shape or np.shape(d_bias) != bias.shape:
            raise ConfigurationError("Gradient shapes for layer {} do not match its parameters".format(index))
        if not (np.all(np.isfinite(d_weight)) and np.all(np.isfinite(d_bias))):
            raise TrainingError("Non-finite gradient in layer {}".format(index), step=state.t + 1)
    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for (weight, bias), grad_pair, m_pair, v_pair in zip(params.layers, grads, state.m, state.v):
        for target, grad, m, v in zip((weight, bias), grad_pair, m_pair, v_pair):
            m *= state.beta1
            m += (1.0 - state.beta1) * grad
            v *= state.beta2
            v += (1.0 - state.beta2) * grad * grad
            target -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    params.version += 1
    return params, state


def polyak_update(target: MlpParams, online: MlpParams, rate: float = 0.01) -> MlpParams:
    """ Move target parameters toward online parameters: target <- (1 - rate) target + rate online. """
    if not target.same_architecture(online):
        raise ConfigurationError("Cannot average {} toward {}".format(target, online))
    for (t_weight, t_bias), (o_weight, o_bias) in zip(target.layers, online.layers):
        t_weight[...] = (1.0 - rate) * t_weight + rate * o_weight
        t_bias[...] = (1.0 - rate) * t_bias + rate * o_bias
    target.version += 1
    return target
