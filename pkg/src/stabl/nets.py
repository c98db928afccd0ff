"""Small dense networks with exact reverse-mode gradients.

Parameters live in a single flat 64-bit float vector with a deterministic
layout: for layers 1..L the weight matrix W_l (shape in_l x out_l, C order)
is followed by the bias b_l (length out_l).  Keeping parameters flat makes
optimizer state, soft target updates, checkpointing, and gradient checking
one-array operations.
"""

from __future__ import annotations

import numpy as np

from .errors import UsageError

__all__ = ["MlpNetwork", "AdamOptimizer", "ACTIVATIONS"]


def _identity(x):
    return x


def _identity_grad(pre, out):
    return np.ones_like(pre)


def _relu(x):
    return np.maximum(x, 0.0)


def _relu_grad(pre, out):
    return (pre > 0.0).astype(float)


def _tanh_grad(pre, out):
    return 1.0 - out * out


def _elu(x):
    # alpha = 1; exp only evaluated on the negative branch.
    return np.where(x > 0.0, x, np.expm1(np.minimum(x, 0.0)))


def _elu_grad(pre, out):
    return np.where(pre > 0.0, 1.0, out + 1.0)


#: name -> (forward, gradient-from-(preactivation, activation)) pairs
ACTIVATIONS = {
    "identity": (_identity, _identity_grad),
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, _tanh_grad),
    "elu": (_elu, _elu_grad),
}


class MlpNetwork:
    """Fully connected network acting on flat parameter vectors.

    ``layer_sizes`` lists every layer width including input and output,
    e.g. ``(4, 20, 10, 2)`` for two hidden layers or ``(4, 2)`` for a
    single affine (linear) map.  Hidden layers share one activation; the
    final layer has its own.
    """

    def __init__(self, layer_sizes, hidden_activation="relu",
                 final_activation="identity"):
        sizes = tuple(int(s) for s in layer_sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise UsageError(f"invalid layer sizes {sizes!r}")
        if hidden_activation not in ACTIVATIONS:
            raise UsageError(f"unknown hidden activation {hidden_activation!r}")
        if final_activation not in ACTIVATIONS:
            raise UsageError(f"unknown final activation {final_activation!r}")
        self.layer_sizes = sizes
        self.hidden_activation = hidden_activation
        self.final_activation = final_activation
        self._shapes = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            self._shapes.append((fan_in, fan_out))
        self.num_params = sum(i * o + o for i, o in self._shapes)

    @property
    def input_dim(self):
        return self.layer_sizes[0]

    @property
    def output_dim(self):
        return self.layer_sizes[-1]

    @property
    def num_layers(self):
        return len(self._shapes)

    def _activation(self, layer_index):
        name = (self.final_activation if layer_index == self.num_layers - 1
                else self.hidden_activation)
        return ACTIVATIONS[name]

    def init_params(self, rng, final_scale=1.0):
        """Uniform +-1/sqrt(fan_in) init; the last layer scaled by ``final_scale``."""
        chunks = []
        for index, (fan_in, fan_out) in enumerate(self._shapes):
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            b = rng.uniform(-bound, bound, size=fan_out)
            if index == self.num_layers - 1:
                w = w * final_scale
                b = b * final_scale
            chunks.append(w.ravel())
            chunks.append(b)
        return np.concatenate(chunks)

    def unpack(self, params):
        """Views (no copies) of the per-layer (W, b) pairs."""
        params = np.asarray(params, dtype=float)
        if params.shape != (self.num_params,):
            raise UsageError(
                f"parameter vector has length {params.shape}, "
                f"expected ({self.num_params},)")
        layers = []
        offset = 0
        for fan_in, fan_out in self._shapes:
            w = params[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
            offset += fan_in * fan_out
            b = params[offset:offset + fan_out]
            offset += fan_out
            layers.append((w, b))
        return layers

    def forward(self, params, inputs):
        out, _ = self.forward_with_cache(params, inputs)
        return out

    def forward_with_cache(self, params, inputs):
        """Forward pass keeping intermediates for :meth:`backward`.

        ``inputs`` may be a single vector or a (batch, input_dim) matrix;
        the output matches (vector in, vector out).
        """
        x = np.asarray(inputs, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.input_dim:
            raise UsageError(
                f"input width {x.shape[1]} does not match "
                f"network input {self.input_dim}")
        layers = self.unpack(params)
        activations = [x]
        preactivations = []
        for index, (w, b) in enumerate(layers):
            pre = activations[-1] @ w + b
            fwd, _ = self._activation(index)
            preactivations.append(pre)
            activations.append(fwd(pre))
        out = activations[-1]
        cache = (activations, preactivations, single)
        return (out[0] if single else out), cache

    def backward(self, params, cache, output_gradient):
        """Exact reverse-mode pass.

        Returns ``(parameter_gradient, input_gradient)`` for the map
        computed by :meth:`forward_with_cache`.  Parameter gradients are
        summed over the batch; input gradients keep the batch shape.
        """
        activations, preactivations, single = cache
        grad = np.asarray(output_gradient, dtype=float)
        if single:
            grad = grad[None, :]
        if grad.shape != (activations[0].shape[0], self.output_dim):
            raise UsageError(
                f"output gradient shape {grad.shape} does not match "
                f"batch x output ({activations[0].shape[0]}, {self.output_dim})")
        layers = self.unpack(params)
        grad_chunks = [None] * (2 * self.num_layers)
        for index in range(self.num_layers - 1, -1, -1):
            _, act_grad = self._activation(index)
            local = act_grad(preactivations[index], activations[index + 1])
            delta = grad * local
            w, _ = layers[index]
            grad_chunks[2 * index] = (activations[index].T @ delta).ravel()
            grad_chunks[2 * index + 1] = delta.sum(axis=0)
            grad = delta @ w.T
        grad_params = np.concatenate(grad_chunks)
        return grad_params, (grad[0] if single else grad)

    def jacobian(self, params, point):
        """Jacobian (output_dim x input_dim) at a single input point."""
        _, cache = self.forward_with_cache(params, np.asarray(point, float))
        rows = []
        for i in range(self.output_dim):
            seed = np.zeros(self.output_dim)
            seed[i] = 1.0
            _, grad_in = self.backward(params, cache, seed)
            rows.append(grad_in)
        return np.array(rows)

    def describe(self):
        sizes = " ".join(str(s) for s in self.layer_sizes)
        return f"mlp {sizes} {self.hidden_activation} {self.final_activation}"

    @classmethod
    def from_description(cls, line):
        tokens = line.split()
        if not tokens or tokens[0] != "mlp" or len(tokens) < 5:
            raise UsageError(f"malformed network description {line!r}")
        sizes = []
        for token in tokens[1:-2]:
            try:
                sizes.append(int(token))
            except ValueError as exc:
                raise UsageError(
                    f"malformed network description {line!r}") from exc
        return cls(sizes, hidden_activation=tokens[-2],
                   final_activation=tokens[-1])


class AdamOptimizer:
    """Moment-based adaptive optimizer over a flat parameter vector."""

    def __init__(self, size, learning_rate, beta1=0.9, beta2=0.999,
                 epsilon=1e-8):
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self._m = np.zeros(int(size))
        self._v = np.zeros(int(size))
        self._t = 0

    def step(self, params, gradient):
        """One descent step; returns the updated parameter vector."""
        gradient = np.asarray(gradient, dtype=float)
        self._t += 1
        self._m = self.beta1 * self._m + (1.0 - self.beta1) * gradient
        self._v = self.beta2 * self._v + (1.0 - self.beta2) * gradient ** 2
        m_hat = self._m / (1.0 - self.beta1 ** self._t)
        v_hat = self._v / (1.0 - self.beta2 ** self._t)
        return params - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)
