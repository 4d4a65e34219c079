# =================================================================
#
# Authors: pyrtfn developers
#
# Copyright (c) 2020 pyrtfn developers
#
# Permission is hereby granted, free of charge, to any person
# obtaining a copy of this software and associated documentation
# files (the "Software"), to deal in the Software without
# restriction, including without limitation the rights to use,
# copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the
# Software is furnished to do so, subject to the following
# conditions:
#
# The above copyright notice and this permission notice shall be
# included in all copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND,
# EXPRESS OR IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES
# OF MERCHANTABILITY, FITNESS FOR A PARTICULAR PURPOSE AND
# NONINFRINGEMENT. IN NO EVENT SHALL THE AUTHORS OR COPYRIGHT
# HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY,
# WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING
# FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR
# OTHER DEALINGS IN THE SOFTWARE.
#
# =================================================================

"""
Network building blocks: LSTM, attentional LSTM, self-attention,
batch normalization, multi-head convolution, residual blocks and the
dense/dropout/pooling helpers.

Every block registers its parameters in a `pyrtfn.tensor.ParamStore` at
construction time and is applied through a plain function taking the
block and an input `Tensor`.
"""

import logging
import math

import numpy as np

from pyrtfn import tensor as T
from pyrtfn.tensor import Tensor
from pyrtfn.util import ConfigurationError, DimensionError

LOGGER = logging.getLogger(__name__)

#: LSTM gate order inside the fused weight matrices
GATES = ('i', 'f', 'o', 'g')

BN_MOMENTUM = 0.9
BN_EPS = 1e-5


def uniform_init(rng, shape, fan_in):
    """
    Draw from U(-sqrt(1/fan_in), sqrt(1/fan_in))

    :param rng: `numpy.random.Generator`
    :param shape: output shape
    :param fan_in: number of inputs feeding one output

    :returns: `numpy.ndarray`
    """

    bound = math.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


# recurrent ----------------------------------------------------------------

class LstmParams(object):
    """Weights of one LSTM: W_* (d x h), U_* (h x h), b_* (h) per gate"""

    def __init__(self, store, prefix, input_dim, hidden, rng):
        """
        Initialize object

        :param store: `ParamStore` receiving the weights
        :param prefix: parameter name prefix
        :param input_dim: input feature width d
        :param hidden: hidden width h
        :param rng: `numpy.random.Generator` for initialization

        :returns: `pyrtfn.layers.LstmParams`
        """

        if input_dim < 1 or hidden < 1:
            raise ConfigurationError('LSTM sizes must be positive')

        self.input_dim = input_dim
        self.hidden = hidden
        self.W = {}
        self.U = {}
        self.b = {}

        for gate in GATES:
            self.W[gate] = store.add(
                '{}.W_{}'.format(prefix, gate),
                uniform_init(rng, (input_dim, hidden), input_dim))
            self.U[gate] = store.add(
                '{}.U_{}'.format(prefix, gate),
                uniform_init(rng, (hidden, hidden), hidden))
            # forget gate starts open
            bias = 1.0 if gate == 'f' else 0.0
            self.b[gate] = store.add('{}.b_{}'.format(prefix, gate),
                                     np.full(hidden, bias))


def lstm_forward(params, x, h0=None, c0=None):
    """
    Run an LSTM over a sequence and return every hidden state

    i, f, o = sigmoid(x W + h U + b), g = tanh(x W_g + h U_g + b_g),
    c' = f * c + i * g, h' = o * tanh(c').

    :param params: `LstmParams`
    :param x: `Tensor` (t x d) or (batch x t x d)
    :param h0: initial hidden state (h) or (batch x h), zeros by default
    :param c0: initial cell state, zeros by default

    :returns: `Tensor` (t x h) or (batch x t x h)
    """

    single = x.ndim == 2
    if single:
        x = T.reshape(x, (1,) + x.shape)
    if x.ndim != 3 or x.shape[2] != params.input_dim or x.shape[1] < 1:
        msg = 'LSTM expects (t x {}) input, got {}'.format(
            params.input_dim, x.shape)
        LOGGER.error(msg)
        raise DimensionError(msg)

    batch, steps, _ = x.shape
    hidden = params.hidden

    W = T.concat([params.W[g] for g in GATES], axis=1)
    U = T.concat([params.U[g] for g in GATES], axis=1)
    bias = T.concat([params.b[g] for g in GATES], axis=0)

    # input projection for all steps at once: batch x t x 4h
    projected = T.matmul(x, W) + bias

    h = _initial_state(h0, batch, hidden)
    c = _initial_state(c0, batch, hidden)

    states = []
    for step in range(steps):
        z = T.take(projected, 1, step) + T.matmul(h, U)
        i = T.sigmoid(T.narrow(z, 1, 0, hidden))
        f = T.sigmoid(T.narrow(z, 1, hidden, 2 * hidden))
        o = T.sigmoid(T.narrow(z, 1, 2 * hidden, 3 * hidden))
        g = T.tanh(T.narrow(z, 1, 3 * hidden, 4 * hidden))
        c = f * c + i * g
        h = o * T.tanh(c)
        states.append(h)

    out = T.stack(states, axis=1)
    if single:
        out = T.reshape(out, (steps, hidden))
    return out


def _initial_state(state, batch, hidden):
    if state is None:
        return Tensor(np.zeros((batch, hidden)))
    if not isinstance(state, Tensor):
        state = Tensor(state)
    if state.ndim == 1:
        state = T.reshape(state, (1, state.shape[0]))
    if state.shape[-1] != hidden or state.shape[0] not in (1, batch):
        raise DimensionError('initial state {} does not match ({}, {})'
                             .format(state.shape, batch, hidden))
    return state


class AttentionalLstmBlock(object):
    """Query, key and value LSTMs over the same input sequence"""

    def __init__(self, store, prefix, input_dim, hidden, rng, shared=False,
                 scaled=False):
        """
        Initialize object

        :param store: `ParamStore`
        :param prefix: parameter name prefix
        :param input_dim: input feature width
        :param hidden: hidden width of each LSTM
        :param rng: `numpy.random.Generator`
        :param shared: one LSTM serves as query, key and value
        :param scaled: divide scores by sqrt(hidden)

        :returns: `pyrtfn.layers.AttentionalLstmBlock`
        """

        self.hidden = hidden
        self.shared = shared
        self.scaled = scaled

        if shared:
            self.query = LstmParams(store, '{}.qkv'.format(prefix),
                                    input_dim, hidden, rng)
            self.key = self.value = self.query
        else:
            self.query = LstmParams(store, '{}.query'.format(prefix),
                                    input_dim, hidden, rng)
            self.key = LstmParams(store, '{}.key'.format(prefix),
                                  input_dim, hidden, rng)
            self.value = LstmParams(store, '{}.value'.format(prefix),
                                    input_dim, hidden, rng)


def attention_weights(f_q, f_k, scaled=False):
    """
    Row-normalized attention weights softmax_rows(f_q f_k^T)

    :param f_q: `Tensor` (t x h) or (batch x t x h)
    :param f_k: `Tensor` shaped like `f_q`
    :param scaled: divide scores by sqrt(h)

    :returns: `Tensor` (t x t) or (batch x t x t)
    """

    scores = T.matmul(f_q, T.transpose(f_k))
    if scaled:
        scores = scores * (1.0 / math.sqrt(f_q.shape[-1]))
    return T.softmax_rows(scores)


def attend(scores, f_v):
    """Weighted sum of value rows: softmax_rows(scores) f_v"""

    return T.matmul(T.softmax_rows(scores), f_v)


def attentional_lstm(block, x):
    """
    Attentional LSTM: softmax_rows(f_Q f_K^T) f_V

    :param block: `AttentionalLstmBlock`
    :param x: `Tensor` (t x d) or (batch x t x d)

    :returns: `Tensor` (t x h) or (batch x t x h)
    """

    f_q = lstm_forward(block.query, x)
    if block.shared:
        f_k = f_v = f_q
    else:
        f_k = lstm_forward(block.key, x)
        f_v = lstm_forward(block.value, x)

    weights = attention_weights(f_q, f_k, block.scaled)
    return T.matmul(weights, f_v)


# convolutional ------------------------------------------------------------

class SelfAttentionBlock(object):
    """Channel projections P_q, P_k, P_v (c x c)"""

    def __init__(self, store, prefix, channels, rng):
        self.channels = channels
        self.P_q = store.add('{}.P_q'.format(prefix),
                             uniform_init(rng, (channels, channels), channels))
        self.P_k = store.add('{}.P_k'.format(prefix),
                             uniform_init(rng, (channels, channels), channels))
        self.P_v = store.add('{}.P_v'.format(prefix),
                             uniform_init(rng, (channels, channels), channels))


def self_attention(block, x):
    """
    Residual self-attention over time steps of a feature map

    With Q = P_q x, K = P_k x and V = P_v x, the weights are the
    column-wise softmax of K^T Q and the output is x + V A.

    :param block: `SelfAttentionBlock`
    :param x: `Tensor` (batch x c x t)

    :returns: `Tensor` (batch x c x t)
    """

    if x.ndim != 3 or x.shape[1] != block.channels:
        raise DimensionError('self-attention expects (b x {} x t), got {}'
                             .format(block.channels, x.shape))

    q = T.matmul(block.P_q, x)
    k = T.matmul(block.P_k, x)
    v = T.matmul(block.P_v, x)
    weights = T.softmax(T.matmul(T.transpose(k), q), axis=1)
    return x + T.matmul(v, weights)


class BatchNorm(object):
    """Per-channel affine normalization with running statistics"""

    def __init__(self, store, prefix, channels):
        self.channels = channels
        self.gamma = store.add('{}.gamma'.format(prefix), np.ones(channels))
        self.beta = store.add('{}.beta'.format(prefix), np.zeros(channels))
        self.running_mean = store.add('{}.running_mean'.format(prefix),
                                      np.zeros(channels), trainable=False)
        self.running_var = store.add('{}.running_var'.format(prefix),
                                     np.ones(channels), trainable=False)


def batch_norm(x, bn, training):
    """
    Normalize each channel of a (batch x c x t) feature map

    Training uses the batch statistics over batch and time and updates
    the running statistics; inference uses the running statistics.

    :param x: `Tensor` (batch x c x t)
    :param bn: `BatchNorm`
    :param training: `bool`

    :returns: `Tensor` (batch x c x t)
    """

    if x.ndim != 3 or x.shape[1] != bn.channels:
        raise DimensionError('batch norm expects (b x {} x t), got {}'
                             .format(bn.channels, x.shape))

    channels = bn.channels
    if training:
        mu = T.mean(T.mean(x, axis=2, keepdims=True), axis=0, keepdims=True)
        centered = x - mu
        var = T.mean(T.mean(T.square(centered), axis=2, keepdims=True),
                     axis=0, keepdims=True)
        normalized = centered / T.sqrt(var + BN_EPS)

        bn.running_mean.values[...] = (
            BN_MOMENTUM * bn.running_mean.values +
            (1 - BN_MOMENTUM) * mu.values.reshape(channels))
        bn.running_var.values[...] = (
            BN_MOMENTUM * bn.running_var.values +
            (1 - BN_MOMENTUM) * var.values.reshape(channels))
    else:
        mu = bn.running_mean.values.reshape(1, channels, 1)
        scale = np.sqrt(bn.running_var.values.reshape(1, channels, 1) +
                        BN_EPS)
        normalized = (x - mu) / scale

    return (normalized * T.reshape(bn.gamma, (1, channels, 1)) +
            T.reshape(bn.beta, (1, channels, 1)))


class MultiHeadConvBlock(object):
    """Parallel convolution heads with their own kernel size"""

    def __init__(self, store, prefix, in_channels, heads, rng):
        """
        Initialize object

        :param store: `ParamStore`
        :param prefix: parameter name prefix
        :param in_channels: input channels
        :param heads: list of (kernel_size, filters)
        :param rng: `numpy.random.Generator`

        :returns: `pyrtfn.layers.MultiHeadConvBlock`
        """

        if not heads:
            raise ConfigurationError('at least one convolution head needed')

        self.in_channels = in_channels
        self.kernels = []
        self.norms = []
        for i, (size, filters) in enumerate(heads):
            name = '{}.head{}'.format(prefix, i)
            self.kernels.append(store.add(
                '{}.kernel'.format(name),
                uniform_init(rng, (filters, in_channels, size),
                             in_channels * size)))
            self.norms.append(BatchNorm(store, '{}.bn'.format(name), filters))

        self.out_channels = sum(filters for _, filters in heads)


def multi_head_conv(block, x, training):
    """
    conv -> batch norm -> relu per head, heads joined on the channel axis

    :param block: `MultiHeadConvBlock`
    :param x: `Tensor` (batch x c_in x t)
    :param training: `bool`

    :returns: `Tensor` (batch x sum(filters) x t)
    """

    outputs = [T.relu(batch_norm(T.conv1d(x, kernel, 'same'), bn, training))
               for kernel, bn in zip(block.kernels, block.norms)]
    return T.concat(outputs, axis=1)


class ResidualBlock(object):
    """Three conv + batch norm stages with a (projected) shortcut"""

    def __init__(self, store, prefix, in_channels, out_channels, rng,
                 kernel_sizes=(8, 5, 3)):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernels = []
        self.norms = []

        channels = in_channels
        for i, size in enumerate(kernel_sizes):
            self.kernels.append(store.add(
                '{}.conv{}'.format(prefix, i),
                uniform_init(rng, (out_channels, channels, size),
                             channels * size)))
            self.norms.append(BatchNorm(store, '{}.bn{}'.format(prefix, i),
                                        out_channels))
            channels = out_channels

        self.shortcut = self.shortcut_norm = None
        if in_channels != out_channels:
            self.shortcut = store.add(
                '{}.shortcut'.format(prefix),
                uniform_init(rng, (out_channels, in_channels, 1),
                             in_channels))
            self.shortcut_norm = BatchNorm(
                store, '{}.shortcut_bn'.format(prefix), out_channels)


def residual_block(block, x, training):
    """
    relu(main(x) + shortcut(x)); relu between the main stages

    :param block: `ResidualBlock`
    :param x: `Tensor` (batch x c_in x t)
    :param training: `bool`

    :returns: `Tensor` (batch x c_out x t)
    """

    h = x
    last = len(block.kernels) - 1
    for i, (kernel, bn) in enumerate(zip(block.kernels, block.norms)):
        h = batch_norm(T.conv1d(h, kernel, 'same'), bn, training)
        if i < last:
            h = T.relu(h)

    shortcut = x
    if block.shortcut is not None:
        shortcut = batch_norm(T.conv1d(x, block.shortcut, 'same'),
                              block.shortcut_norm, training)

    return T.relu(h + shortcut)


# dense --------------------------------------------------------------------

class Dense(object):
    """Affine map x W + b"""

    def __init__(self, store, prefix, in_dim, out_dim, rng):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = store.add('{}.weight'.format(prefix),
                                uniform_init(rng, (in_dim, out_dim), in_dim))
        self.bias = store.add('{}.bias'.format(prefix), np.zeros(out_dim))


def dense(x, layer):
    if x.shape[-1] != layer.in_dim:
        raise DimensionError('dense expects width {}, got {}'.format(
            layer.in_dim, x.shape))
    return T.matmul(x, layer.weight) + layer.bias


def dropout(x, rate, training, rng):
    """
    Inverted dropout: keep with probability 1 - rate, scale by 1/(1 - rate)

    :param x: `Tensor`
    :param rate: drop probability in [0, 1)
    :param training: identity when `False`
    :param rng: `numpy.random.Generator` drawing the mask

    :returns: `Tensor`
    """

    if not 0.0 <= rate < 1.0:
        msg = 'dropout rate must be in [0, 1), got {}'.format(rate)
        LOGGER.error(msg)
        raise ConfigurationError(msg)

    if not training or rate == 0.0:
        return x

    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask


def global_avg_pool(x):
    """(batch x c x t) -> (batch x c), mean over time"""

    if x.ndim != 3:
        raise DimensionError('pooling expects rank 3, got {}'.format(x.shape))
    return T.mean(x, axis=2)
