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
Finite-difference verification of the analytic gradients

Every check reduces an operation's output to a scalar with a fixed random
weighting, then compares `backward` against central differences.
Coordinates where the one-sided differences disagree sit on a kink of a
piecewise-linear op (relu) and are skipped.
"""

from dataclasses import dataclass
import logging

import numpy as np

from pyrtfn import layers as L
from pyrtfn import model as M
from pyrtfn import tensor as T
from pyrtfn.tensor import ParamStore, Tape, Tensor, backward
from pyrtfn.util import ContractError

LOGGER = logging.getLogger(__name__)

STEP = 1e-5

#: one-sided slopes further apart than this mark a kink
KINK_TOLERANCE = 1e-4


def _evaluate(fn):
    return fn().item()


def numerical_gradient(fn, tensor, index, eps=STEP, base=None):
    """
    Central difference of a scalar function at one coordinate

    :param fn: callable returning a scalar `Tensor`
    :param tensor: `Tensor` being perturbed
    :param index: coordinate tuple
    :param eps: step
    :param base: fn() at the unperturbed point (computed when `None`)

    :returns: tuple of (central estimate, whether the point is smooth)
    """

    if base is None:
        base = _evaluate(fn)

    original = tensor.values[index]
    try:
        tensor.values[index] = original + eps
        plus = _evaluate(fn)
        tensor.values[index] = original - eps
        minus = _evaluate(fn)
    finally:
        tensor.values[index] = original

    forward = (plus - base) / eps
    backward_ = (base - minus) / eps
    central = (plus - minus) / (2 * eps)
    smooth = abs(forward - backward_) <= \
        KINK_TOLERANCE * abs(central) + 1e-6
    return central, smooth


def check_gradients(fn, tensors, eps=STEP, coords=None, rng=None):
    """
    Relative error between analytic and numerical gradients

    The error is ||a - n|| / max(||a||, ||n||) over every checked
    coordinate of every tensor.

    :param fn: callable building a scalar `Tensor` from `tensors`
    :param tensors: `Tensor` objects with `requires_grad`
    :param eps: finite-difference step
    :param coords: coordinates sampled per tensor (all when `None`)
    :param rng: `numpy.random.Generator` for sampling coordinates

    :returns: `float` relative error
    """

    for tensor in tensors:
        if not tensor.requires_grad:
            raise ContractError('{!r} does not require a gradient'.format(
                tensor))
        tensor.zero_grad()

    with Tape() as tape:
        loss = fn()
    backward(tape, loss)

    base = loss.item()
    analytic = []
    numeric = []
    skipped = 0

    for tensor in tensors:
        indices = list(np.ndindex(*tensor.shape))
        if coords is not None and coords < len(indices):
            rng = rng or np.random.default_rng(0)
            picks = rng.choice(len(indices), size=coords, replace=False)
            indices = [indices[i] for i in sorted(picks)]
        for index in indices:
            estimate, smooth = numerical_gradient(fn, tensor, index, eps,
                                                  base)
            if not smooth:
                skipped += 1
                continue
            analytic.append(tensor.grad[index])
            numeric.append(estimate)

    if skipped:
        LOGGER.debug('skipped {} coordinate(s) on kinks'.format(skipped))
    if not analytic:
        raise ContractError('no smooth coordinate left to check')

    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def _param(rng, *shape):
    return Tensor(rng.standard_normal(shape), requires_grad=True)


# suites: each builder returns (fn, tensors, coords) ---------------------

def _fixed_loss(op, rng):
    weights = None

    def fn(*args):
        nonlocal weights
        out = op(*args)
        if weights is None:
            weights = rng.standard_normal(out.shape)
        return T.sum_(out * weights)
    return fn


def _suite(op, *tensors, coords=None):
    def build(rng):
        args = [_param(rng, *shape) for shape in tensors]
        loss = _fixed_loss(op, rng)
        return (lambda: loss(*args)), args, coords
    return build


def _batched_matmul(rng):
    a, b = _param(rng, 2, 3, 4), _param(rng, 4, 5)
    loss = _fixed_loss(T.matmul, rng)
    return (lambda: loss(a, b)), [a, b], None


def _elementwise(rng):
    x = _param(rng, 2, 3, 4)
    y = Tensor(rng.uniform(0.5, 2.0, (3, 4)), requires_grad=True)
    loss = _fixed_loss(lambda u, v: T.concat([
        T.sigmoid(u), T.tanh(u), T.exp(u * 0.5), T.square(u),
        u * v, u + v, u - v, u / v,
        T.reshape(T.log(v), (1, 3, 4)),
        T.reshape(T.sqrt(v), (1, 3, 4))], axis=0), rng)
    return (lambda: loss(x, y)), [x, y], None


def _relu(rng):
    x = _param(rng, 4, 6)
    loss = _fixed_loss(T.relu, rng)
    return (lambda: loss(x)), [x], None


def _reductions(rng):
    x = _param(rng, 2, 3, 4)
    loss = _fixed_loss(lambda u: T.concat([
        T.reshape(T.sum_(u, axis=2), (6,)),
        T.reshape(T.mean(u, axis=0), (12,)),
        T.reshape(T.mean(u), (1,))], axis=0), rng)
    return (lambda: loss(x)), [x], None


def _softmax(rng):
    x = _param(rng, 2, 4, 5)
    loss = _fixed_loss(lambda u: T.concat([
        T.softmax_rows(u), T.softmax(u, axis=1), T.log_softmax_rows(u)],
        axis=0), rng)
    return (lambda: loss(x)), [x], None


def _conv1d(rng):
    size = int(rng.integers(1, 6))
    x = _param(rng, 2, 3, 9)
    kernels = _param(rng, 4, 3, size)
    loss = _fixed_loss(T.conv1d, rng)
    return (lambda: loss(x, kernels)), [x, kernels], None


def _structure(rng):
    x = _param(rng, 2, 3, 4)
    y = _param(rng, 2, 3, 4)
    loss = _fixed_loss(lambda u, v: T.concat([
        T.stack([T.take(u, 1, 0), T.take(v, 1, 2)], axis=1),
        T.narrow(T.transpose(u), 1, 1, 3)], axis=2), rng)
    return (lambda: loss(x, y)), [x, y], None


def _store_tensors(store):
    return [tensor for _, tensor in store.trainable()]


def _lstm(rng):
    store = ParamStore()
    params = L.LstmParams(store, 'lstm', 2, 3, rng)
    x = _param(rng, 2, 4, 2)
    loss = _fixed_loss(lambda u: L.lstm_forward(params, u), rng)
    return (lambda: loss(x)), [x] + _store_tensors(store), 4


def _attentional_lstm(rng):
    store = ParamStore()
    block = L.AttentionalLstmBlock(store, 'alstm', 1, 3, rng)
    x = _param(rng, 5, 1)
    loss = _fixed_loss(lambda u: L.attentional_lstm(block, u), rng)
    return (lambda: loss(x)), [x] + _store_tensors(store), 3


def _self_attention(rng):
    store = ParamStore()
    block = L.SelfAttentionBlock(store, 'sa', 3, rng)
    x = _param(rng, 2, 3, 5)
    loss = _fixed_loss(lambda u: L.self_attention(block, u), rng)
    return (lambda: loss(x)), [x] + _store_tensors(store), None


def _batch_norm(rng):
    store = ParamStore()
    bn = L.BatchNorm(store, 'bn', 3)
    bn.gamma.values[...] = rng.uniform(0.5, 1.5, 3)
    bn.beta.values[...] = rng.standard_normal(3)
    x = _param(rng, 2, 3, 5)
    loss = _fixed_loss(lambda u: L.batch_norm(u, bn, True), rng)
    return (lambda: loss(x)), [x] + _store_tensors(store), None


def _multi_head_conv(rng):
    store = ParamStore()
    block = L.MultiHeadConvBlock(store, 'mh', 2, [(3, 2), (4, 2)], rng)
    x = _param(rng, 2, 2, 7)
    loss = _fixed_loss(lambda u: L.multi_head_conv(block, u, True), rng)
    return (lambda: loss(x)), [x] + _store_tensors(store), 6


def _residual(rng):
    store = ParamStore()
    block = L.ResidualBlock(store, 'res', 2, 3, rng)
    x = _param(rng, 2, 2, 9)
    loss = _fixed_loss(lambda u: L.residual_block(block, u, True), rng)
    return (lambda: loss(x)), [x] + _store_tensors(store), 6


def _dense_pool(rng):
    store = ParamStore()
    layer = L.Dense(store, 'dense', 4, 3, rng)
    x = _param(rng, 2, 4, 5)
    loss = _fixed_loss(lambda u: L.dense(L.global_avg_pool(u), layer), rng)
    return (lambda: loss(x)), [x] + _store_tensors(store), None


def _toy_config(**kwargs):
    options = dict(input_length=32, num_classes=3,
                   conv_heads=[(3, 2), (5, 2)], residual_channels=[3, 2],
                   lstm_hidden=3, dropout_rate=0.0)
    options.update(kwargs)
    return M.ModelConfig(**options)


def _model_supervised(rng):
    model = M.RtfnModel(_toy_config(seed=int(rng.integers(2 ** 31))))
    x = Tensor(rng.standard_normal((2, 1, 32)))
    labels = rng.integers(0, 3, size=2)

    def fn():
        return M.supervised_loss(M.forward_logits(model, x, training=True),
                                 labels)
    return fn, _store_tensors(model.store), 2


def _model_autoencoder(rng):
    config = _toy_config(task='autoencoder', decoder_widths=[4, 5, 6, 32],
                         seed=int(rng.integers(2 ** 31)))
    model = M.RtfnModel(config)
    series = rng.standard_normal((2, 32))
    x = Tensor(series[:, np.newaxis, :])

    def fn():
        return M.reconstruction_loss(
            series, M.decode(model.decoder, M.rtfn_forward(model, x, True)))
    return fn, _store_tensors(model.store), 2


@dataclass
class Suite:
    name: str
    build: object
    tolerance: float = 1e-4


#: checked operations and layers, in dependency order
SUITES = [
    Suite('matmul', _suite(T.matmul, (3, 4), (4, 2)), 1e-6),
    Suite('matmul_batched', _batched_matmul, 1e-6),
    Suite('elementwise', _elementwise),
    Suite('relu', _relu),
    Suite('reduce', _reductions),
    Suite('softmax', _softmax),
    Suite('conv1d', _conv1d, 1e-5),
    Suite('structure', _structure),
    Suite('lstm', _lstm),
    Suite('attentional_lstm', _attentional_lstm),
    Suite('self_attention', _self_attention),
    Suite('batch_norm', _batch_norm),
    Suite('multi_head_conv', _multi_head_conv),
    Suite('residual_block', _residual),
    Suite('dense_pool', _dense_pool),
    Suite('model_supervised', _model_supervised, 1e-3),
    Suite('model_autoencoder', _model_autoencoder, 1e-3)
]


@dataclass
class SuiteResult:
    name: str
    max_error: float
    tolerance: float
    instances: int

    @property
    def passed(self):
        return self.max_error < self.tolerance

    def __str__(self):
        return '{} instances={} max_rel_err={:.3e} tol={:.0e} {}'.format(
            self.name, self.instances, self.max_error, self.tolerance,
            'OK' if self.passed else 'FAIL')


def run_suites(seed=0, instances=20, names=None):
    """
    Run the gradient suites

    :param seed: seed of the instance generator
    :param instances: random instances per suite
    :param names: restrict to these suite names

    :returns: `list` of `SuiteResult`
    """

    results = []
    for number, suite in enumerate(SUITES):
        if names and suite.name not in names:
            continue
        rng = np.random.default_rng([seed, number])
        worst = 0.0
        for _ in range(instances):
            fn, tensors, coords = suite.build(rng)
            worst = max(worst, check_gradients(fn, tensors, coords=coords,
                                               rng=rng))
        result = SuiteResult(suite.name, worst, suite.tolerance,
                             instances)
        LOGGER.info(str(result))
        results.append(result)
    return results
