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

import math

import numpy as np
import pytest

from pyrtfn import layers as L
from pyrtfn import tensor as T
from pyrtfn.tensor import ParamStore, Tensor
from pyrtfn.util import ConfigurationError, DimensionError


@pytest.fixture()
def rng():
    return np.random.default_rng(42)


def _sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def _fill(params, value):
    for gate in L.GATES:
        params.W[gate].values[...] = value
        params.U[gate].values[...] = value
        params.b[gate].values[...] = value


def test_lstm_single_step(rng):
    store = ParamStore()
    params = L.LstmParams(store, 'lstm', 1, 1, rng)
    _fill(params, 0.1)

    out = L.lstm_forward(params, Tensor([[1.0]]))
    assert out.shape == (1, 1)

    z = 0.1 * 1.0 + 0.1 * 0.0 + 0.1
    c = _sigmoid(z) * math.tanh(z)
    expected = _sigmoid(z) * math.tanh(c)
    assert abs(out.item() - expected) < 1e-12


def test_lstm_params(rng):
    store = ParamStore()
    params = L.LstmParams(store, 'enc', 3, 4, rng)

    assert len(store) == 12
    assert store.count() == 4 * (3 * 4 + 4 * 4 + 4)
    assert np.all(params.b['f'].values == 1.0)
    assert np.all(params.b['i'].values == 0.0)
    bound = math.sqrt(1.0 / 3)
    assert np.all(np.abs(params.W['g'].values) <= bound)

    with pytest.raises(ConfigurationError):
        L.LstmParams(store, 'bad', 0, 4, rng)


def test_lstm_shapes(rng):
    store = ParamStore()
    params = L.LstmParams(store, 'lstm', 2, 5, rng)
    x = rng.standard_normal((3, 7, 2))

    batched = L.lstm_forward(params, Tensor(x))
    assert batched.shape == (3, 7, 5)

    single = L.lstm_forward(params, Tensor(x[1]))
    assert single.shape == (7, 5)
    assert np.allclose(single.values, batched.values[1], atol=1e-12)

    with pytest.raises(DimensionError):
        L.lstm_forward(params, Tensor(np.ones((7, 3))))
    with pytest.raises(DimensionError):
        L.lstm_forward(params, Tensor(x), h0=np.zeros(4))


def test_attend_uniform():
    f_v = Tensor([[2., 4.], [6., 8.]])
    out = L.attend(Tensor(np.zeros((2, 2))), f_v)
    assert np.allclose(out.values, [[4., 6.], [4., 6.]])


def test_attend_identity_keys():
    f_q = Tensor([[1., 0.]])
    f_k = Tensor(np.eye(2))
    f_v = Tensor(np.eye(2))

    out = L.attend(T.matmul(f_q, T.transpose(f_k)), f_v).values
    e = math.e
    assert np.allclose(out, [[e / (e + 1), 1 / (e + 1)]], atol=1e-9,
                       rtol=0)
    assert np.allclose(L.attention_weights(f_q, f_k).values, out,
                       atol=1e-12, rtol=0)


def test_attention_weights(rng):
    f_q = Tensor(rng.standard_normal((5, 3)))
    f_k = Tensor(rng.standard_normal((5, 3)))

    weights = L.attention_weights(f_q, f_k).values
    assert weights.shape == (5, 5)
    assert np.allclose(weights.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(weights > 0)

    scores = T.matmul(f_q, T.transpose(f_k))
    shifted = T.softmax_rows(scores + 3.0).values
    assert np.allclose(shifted, weights, atol=1e-12)

    two = T.softmax_rows(Tensor([[0., math.log(3.)]])).values
    assert np.allclose(two, [[0.25, 0.75]])


def test_attentional_lstm_zero_query_key(rng):
    store = ParamStore()
    block = L.AttentionalLstmBlock(store, 'alstm', 2, 3, rng)
    _fill(block.query, 0.0)
    _fill(block.key, 0.0)

    x = Tensor(rng.standard_normal((6, 2)))
    out = L.attentional_lstm(block, x)
    f_v = L.lstm_forward(block.value, x).values

    assert out.shape == (6, 3)
    for row in out.values:
        assert np.allclose(row, f_v.mean(axis=0), atol=1e-12)


def test_attentional_lstm_variants(rng):
    store = ParamStore()
    L.AttentionalLstmBlock(store, 'full', 2, 3, rng)
    full = store.count()

    shared_store = ParamStore()
    shared = L.AttentionalLstmBlock(shared_store, 'one', 2, 3, rng,
                                    shared=True, scaled=True)
    assert shared_store.count() * 3 == full
    assert shared.key is shared.query

    x = Tensor(rng.standard_normal((2, 4, 2)))
    assert L.attentional_lstm(shared, x).shape == (2, 4, 3)


def test_attentional_lstm_pure(rng):
    store = ParamStore()
    block = L.AttentionalLstmBlock(store, 'alstm', 2, 3, rng)
    values = rng.standard_normal((4, 2))
    x = Tensor(values.copy())

    first = L.attentional_lstm(block, x).values
    second = L.attentional_lstm(block, x).values
    assert np.array_equal(first, second)
    assert np.array_equal(x.values, values)


def test_self_attention(rng):
    store = ParamStore()
    block = L.SelfAttentionBlock(store, 'sa', 3, rng)
    x = Tensor(rng.standard_normal((2, 3, 5)))

    assert L.self_attention(block, x).shape == (2, 3, 5)

    block.P_v.values[...] = 0.0
    assert np.array_equal(L.self_attention(block, x).values, x.values)

    with pytest.raises(DimensionError):
        L.self_attention(block, Tensor(np.ones((2, 4, 5))))


def test_batch_norm(rng):
    store = ParamStore()
    bn = L.BatchNorm(store, 'bn', 3)
    values = rng.standard_normal((4, 3, 5)) * 2.0 + 1.0
    x = Tensor(values)

    out = L.batch_norm(x, bn, training=True).values
    assert np.allclose(out.mean(axis=(0, 2)), 0.0, atol=1e-10)
    assert np.allclose(out.var(axis=(0, 2)), 1.0, atol=1e-3)

    mu = values.mean(axis=(0, 2))
    assert np.allclose(bn.running_mean.values,
                       (1 - L.BN_MOMENTUM) * mu, atol=1e-12)
    assert store.count() == 6

    # inference leaves the running statistics alone
    running = bn.running_mean.values.copy()
    L.batch_norm(x, bn, training=False)
    assert np.array_equal(bn.running_mean.values, running)

    with pytest.raises(DimensionError):
        L.batch_norm(Tensor(np.ones((4, 2, 5))), bn, True)


def test_multi_head_conv(rng):
    store = ParamStore()
    block = L.MultiHeadConvBlock(store, 'conv', 1, [(3, 2), (4, 3)], rng)
    assert block.out_channels == 5

    out = L.multi_head_conv(block, Tensor(rng.standard_normal((2, 1, 10))),
                            True)
    assert out.shape == (2, 5, 10)
    assert np.all(out.values >= 0.0)

    with pytest.raises(ConfigurationError):
        L.MultiHeadConvBlock(store, 'none', 1, [], rng)


def test_residual_block(rng):
    store = ParamStore()
    projected = L.ResidualBlock(store, 'res0', 5, 4, rng)
    same = L.ResidualBlock(store, 'res1', 4, 4, rng)

    assert projected.shortcut is not None
    assert same.shortcut is None
    assert 'res0.shortcut_bn.gamma' in store

    x = Tensor(rng.standard_normal((2, 5, 10)))
    out = L.residual_block(same, L.residual_block(projected, x, True), True)
    assert out.shape == (2, 4, 10)
    assert np.all(out.values >= 0.0)


def test_dense_and_pool(rng):
    store = ParamStore()
    layer = L.Dense(store, 'fc', 4, 2, rng)

    pooled = L.global_avg_pool(Tensor(np.arange(24.).reshape(2, 4, 3)))
    assert np.array_equal(pooled.values[0], [1., 4., 7., 10.])
    assert L.dense(pooled, layer).shape == (2, 2)

    with pytest.raises(DimensionError):
        L.dense(Tensor(np.ones((2, 3))), layer)
    with pytest.raises(DimensionError):
        L.global_avg_pool(Tensor(np.ones((2, 3))))


def test_dropout(rng):
    x = Tensor(np.ones(100000))

    assert L.dropout(x, 0.3, False, rng) is x
    assert L.dropout(x, 0.0, True, rng) is x

    dropped = L.dropout(x, 0.3, True, rng).values
    assert abs(dropped.mean() - 1.0) < 0.02
    assert set(np.unique(dropped)) <= {0.0, 1.0 / (1.0 - 0.3)}

    with pytest.raises(ConfigurationError):
        L.dropout(x, 1.0, True, rng)
    with pytest.raises(ConfigurationError):
        L.dropout(x, -0.1, True, rng)
