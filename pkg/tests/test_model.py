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

from pyrtfn.model import (ModelConfig, RtfnModel, classify, count_parameters,
                          decode, encode, expected_parameter_count,
                          forward_logits, load_checkpoint, reconstruction_loss,
                          rtfn_forward, save_checkpoint, supervised_loss)
from pyrtfn.tensor import Tensor
from pyrtfn.util import (ConfigurationError, DataError, DimensionError,
                         RTFNError)


def _small(**kwargs):
    settings = {
        'input_length': 16,
        'num_classes': 3,
        'conv_heads': [(3, 2), (4, 2)],
        'residual_channels': [5, 3],
        'lstm_hidden': 4,
        'dropout_rate': 0.2,
        'seed': 7
    }
    settings.update(kwargs)
    return ModelConfig(**settings)


@pytest.fixture()
def batch():
    return np.random.default_rng(0).standard_normal((4, 1, 16))


def test_default_parameter_count():
    config = ModelConfig(input_length=128, num_classes=2)
    assert config.feature_dim == 192
    assert expected_parameter_count(config) == 1619714
    assert count_parameters(RtfnModel(config)) == 1619714


@pytest.mark.parametrize('kwargs', [
    {},
    {'use_attentional_lstm': False},
    {'shared_lstm': True, 'scaled_attention': True},
    {'task': 'autoencoder'},
    {'task': 'autoencoder', 'use_attentional_lstm': False}
])
def test_expected_parameter_count(kwargs):
    config = _small(**kwargs)
    assert count_parameters(RtfnModel(config)) == \
        expected_parameter_count(config)


def test_ablation_keeps_temporal_branch():
    full = RtfnModel(_small())
    ablated = RtfnModel(_small(use_attentional_lstm=False))

    assert 'alstm.query.W_i' in full.store
    assert not any(name.startswith('alstm') for name in ablated.store)

    for name in ablated.store:
        if name.startswith('head'):
            continue
        assert np.array_equal(full.store[name].values,
                              ablated.store[name].values)

    assert full.config.feature_dim == 3 + 4
    assert ablated.config.feature_dim == 3


def test_forward_shapes(batch):
    model = RtfnModel(_small())

    assert rtfn_forward(model, batch).shape == (4, 7)
    assert forward_logits(model, batch).shape == (4, 3)
    assert forward_logits(model, batch, training=True,
                          rng=np.random.default_rng(1)).shape == (4, 3)
    assert classify(model, batch).shape == (4,)
    assert encode(model, batch[:, 0, :]).shape == (4, 7)

    with pytest.raises(DimensionError):
        rtfn_forward(model, np.ones((4, 1, 15)))
    with pytest.raises(DimensionError):
        rtfn_forward(model, np.ones((4, 2, 16)))


def test_default_forward_shapes():
    x = np.random.default_rng(2).standard_normal((2, 1, 128))

    model = RtfnModel(ModelConfig(input_length=128))
    assert rtfn_forward(model, x).shape == (2, 192)

    ablated = RtfnModel(ModelConfig(input_length=128,
                                    use_attentional_lstm=False))
    assert rtfn_forward(ablated, x).shape == (2, 128)


def test_inference_is_deterministic(batch):
    model = RtfnModel(_small())
    first = forward_logits(model, batch).values
    assert np.array_equal(first, forward_logits(model, batch).values)

    again = RtfnModel(_small())
    assert np.array_equal(first, forward_logits(again, batch).values)


def test_supervised_loss():
    logits = Tensor(np.zeros((4, 3)))
    loss = supervised_loss(logits, np.array([0, 1, 2, 0]))
    assert abs(loss.item() - math.log(3)) < 1e-12

    with pytest.raises(DataError):
        supervised_loss(logits, np.array([0, 1, 3, 0]))
    with pytest.raises(DataError):
        supervised_loss(logits, np.array([0, 1, -1, 0]))
    with pytest.raises(DataError):
        supervised_loss(logits, np.array([0., 1., 2., 0.]))
    with pytest.raises(DimensionError):
        supervised_loss(logits, np.array([0, 1]))


def test_classify_ties(batch):
    model = RtfnModel(_small())
    model.head.weight.values[...] = 0.0
    model.head.bias.values[...] = 0.0
    assert np.array_equal(classify(model, batch), [0, 0, 0, 0])


def test_autoencoder(batch):
    model = RtfnModel(_small(task='autoencoder'))
    assert model.head is None
    assert [layer.out_dim for layer in model.decoder] == [128, 256, 64, 16]

    features = rtfn_forward(model, batch)
    reconstruction = decode(model.decoder, features)
    assert reconstruction.shape == (4, 16)

    loss = reconstruction_loss(batch[:, 0, :], reconstruction)
    assert loss.item() >= 0.0
    assert reconstruction_loss(batch[:, 0, :], Tensor(batch[:, 0, :])) \
        .item() == 0.0

    with pytest.raises(DimensionError):
        reconstruction_loss(batch[:, 0, :8], reconstruction)
    with pytest.raises(RTFNError):
        forward_logits(model, batch)


def test_config_defaults():
    assert ModelConfig(input_length=128).decoder_widths == [128, 256, 64, 128]
    assert ModelConfig(input_length=286).decoder_widths == \
        [128, 256, 143, 286]

    config = ModelConfig(input_length=10, conv_heads=[[3, 4]])
    assert config.conv_heads == [(3, 4)]

    restored = ModelConfig.from_dict(config.to_dict())
    assert restored == config


@pytest.mark.parametrize('kwargs', [
    {'input_length': 0},
    {'num_classes': 0},
    {'conv_heads': []},
    {'conv_heads': [(0, 4)]},
    {'conv_heads': ['abc']},
    {'residual_channels': []},
    {'lstm_hidden': 0},
    {'dropout_rate': 1.0},
    {'task': 'regression'},
    {'decoder_widths': [8, 8, 8]},
    {'decoder_widths': [8, 8, 8, 15]},
    {'decoder_widths': ['a', 'b', 'c', 'd']},
    {'conv_heads': [('three', 2)]}
])
def test_config_errors(kwargs):
    settings = {'input_length': 16}
    settings.update(kwargs)
    with pytest.raises(ConfigurationError):
        ModelConfig(**settings)


def test_config_unknown_setting():
    with pytest.raises(ConfigurationError):
        ModelConfig.from_dict({'input_length': 16, 'layers': 3})
    with pytest.raises(ConfigurationError):
        ModelConfig.from_dict({'num_classes': 3})
    with pytest.raises(ConfigurationError):
        ModelConfig.from_dict({'input_length': 'long'})


def test_checkpoint_round_trip(tmp_path, batch):
    model = RtfnModel(_small(class_labels=['a', 'b', 'c']))
    # move the running statistics away from their initial values
    forward_logits(model, batch, training=True, rng=np.random.default_rng(3))

    path = str(tmp_path / 'model.ckpt')
    save_checkpoint(model, path)
    restored = load_checkpoint(path)

    assert restored.config == model.config
    assert list(restored.store) == list(model.store)
    for name in model.store:
        assert np.array_equal(restored.store[name].values,
                              model.store[name].values)
    assert np.array_equal(forward_logits(restored, batch).values,
                          forward_logits(model, batch).values)


def test_checkpoint_corruption(tmp_path):
    path = tmp_path / 'model.ckpt'
    save_checkpoint(RtfnModel(_small()), str(path))
    data = path.read_bytes()

    broken = tmp_path / 'broken.ckpt'

    broken.write_bytes(data[:-5])
    with pytest.raises(DataError):
        load_checkpoint(str(broken))

    broken.write_bytes(data + b'\x00')
    with pytest.raises(DataError):
        load_checkpoint(str(broken))

    broken.write_bytes(b'XXXX0001' + data[8:])
    with pytest.raises(DataError):
        load_checkpoint(str(broken))

    # a valid checkpoint of another architecture under the same config
    other = tmp_path / 'other.ckpt'
    save_checkpoint(RtfnModel(_small(lstm_hidden=5)), str(other))
    other_data = other.read_bytes()
    config_end = 12 + int.from_bytes(data[8:12], 'little')
    other_end = 12 + int.from_bytes(other_data[8:12], 'little')
    broken.write_bytes(data[:config_end] + other_data[other_end:])
    with pytest.raises(DataError):
        load_checkpoint(str(broken))

    # undecodable name of the first parameter
    name_at = config_end + 8
    broken.write_bytes(data[:name_at] + b'\xff' + data[name_at + 1:])
    with pytest.raises(DataError) as error:
        load_checkpoint(str(broken))
    assert 'not UTF-8' in str(error.value)

    # configuration block holding a list
    listed = b'[1]'
    broken.write_bytes(data[:8] + len(listed).to_bytes(4, 'little') +
                       listed + data[config_end:])
    with pytest.raises(DataError) as error:
        load_checkpoint(str(broken))
    assert 'not a mapping' in str(error.value)
