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
Two-branch network: the temporal feature branch (multi-head convolution,
self-attention, residual blocks, global pooling) and the attentional
LSTM branch, fused by concatenation, followed by a classifier head or a
dense decoder.
"""

from dataclasses import asdict, dataclass, field, fields
import json
import logging
import struct

import numpy as np

from pyrtfn import layers as L
from pyrtfn import tensor as T
from pyrtfn.tensor import ParamStore, Tensor
from pyrtfn.util import (ConfigurationError, DataError, DimensionError,
                         RTFNError)

LOGGER = logging.getLogger(__name__)

TASKS = ('supervised', 'autoencoder')

CHECKPOINT_MAGIC = b'RTFN0001'


def _default_heads():
    return [(3, 32), (5, 32), (8, 32)]


def _default_residual():
    return [128, 256, 128]


@dataclass
class ModelConfig:
    """Architecture hyperparameters"""

    input_length: int
    num_classes: int = 2
    conv_heads: list = field(default_factory=_default_heads)
    residual_channels: list = field(default_factory=_default_residual)
    lstm_hidden: int = 64
    use_attentional_lstm: bool = True
    shared_lstm: bool = False
    scaled_attention: bool = False
    dropout_rate: float = 0.3
    decoder_widths: list = None
    task: str = 'supervised'
    class_labels: list = None
    seed: int = 0

    def __post_init__(self):
        try:
            self.conv_heads = [(int(k), int(f)) for k, f in self.conv_heads]
            self.residual_channels = [int(c) for c in self.residual_channels]
        except (TypeError, ValueError):
            raise ConfigurationError(
                'conv_heads must be (kernel, filters) pairs and '
                'residual_channels a list of integers')

        if self.input_length < 1:
            raise ConfigurationError('input_length must be >= 1')
        if self.num_classes < 1:
            raise ConfigurationError('num_classes must be >= 1')
        if not self.conv_heads or any(k < 1 or f < 1
                                      for k, f in self.conv_heads):
            raise ConfigurationError('conv_heads must be positive pairs')
        if not self.residual_channels or min(self.residual_channels) < 1:
            raise ConfigurationError('residual_channels must be positive')
        if self.lstm_hidden < 1:
            raise ConfigurationError('lstm_hidden must be >= 1')
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError('dropout_rate must be in [0, 1)')
        if self.task not in TASKS:
            raise ConfigurationError('task must be one of {}'.format(TASKS))

        if self.decoder_widths is None:
            self.decoder_widths = [128, 256, max(self.input_length // 2, 64),
                                   self.input_length]
        try:
            self.decoder_widths = [int(w) for w in self.decoder_widths]
        except (TypeError, ValueError):
            raise ConfigurationError(
                'decoder_widths must be a list of integers, got {!r}'.format(
                    self.decoder_widths))
        if len(self.decoder_widths) != 4 or min(self.decoder_widths) < 1:
            raise ConfigurationError('decoder_widths needs 4 positive widths')
        if self.decoder_widths[-1] != self.input_length:
            raise ConfigurationError(
                'last decoder width {} must equal input_length {}'.format(
                    self.decoder_widths[-1], self.input_length))

        if self.class_labels is not None:
            self.class_labels = [str(label) for label in self.class_labels]

    @property
    def feature_dim(self):
        dim = self.residual_channels[-1]
        if self.use_attentional_lstm:
            dim += self.lstm_hidden
        return dim

    def to_dict(self):
        dict_ = asdict(self)
        dict_['conv_heads'] = [list(h) for h in self.conv_heads]
        return dict_

    @classmethod
    def from_dict(cls, dict_):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(dict_) - known)
        if unknown:
            raise ConfigurationError('unknown model setting(s): {}'.format(
                ', '.join(unknown)))
        try:
            return cls(**dict_)
        except (TypeError, ValueError) as err:
            msg = 'invalid model setting: {}'.format(err)
            LOGGER.error(msg)
            raise ConfigurationError(msg)


class RtfnModel(object):
    """Parameters and blocks of one network instance"""

    def __init__(self, config):
        """
        Initialize object

        Each branch draws from its own seed stream, so toggling the
        attentional LSTM leaves the temporal branch values unchanged.

        :param config: `ModelConfig`

        :returns: `pyrtfn.model.RtfnModel`
        """

        self.config = config
        self.store = ParamStore()

        streams = np.random.SeedSequence(config.seed).spawn(4)
        temporal_rng, lstm_rng, head_rng, decoder_rng = [
            np.random.default_rng(s) for s in streams]

        self.conv_a = L.MultiHeadConvBlock(self.store, 'conv_a', 1,
                                           config.conv_heads, temporal_rng)
        channels = self.conv_a.out_channels
        self.attention = L.SelfAttentionBlock(self.store, 'attention',
                                              channels, temporal_rng)
        self.conv_b = L.MultiHeadConvBlock(self.store, 'conv_b', channels,
                                           config.conv_heads, temporal_rng)
        channels = self.conv_b.out_channels

        self.residual = []
        for i, width in enumerate(config.residual_channels):
            self.residual.append(L.ResidualBlock(
                self.store, 'residual{}'.format(i), channels, width,
                temporal_rng))
            channels = width

        self.alstm = None
        if config.use_attentional_lstm:
            self.alstm = L.AttentionalLstmBlock(
                self.store, 'alstm', 1, config.lstm_hidden, lstm_rng,
                shared=config.shared_lstm, scaled=config.scaled_attention)

        self.head = None
        self.decoder = []
        if config.task == 'supervised':
            self.head = L.Dense(self.store, 'head', config.feature_dim,
                                config.num_classes, head_rng)
        else:
            width = config.feature_dim
            for i, out in enumerate(config.decoder_widths):
                self.decoder.append(L.Dense(
                    self.store, 'decoder{}'.format(i), width, out,
                    decoder_rng))
                width = out

        LOGGER.debug('Model built with {} trainable parameters'.format(
            self.store.count()))

    def __repr__(self):
        return '<RtfnModel> {} task, {} parameters'.format(
            self.config.task, self.store.count())


def _check_input(model, x):
    length = model.config.input_length
    if x.ndim != 3 or x.shape[1] != 1 or x.shape[2] != length:
        msg = 'model expects input of shape (batch, 1, {}), got {}'.format(
            length, x.shape)
        LOGGER.error(msg)
        raise DimensionError(msg)


def rtfn_forward(model, x, training=False):
    """
    Fused feature vector of a batch of series

    :param model: `RtfnModel`
    :param x: `Tensor` (batch x 1 x input_length)
    :param training: batch statistics and updates in batch norms

    :returns: `Tensor` (batch x feature_dim)
    """

    if not isinstance(x, Tensor):
        x = Tensor(x)
    _check_input(model, x)

    h = L.multi_head_conv(model.conv_a, x, training)
    h = L.self_attention(model.attention, h)
    h = L.multi_head_conv(model.conv_b, h, training)
    for block in model.residual:
        h = L.residual_block(block, h, training)
    features = L.global_avg_pool(h)

    if model.alstm is not None:
        sequence = T.transpose(x)
        attended = L.attentional_lstm(model.alstm, sequence)
        features = T.concat([features, T.mean(attended, axis=1)], axis=1)

    return features


def forward_logits(model, x, training=False, rng=None):
    """
    Class scores of the classifier head

    :param model: supervised `RtfnModel`
    :param x: `Tensor` (batch x 1 x input_length)
    :param training: enables dropout and batch statistics
    :param rng: `numpy.random.Generator` for the dropout mask

    :returns: `Tensor` (batch x num_classes)
    """

    if model.head is None:
        raise RTFNError('model has no classifier head')

    features = rtfn_forward(model, x, training)
    if training:
        if rng is None:
            rng = np.random.default_rng(model.config.seed)
        features = L.dropout(features, model.config.dropout_rate, True, rng)
    return L.dense(features, model.head)


def supervised_loss(logits, labels):
    """
    Mean cross-entropy of logits against integer labels

    :param logits: `Tensor` (batch x num_classes)
    :param labels: integer class ids, one per row

    :returns: scalar `Tensor`
    """

    labels = np.asarray(labels)
    batch, num_classes = logits.shape
    if labels.shape != (batch,):
        raise DimensionError('expected {} labels, got shape {}'.format(
            batch, labels.shape))
    if not np.issubdtype(labels.dtype, np.integer) or \
            labels.min() < 0 or labels.max() >= num_classes:
        msg = 'labels must be integers in [0, {})'.format(num_classes)
        LOGGER.error(msg)
        raise DataError(msg)

    onehot = np.eye(num_classes)[labels]
    picked = T.sum_(T.log_softmax_rows(logits) * onehot, axis=1)
    return T.mean(picked) * -1.0


def classify(model, x):
    """
    Predicted class ids (inference mode)

    Ties resolve to the lowest class id.

    :param model: supervised `RtfnModel`
    :param x: array or `Tensor` (batch x 1 x input_length)

    :returns: `numpy.ndarray` of ints
    """

    logits = forward_logits(model, x, training=False)
    return np.argmax(logits.values, axis=1)


def decode(decoder, z):
    """
    Dense decoder, relu between layers and a linear output

    :param decoder: list of `Dense` layers
    :param z: `Tensor` (batch x feature_dim)

    :returns: `Tensor` (batch x input_length)
    """

    if not decoder:
        raise RTFNError('model has no decoder')
    if z.ndim != 2 or z.shape[1] != decoder[0].in_dim:
        raise DimensionError('decoder expects (batch, {}), got {}'.format(
            decoder[0].in_dim, z.shape))

    h = z
    for i, layer in enumerate(decoder):
        h = L.dense(h, layer)
        if i < len(decoder) - 1:
            h = T.relu(h)
    return h


def reconstruction_loss(x, x_rec):
    """Mean squared reconstruction error"""

    if not isinstance(x, Tensor):
        x = Tensor(x)
    if x.shape != x_rec.shape:
        raise DimensionError('reconstruction {} does not match input {}'
                             .format(x_rec.shape, x.shape))
    return T.mean(T.square(x - x_rec))


def encode(model, x):
    """
    Inference-mode feature vectors

    :param model: `RtfnModel`
    :param x: array (batch x input_length) or (batch x 1 x input_length)

    :returns: `numpy.ndarray` (batch x feature_dim)
    """

    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, np.newaxis, :]
    return rtfn_forward(model, Tensor(x), training=False).values


def count_parameters(model):
    return model.store.count()


def expected_parameter_count(config):
    """
    Trainable parameter count implied by a configuration

    :param config: `ModelConfig`

    :returns: `int`
    """

    def heads(c_in):
        return sum(f * c_in * k + 2 * f for k, f in config.conv_heads)

    def residual(c_in, c_out):
        total = 0
        channels = c_in
        for size in (8, 5, 3):
            total += c_out * channels * size + 2 * c_out
            channels = c_out
        if c_in != c_out:
            total += c_out * c_in + 2 * c_out
        return total

    channels = sum(f for _, f in config.conv_heads)
    count = heads(1) + 3 * channels * channels + heads(channels)

    for width in config.residual_channels:
        count += residual(channels, width)
        channels = width

    if config.use_attentional_lstm:
        h = config.lstm_hidden
        lstms = 1 if config.shared_lstm else 3
        count += lstms * 4 * (h + h * h + h)

    if config.task == 'supervised':
        count += config.feature_dim * config.num_classes + config.num_classes
    else:
        width = config.feature_dim
        for out in config.decoder_widths:
            count += width * out + out
            width = out

    return count


# checkpoints --------------------------------------------------------------

def save_checkpoint(model, path):
    """
    Write configuration and every parameter (buffers included)

    Layout: magic, uint32 config length, config JSON, uint32 tensor
    count, then per tensor its name, rank, dims and little-endian float64
    payload. All integers are little-endian uint32.

    :param model: `RtfnModel`
    :param path: output file path

    :returns: void
    """

    config_bytes = json.dumps(model.config.to_dict(),
                              sort_keys=True).encode('utf-8')
    state = model.store.state()

    with open(path, 'wb') as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack('<I', len(config_bytes)))
        fh.write(config_bytes)
        fh.write(struct.pack('<I', len(state)))
        for name, values in state.items():
            name_bytes = name.encode('utf-8')
            fh.write(struct.pack('<I', len(name_bytes)))
            fh.write(name_bytes)
            fh.write(struct.pack('<I', values.ndim))
            fh.write(struct.pack('<{}I'.format(values.ndim), *values.shape))
            fh.write(values.astype('<f8').tobytes())

    LOGGER.info('Checkpoint written to {}'.format(path))


class _Reader(object):
    def __init__(self, data, path):
        self.data = data
        self.path = path
        self.offset = 0

    def read(self, size):
        if self.offset + size > len(self.data):
            raise DataError('{}: truncated checkpoint'.format(self.path))
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def uint32(self, count=1):
        values = struct.unpack('<{}I'.format(count), self.read(4 * count))
        return values if count != 1 else values[0]


def load_checkpoint(path):
    """
    Rebuild a model from a checkpoint file

    :param path: checkpoint path

    :returns: `RtfnModel`
    """

    with open(path, 'rb') as fh:
        data = fh.read()

    reader = _Reader(data, path)
    if reader.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        msg = '{}: not a pyrtfn checkpoint'.format(path)
        LOGGER.error(msg)
        raise DataError(msg)

    try:
        config_dict = json.loads(reader.read(reader.uint32()).decode('utf-8'))
    except ValueError as err:
        raise DataError('{}: bad configuration block ({})'.format(path, err))
    if not isinstance(config_dict, dict):
        raise DataError('{}: configuration block is not a mapping'.format(
            path))

    try:
        model = RtfnModel(ModelConfig.from_dict(config_dict))
    except ConfigurationError as err:
        raise DataError('{}: incompatible configuration ({})'.format(
            path, err))

    state = {}
    for _ in range(reader.uint32()):
        try:
            name = reader.read(reader.uint32()).decode('utf-8')
        except UnicodeDecodeError:
            msg = '{}: parameter name at byte {} is not UTF-8'.format(
                path, reader.offset)
            LOGGER.error(msg)
            raise DataError(msg)
        ndim = reader.uint32()
        shape = (reader.uint32(),) if ndim == 1 else reader.uint32(ndim)
        size = int(np.prod(shape)) if shape else 1
        payload = np.frombuffer(reader.read(8 * size), dtype='<f8')
        state[name] = payload.reshape(shape).astype(np.float64)

    if reader.offset != len(data):
        raise DataError('{}: {} trailing bytes'.format(
            path, len(data) - reader.offset))

    if list(state.keys()) != list(model.store):
        raise DataError('{}: parameters do not match the configuration'
                        .format(path))
    for name, values in state.items():
        if values.shape != model.store[name].shape:
            raise DataError('{}: {} has shape {}, expected {}'.format(
                path, name, values.shape, model.store[name].shape))

    model.store.load_state(state)
    LOGGER.info('Checkpoint loaded from {}'.format(path))
    return model
