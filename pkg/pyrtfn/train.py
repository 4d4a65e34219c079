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

"""Adam optimization, learning-rate scheduling and the training loops"""

from dataclasses import asdict, dataclass, fields
import logging
import math

import numpy as np

from pyrtfn.evaluation import top1_accuracy
from pyrtfn.model import (RtfnModel, classify, decode, forward_logits,
                          reconstruction_loss, rtfn_forward, supervised_loss)
from pyrtfn.plugin import load_plugin
from pyrtfn.tensor import Tape, Tensor, backward
from pyrtfn.util import ConfigurationError, ContractError, DataError

LOGGER = logging.getLogger(__name__)

#: epochs used when `TrainConfig.epochs` is unset
DEFAULT_EPOCHS = {
    'supervised': 200,
    'autoencoder': 100
}


@dataclass
class TrainConfig:
    """Optimizer and schedule hyperparameters"""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 16
    epochs: int = None
    lr_patience: int = 20
    lr_factor: float = 0.5
    lr_floor: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigurationError('learning_rate must be positive')
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigurationError('beta1 and beta2 must be in [0, 1)')
        if self.eps <= 0:
            raise ConfigurationError('eps must be positive')
        if self.batch_size < 1:
            raise ConfigurationError('batch_size must be >= 1')
        if self.epochs is not None and self.epochs < 1:
            raise ConfigurationError('epochs must be >= 1')
        if self.lr_patience < 1:
            raise ConfigurationError('lr_patience must be >= 1')
        if not 0 < self.lr_factor < 1:
            raise ConfigurationError('lr_factor must be in (0, 1)')
        if self.lr_floor < 0:
            raise ConfigurationError('lr_floor must be >= 0')

    def resolved_epochs(self, task):
        if self.epochs is not None:
            return self.epochs
        return DEFAULT_EPOCHS[task]

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, dict_):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(dict_) - known)
        if unknown:
            raise ConfigurationError('unknown training setting(s): {}'.format(
                ', '.join(unknown)))
        try:
            return cls(**dict_)
        except (TypeError, ValueError) as err:
            msg = 'invalid training setting: {}'.format(err)
            LOGGER.error(msg)
            raise ConfigurationError(msg)


class AdamState(object):
    """First and second moment estimates per trainable parameter"""

    def __init__(self, store):
        self.m = {name: np.zeros_like(p.values)
                  for name, p in store.trainable()}
        self.v = {name: np.zeros_like(p.values)
                  for name, p in store.trainable()}
        self.t = 0


def adam_step(store, state, t, cfg, lr=None):
    """
    One bias-corrected Adam update of every trainable parameter

    Gradients are reset to zero afterwards.

    :param store: `ParamStore`
    :param state: `AdamState`
    :param t: step counter, starting at 1
    :param cfg: `TrainConfig`
    :param lr: learning rate override (scheduled rate)

    :returns: void
    """

    if t < 1:
        raise ContractError('Adam step counter starts at 1, got {}'.format(t))

    lr = cfg.learning_rate if lr is None else lr
    correction1 = 1.0 - cfg.beta1 ** t
    correction2 = 1.0 - cfg.beta2 ** t

    for name, param in store.trainable():
        if param.grad is None or name not in state.m:
            msg = 'no gradient buffer for parameter {}'.format(name)
            LOGGER.error(msg)
            raise ContractError(msg)

        grad = param.grad
        m = state.m[name]
        v = state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * grad
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * grad * grad

        param.values -= lr * (m / correction1) / (
            np.sqrt(v / correction2) + cfg.eps)
        grad.fill(0.0)

    state.t = t


class PlateauScheduler(object):
    """Multiply the learning rate by a factor when the loss stalls"""

    def __init__(self, cfg):
        self.lr = cfg.learning_rate
        self.factor = cfg.lr_factor
        self.patience = cfg.lr_patience
        self.floor = cfg.lr_floor
        self.best = math.inf
        self.wait = 0

    def step(self, loss):
        """
        Record an epoch loss

        :param loss: epoch mean loss

        :returns: learning rate for the next epoch
        """

        if loss < self.best:
            self.best = loss
            self.wait = 0
            return self.lr

        self.wait += 1
        if self.wait >= self.patience:
            reduced = max(self.lr * self.factor, self.floor)
            if reduced < self.lr:
                LOGGER.info('Reducing learning rate to {:g}'.format(reduced))
                self.lr = reduced
            self.wait = 0
        return self.lr


class TrainingHistory(object):
    """Per-epoch records of one training run"""

    def __init__(self, fields_):
        self.fields = list(fields_)
        self.rows = []
        self.test_accuracy = None

    def append(self, **row):
        self.rows.append({k: row[k] for k in self.fields})

    def column(self, name):
        return [row[name] for row in self.rows]

    def __len__(self):
        return len(self.rows)

    def to_csv(self):
        """
        Render the history with the CSV formatter plugin

        :returns: `bytes` of CSV
        """

        formatter = load_plugin('formatter', {'name': 'CSV'})
        return formatter.write(data={'fields': self.fields,
                                     'rows': self.rows})

    def write(self, path):
        with open(path, 'wb') as fh:
            fh.write(self.to_csv())


def iterate_minibatches(count, batch_size, rng):
    """
    Shuffled index batches covering every sample once

    The last batch is smaller when `batch_size` does not divide `count`.

    :param count: number of samples
    :param batch_size: samples per batch
    :param rng: `numpy.random.Generator`

    :returns: generator of index arrays
    """

    order = rng.permutation(count)
    for start in range(0, count, batch_size):
        yield order[start:start + batch_size]


def as_batch(x):
    """(samples x length) array -> (samples x 1 x length) `Tensor`"""

    return Tensor(np.asarray(x, dtype=np.float64)[:, np.newaxis, :])


def evaluate_accuracy(model, x, y, batch_size=64):
    """
    Inference-mode top-1 accuracy

    :param model: supervised `RtfnModel`
    :param x: array (samples x input_length)
    :param y: integer labels

    :returns: `float`
    """

    predictions = np.concatenate([
        classify(model, as_batch(x[start:start + batch_size]))
        for start in range(0, len(x), batch_size)])
    return top1_accuracy(predictions, y)


def _generators(seed):
    shuffle_seq, dropout_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(shuffle_seq), \
        np.random.default_rng(dropout_seq)


def _check_split(dataset):
    if len(dataset.train_y) == 0:
        msg = 'training split of {} is empty'.format(dataset.name)
        LOGGER.error(msg)
        raise DataError(msg)


def train_supervised(dataset, model_config, train_config):
    """
    Train the classifier with cross-entropy

    :param dataset: `pyrtfn.dataset.SeriesDataset`
    :param model_config: `ModelConfig` (task `supervised`)
    :param train_config: `TrainConfig`

    :returns: tuple of (`RtfnModel`, `TrainingHistory`)
    """

    _check_split(dataset)
    missing = sorted(set(range(model_config.num_classes)) -
                     set(int(c) for c in dataset.train_y))
    if missing:
        msg = 'no training samples for class id(s) {}'.format(missing)
        LOGGER.error(msg)
        raise DataError(msg)

    model = RtfnModel(model_config)
    state = AdamState(model.store)
    scheduler = PlateauScheduler(train_config)
    shuffle_rng, dropout_rng = _generators(train_config.seed)
    history = TrainingHistory(['epoch', 'loss', 'accuracy', 'lr'])

    count = len(dataset.train_y)
    epochs = train_config.resolved_epochs('supervised')
    step = 0

    LOGGER.info('Training {} on {} series for {} epochs'.format(
        dataset.name, count, epochs))

    for epoch in range(1, epochs + 1):
        lr = scheduler.lr
        total_loss = 0.0
        correct = 0
        for index in iterate_minibatches(count, train_config.batch_size,
                                         shuffle_rng):
            labels = dataset.train_y[index]
            with Tape() as tape:
                logits = forward_logits(model, as_batch(
                    dataset.train_x[index]), training=True, rng=dropout_rng)
                loss = supervised_loss(logits, labels)
            backward(tape, loss)
            step += 1
            adam_step(model.store, state, step, train_config, lr)

            total_loss += loss.item() * len(index)
            correct += int(np.sum(np.argmax(logits.values, axis=1) == labels))

        epoch_loss = total_loss / count
        history.append(epoch=epoch, loss=epoch_loss,
                       accuracy=correct / count, lr=lr)
        LOGGER.debug('epoch {} loss {:.6f}'.format(epoch, epoch_loss))
        scheduler.step(epoch_loss)

    if len(dataset.test_y) > 0:
        history.test_accuracy = evaluate_accuracy(model, dataset.test_x,
                                                  dataset.test_y)
        LOGGER.info('Test accuracy of {}: {:.6f}'.format(
            dataset.name, history.test_accuracy))

    return model, history


def train_autoencoder(dataset, model_config, train_config):
    """
    Train the encoder and dense decoder on reconstruction error

    :param dataset: `pyrtfn.dataset.SeriesDataset`
    :param model_config: `ModelConfig` (task `autoencoder`)
    :param train_config: `TrainConfig`

    :returns: tuple of (`RtfnModel`, `TrainingHistory`)
    """

    _check_split(dataset)

    model = RtfnModel(model_config)
    state = AdamState(model.store)
    scheduler = PlateauScheduler(train_config)
    shuffle_rng, _ = _generators(train_config.seed)
    history = TrainingHistory(['epoch', 'loss', 'lr'])

    count = len(dataset.train_y)
    epochs = train_config.resolved_epochs('autoencoder')
    step = 0

    LOGGER.info('Training autoencoder on {} ({} series, {} epochs)'.format(
        dataset.name, count, epochs))

    for epoch in range(1, epochs + 1):
        lr = scheduler.lr
        total_loss = 0.0
        for index in iterate_minibatches(count, train_config.batch_size,
                                         shuffle_rng):
            series = dataset.train_x[index]
            with Tape() as tape:
                features = rtfn_forward(model, as_batch(series),
                                        training=True)
                loss = reconstruction_loss(series,
                                           decode(model.decoder, features))
            backward(tape, loss)
            step += 1
            adam_step(model.store, state, step, train_config, lr)
            total_loss += loss.item() * len(index)

        epoch_loss = total_loss / count
        history.append(epoch=epoch, loss=epoch_loss, lr=lr)
        LOGGER.debug('epoch {} reconstruction loss {:.6f}'.format(
            epoch, epoch_loss))
        scheduler.step(epoch_loss)

    return model, history
