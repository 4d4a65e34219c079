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

# Desk-scale runs on real UCR archive data. Set RTFN_UCR_ROOT to the
# archive directory (one sub-directory per dataset holding
# <name>_TRAIN.tsv and <name>_TEST.tsv) to enable them.

import os

import numpy as np
import pytest

from pyrtfn.dataset import SeriesDataset, load_ucr_dataset
from pyrtfn.evaluation import kmeans_fit, rand_index
from pyrtfn.model import ModelConfig, encode
from pyrtfn.train import TrainConfig, train_autoencoder, train_supervised

UCR_ROOT = os.environ.get('RTFN_UCR_ROOT')

pytestmark = pytest.mark.skipif(not UCR_ROOT,
                                reason='RTFN_UCR_ROOT is not set')

SEEDS = (0, 1, 2)


def _load(name):
    directory = os.path.join(UCR_ROOT, name)
    if not os.path.isdir(directory):
        pytest.skip('{} not in the archive'.format(name))
    return load_ucr_dataset(
        os.path.join(directory, '{}_TRAIN.tsv'.format(name)),
        os.path.join(directory, '{}_TEST.tsv'.format(name)))


def _config(dataset, seed, **kwargs):
    return ModelConfig(input_length=dataset.input_length,
                       num_classes=dataset.num_classes,
                       class_labels=dataset.class_labels, seed=seed,
                       **kwargs)


def test_coffee_supervised():
    dataset = _load('Coffee')

    scores = []
    for seed in SEEDS:
        _, history = train_supervised(dataset, _config(dataset, seed),
                                      TrainConfig(seed=seed))
        scores.append(history.test_accuracy)

    assert np.median(scores) >= 0.92


def test_gunpoint_clustering():
    dataset = _load('GunPoint')

    scores = []
    wins = 0
    for seed in SEEDS:
        config = _config(dataset, seed, task='autoencoder')
        model, _ = train_autoencoder(dataset, config, TrainConfig(seed=seed))

        k = dataset.num_classes
        labels = kmeans_fit(encode(model, dataset.test_x), k,
                            seed=seed).labels
        raw = kmeans_fit(dataset.test_x, k, seed=seed).labels

        score = rand_index(labels, dataset.test_y)
        scores.append(score)
        if score > rand_index(raw, dataset.test_y):
            wins += 1

    assert np.median(scores) >= 0.55
    assert wins >= 2


def _subsample(dataset, count, rng):
    train = rng.choice(len(dataset.train_y),
                       min(count, len(dataset.train_y)), replace=False)
    test = rng.choice(len(dataset.test_y),
                      min(count, len(dataset.test_y)), replace=False)
    return SeriesDataset(dataset.name, dataset.train_x[train],
                         dataset.train_y[train], dataset.test_x[test],
                         dataset.test_y[test], dataset.class_labels)


def test_attentional_lstm_ablation():
    dataset = _load('SemgHandMovementCh2')
    dataset = _subsample(dataset, 50, np.random.default_rng(0))
    if len(set(dataset.train_y.tolist())) < dataset.num_classes:
        pytest.skip('subsample misses a class')

    full = []
    ablated = []
    for seed in SEEDS:
        cfg = TrainConfig(seed=seed)
        _, history = train_supervised(dataset, _config(dataset, seed), cfg)
        full.append(history.test_accuracy)
        _, history = train_supervised(
            dataset, _config(dataset, seed, use_attentional_lstm=False), cfg)
        ablated.append(history.test_accuracy)

    assert np.median(full) >= np.median(ablated)
