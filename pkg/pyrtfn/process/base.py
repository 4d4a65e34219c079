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

from dataclasses import fields
import logging
import os
import time

import yaml

from pyrtfn.dataset import load_ucr_dataset
from pyrtfn.model import ModelConfig, save_checkpoint
from pyrtfn.train import TrainConfig
from pyrtfn.util import (ConfigurationError, RTFNError, config_hash,
                         resolve_seed, to_json, yaml_load)

LOGGER = logging.getLogger(__name__)

#: model settings taken from the data rather than the run configuration
DERIVED_SETTINGS = ('input_length', 'num_classes', 'class_labels', 'task')

#: run configuration keys that are not hyperparameters
LOGGING_SETTINGS = ('log_level', 'logfile')


MODEL_SETTINGS = [f.name for f in fields(ModelConfig)
                  if f.name not in DERIVED_SETTINGS + ('seed',)]
TRAIN_SETTINGS = [f.name for f in fields(TrainConfig) if f.name != 'seed']


def load_run_config(path=None):
    """
    Read a flat YAML run configuration

    :param path: YAML file (empty configuration when `None`)

    :returns: `dict` of settings
    """

    if path is None:
        return {}

    try:
        with open(path, encoding='utf-8') as fh:
            run_config = yaml_load(fh)
    except (yaml.YAMLError, EnvironmentError, UnicodeDecodeError) as err:
        msg = '{}: cannot read configuration: {}'.format(
            path, ' '.join(str(err).split()))
        LOGGER.error(msg)
        raise ConfigurationError(msg)

    if run_config is None:
        return {}
    if not isinstance(run_config, dict):
        msg = '{}: configuration must be a mapping'.format(path)
        LOGGER.error(msg)
        raise ConfigurationError(msg)

    allowed = set(MODEL_SETTINGS + TRAIN_SETTINGS) | \
        set(LOGGING_SETTINGS) | {'seed'}
    unknown = sorted(set(run_config) - allowed)
    if unknown:
        msg = '{}: unknown setting(s): {}'.format(path, ', '.join(unknown))
        LOGGER.error(msg)
        raise ConfigurationError(msg)

    return run_config


def build_configs(run_config, dataset, task, seed=None, overrides={}):
    """
    Model and training configuration of one run

    :param run_config: `dict` from `load_run_config`
    :param dataset: `SeriesDataset` supplying length and classes
    :param task: `supervised` or `autoencoder`
    :param seed: command line seed (or `None`)
    :param overrides: model settings replacing configured values

    :returns: tuple of (`ModelConfig`, `TrainConfig`)
    """

    seed = resolve_seed(seed, run_config.get('seed'))

    model_settings = {k: v for k, v in run_config.items()
                      if k in MODEL_SETTINGS}
    model_settings.update(overrides)
    model_settings.update(input_length=dataset.input_length,
                          num_classes=dataset.num_classes,
                          class_labels=dataset.class_labels,
                          task=task, seed=seed)

    train_settings = {k: v for k, v in run_config.items()
                      if k in TRAIN_SETTINGS}
    train_settings['seed'] = seed

    return (ModelConfig.from_dict(model_settings),
            TrainConfig.from_dict(train_settings))


class BaseProcessor(object):
    """generic Processor ABC. Pipelines are inherited from this class"""

    #: suffix of the output file names
    suffix = ''

    def __init__(self, processor_def, process_metadata):
        """
        Initialize object

        :param processor_def: processor definition
        :param process_metadata: process metadata `dict`

        :returns: pyrtfn.process.base.BaseProcessor
        """

        self.name = processor_def['name']
        self.metadata = process_metadata

    def execute(self, data):
        """
        execute the process

        :param data: `dict` of inputs (`train_file`, `test_file`, `config`,
                     `seed`, `out_dir` and pipeline specific ones)

        :returns: dict of run metrics
        """

        raise NotImplementedError()

    def prepare(self, data, task, overrides={}):
        """
        Load the dataset and derive the configurations

        :param data: process inputs
        :param task: model task
        :param overrides: model settings replacing configured values

        :returns: tuple of (`SeriesDataset`, `ModelConfig`, `TrainConfig`)
        """

        try:
            dataset = load_ucr_dataset(data['train_file'], data['test_file'])
        except KeyError as err:
            raise ProcessorExecuteError('missing input {}'.format(err))

        model_config, train_config = build_configs(
            data.get('config', {}), dataset, task, data.get('seed'),
            overrides)
        return dataset, model_config, train_config

    def write_outputs(self, dataset, model, history, metrics, out_dir):
        """
        Write checkpoint, history CSV and metrics JSON

        :returns: `dict` of output paths
        """

        os.makedirs(out_dir, exist_ok=True)
        prefix = os.path.join(out_dir, dataset.name + self.suffix)
        paths = {
            'checkpoint': '{}.ckpt'.format(prefix),
            'history': '{}_history.csv'.format(prefix),
            'metrics': '{}_metrics.json'.format(prefix)
        }

        save_checkpoint(model, paths['checkpoint'])
        history.write(paths['history'])
        with open(paths['metrics'], 'w') as fh:
            fh.write(to_json(metrics, pretty=True))
            fh.write('\n')

        LOGGER.info('Outputs written to {}'.format(out_dir))
        return paths

    @staticmethod
    def metrics(dataset, model_config, train_config, started):
        return {
            'dataset': dataset.name,
            'seed': model_config.seed,
            'config_hash': config_hash({'model': model_config.to_dict(),
                                        'train': train_config.to_dict()}),
            'wall_time_s': round(time.perf_counter() - started, 3)
        }

    def __repr__(self):
        return '<BaseProcessor> {}'.format(self.name)


class ProcessorExecuteError(RTFNError):
    """pipeline input error"""
    pass
