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

import os

import pytest

from pyrtfn.dataset import load_ucr_dataset
from pyrtfn.process.base import (MODEL_SETTINGS, TRAIN_SETTINGS,
                                 build_configs, load_run_config)
from pyrtfn.util import ConfigurationError, yaml_load


def get_test_file_path(filename):
    """helper function to open test file safely"""

    if os.path.isfile(filename):
        return filename
    else:
        return 'tests/{}'.format(filename)


@pytest.fixture()
def dataset():
    return load_ucr_dataset(get_test_file_path('data/SynthWaves_TRAIN.tsv'),
                            get_test_file_path('data/SynthWaves_TEST.tsv'))


def test_config_envvars():
    os.environ['RTFN_EPOCHS'] = '7'
    os.environ['RTFN_LOGFILE'] = '/tmp/pyrtfn.log'

    with open(get_test_file_path('pyrtfn-test-config-envvars.yml')) as fh:
        config = yaml_load(fh)

    assert isinstance(config, dict)
    assert config['epochs'] == 7
    assert config['logfile'] == '/tmp/pyrtfn.log'

    os.environ.pop('RTFN_EPOCHS')

    with pytest.raises(EnvironmentError):
        with open(get_test_file_path('pyrtfn-test-config-envvars.yml')) as fh:  # noqa
            config = yaml_load(fh)

    os.environ.pop('RTFN_LOGFILE')


def test_default_config_file():
    config = load_run_config(get_test_file_path('../pyrtfn-config.yml'))
    assert config['lstm_hidden'] == 64
    assert config['conv_heads'] == [[3, 32], [5, 32], [8, 32]]


def test_load_run_config(tmp_path):
    assert load_run_config() == {}

    config = load_run_config(get_test_file_path('pyrtfn-test-config.yml'))
    assert config['epochs'] == 3
    assert config['log_level'] == 'ERROR'

    empty = tmp_path / 'empty.yml'
    empty.write_text('')
    assert load_run_config(str(empty)) == {}

    listed = tmp_path / 'list.yml'
    listed.write_text('- 1\n- 2\n')
    with pytest.raises(ConfigurationError):
        load_run_config(str(listed))

    unknown = tmp_path / 'unknown.yml'
    unknown.write_text('epochs: 2\nheads: 3\ninput_length: 10\n')
    with pytest.raises(ConfigurationError) as error:
        load_run_config(str(unknown))
    assert 'heads, input_length' in str(error.value)


def test_load_run_config_unreadable(tmp_path):
    broken = tmp_path / 'broken.yml'
    broken.write_text('epochs: 1\nconv_heads: [\n')
    with pytest.raises(ConfigurationError) as error:
        load_run_config(str(broken))
    assert 'broken.yml: cannot read configuration' in str(error.value)

    unset = tmp_path / 'unset.yml'
    unset.write_text('epochs: ${RTFN_UNSET_VARIABLE}\n')
    with pytest.raises(ConfigurationError):
        load_run_config(str(unset))

    binary = tmp_path / 'binary.yml'
    binary.write_bytes(b'epochs: \xff\xfe\n')
    with pytest.raises(ConfigurationError):
        load_run_config(str(binary))

    with pytest.raises(ConfigurationError):
        load_run_config(str(tmp_path / 'missing.yml'))


def test_settings():
    assert 'lstm_hidden' in MODEL_SETTINGS
    assert 'input_length' not in MODEL_SETTINGS
    assert 'seed' not in MODEL_SETTINGS
    assert 'batch_size' in TRAIN_SETTINGS
    assert 'seed' not in TRAIN_SETTINGS


def test_build_configs(dataset):
    run_config = {'lstm_hidden': 8, 'epochs': 2, 'seed': 4,
                  'log_level': 'ERROR'}

    model_config, train_config = build_configs(run_config, dataset,
                                               'supervised')
    assert model_config.lstm_hidden == 8
    assert model_config.input_length == 32
    assert model_config.num_classes == 2
    assert model_config.class_labels == ['1', '2']
    assert model_config.seed == 4
    assert train_config.epochs == 2
    assert train_config.seed == 4

    model_config, train_config = build_configs(
        run_config, dataset, 'autoencoder', seed=11,
        overrides={'use_attentional_lstm': False})
    assert model_config.task == 'autoencoder'
    assert model_config.use_attentional_lstm is False
    assert model_config.seed == train_config.seed == 11

    with pytest.raises(ConfigurationError):
        build_configs({'dropout_rate': 2.0}, dataset, 'supervised')
