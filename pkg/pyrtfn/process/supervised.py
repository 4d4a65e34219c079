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

import logging
import time

from pyrtfn.process.base import BaseProcessor
from pyrtfn.train import train_supervised

LOGGER = logging.getLogger(__name__)

#: Process metadata and description
PROCESS_METADATA = {
    'version': '0.1.0',
    'id': 'supervised',
    'title': 'Supervised time series classification',
    'description': 'Trains the two-branch network with a softmax head on '
                   'a UCR train split and scores top-1 accuracy on the '
                   'test split',
    'keywords': ['classification', 'UCR', 'attentional LSTM'],
    'inputs': [{
        'id': 'train_file',
        'title': 'UCR-format training split',
        'minOccurs': 1,
        'maxOccurs': 1
    }, {
        'id': 'test_file',
        'title': 'UCR-format test split',
        'minOccurs': 1,
        'maxOccurs': 1
    }, {
        'id': 'config',
        'title': 'run configuration mapping',
        'minOccurs': 0,
        'maxOccurs': 1
    }, {
        'id': 'seed',
        'title': 'random seed',
        'minOccurs': 0,
        'maxOccurs': 1
    }, {
        'id': 'use_attentional_lstm',
        'title': 'override of the attentional LSTM branch switch',
        'minOccurs': 0,
        'maxOccurs': 1
    }, {
        'id': 'out_dir',
        'title': 'output directory',
        'minOccurs': 0,
        'maxOccurs': 1
    }],
    'outputs': [{
        'id': 'metrics',
        'title': 'dataset, seed, config_hash, test_accuracy, wall_time_s',
        'output': {
            'formats': [{
                'mimeType': 'application/json'
            }]
        }
    }]
}


class SupervisedProcessor(BaseProcessor):
    """Supervised classification pipeline"""

    def __init__(self, processor_def):
        """
        Initialize object

        :param processor_def: processor definition

        :returns: pyrtfn.process.supervised.SupervisedProcessor
        """

        BaseProcessor.__init__(self, processor_def, PROCESS_METADATA)

    def execute(self, data):
        started = time.perf_counter()

        overrides = {}
        if data.get('use_attentional_lstm') is not None:
            overrides['use_attentional_lstm'] = data['use_attentional_lstm']

        dataset, model_config, train_config = self.prepare(
            data, 'supervised', overrides)
        model, history = train_supervised(dataset, model_config,
                                          train_config)

        metrics = self.metrics(dataset, model_config, train_config, started)
        metrics['test_accuracy'] = history.test_accuracy
        self.write_outputs(dataset, model, history, metrics,
                           data.get('out_dir', '.'))
        return metrics

    def __repr__(self):
        return '<SupervisedProcessor> {}'.format(self.name)
