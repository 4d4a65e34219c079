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

from pyrtfn.evaluation import kmeans_fit, rand_index
from pyrtfn.model import encode
from pyrtfn.process.base import BaseProcessor
from pyrtfn.train import train_autoencoder

LOGGER = logging.getLogger(__name__)

#: Process metadata and description
PROCESS_METADATA = {
    'version': '0.1.0',
    'id': 'clustering',
    'title': 'Unsupervised time series clustering',
    'description': 'Trains the network as the encoder of a dense '
                   'autoencoder, clusters the encoded test split with '
                   'k-means (k = number of classes) and scores the Rand '
                   'index against the true labels',
    'keywords': ['clustering', 'autoencoder', 'k-means', 'Rand index'],
    'inputs': [{
        'id': 'train_file',
        'title': 'UCR-format training split',
        'minOccurs': 1,
        'maxOccurs': 1
    }, {
        'id': 'test_file',
        'title': 'UCR-format split to cluster',
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
        'id': 'restarts',
        'title': 'k-means restarts',
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
        'title': 'dataset, seed, config_hash, rand_index, wall_time_s',
        'output': {
            'formats': [{
                'mimeType': 'application/json'
            }]
        }
    }]
}


class ClusteringProcessor(BaseProcessor):
    """Autoencoder + k-means pipeline"""

    suffix = '_cluster'

    def __init__(self, processor_def):
        """
        Initialize object

        :param processor_def: processor definition

        :returns: pyrtfn.process.clustering.ClusteringProcessor
        """

        BaseProcessor.__init__(self, processor_def, PROCESS_METADATA)
        self.baseline = None

    def execute(self, data):
        started = time.perf_counter()
        restarts = int(data.get('restarts', 10))

        dataset, model_config, train_config = self.prepare(
            data, 'autoencoder')
        model, history = train_autoencoder(dataset, model_config,
                                           train_config)

        k = dataset.num_classes
        features = encode(model, dataset.test_x)
        assignment = kmeans_fit(features, k, restarts=restarts,
                                seed=model_config.seed)
        score = rand_index(assignment.labels, dataset.test_y)

        raw = kmeans_fit(dataset.test_x, k, restarts=restarts,
                         seed=model_config.seed)
        self.baseline = rand_index(raw.labels, dataset.test_y)
        LOGGER.info('Rand index {:.4f} (k-means on raw series {:.4f})'.format(
            score, self.baseline))

        metrics = self.metrics(dataset, model_config, train_config, started)
        metrics['rand_index'] = score
        self.write_outputs(dataset, model, history, metrics,
                           data.get('out_dir', '.'))
        return metrics

    def __repr__(self):
        return '<ClusteringProcessor> {}'.format(self.name)
