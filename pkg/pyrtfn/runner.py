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

"""Command line pipelines"""

import logging
import os

import click

from pyrtfn.benchmark import reproduce_tables, summarize
from pyrtfn.dataset import load_ucr_split
from pyrtfn.evaluation import top1_accuracy
from pyrtfn.gradcheck import SUITES, run_suites
from pyrtfn.log import setup_logger
from pyrtfn.model import classify, load_checkpoint
from pyrtfn.plugin import load_plugin
from pyrtfn.process.base import load_run_config
from pyrtfn.train import as_batch
from pyrtfn.util import DATA_DIR, RTFNError, to_json

LOGGER = logging.getLogger(__name__)

#: environment variable naming the default run configuration
CONFIG_ENV = 'RTFN_CONFIG'


class CommandError(click.ClickException):
    """Library error reported as one stderr line"""

    exit_code = 1

    def __init__(self, error):
        click.ClickException.__init__(self, str(error))
        self.error_class = type(error).__name__

    def format_message(self):
        return '{}: {}'.format(self.error_class, self.message)

    def show(self, file=None):
        click.echo('error: {}'.format(self.format_message()), err=True)


def _setup(config_file):
    if config_file is None:
        config_file = os.environ.get(CONFIG_ENV) or None
    run_config = load_run_config(config_file)
    setup_logger({'level': run_config.get('log_level', 'WARNING'),
                  'logfile': run_config.get('logfile')})
    return run_config


def _run_process(name, data, config_file):
    try:
        data['config'] = _setup(config_file)
        processor = load_plugin('process', {'name': name})
        LOGGER.debug('Running {}'.format(processor))
        return processor, processor.execute(data)
    except RTFNError as err:
        raise CommandError(err)


_pipeline_options = [
    click.argument('train_file', type=click.Path(exists=True,
                                                 dir_okay=False)),
    click.argument('test_file', type=click.Path(exists=True,
                                                dir_okay=False)),
    click.option('--config', '-c', 'config_file',
                 type=click.Path(exists=True, dir_okay=False),
                 help='run configuration file'),
    click.option('--seed', type=int, default=None, help='random seed'),
    click.option('--out', 'out_dir', default='.',
                 type=click.Path(file_okay=False), help='output directory')
]


def pipeline_options(func):
    for option in reversed(_pipeline_options):
        func = option(func)
    return func


@click.command()
@pipeline_options
@click.option('--no-alstm', 'no_alstm', is_flag=True, default=False,
              help='drop the attentional LSTM branch')
def train(train_file, test_file, config_file, seed, out_dir, no_alstm):
    """Train and score the supervised classifier"""

    data = {
        'train_file': train_file,
        'test_file': test_file,
        'seed': seed,
        'out_dir': out_dir,
        'use_attentional_lstm': False if no_alstm else None
    }
    _, metrics = _run_process('Supervised', data, config_file)
    click.echo(to_json(metrics))


@click.command()
@pipeline_options
@click.option('--restarts', type=int, default=10, help='k-means restarts')
def cluster(train_file, test_file, config_file, seed, out_dir, restarts):
    """Train the autoencoder and cluster the test split"""

    data = {
        'train_file': train_file,
        'test_file': test_file,
        'seed': seed,
        'out_dir': out_dir,
        'restarts': restarts
    }
    processor, metrics = _run_process('Clustering', data, config_file)
    click.echo(to_json(metrics))
    click.echo('kmeans_raw_rand_index={:.6f}'.format(processor.baseline))


@click.command()
@click.option('--checkpoint', required=True,
              type=click.Path(exists=True, dir_okay=False),
              help='checkpoint written by train')
@click.argument('test_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--config', '-c', 'config_file',
              type=click.Path(exists=True, dir_okay=False),
              help='run configuration file (logging)')
def evaluate(checkpoint, test_file, config_file):
    """Top-1 accuracy of a checkpoint on a test split"""

    try:
        _setup(config_file)
        model = load_checkpoint(checkpoint)
        if model.config.class_labels is None:
            raise RTFNError('checkpoint has no class labels')
        x, y = load_ucr_split(test_file, model.config.class_labels,
                              model.config.input_length)
        accuracy = top1_accuracy(classify(model, as_batch(x)), y)
    except RTFNError as err:
        raise CommandError(err)

    click.echo('test_accuracy={:.6f}'.format(accuracy))


@click.command('reproduce-tables')
@click.pass_context
@click.option('--data', 'data_dir', default=DATA_DIR,
              type=click.Path(exists=True, file_okay=False),
              help='directory with the results tables and expected.yml')
@click.option('--all', 'show_all', is_flag=True, default=False,
              help='also summarize every algorithm of every table')
def reproduce_tables_(ctx, data_dir, show_all):
    """Recompute the published summary figures"""

    try:
        results = reproduce_tables(data_dir)
        for result in results:
            click.echo(str(result))
            if show_all:
                for line in summarize(result.path):
                    click.echo('    {}'.format(line))
    except RTFNError as err:
        raise CommandError(err)

    ctx.exit(0 if all(result.ok for result in results) else 1)


@click.command('gradcheck')
@click.pass_context
@click.option('--seed', type=int, default=0, help='instance seed')
@click.option('--instances', type=int, default=20,
              help='random instances per operation')
@click.option('--suite', 'suites', multiple=True,
              type=click.Choice([suite.name for suite in SUITES]),
              help='run only this suite (repeatable)')
def gradcheck_(ctx, seed, instances, suites):
    """Finite-difference check of every differentiable op and layer"""

    results = run_suites(seed=seed, instances=instances,
                         names=list(suites) or None)
    for result in results:
        click.echo(str(result))

    ctx.exit(0 if all(result.passed for result in results) else 1)
