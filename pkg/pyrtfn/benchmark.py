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

"""Recompute published summary figures from the bundled results tables"""

import logging
import os

import yaml

from pyrtfn.evaluation import ResultsTable, rank_all, rank_table
from pyrtfn.util import DATA_DIR, DataError, yaml_load

LOGGER = logging.getLogger(__name__)

EXPECTED_FILE = 'expected.yml'


class CheckResult(object):
    """Computed against expected figures of one table"""

    def __init__(self, label, summary, expected, tolerance, path):
        self.label = label
        self.path = path
        self.summary = summary
        self.expected = expected
        self.tolerance = tolerance

    def computed(self, key):
        return getattr(self.summary, key)

    @property
    def ok(self):
        for key, value in self.expected.items():
            if isinstance(value, int):
                if self.computed(key) != value:
                    return False
            elif abs(self.computed(key) - value) > self.tolerance:
                return False
        return True

    def __str__(self):
        parts = []
        for key in self.expected:
            value = self.computed(key)
            if isinstance(value, float):
                parts.append('{}={:.6f}'.format(key, value))
            else:
                parts.append('{}={}'.format(key, value))
        return '{} {} {}'.format(self.label, ' '.join(parts),
                                 'OK' if self.ok else 'MISMATCH')


def load_checks(data_dir=DATA_DIR):
    """
    Read the expected figures

    :param data_dir: directory holding `expected.yml` and the tables

    :returns: `list` of check definitions
    """

    path = os.path.join(data_dir, EXPECTED_FILE)
    if not os.path.exists(path):
        msg = 'no {} in {}'.format(EXPECTED_FILE, data_dir)
        LOGGER.error(msg)
        raise DataError(msg)

    try:
        with open(path) as fh:
            definition = yaml_load(fh)
    except (yaml.YAMLError, EnvironmentError, UnicodeDecodeError) as err:
        msg = '{}: cannot read checks: {}'.format(
            path, ' '.join(str(err).split()))
        LOGGER.error(msg)
        raise DataError(msg)

    try:
        return definition['checks']
    except (KeyError, TypeError):
        raise DataError('{}: missing checks list'.format(path))


def reproduce_tables(data_dir=DATA_DIR):
    """
    Rank the focus algorithm of every bundled table

    :param data_dir: directory holding `expected.yml` and the tables

    :returns: `list` of `CheckResult`
    """

    results = []
    for check in load_checks(data_dir):
        if not isinstance(check, dict) or \
                not {'label', 'file', 'focus', 'expect'} <= set(check):
            msg = 'check {!r} needs label, file, focus and expect'.format(
                check)
            LOGGER.error(msg)
            raise DataError(msg)
        path = os.path.join(data_dir, check['file'])
        summary = rank_table(ResultsTable.from_csv(path), check['focus'])
        result = CheckResult(check['label'], summary, check['expect'],
                             float(check.get('tolerance', 1e-9)), path)
        LOGGER.info(str(result))
        results.append(result)
    return results


def summarize(path):
    """
    Summary lines for every algorithm of one table

    :param path: results CSV

    :returns: `list` of `str`
    """

    lines = []
    for summary in rank_all(ResultsTable.from_csv(path)):
        lines.append('{:<28} best={:<3} win={:<3} tie={:<3} lose={:<3} '
                     'mean={:.4f} rank={:.2f}'.format(
                         summary.algorithm, summary.best, summary.win,
                         summary.tie, summary.lose, summary.mean,
                         summary.average_rank))
    return lines
