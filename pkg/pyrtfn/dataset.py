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
UCR-format series files: one series per line, class label first, values
separated by tabs, commas or whitespace.
"""

from dataclasses import dataclass
import logging
import math
import os

import numpy as np

from pyrtfn.util import DataError

LOGGER = logging.getLogger(__name__)

#: tokens read as a missing value
MISSING_TOKENS = ('', 'nan', 'na', '?')

#: smallest standard deviation used by z-normalization
SIGMA_FLOOR = 1e-8


@dataclass
class SeriesDataset:
    """Z-normalized, equal-length train and test splits"""

    name: str
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    class_labels: list

    @property
    def num_classes(self):
        return len(self.class_labels)

    @property
    def input_length(self):
        return self.train_x.shape[1]

    def __repr__(self):
        return '<SeriesDataset> {} ({} train, {} test, length {})'.format(
            self.name, len(self.train_y), len(self.test_y),
            self.input_length)


def _split(line):
    if '\t' in line:
        return line.split('\t')
    if ',' in line:
        return line.split(',')
    return line.split()


def _parse_line(line, path, lineno):
    tokens = [token.strip() for token in _split(line.strip())]
    label = tokens[0]
    if not label:
        raise DataError('{}:{}: missing class label'.format(path, lineno))

    values = []
    for token in tokens[1:]:
        if token.lower() in MISSING_TOKENS:
            values.append(math.nan)
            continue
        try:
            value = float(token)
        except ValueError:
            value = math.inf
        if math.isinf(value):
            msg = '{}:{}: non-numeric value {!r}'.format(path, lineno, token)
            LOGGER.error(msg)
            raise DataError(msg)
        values.append(value)

    # trailing missing values: the series is shorter
    while values and math.isnan(values[-1]):
        values.pop()
    if not values:
        raise DataError('{}:{}: series has no values'.format(path, lineno))

    series = np.asarray(values)
    gaps = np.isnan(series)
    if gaps.any():
        LOGGER.warning('{}:{}: interpolating {} missing value(s)'.format(
            path, lineno, int(gaps.sum())))
        positions = np.arange(len(series))
        series[gaps] = np.interp(positions[gaps], positions[~gaps],
                                 series[~gaps])
    return label, series


def read_ucr_file(path):
    """
    Parse a UCR-format file

    :param path: file path

    :returns: list of (line number, raw label, `numpy.ndarray`) records
    """

    try:
        fh = open(path, 'rb')
    except OSError as err:
        msg = 'cannot read {}: {}'.format(path, err.strerror)
        LOGGER.error(msg)
        raise DataError(msg)

    records = []
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            try:
                line = raw.decode('utf-8')
            except UnicodeDecodeError as err:
                msg = '{}:{}: not UTF-8 text ({})'.format(path, lineno,
                                                          err.reason)
                LOGGER.error(msg)
                raise DataError(msg)
            if not line.strip():
                continue
            label, series = _parse_line(line, path, lineno)
            records.append((lineno, label, series))

    if not records:
        msg = '{}: no series found'.format(path)
        LOGGER.error(msg)
        raise DataError(msg)

    LOGGER.debug('Read {} series from {}'.format(len(records), path))
    return records


def write_ucr_file(path, labels, series, delimiter='\t'):
    """
    Write series in UCR format

    :param path: output file path
    :param labels: one label per series
    :param series: iterable of 1-D arrays
    :param delimiter: field separator

    :returns: void
    """

    with open(path, 'w') as fh:
        for label, values in zip(labels, series):
            fields = [str(label)] + [repr(float(v)) for v in values]
            fh.write(delimiter.join(fields) + '\n')


def canonical_label(raw):
    """'1', '1.0' and '1e0' name the same class; other labels stay text"""

    try:
        value = float(raw)
    except ValueError:
        return raw
    if math.isfinite(value) and value.is_integer():
        return str(int(value))
    return repr(value)


def sort_labels(labels):
    """Numeric order when every label is a number, text order otherwise"""

    labels = sorted(set(labels))
    try:
        return sorted(labels, key=float)
    except ValueError:
        return labels


def z_normalize(series):
    """
    Zero mean, unit variance (population sigma, floored)

    :param series: 1-D array

    :returns: `numpy.ndarray`
    """

    series = np.asarray(series, dtype=np.float64)
    if series.size == 0:
        raise DataError('cannot normalize an empty series')
    return (series - series.mean()) / max(series.std(), SIGMA_FLOOR)


def _fit_length(series, length, where):
    if len(series) > length:
        LOGGER.warning('{}: truncating series of length {} to {}'.format(
            where, len(series), length))
        return series[:length]
    padded = np.zeros(length)
    padded[:len(series)] = series
    return padded


def _encode(records, label_map, length, path):
    x = np.empty((len(records), length))
    y = np.empty(len(records), dtype=np.int64)
    for row, (lineno, label, series) in enumerate(records):
        label = canonical_label(label)
        if label not in label_map:
            msg = '{}:{}: class {} does not occur in training data'.format(
                path, lineno, label)
            LOGGER.error(msg)
            raise DataError(msg)
        where = '{}:{}'.format(path, lineno)
        x[row] = z_normalize(_fit_length(series, length, where))
        y[row] = label_map[label]
    return x, y


def load_ucr_split(path, class_labels, input_length):
    """
    Load one split against an existing label set and length

    :param path: UCR-format file
    :param class_labels: sorted class labels (position = class id)
    :param input_length: series length expected by the model

    :returns: tuple of (array (n x input_length), int labels)
    """

    label_map = {label: i for i, label in enumerate(class_labels)}
    return _encode(read_ucr_file(path), label_map, input_length, path)


def load_ucr_dataset(train_path, test_path, name=None):
    """
    Load a train/test pair

    Series are zero-padded to the longest training series, then
    z-normalized. Class ids follow the sorted training labels.

    :param train_path: training split
    :param test_path: test split
    :param name: dataset name (default: derived from `train_path`)

    :returns: `SeriesDataset`
    """

    if name is None:
        name = os.path.basename(train_path).split('_TRAIN')[0]
        name = os.path.splitext(name)[0]

    train_records = read_ucr_file(train_path)
    class_labels = sort_labels(canonical_label(label)
                               for _, label, _ in train_records)
    label_map = {label: i for i, label in enumerate(class_labels)}
    length = max(len(series) for _, _, series in train_records)

    train_x, train_y = _encode(train_records, label_map, length, train_path)
    test_x, test_y = load_ucr_split(test_path, class_labels, length)

    LOGGER.info('Loaded {}: {} classes, length {}'.format(
        name, len(class_labels), length))
    return SeriesDataset(name, train_x, train_y, test_x, test_y,
                         class_labels)
