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
Evaluation: k-means clustering, Rand index, top-1 accuracy and ranking
of algorithms over tables of per-dataset results.
"""

from dataclasses import dataclass, field
import csv
import logging

import numpy as np

from pyrtfn.util import ConfigurationError, DataError

LOGGER = logging.getLogger(__name__)

#: cell marking a result that is not available
MISSING = '---'

#: two results closer than this are a tie
TIE_TOLERANCE = 1e-9


# clustering ---------------------------------------------------------------

@dataclass
class ClusterAssignment:
    """Outcome of the best k-means restart"""

    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int
    history: list = field(default_factory=list)


def _squared_distances(points, centroids):
    diff = points[:, np.newaxis, :] - centroids[np.newaxis, :, :]
    return np.einsum('skf,skf->sk', diff, diff)


def _kmeans_plusplus(points, k, rng):
    count = len(points)
    chosen = [int(rng.integers(count))]
    closest = _squared_distances(points, points[chosen])[:, 0]

    while len(chosen) < k:
        total = closest.sum()
        if total > 0:
            index = int(rng.choice(count, p=closest / total))
        else:
            # every point coincides with a chosen center
            remaining = np.setdiff1d(np.arange(count), chosen)
            index = int(rng.choice(remaining))
        chosen.append(index)
        closest = np.minimum(
            closest, _squared_distances(points, points[[index]])[:, 0])

    return points[chosen].copy()


def _lloyd(points, centroids, max_iter):
    labels = None
    history = []
    iteration = 0

    for iteration in range(1, max_iter + 1):
        distances = _squared_distances(points, centroids)
        assigned = distances.argmin(axis=1)
        history.append(float(distances[np.arange(len(points)),
                                       assigned].sum()))
        if labels is not None and np.array_equal(assigned, labels):
            break
        labels = assigned

        own = distances[np.arange(len(points)), labels]
        for j in range(len(centroids)):
            members = points[labels == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
            else:
                far = int(own.argmax())
                LOGGER.debug('re-seeding empty cluster {} at point {}'
                             .format(j, far))
                centroids[j] = points[far]
                own[far] = -1.0

    distances = _squared_distances(points, centroids)
    labels = distances.argmin(axis=1)
    inertia = float(distances[np.arange(len(points)), labels].sum())
    return labels, centroids, inertia, iteration, history


def kmeans_fit(points, k, restarts=10, seed=0, max_iter=300):
    """
    k-means with k-means++ seeding, keeping the restart of lowest inertia

    :param points: array (samples x features)
    :param k: number of clusters
    :param restarts: independent initializations
    :param seed: seed of the initialization generator
    :param max_iter: Lloyd iterations per restart

    :returns: `ClusterAssignment`
    """

    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise DataError('k-means expects a 2-D array, got {}'.format(
            points.shape))
    if not 1 <= k <= len(points):
        msg = 'k={} is not in [1, {}]'.format(k, len(points))
        LOGGER.error(msg)
        raise ConfigurationError(msg)
    if restarts < 1 or max_iter < 1:
        raise ConfigurationError('restarts and max_iter must be >= 1')

    rng = np.random.default_rng(seed)
    best = None
    for restart in range(restarts):
        init = _kmeans_plusplus(points, k, rng)
        labels, centroids, inertia, n_iter, history = _lloyd(
            points, init, max_iter)
        LOGGER.debug('restart {}: inertia {:.6f} after {} iterations'.format(
            restart, inertia, n_iter))
        if best is None or inertia < best.inertia:
            best = ClusterAssignment(labels, centroids, inertia, n_iter,
                                     history)

    return best


# scores -------------------------------------------------------------------

def _check_pairs(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        msg = 'label vectors differ in shape: {} and {}'.format(
            pred.shape, truth.shape)
        LOGGER.error(msg)
        raise DataError(msg)
    return pred, truth


def _pairs(n):
    return n * (n - 1) // 2


def pair_counts(pred, truth):
    """
    Pair agreement counts from the contingency table

    :param pred: predicted labels
    :param truth: true labels

    :returns: tuple of (pairs together in both, pairs apart in both,
              all pairs)
    """

    pred, truth = _check_pairs(pred, truth)
    _, pred_ids = np.unique(pred, return_inverse=True)
    _, truth_ids = np.unique(truth, return_inverse=True)

    table = np.zeros((pred_ids.max() + 1, truth_ids.max() + 1),
                     dtype=np.int64)
    np.add.at(table, (pred_ids, truth_ids), 1)

    together = int(_pairs(table).sum())
    same_pred = int(_pairs(table.sum(axis=1)).sum())
    same_truth = int(_pairs(table.sum(axis=0)).sum())
    total = _pairs(len(pred))
    apart = total - same_pred - same_truth + together
    return together, apart, total


def rand_index(pred, truth):
    """
    Fraction of sample pairs on which two labelings agree

    :param pred: predicted labels
    :param truth: true labels

    :returns: `float` in [0, 1]
    """

    pred, truth = _check_pairs(pred, truth)
    if len(pred) < 2:
        raise DataError('Rand index needs at least two samples')
    together, apart, total = pair_counts(pred, truth)
    return (together + apart) / total


def rand_index_pairs(pred, truth):
    """Rand index by enumerating every pair (quadratic reference)"""

    pred, truth = _check_pairs(pred, truth)
    if len(pred) < 2:
        raise DataError('Rand index needs at least two samples')
    agree = 0
    count = len(pred)
    for i in range(count):
        for j in range(i + 1, count):
            if (pred[i] == pred[j]) == (truth[i] == truth[j]):
                agree += 1
    return agree / _pairs(count)


def top1_accuracy(pred, truth):
    pred, truth = _check_pairs(pred, truth)
    if len(pred) == 0:
        raise DataError('accuracy of an empty prediction')
    return float(np.count_nonzero(pred == truth)) / len(pred)


# result tables ------------------------------------------------------------

class ResultsTable(object):
    """Scores of several algorithms over several datasets"""

    def __init__(self, algorithms, datasets, values, name=None):
        """
        Initialize object

        :param algorithms: column names
        :param datasets: row names
        :param values: array (datasets x algorithms), NaN where missing
        :param name: optional label

        :returns: `pyrtfn.evaluation.ResultsTable`
        """

        self.algorithms = list(algorithms)
        self.datasets = list(datasets)
        self.values = np.asarray(values, dtype=np.float64)
        self.name = name

        if self.values.shape != (len(self.datasets), len(self.algorithms)):
            raise DataError('table shape {} does not match {} x {}'.format(
                self.values.shape, len(self.datasets), len(self.algorithms)))

    @classmethod
    def from_csv(cls, path):
        """
        Read a table whose first column names the dataset

        Cells holding `---` (or empty) are missing results.

        :param path: CSV file path

        :returns: `ResultsTable`
        """

        try:
            with open(path, newline='') as fh:
                rows = [row for row in csv.reader(fh) if row]
        except OSError as err:
            msg = 'cannot read results table: {}'.format(err)
            LOGGER.error(msg)
            raise DataError(msg)

        if len(rows) < 2 or len(rows[0]) < 2:
            raise DataError('{}: no results'.format(path))

        algorithms = [name.strip() for name in rows[0][1:]]
        datasets = []
        values = []
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != len(algorithms) + 1:
                raise DataError('{}:{}: expected {} cells, got {}'.format(
                    path, lineno, len(algorithms) + 1, len(row)))
            datasets.append(row[0].strip())
            values.append([_parse_cell(cell, path, lineno)
                           for cell in row[1:]])

        return cls(algorithms, datasets, values, name=path)

    def column(self, algorithm):
        if algorithm not in self.algorithms:
            msg = 'unknown algorithm {}'.format(algorithm)
            LOGGER.error(msg)
            raise DataError(msg)
        return self.values[:, self.algorithms.index(algorithm)]

    def __repr__(self):
        return '<ResultsTable> {} datasets x {} algorithms'.format(
            len(self.datasets), len(self.algorithms))


def _parse_cell(cell, path, lineno):
    cell = cell.strip()
    if cell in (MISSING, ''):
        return np.nan
    try:
        value = float(cell)
    except ValueError:
        raise DataError('{}:{}: bad result {!r}'.format(path, lineno, cell))
    if not 0.0 <= value <= 1.0:
        raise DataError('{}:{}: result {} outside [0, 1]'.format(
            path, lineno, value))
    return value


@dataclass
class RankSummary:
    """How one algorithm compares against all others"""

    algorithm: str
    best: int
    win: int
    tie: int
    lose: int
    datasets: int
    mean: float
    average_rank: float


def rank_table(table, focus, tolerance=TIE_TOLERANCE):
    """
    Count best/win/tie/lose of one algorithm and its average rank

    On each dataset where `focus` has a result it is best when no
    present result exceeds it by more than `tolerance`; a best result
    is a win when no other algorithm reaches it and a tie otherwise.
    Ranks are fractional (tied algorithms share the mean rank).

    :param table: `ResultsTable`
    :param focus: algorithm name
    :param tolerance: tie tolerance

    :returns: `RankSummary`
    """

    column = table.column(focus)
    win = tie = lose = 0
    ranks = []

    for row, value in zip(table.values, column):
        if np.isnan(value):
            continue
        present = row[~np.isnan(row)]
        top = present.max()
        if value >= top - tolerance:
            if np.count_nonzero(present >= top - tolerance) == 1:
                win += 1
            else:
                tie += 1
        else:
            lose += 1

        above = np.count_nonzero(present > value + tolerance)
        level = np.count_nonzero(np.abs(present - value) <= tolerance)
        ranks.append(1 + above + (level - 1) / 2.0)

    scored = column[~np.isnan(column)]
    return RankSummary(
        algorithm=focus, best=win + tie, win=win, tie=tie, lose=lose,
        datasets=len(scored),
        mean=float(scored.mean()) if len(scored) else float('nan'),
        average_rank=float(np.mean(ranks)) if ranks else float('nan'))


def rank_all(table, tolerance=TIE_TOLERANCE):
    """`RankSummary` of every algorithm in table order"""

    return [rank_table(table, name, tolerance) for name in table.algorithms]
