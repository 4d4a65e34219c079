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
import shutil

import pytest

from pyrtfn.benchmark import load_checks, reproduce_tables, summarize
from pyrtfn.util import DATA_DIR, DataError


def test_reproduce_tables():
    results = reproduce_tables()

    assert [r.label for r in results] == ['Table1', 'Table3', 'Table4']
    assert all(r.ok for r in results)

    supervised, long_series, clustering = results
    assert str(supervised) == 'Table1 best=40 win=11 tie=29 lose=45 OK'
    assert supervised.summary.datasets == 85
    assert long_series.summary.datasets == 12
    assert abs(long_series.summary.mean - 0.856049) < 1e-6
    assert clustering.summary.datasets == 11
    assert abs(clustering.summary.mean - 0.7189) < 5e-5
    assert str(clustering).endswith(' OK')


def test_ablation_column():
    lines = summarize(os.path.join(DATA_DIR, 'long_series_accuracy.csv'))
    assert len(lines) == 8
    assert lines[-2].startswith('RTFN w/o a-LSTM')
    assert lines[-1].startswith('RTFN ')


def test_mismatch(tmp_path):
    shutil.copy(os.path.join(DATA_DIR, 'clustering_ri.csv'), str(tmp_path))
    (tmp_path / 'expected.yml').write_text(
        'checks:\n'
        '    - label: Clustering\n'
        '      file: clustering_ri.csv\n'
        '      focus: RTFN\n'
        '      expect:\n'
        '          mean: 0.9\n'
        '          win: 3\n')

    result, = reproduce_tables(str(tmp_path))
    assert not result.ok
    assert str(result).startswith('Clustering mean=0.71')
    assert str(result).endswith(' MISMATCH')
    assert result.tolerance == 1e-9


def test_load_checks_errors(tmp_path):
    with pytest.raises(DataError):
        load_checks(str(tmp_path))

    (tmp_path / 'expected.yml').write_text('tables: []\n')
    with pytest.raises(DataError):
        load_checks(str(tmp_path))

    (tmp_path / 'expected.yml').write_text(
        'checks:\n'
        '    - label: Missing\n'
        '      file: nowhere.csv\n'
        '      focus: RTFN\n'
        '      expect:\n'
        '          best: 1\n')
    with pytest.raises(DataError):
        reproduce_tables(str(tmp_path))


def test_malformed_checks(tmp_path):
    (tmp_path / 'expected.yml').write_text('checks: [\n')
    with pytest.raises(DataError) as error:
        load_checks(str(tmp_path))
    assert 'cannot read checks' in str(error.value)

    (tmp_path / 'expected.yml').write_text(
        'checks:\n'
        '    - label: Partial\n'
        '      focus: RTFN\n')
    with pytest.raises(DataError) as error:
        reproduce_tables(str(tmp_path))
    assert 'needs label, file, focus and expect' in str(error.value)
