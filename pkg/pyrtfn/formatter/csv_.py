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

import io
import logging

import unicodecsv as csv

from pyrtfn.formatter.base import BaseFormatter

LOGGER = logging.getLogger(__name__)


class CSVFormatter(BaseFormatter):
    """CSV formatter"""

    def __init__(self, formatter_def):
        """
        Initialize object

        :param formatter_def: formatter definition

        :returns: `pyrtfn.formatter.csv_.CSVFormatter`
        """

        BaseFormatter.__init__(self, {'name': 'csv'})
        self.mimetype = 'text/csv'

    def write(self, options={}, data=None):
        """
        Generate data in CSV format

        :param options: CSV formatting options (`delimiter`)
        :param data: dict with `fields` and `rows`

        :returns: bytes of CSV, header row first
        """

        fields = list(data.get('fields') or [])
        rows = data.get('rows', [])
        if not fields:
            if not rows:
                LOGGER.error('no rows')
                return bytes()
            fields = list(rows[0].keys())

        LOGGER.debug('CSV fields: {}'.format(fields))

        output = io.BytesIO()
        writer = csv.DictWriter(output, fields,
                                delimiter=options.get('delimiter', ','))
        writer.writeheader()

        for row in rows:
            writer.writerow(row)
        return output.getvalue()

    def __repr__(self):
        return '<CSVFormatter> {}'.format(self.mimetype)
