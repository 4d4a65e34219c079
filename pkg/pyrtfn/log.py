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

"""Logging system"""

import logging
import sys
import time

from pyrtfn.util import ConfigurationError

LOGGER = logging.getLogger(__name__)

LOG_FORMAT = \
    '[%(asctime)s] {%(pathname)s:%(lineno)d} %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%dT%H:%M:%SZ'

#: name tagging the root handler installed by `setup_logger`
HANDLER_NAME = 'pyrtfn'


def setup_logger(logging_config):
    """
    Setup configuration

    Calling it again (one process, several commands) replaces the handler
    of the previous call instead of stacking a second one.

    :param logging_config: logging specific configuration
                           (`level` and optional `logfile`)

    :returns: void (creates logging instance)
    """

    level = str(logging_config.get('level', 'WARNING')).upper()
    loglevel = logging.getLevelName(level)
    if not isinstance(loglevel, int):
        raise ConfigurationError('Unknown log level {}'.format(level))

    if logging_config.get('logfile'):
        handler = logging.FileHandler(logging_config['logfile'])
    else:
        handler = logging.StreamHandler(sys.stderr)

    formatter = logging.Formatter(LOG_FORMAT, DATE_FORMAT)
    formatter.converter = time.gmtime
    handler.setFormatter(formatter)
    handler.set_name(HANDLER_NAME)

    root = logging.getLogger()
    for previous in root.handlers[:]:
        if previous.get_name() == HANDLER_NAME:
            root.removeHandler(previous)
            previous.close()

    root.addHandler(handler)
    root.setLevel(loglevel)

    LOGGER.debug('Logging initialized at {}'.format(level))
