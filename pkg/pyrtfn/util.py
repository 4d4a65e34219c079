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

"""Generic util functions used in the code"""

import hashlib
import json
import logging
import os
import re

import numpy as np
import yaml

LOGGER = logging.getLogger(__name__)

DATA_DIR = '{}{}data'.format(os.path.dirname(
    os.path.realpath(__file__)), os.sep)

#: environment variable providing the default seed
SEED_ENV = 'RTFN_SEED'


class RTFNError(Exception):
    """Generic error"""
    pass


class DimensionError(RTFNError):
    """Shape, rank or axis violation"""
    pass


class ContractError(RTFNError):
    """API precondition violated"""
    pass


class ConfigurationError(RTFNError):
    """Invalid configuration or hyperparameter"""
    pass


class DataError(RTFNError):
    """Malformed or inconsistent data"""
    pass


def get_typed_value(value):
    """
    Derive true type from data value

    :param value: value

    :returns: value as a native Python data type
    """

    try:
        if '.' in value or 'e' in value.lower():  # float?
            value2 = float(value)
        elif len(value) > 1 and value.startswith('0'):
            value2 = value
        else:  # int?
            value2 = int(value)
    except ValueError:  # string (default)?
        value2 = value

    return value2


def yaml_load(fh):
    """
    serializes a YAML files into a pyyaml object

    :param fh: file handle

    :returns: `dict` representation of YAML
    """

    # support environment variables in config
    # https://stackoverflow.com/a/55301129
    path_matcher = re.compile(r'.*\$\{([^}^{]+)\}.*')

    def path_constructor(loader, node):
        env_var = path_matcher.match(node.value).group(1)
        if env_var not in os.environ:
            raise EnvironmentError('Undefined environment variable in config')
        return get_typed_value(os.path.expandvars(node.value))

    class EnvVarLoader(yaml.SafeLoader):
        pass

    EnvVarLoader.add_implicit_resolver('!path', path_matcher, None)
    EnvVarLoader.add_constructor('!path', path_constructor)

    return yaml.load(fh, Loader=EnvVarLoader)


def str2bool(value):
    """
    helper function to return Python boolean
    type (source: https://stackoverflow.com/a/715468)

    :param value: value to be evaluated

    :returns: `bool` of whether the value is boolean-ish
    """

    value2 = False

    if isinstance(value, bool):
        value2 = value
    else:
        value2 = value.lower() in ('yes', 'true', 't', '1', 'on')

    return value2


def to_json(dict_, pretty=False):
    """
    Serialize dict to json

    :param dict_: `dict` of JSON representation
    :param pretty: `bool` of whether to indent the output

    :returns: JSON string representation
    """

    indent = 4 if pretty else None
    return json.dumps(dict_, default=json_serial, indent=indent,
                      sort_keys=pretty)


def json_serial(obj):
    """
    helper function to convert numpy scalars and arrays to JSON
    types (source: https://stackoverflow.com/a/22238613)

    :param obj: `object` to be evaluated

    :returns: JSON serializable value
    """

    if isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, np.ndarray):
        return obj.tolist()

    msg = '{} type {} not serializable'.format(obj, type(obj))
    LOGGER.error(msg)
    raise TypeError(msg)


def config_hash(dict_):
    """
    Stable short digest of a configuration

    :param dict_: `dict` of configuration values

    :returns: `str` of 16 hex characters
    """

    canonical = json.dumps(dict_, default=json_serial, sort_keys=True,
                           separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]


def resolve_seed(cli_seed=None, config_seed=None):
    """
    Pick the run seed: command line, then config, then RTFN_SEED, then 0

    :param cli_seed: seed given on the command line (or `None`)
    :param config_seed: seed from the run configuration (or `None`)

    :returns: `int` seed
    """

    if cli_seed is not None:
        return int(cli_seed)
    if config_seed is not None:
        return int(config_seed)

    env_seed = os.environ.get(SEED_ENV)
    if env_seed not in (None, ''):
        try:
            return int(env_seed)
        except ValueError:
            msg = '{} must be an integer, got {!r}'.format(SEED_ENV, env_seed)
            LOGGER.error(msg)
            raise ConfigurationError(msg)

    return 0
