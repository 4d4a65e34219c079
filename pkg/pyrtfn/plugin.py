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
"""Plugin loader"""

import importlib
import logging

from pyrtfn.util import ConfigurationError

LOGGER = logging.getLogger(__name__)

#: Loads pipeline processes and history formatters used by pyrtfn
PLUGINS = {
    'process': {
        'Supervised': 'pyrtfn.process.supervised.SupervisedProcessor',
        'Clustering': 'pyrtfn.process.clustering.ClusteringProcessor'
    },
    'formatter': {
        'CSV': 'pyrtfn.formatter.csv_.CSVFormatter'
    }
}


def load_plugin(plugin_type, plugin_def):
    """
    loads plugin by name

    :param plugin_type: type of plugin (process, formatter)
    :param plugin_def: plugin definition

    :returns: plugin object
    """

    name = plugin_def['name']

    if plugin_type not in PLUGINS:
        msg = 'Plugin type {} not found'.format(plugin_type)
        LOGGER.error(msg)
        raise InvalidPluginError(msg)

    registered = PLUGINS[plugin_type]

    if name in registered:
        path = registered[name]
    elif '.' in name:  # dotted path
        path = name
    else:
        msg = 'Plugin {} not found (known {}: {})'.format(
            name, plugin_type, ', '.join(sorted(registered)))
        LOGGER.error(msg)
        raise InvalidPluginError(msg)

    packagename, classname = path.rsplit('.', 1)
    LOGGER.debug('Loading {} plugin {} from {}'.format(
        plugin_type, classname, packagename))

    try:
        class_ = getattr(importlib.import_module(packagename), classname)
    except (ImportError, AttributeError) as err:
        msg = 'Plugin {} cannot be imported: {}'.format(path, err)
        LOGGER.error(msg)
        raise InvalidPluginError(msg)

    return class_(plugin_def)

class InvalidPluginError(ConfigurationError):
    """Invalid plugin"""
    pass
