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

__version__ = '0.1.0'

import click

from pyrtfn.runner import (cluster, evaluate, gradcheck_, reproduce_tables_,
                           train)


cli = click.Group()
cli.version = __version__

cli.add_command(train)
cli.add_command(cluster)
cli.add_command(evaluate)
cli.add_command(reproduce_tables_)
cli.add_command(gradcheck_)


def run_cli(argv=None):
    """
    Run a command without leaving the interpreter

    :param argv: `list` of arguments (default: `sys.argv[1:]`)

    :returns: `int` exit code (1 on library errors, 2 on usage errors)
    """

    try:
        result = cli.main(args=argv, prog_name='pyrtfn',
                          standalone_mode=False)
    except click.ClickException as err:
        err.show()
        return err.exit_code
    except click.Abort:
        click.echo('Aborted!', err=True)
        return 1
    return result if isinstance(result, int) else 0
