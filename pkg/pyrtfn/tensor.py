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
Dense float64 tensors (rank <= 3) with a recording tape for reverse-mode
automatic differentiation.

Operations record themselves on the tape that is active in the current
thread (``with Tape() as tape:``). Outside of a tape every operation is a
plain forward computation, which is what inference uses.
"""

from collections import OrderedDict
import logging
import os
import threading

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from pyrtfn.util import ContractError, DimensionError, str2bool

LOGGER = logging.getLogger(__name__)

MAX_RANK = 3

#: check every forward result for NaN/Inf (slow)
DEBUG_CHECKS = str2bool(os.environ.get('RTFN_DEBUG', 'false'))

_STATE = threading.local()


class Tensor(object):
    """Rank <= 3 float64 array with an optional gradient buffer"""

    __array_priority__ = 100

    def __init__(self, values, requires_grad=False, name=None):
        """
        Initialize object

        :param values: array-like of numbers
        :param requires_grad: whether backward() accumulates into `grad`
        :param name: optional label (parameter name)

        :returns: `pyrtfn.tensor.Tensor`
        """

        values = np.asarray(values, dtype=np.float64)
        if values.ndim > MAX_RANK:
            raise DimensionError('rank {} exceeds {} (shape {})'.format(
                values.ndim, MAX_RANK, values.shape))

        self.values = values
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(values) if requires_grad else None
        self.name = name
        self.node_id = None

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    @property
    def size(self):
        return self.values.size

    def item(self):
        if self.values.size != 1:
            raise ContractError('item() on tensor of shape {}'.format(
                self.shape))
        return float(self.values.reshape(-1)[0])

    def zero_grad(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.values)
        else:
            self.grad.fill(0.0)

    def accumulate(self, grad):
        if self.grad is None:
            self.grad = np.zeros_like(self.values)
        self.grad += grad

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __repr__(self):
        label = ' {}'.format(self.name) if self.name else ''
        return '<Tensor{}> shape={}'.format(label, self.shape)


class _Node(object):
    __slots__ = ('nid', 'tensor', 'parents', 'vjp')

    def __init__(self, nid, tensor, parents, vjp):
        self.nid = nid
        self.tensor = tensor
        self.parents = parents
        self.vjp = vjp


class _Partial(object):
    """Gradient that is nonzero on one slice of its parent only"""

    __slots__ = ('index', 'values')

    def __init__(self, index, values):
        self.index = index
        self.values = values


class Tape(object):
    """Ordered record of primitive operations of one session"""

    def __init__(self):
        self.nodes = []
        self._index = {}

    def __enter__(self):
        stack = getattr(_STATE, 'stack', None)
        if stack is None:
            stack = _STATE.stack = []
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        _STATE.stack.pop()
        return False

    def __len__(self):
        return len(self.nodes)

    def node_of(self, tensor):
        return self._index.get(id(tensor))

    def watch(self, tensor):
        """
        Register a tensor as a leaf node (no-op if already on the tape)

        :param tensor: `Tensor`

        :returns: `int` node id
        """

        nid = self._index.get(id(tensor))
        if nid is None:
            nid = len(self.nodes)
            self.nodes.append(_Node(nid, tensor, (), None))
            self._index[id(tensor)] = nid
            tensor.node_id = nid
        return nid

    def record(self, output, parents, vjp):
        parent_ids = tuple(self.watch(p) for p in parents)
        nid = len(self.nodes)
        self.nodes.append(_Node(nid, output, parent_ids, vjp))
        self._index[id(output)] = nid
        output.node_id = nid
        return nid

    def __repr__(self):
        return '<Tape> {} nodes'.format(len(self.nodes))


def active_tape():
    """
    Tape active in the current thread

    :returns: `Tape` or `None`
    """

    stack = getattr(_STATE, 'stack', None)
    if stack:
        return stack[-1]
    return None


def _as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _result(values, parents, vjp, op):
    if DEBUG_CHECKS and not np.all(np.isfinite(values)):
        msg = '{} produced non-finite values'.format(op)
        LOGGER.error(msg)
        raise ContractError(msg)

    out = Tensor(values)
    tape = active_tape()
    if tape is None:
        return out

    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        tape.record(out, parents, vjp)
    return out


def _unbroadcast(grad, shape):
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a, b, op):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        msg = '{}: shapes {} and {} are not broadcastable'.format(
            op, a.shape, b.shape)
        LOGGER.error(msg)
        raise DimensionError(msg)


def _check_axis(x, axis):
    if axis is None:
        return None
    if not -x.ndim <= axis < max(x.ndim, 1):
        msg = 'axis {} out of range for shape {}'.format(axis, x.shape)
        LOGGER.error(msg)
        raise DimensionError(msg)
    return axis % max(x.ndim, 1)


# elementwise --------------------------------------------------------------

def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shape(a, b, 'add')

    def vjp(grad):
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)

    return _result(a.values + b.values, (a, b), vjp, 'add')


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shape(a, b, 'sub')

    def vjp(grad):
        return _unbroadcast(grad, a.shape), _unbroadcast(-grad, b.shape)

    return _result(a.values - b.values, (a, b), vjp, 'sub')


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shape(a, b, 'mul')

    def vjp(grad):
        return (_unbroadcast(grad * b.values, a.shape),
                _unbroadcast(grad * a.values, b.shape))

    return _result(a.values * b.values, (a, b), vjp, 'mul')


def div(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shape(a, b, 'div')
    out = a.values / b.values

    def vjp(grad):
        return (_unbroadcast(grad / b.values, a.shape),
                _unbroadcast(-grad * out / b.values, b.shape))

    return _result(out, (a, b), vjp, 'div')


def relu(x):
    x = _as_tensor(x)
    mask = x.values > 0

    def vjp(grad):
        return (grad * mask,)

    return _result(x.values * mask, (x,), vjp, 'relu')


def sigmoid(x):
    x = _as_tensor(x)
    out = np.exp(-np.logaddexp(0.0, -x.values))

    def vjp(grad):
        return (grad * out * (1.0 - out),)

    return _result(out, (x,), vjp, 'sigmoid')


def tanh(x):
    x = _as_tensor(x)
    out = np.tanh(x.values)

    def vjp(grad):
        return (grad * (1.0 - out * out),)

    return _result(out, (x,), vjp, 'tanh')


def exp(x):
    x = _as_tensor(x)
    out = np.exp(x.values)

    def vjp(grad):
        return (grad * out,)

    return _result(out, (x,), vjp, 'exp')


def log(x):
    x = _as_tensor(x)

    def vjp(grad):
        return (grad / x.values,)

    return _result(np.log(x.values), (x,), vjp, 'log')


def sqrt(x):
    x = _as_tensor(x)
    out = np.sqrt(x.values)

    def vjp(grad):
        return (grad * 0.5 / out,)

    return _result(out, (x,), vjp, 'sqrt')


def square(x):
    x = _as_tensor(x)

    def vjp(grad):
        return (grad * 2.0 * x.values,)

    return _result(x.values * x.values, (x,), vjp, 'square')


UNARY = {
    'relu': relu,
    'sigmoid': sigmoid,
    'tanh': tanh,
    'exp': exp,
    'log': log,
    'sqrt': sqrt,
    'square': square
}

BINARY = {
    'add': add,
    'sub': sub,
    'mul': mul,
    'div': div
}


def elementwise(x, fn, other=None):
    """
    Apply a named pointwise function

    :param x: `Tensor`
    :param fn: one of relu, sigmoid, tanh, exp, log, sqrt, square,
               add, sub, mul, div
    :param other: second operand for binary functions

    :returns: `Tensor`
    """

    if fn in UNARY:
        return UNARY[fn](x)
    if fn in BINARY:
        if other is None:
            raise ContractError('{} needs a second operand'.format(fn))
        return BINARY[fn](x, other)
    raise ContractError('unknown elementwise function {}'.format(fn))


# reductions ---------------------------------------------------------------

def reduce(x, kind='mean', axis=None, keepdims=False):
    """
    Sum or mean, over everything or one axis

    :param x: `Tensor`
    :param kind: `mean` or `sum`
    :param axis: optional axis
    :param keepdims: keep the reduced axis with extent 1

    :returns: `Tensor`
    """

    x = _as_tensor(x)
    axis = _check_axis(x, axis)
    if kind not in ('mean', 'sum'):
        raise ContractError('unknown reduction {}'.format(kind))

    out = x.values.sum(axis=axis, keepdims=keepdims)
    extent = x.size if axis is None else x.shape[axis]
    if kind == 'mean':
        out = out / extent

    def vjp(grad):
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        grad = np.broadcast_to(grad, x.shape)
        if kind == 'mean':
            grad = grad / extent
        return (grad,)

    return _result(out, (x,), vjp, kind)


def sum_(x, axis=None, keepdims=False):
    return reduce(x, 'sum', axis, keepdims)


def mean(x, axis=None, keepdims=False):
    return reduce(x, 'mean', axis, keepdims)


# linear algebra -----------------------------------------------------------

def matmul(a, b):
    """
    Matrix product over the last two axes, batched over a leading axis

    :param a: `Tensor` (m x k) or (batch x m x k)
    :param b: `Tensor` (k x n) or (batch x k x n)

    :returns: `Tensor`
    """

    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        msg = 'matmul: shapes {} and {} do not align'.format(a.shape, b.shape)
        LOGGER.error(msg)
        raise DimensionError(msg)
    if a.ndim == 3 and b.ndim == 3 and a.shape[0] != b.shape[0]:
        msg = 'matmul: batch extents differ in {} and {}'.format(
            a.shape, b.shape)
        LOGGER.error(msg)
        raise DimensionError(msg)

    def vjp(grad):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(np.matmul(grad, np.swapaxes(b.values, -1, -2)),
                              a.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.matmul(np.swapaxes(a.values, -1, -2), grad),
                              b.shape)
        return ga, gb

    return _result(np.matmul(a.values, b.values), (a, b), vjp, 'matmul')


def transpose(x):
    """Swap the last two axes"""

    x = _as_tensor(x)
    if x.ndim < 2:
        raise DimensionError('transpose needs rank >= 2, got {}'.format(
            x.shape))

    def vjp(grad):
        return (np.swapaxes(grad, -1, -2),)

    return _result(np.swapaxes(x.values, -1, -2), (x,), vjp, 'transpose')


def softmax(x, axis=-1):
    """
    Softmax along one axis, computed with max-subtraction

    :param x: `Tensor`
    :param axis: normalized axis (default: last)

    :returns: `Tensor`
    """

    x = _as_tensor(x)
    axis = _check_axis(x, axis)
    shifted = x.values - x.values.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(grad):
        inner = (grad * out).sum(axis=axis, keepdims=True)
        return (out * (grad - inner),)

    return _result(out, (x,), vjp, 'softmax')


def softmax_rows(x):
    """Softmax of every row (last axis)"""

    return softmax(x, axis=-1)


def log_softmax_rows(x):
    """Numerically stable log(softmax(x)) along the last axis"""

    x = _as_tensor(x)
    shifted = x.values - x.values.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = shifted - lse
    probs = np.exp(out)

    def vjp(grad):
        return (grad - probs * grad.sum(axis=-1, keepdims=True),)

    return _result(out, (x,), vjp, 'log_softmax')


def conv1d(x, kernels, padding='same'):
    """
    1-D cross-correlation (no kernel flip)

    "same" pads (k - 1) zeros split symmetrically, the odd one on the right.

    :param x: `Tensor` (batch x c_in x t)
    :param kernels: `Tensor` (c_out x c_in x k)
    :param padding: `same` or `valid`

    :returns: `Tensor` (batch x c_out x t')
    """

    x, kernels = _as_tensor(x), _as_tensor(kernels)
    if x.ndim != 3 or kernels.ndim != 3 or x.shape[1] != kernels.shape[1]:
        msg = 'conv1d: input {} and kernels {} do not align'.format(
            x.shape, kernels.shape)
        LOGGER.error(msg)
        raise DimensionError(msg)

    batch, c_in, length = x.shape
    c_out, _, k = kernels.shape

    if padding == 'same':
        left = (k - 1) // 2
        right = k - 1 - left
    elif padding == 'valid':
        left = right = 0
    else:
        raise ContractError('unknown padding mode {}'.format(padding))

    padded_length = length + left + right
    if k > padded_length:
        msg = 'conv1d: kernel length {} exceeds padded input length {}'.format(
            k, padded_length)
        LOGGER.error(msg)
        raise DimensionError(msg)

    xp = np.pad(x.values, ((0, 0), (0, 0), (left, right)))
    windows = sliding_window_view(xp, k, axis=2)
    out_length = windows.shape[2]

    # im2col: one row per (sample, position), one column per (channel, tap)
    cols = windows.transpose(0, 2, 1, 3).reshape(batch * out_length,
                                                 c_in * k)
    kmat = kernels.values.reshape(c_out, c_in * k)
    out = np.ascontiguousarray(
        (cols @ kmat.T).reshape(batch, out_length, c_out).transpose(0, 2, 1))

    def vjp(grad):
        gx = gk = None
        rows = grad.transpose(0, 2, 1).reshape(batch * out_length, c_out)
        if kernels.requires_grad:
            gk = (rows.T @ cols).reshape(c_out, c_in, k)
        if x.requires_grad:
            gcols = (rows @ kmat).reshape(batch, out_length, c_in, k)
            gxp = np.zeros((batch, c_in, padded_length))
            for j in range(k):
                gxp[:, :, j:j + out_length] += gcols[:, :, :, j].transpose(
                    0, 2, 1)
            gx = gxp[:, :, left:left + length]
        return gx, gk

    return _result(out, (x, kernels), vjp, 'conv1d')


# structure ----------------------------------------------------------------

def reshape(x, shape):
    x = _as_tensor(x)
    try:
        out = x.values.reshape(shape)
    except ValueError:
        msg = 'cannot reshape {} to {}'.format(x.shape, shape)
        LOGGER.error(msg)
        raise DimensionError(msg)

    def vjp(grad):
        return (grad.reshape(x.shape),)

    return _result(out, (x,), vjp, 'reshape')


def concat(tensors, axis):
    """Join tensors along an existing axis"""

    tensors = [_as_tensor(t) for t in tensors]
    axis = _check_axis(tensors[0], axis)
    try:
        out = np.concatenate([t.values for t in tensors], axis=axis)
    except ValueError:
        msg = 'concat: incompatible shapes {}'.format(
            [t.shape for t in tensors])
        LOGGER.error(msg)
        raise DimensionError(msg)

    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def vjp(grad):
        return tuple(np.split(grad, bounds, axis=axis))

    return _result(out, tuple(tensors), vjp, 'concat')


def stack(tensors, axis):
    """Join equally shaped tensors along a new axis"""

    tensors = [_as_tensor(t) for t in tensors]
    try:
        out = np.stack([t.values for t in tensors], axis=axis)
    except ValueError:
        msg = 'stack: incompatible shapes {}'.format(
            [t.shape for t in tensors])
        LOGGER.error(msg)
        raise DimensionError(msg)

    def vjp(grad):
        return tuple(np.moveaxis(grad, axis, 0))

    return _result(out, tuple(tensors), vjp, 'stack')


def take(x, axis, index):
    """Select one position along an axis (the axis is dropped)"""

    x = _as_tensor(x)
    axis = _check_axis(x, axis)
    if not 0 <= index < x.shape[axis]:
        raise DimensionError('index {} out of range for axis {} of {}'.format(
            index, axis, x.shape))
    slicer = [slice(None)] * x.ndim
    slicer[axis] = index
    slicer = tuple(slicer)

    def vjp(grad):
        return (_Partial(slicer, grad),)

    return _result(x.values[slicer], (x,), vjp, 'take')


def narrow(x, axis, start, stop):
    """Slice [start, stop) along an axis"""

    x = _as_tensor(x)
    axis = _check_axis(x, axis)
    if not 0 <= start < stop <= x.shape[axis]:
        raise DimensionError('slice {}:{} out of range for axis {} of {}'
                             .format(start, stop, axis, x.shape))
    slicer = [slice(None)] * x.ndim
    slicer[axis] = slice(start, stop)
    slicer = tuple(slicer)

    def vjp(grad):
        return (_Partial(slicer, grad),)

    return _result(x.values[slicer], (x,), vjp, 'narrow')


# differentiation ----------------------------------------------------------

def backward(tape, loss):
    """
    Populate `grad` of every leaf tensor reachable from a scalar loss

    Gradients accumulate additively; callers reset them between steps.

    :param tape: `Tape` the loss was recorded on
    :param loss: scalar `Tensor`

    :returns: void
    """

    if loss.size != 1:
        msg = 'backward needs a scalar loss, got shape {}'.format(loss.shape)
        LOGGER.error(msg)
        raise ContractError(msg)

    start = tape.node_of(loss)
    if start is None:
        LOGGER.debug('loss is not on the tape, no gradient flows')
        return

    grads = {start: np.ones_like(loss.values)}
    owned = set()

    for node in reversed(tape.nodes[:start + 1]):
        grad = grads.pop(node.nid, None)
        if grad is None:
            continue
        if node.vjp is None:
            if node.tensor.requires_grad:
                node.tensor.accumulate(grad)
            continue

        for pid, pgrad in zip(node.parents, node.vjp(grad)):
            if pgrad is None:
                continue
            if isinstance(pgrad, _Partial):
                if pid not in owned:
                    shape = tape.nodes[pid].tensor.shape
                    base = grads.get(pid)
                    grads[pid] = (np.zeros(shape) if base is None
                                  else np.array(base, dtype=np.float64))
                    owned.add(pid)
                grads[pid][pgrad.index] += pgrad.values
            elif pid in grads:
                if pid in owned:
                    grads[pid] += pgrad
                else:
                    grads[pid] = grads[pid] + pgrad
                    owned.add(pid)
            else:
                grads[pid] = pgrad


# parameters ---------------------------------------------------------------

class ParamStore(object):
    """Named trainable parameters and buffers in registration order"""

    def __init__(self):
        self._tensors = OrderedDict()

    def add(self, name, values, trainable=True):
        """
        Register a parameter (or a non-trainable buffer)

        :param name: unique dotted name
        :param values: initial array
        :param trainable: whether the optimizer updates it

        :returns: `Tensor`
        """

        if name in self._tensors:
            raise ContractError('duplicate parameter {}'.format(name))

        tensor = Tensor(np.array(values, dtype=np.float64),
                        requires_grad=trainable, name=name)
        self._tensors[name] = tensor
        return tensor

    def __getitem__(self, name):
        return self._tensors[name]

    def __contains__(self, name):
        return name in self._tensors

    def __iter__(self):
        return iter(self._tensors)

    def __len__(self):
        return len(self._tensors)

    def items(self):
        return self._tensors.items()

    def trainable(self):
        return [(k, v) for k, v in self._tensors.items() if v.requires_grad]

    def zero_grad(self):
        for _, tensor in self.trainable():
            tensor.zero_grad()

    def count(self):
        """Number of trainable scalars"""

        return int(sum(t.size for _, t in self.trainable()))

    def state(self):
        return OrderedDict((k, v.values.copy())
                           for k, v in self._tensors.items())

    def load_state(self, state):
        """
        Replace values from a name -> array mapping with identical layout

        :param state: mapping of parameter name to array

        :returns: void
        """

        if list(state.keys()) != list(self._tensors.keys()):
            raise ContractError('parameter names do not match the store')
        for name, values in state.items():
            tensor = self._tensors[name]
            if tuple(np.shape(values)) != tensor.shape:
                raise DimensionError('{}: shape {} != {}'.format(
                    name, np.shape(values), tensor.shape))
            tensor.values[...] = values

    def __repr__(self):
        return '<ParamStore> {} tensors'.format(len(self._tensors))
