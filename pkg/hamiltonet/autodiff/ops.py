"""
Primitive Operations - each records itself on the tape with vector-Jacobian products
written in terms of other primitives, so the primitive set is closed under
differentiation.

Calling an operation with plain numbers or arrays (no DualValue argument) evaluates it
directly with numpy; the same functions therefore serve both traced models and
untraced oracles.
"""
import builtins
from typing import Callable, Sequence, Tuple

import numpy as np

from hamiltonet.autodiff.tape import DualValue, Tape
from hamiltonet.error_utils import AutodiffError, DomainError


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _traced(*args) -> bool:
    return builtins.any(isinstance(a, DualValue) for a in args)


def _common_tape(args: Sequence) -> Tape:
    tape = None
    for a in args:
        if isinstance(a, DualValue):
            if tape is None:
                tape = a.tape
            elif a.tape is not tape:
                raise AutodiffError("operands recorded on different tapes")
    return tape


def lift(x, tape: Tape) -> DualValue:
    """Bring `x` onto `tape` as a constant unless it is already recorded there"""
    if isinstance(x, DualValue):
        if x.tape is not tape:
            raise AutodiffError("operands recorded on different tapes")
        return x
    return tape.constant(x)


def _emit(
    name: str,
    compute: Callable[..., np.ndarray],
    parents: Tuple[DualValue, ...],
    make_vjps: Callable[[DualValue], Tuple[Callable, ...]],
) -> DualValue:
    tape = parents[0].tape
    value = compute(*[p.value for p in parents])
    out = tape.record(name, value, parents, compute)
    out.vjps = make_vjps(out)
    return out


def _np_sum_to(x: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast result back down to `shape`"""
    shape = tuple(shape)
    if x.shape == shape:
        return x
    lead = x.ndim - len(shape)
    if lead < 0:
        raise ValueError(f"cannot reduce shape {x.shape} to {shape}")
    axes = tuple(range(lead)) + tuple(
        lead + i for i, s in enumerate(shape) if s == 1 and x.shape[lead + i] != 1
    )
    return np.sum(x, axis=axes).reshape(shape)


def _keepdims_shape(shape: Tuple[int, ...], axis) -> Tuple[int, ...]:
    if axis is None:
        return (1,) * len(shape)
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    axes = {a % len(shape) for a in axes}
    return tuple(1 if i in axes else s for i, s in enumerate(shape))


# ---------------------------------------------------------------------------
# elementwise binary
# ---------------------------------------------------------------------------

def _binary(name, fn, a, b, make_vjps) -> DualValue:
    if not _traced(a, b):
        return fn(_arr(a), _arr(b))
    tape = _common_tape((a, b))
    return _emit(name, fn, (lift(a, tape), lift(b, tape)), make_vjps)


def add(a, b):
    return _binary('add', np.add, a, b, lambda out: (
        lambda g: sum_to(g, out.parents[0].shape),
        lambda g: sum_to(g, out.parents[1].shape),
    ))


def sub(a, b):
    return _binary('sub', np.subtract, a, b, lambda out: (
        lambda g: sum_to(g, out.parents[0].shape),
        lambda g: sum_to(neg(g), out.parents[1].shape),
    ))


def mul(a, b):
    return _binary('mul', np.multiply, a, b, lambda out: (
        lambda g: sum_to(mul(g, out.parents[1]), out.parents[0].shape),
        lambda g: sum_to(mul(g, out.parents[0]), out.parents[1].shape),
    ))


def _checked_divide(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if np.any(b == 0):
        raise DomainError("division by zero")
    return np.divide(a, b)


def div(a, b):
    return _binary('div', _checked_divide, a, b, lambda out: (
        lambda g: sum_to(div(g, out.parents[1]), out.parents[0].shape),
        lambda g: sum_to(neg(div(mul(g, out), out.parents[1])), out.parents[1].shape),
    ))


# ---------------------------------------------------------------------------
# elementwise unary
# ---------------------------------------------------------------------------

def _unary(name, fn, a, make_vjps):
    if not _traced(a):
        return fn(_arr(a))
    return _emit(name, fn, (a,), make_vjps)


def neg(a):
    return _unary('neg', np.negative, a, lambda out: (lambda g: neg(g),))


def exp(a):
    return _unary('exp', np.exp, a, lambda out: (lambda g: mul(g, out),))


def _checked_log(v: np.ndarray) -> np.ndarray:
    if np.any(v <= 0):
        raise DomainError(f"log of non-positive value {np.min(v):.6g}")
    return np.log(v)


def log(a):
    return _unary('log', _checked_log, a, lambda out: (lambda g: div(g, out.parents[0]),))


def tanh(a):
    return _unary('tanh', np.tanh, a, lambda out: (
        lambda g: mul(g, sub(1.0, mul(out, out))),
    ))


def sin(a):
    return _unary('sin', np.sin, a, lambda out: (lambda g: mul(g, cos(out.parents[0])),))


def cos(a):
    return _unary('cos', np.cos, a, lambda out: (lambda g: neg(mul(g, sin(out.parents[0]))),))


def power(a, exponent):
    """Raise to a constant exponent"""
    if isinstance(exponent, DualValue):
        raise AutodiffError("power supports constant exponents only")
    p = float(exponent)

    def fn(v: np.ndarray) -> np.ndarray:
        if p != int(p) and np.any(v < 0):
            raise DomainError(f"fractional power {p} of negative value")
        if p < 0 and np.any(v == 0):
            raise DomainError(f"negative power {p} of zero")
        return np.power(v, p)

    def make(out):
        base = out.parents[0]
        if p == 0.0:
            return (lambda g: mul(g, 0.0),)
        if p == 1.0:
            return (lambda g: g,)
        return (lambda g: mul(g, mul(p, power(base, p - 1.0))),)

    return _unary('power', fn, a, make)


def square(a):
    return mul(a, a)


# ---------------------------------------------------------------------------
# shape manipulation and reductions
# ---------------------------------------------------------------------------

def sum(a, axis=None, keepdims: bool = False):
    def fn(v):
        return np.sum(v, axis=axis, keepdims=keepdims)

    if not _traced(a):
        return fn(_arr(a))
    in_shape = a.shape
    kshape = _keepdims_shape(in_shape, axis)
    return _emit('sum', fn, (a,), lambda out: (
        lambda g: broadcast_to(reshape(g, kshape), in_shape),
    ))


def broadcast_to(a, shape):
    shape = tuple(shape)

    def fn(v):
        return np.array(np.broadcast_to(v, shape))

    if not _traced(a):
        return fn(_arr(a))
    if a.shape == shape:
        return a
    in_shape = a.shape
    return _emit('broadcast_to', fn, (a,), lambda out: (lambda g: sum_to(g, in_shape),))


def sum_to(a, shape):
    shape = tuple(shape)
    if not _traced(a):
        return _np_sum_to(_arr(a), shape)
    if a.shape == shape:
        return a
    in_shape = a.shape
    return _emit('sum_to', lambda v: _np_sum_to(v, shape), (a,), lambda out: (
        lambda g: broadcast_to(g, in_shape),
    ))


def reshape(a, shape):
    shape = tuple(shape)
    if not _traced(a):
        return _arr(a).reshape(shape)
    if a.shape == shape:
        return a
    in_shape = a.shape
    return _emit('reshape', lambda v: v.reshape(shape), (a,), lambda out: (
        lambda g: reshape(g, in_shape),
    ))


def transpose(a):
    """Swap the last two axes"""
    def fn(v):
        if v.ndim < 2:
            raise ValueError(f"transpose needs at least 2 dimensions, got shape {v.shape}")
        return np.swapaxes(v, -1, -2).copy()

    return _unary('transpose', fn, a, lambda out: (lambda g: transpose(g),))


def getitem(a, index):
    if isinstance(index, DualValue):
        raise AutodiffError("indices must be untraced")

    def fn(v):
        return np.array(v[index], dtype=np.float64)

    if not _traced(a):
        return fn(_arr(a))
    in_shape = a.shape
    return _emit('getitem', fn, (a,), lambda out: (lambda g: _scatter(g, index, in_shape),))


def _scatter(a, index, shape):
    """Adjoint of getitem: place `a` at `index` inside zeros of `shape`"""
    def fn(v):
        z = np.zeros(shape, dtype=np.float64)
        np.add.at(z, index, v)
        return z

    return _unary('scatter', fn, a, lambda out: (lambda g: getitem(g, index),))


def stack(values: Sequence, axis: int = 0):
    values = list(values)
    if not _traced(*values):
        return np.stack([_arr(v) for v in values], axis=axis)
    tape = _common_tape(values)
    nodes = tuple(lift(v, tape) for v in values)
    ax = axis % (nodes[0].ndim + 1)

    def fn(*vs):
        return np.stack(vs, axis=ax)

    def make(out):
        return tuple(
            (lambda g, i=i: getitem(g, (slice(None),) * ax + (i,)))
            for i in range(len(nodes))
        )

    return _emit('stack', fn, nodes, make)


def concatenate(values: Sequence, axis: int = -1):
    values = list(values)
    if not _traced(*values):
        return np.concatenate([_arr(v) for v in values], axis=axis)
    tape = _common_tape(values)
    nodes = tuple(lift(v, tape) for v in values)
    ax = axis % nodes[0].ndim
    bounds = np.cumsum([0] + [n.shape[ax] for n in nodes])

    def fn(*vs):
        return np.concatenate(vs, axis=ax)

    def make(out):
        return tuple(
            (lambda g, lo=int(bounds[i]), hi=int(bounds[i + 1]):
                getitem(g, (slice(None),) * ax + (slice(lo, hi),)))
            for i in range(len(nodes))
        )

    return _emit('concatenate', fn, nodes, make)


def stop_gradient(a):
    """Same value, no derivative path"""
    if not _traced(a):
        return a
    return a.tape.constant(a.value.copy())


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------

def _matmul(a, b):
    return _binary('matmul', np.matmul, a, b, lambda out: (
        lambda g: sum_to(_matmul(g, transpose(out.parents[1])), out.parents[0].shape),
        lambda g: sum_to(_matmul(transpose(out.parents[0]), g), out.parents[1].shape),
    ))


def matmul(a, b):
    """numpy matmul semantics, including 1-D promotion and batch broadcasting"""
    if not _traced(a, b):
        return np.matmul(_arr(a), _arr(b))
    tape = _common_tape((a, b))
    a, b = lift(a, tape), lift(b, tape)
    if a.ndim == 0 or b.ndim == 0:
        raise ValueError("matmul operands must be at least 1-dimensional")
    if a.ndim == 1 and b.ndim == 1:
        return dot(a, b)
    if a.ndim == 1:
        out = _matmul(reshape(a, (1, a.shape[0])), b)
        return reshape(out, out.shape[:-2] + out.shape[-1:])
    if b.ndim == 1:
        out = _matmul(a, reshape(b, (b.shape[0], 1)))
        return reshape(out, out.shape[:-1])
    return _matmul(a, b)


def dot(a, b):
    """Inner product of two vectors"""
    if not _traced(a, b):
        return np.dot(_arr(a), _arr(b))
    if np.ndim(a.value if isinstance(a, DualValue) else a) != 1:
        raise ValueError("dot expects vectors")
    return sum(mul(a, b))


def _solve_values(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise DomainError(f"singular matrix in linear solve: {exc}")


def solve(A, b):
    """
    Solve A x = b for x over trailing (n, n) / (n,) blocks.
    Adjoint: gb = solve(A^T, g), gA = -gb x^T, which is d(A^-1) = -A^-1 dA A^-1.
    """
    if not _traced(A, b):
        return _solve_values(_arr(A), _arr(b))
    tape = _common_tape((A, b))
    A, b = lift(A, tape), lift(b, tape)

    def make(out):
        cache = {}

        def adjoint(g):
            if g.node_id not in cache:
                cache[g.node_id] = solve(transpose(out.parents[0]), g)
            return cache[g.node_id]

        def vjp_A(g):
            gb = adjoint(g)
            outer = mul(
                reshape(gb, gb.shape + (1,)),
                reshape(out, out.shape[:-1] + (1,) + out.shape[-1:]),
            )
            return sum_to(neg(outer), out.parents[0].shape)

        def vjp_b(g):
            return sum_to(adjoint(g), out.parents[1].shape)

        return (vjp_A, vjp_b)

    return _emit('solve', _solve_values, (A, b), make)


def _inverse_adjoint(out):
    return (lambda g: neg(_matmul(_matmul(transpose(out), g), transpose(out))),)


def _checked_inv(v: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.inv(v)
    except np.linalg.LinAlgError as exc:
        raise DomainError(f"singular matrix in inverse: {exc}")


def inverse(A):
    return _unary('inverse', _checked_inv, A, _inverse_adjoint)


def pinv(A, rcond: float):
    """
    Moore-Penrose pseudo-inverse with singular values below rcond * max zeroed.
    The recorded derivative is the inverse's, exact whenever no value was truncated.
    """
    def fn(v):
        try:
            return np.linalg.pinv(v, rcond=rcond)
        except np.linalg.LinAlgError as exc:
            raise DomainError(f"SVD did not converge: {exc}")

    return _unary('pinv', fn, A, _inverse_adjoint)
