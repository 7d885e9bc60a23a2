"""
Tensor helpers
Dense row-major float32 arrays and the few operations the layers build on.

A tensor is a plain ``numpy.ndarray`` with dtype float32, C-contiguous layout,
a non-empty shape and every extent >= 1. Functions here never mutate inputs.
"""

from typing import Callable, Optional, Union

import numpy as np

from afnet.errors import ShapeError, ValidationError

Tensor = np.ndarray
DTYPE = np.float32

REDUCTIONS = ("sum", "max", "mean")


def as_tensor(values, shape: Optional[tuple] = None) -> Tensor:
    """Copy values into a fresh float32 tensor, optionally reshaped"""
    data = np.array(values, dtype=DTYPE, order="C")
    if shape is not None:
        shape = tuple(int(s) for s in shape)
        if int(np.prod(shape)) != data.size:
            raise ShapeError(
                f"cannot reshape {data.size} values into shape {list(shape)}"
            )
        data = data.reshape(shape)
    if data.ndim == 0:
        data = data.reshape(1)
    check_shape(data.shape)
    return data


def check_shape(shape: tuple):
    """Shape must be non-empty with every extent >= 1"""
    if len(shape) == 0:
        raise ShapeError("tensor shape must be non-empty")
    if any(int(extent) < 1 for extent in shape):
        raise ShapeError(f"tensor extents must be >= 1, got {list(shape)}")


def result_dtype(*arrays) -> np.dtype:
    """float32 unless an operand is already float64 (gradient checks)"""
    if any(np.asarray(a).dtype == np.float64 for a in arrays):
        return np.dtype(np.float64)
    return np.dtype(DTYPE)


def is_finite(t: Tensor) -> bool:
    return bool(np.all(np.isfinite(t)))


def tmap(t: Tensor, f: Callable[[np.ndarray], np.ndarray]) -> Tensor:
    """
    Elementwise map of a scalar function. Array-aware callables (ufuncs,
    arithmetic lambdas) run vectorised; anything else is applied per element.
    """
    t = np.asarray(t, dtype=DTYPE)
    try:
        out = np.asarray(f(t.copy()), dtype=DTYPE)
    except (TypeError, ValueError):
        out = None

    if out is None or out.shape != t.shape:
        out = np.vectorize(f, otypes=[DTYPE])(t)
    return np.ascontiguousarray(out, dtype=DTYPE)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Rank-2 product [m,k] x [k,n] -> [m,n], accumulated in float64"""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(
            f"matmul needs rank-2 operands, got {list(a.shape)} and {list(b.shape)}"
        )
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul inner dimensions differ: {list(a.shape)} x {list(b.shape)}"
        )
    out = a.astype(np.float64) @ b.astype(np.float64)
    return out.astype(result_dtype(a, b))


def reduce(t: Tensor, op: str = "sum", axis: Union[int, None] = None) -> Tensor:
    """
    Reduce along one axis (removed from the shape) or over everything
    (``axis=None``, result has shape [1]).
    """
    if op not in REDUCTIONS:
        raise ValidationError(f"unknown reduction '{op}', expected one of {REDUCTIONS}")

    t = np.asarray(t)
    if axis is not None:
        if not isinstance(axis, (int, np.integer)) or axis < 0 or axis >= t.ndim:
            raise ShapeError(f"axis {axis} out of range for shape {list(t.shape)}")

    wide = t.astype(np.float64)
    if op == "sum":
        out = wide.sum(axis=axis)
    elif op == "max":
        out = wide.max(axis=axis)
    else:
        out = wide.mean(axis=axis)

    out = np.asarray(out, dtype=result_dtype(t))
    if out.ndim == 0:
        out = out.reshape(1)
    return out
