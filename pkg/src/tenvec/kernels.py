"""Contraction kernels and their touched-memory accounting.

The native tensor-vector contraction never transposes or copies the
tensor: the last mode maps to one tall matrix-vector product and every
other mode to u independent vector-matrix products over contiguous slabs,
so each buffer element streams through exactly once no matter which mode
is contracted.  Counters record streamed elements per invocation.

All kernels accept buffers in any storage format, accumulate in the
compute format of the given precision mode, and demote only on store.
beta == 0 is a strict write: the output is never read, NaN-safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .precision import F64, PrecisionMode, demote, promote
from .tensor import Shape, Tensor, matricize_dims

MATVEC = "matvec"
VECMAT = "vecmat"


class KernelError(ValueError):
    """Shape mismatch or invalid kernel arguments."""


class NormalizationError(ArithmeticError):
    """Attempt to normalize a zero vector."""


@dataclass
class KernelCounters:
    """Streamed elements and bytes touched by kernel invocations.

    bytes_touched is (reads + writes) times the storage width of each
    contributing call, so mixed-width histories stay additive.
    """

    elements_read: int = 0
    elements_written: int = 0
    bytes_touched: int = 0
    invocations: dict = field(default_factory=dict)

    @property
    def elements_touched(self) -> int:
        return self.elements_read + self.elements_written

    def count(self, name: str, read: int, written: int, storage_bytes: int) -> None:
        self.elements_read += read
        self.elements_written += written
        self.bytes_touched += (read + written) * storage_bytes
        self.invocations[name] = self.invocations.get(name, 0) + 1

    def add(self, other: "KernelCounters") -> None:
        self.elements_read += other.elements_read
        self.elements_written += other.elements_written
        self.bytes_touched += other.bytes_touched
        for name, c in other.invocations.items():
            self.invocations[name] = self.invocations.get(name, 0) + c


def task_ranges(total: int, tasks: int) -> list[tuple[int, int]]:
    """Split [0, total) into at most `tasks` disjoint contiguous blocks."""
    tasks = max(1, min(tasks, total)) if total > 0 else 1
    block = -(-total // tasks)
    return [(a, min(a + block, total)) for a in range(0, total, block)] or [(0, 0)]


def getvc(
    trans: str,
    alpha: float,
    a: np.ndarray,
    x: np.ndarray,
    beta: float,
    y: np.ndarray,
    *,
    mode: PrecisionMode = F64,
    tasks: int = 1,
    counters: KernelCounters | None = None,
) -> None:
    """General tensor-vector contraction kernel over one matrix view.

    matvec:  y[i] = alpha * sum_j a[i, j] * x[j] + beta * y[i]
    vecmat:  y[j] = alpha * sum_i x[i] * a[i, j] + beta * y[j]

    `a` is an m x n row-major view (a leading dimension larger than n is
    carried by the view's strides).  Work is split into disjoint output
    blocks: rows for matvec, column blocks for vecmat; blocks run in
    ascending order and each block's reduction order is fixed, so repeated
    runs are bit-identical.
    """
    if a.ndim != 2:
        raise KernelError("getvc expects a 2-D matrix view")
    m, n = a.shape
    if trans == MATVEC:
        out_len, in_len = m, n
    elif trans == VECMAT:
        out_len, in_len = n, m
    else:
        raise KernelError(f"unknown trans {trans!r}")
    if x.shape != (in_len,) or y.shape != (out_len,):
        raise KernelError(f"getvc {trans} with a {m}x{n} needs x[{in_len}], y[{out_len}]")

    ct = mode.compute_dtype
    al = ct.type(alpha)
    be = ct.type(beta)
    xc = promote(x, mode)
    for lo, hi in task_ranges(out_len, tasks):
        if trans == MATVEC:
            acc = al * (promote(a[lo:hi], mode) @ xc)
        else:
            acc = al * (xc @ promote(a[:, lo:hi], mode))
        if beta != 0.0:
            acc += be * promote(y[lo:hi], mode)
        y[lo:hi] = demote(acc, mode)

    if counters is not None:
        read = m * n + in_len + (out_len if beta != 0.0 else 0)
        counters.count("getvc", read, out_len, mode.storage_bytes)


def tvc_native(
    t: Tensor,
    x: np.ndarray,
    k: int,
    *,
    alpha: float = 1.0,
    beta: float = 0.0,
    out: np.ndarray | None = None,
    tasks: int = 1,
    counters: KernelCounters | None = None,
) -> Tensor:
    """Contract mode k of t with vector x, any mode at streaming cost.

    k = d-1 runs one matvec over the (u, n_k) view; every other mode runs
    u independent vecmats over contiguous (n_k, v) slabs.  The input
    vector is counted once per contraction: elements_read = N + n_k for
    beta = 0, elements_written = N / n_k, identical for every mode of a
    hypersquare tensor.

    `out` may be a preallocated flat storage buffer (at least N/n_k
    elements); the result tensor wraps its prefix, enabling buffer reuse.
    """
    md = matricize_dims(t.shape, k)
    if x.shape != (md.nk,):
        raise KernelError(f"vector of {x.shape} for mode {k} of extent {md.nk}")
    out_shape = t.shape.drop(k)
    out_size = out_shape.size
    if out is None:
        out = np.empty(out_size, dtype=t.mode.storage_dtype)
    elif out.size < out_size:
        raise KernelError(f"output buffer of {out.size} elements, need {out_size}")
    ybuf = out[:out_size]

    if md.v == 1:
        aview = t.buf.reshape(md.u, md.nk)
        getvc(MATVEC, alpha, aview, x, beta, ybuf, mode=t.mode, tasks=tasks)
    else:
        slabs = t.buf.reshape(md.u, md.nk, md.v)
        yview = ybuf.reshape(md.u, md.v)
        for i in range(md.u):
            getvc(VECMAT, alpha, slabs[i], x, beta, yview[i], mode=t.mode, tasks=tasks)

    if counters is not None:
        read = t.size + md.nk + (out_size if beta != 0.0 else 0)
        counters.count("tvc", read, out_size, t.mode.storage_bytes)
    return Tensor(out_shape, ybuf, t.mode)


def tvc_looped_oracle(t: Tensor, x: np.ndarray, k: int) -> np.ndarray:
    """Reference contraction: plain ascending loops, float64, no blocking.

    Same mathematical contract as tvc_native with alpha=1, beta=0.  Kept
    deliberately naive so kernel bugs cannot hide in both paths.
    """
    md = matricize_dims(t.shape, k)
    a = t.to_float64().reshape(md.u, md.nk, md.v)
    xf = promote(x, t.mode).astype(np.float64)
    out = np.zeros((md.u, md.v), dtype=np.float64)
    for i in range(md.u):
        for j in range(md.nk):
            for l in range(md.v):
                out[i, l] += a[i, j, l] * xf[j]
    return out.reshape(t.shape.drop(k).extents)


def axpby(
    alpha: float,
    x: np.ndarray,
    beta: float,
    y: np.ndarray,
    *,
    mode: PrecisionMode = F64,
    vl: int = 8,
    counters: KernelCounters | None = None,
) -> None:
    """y := demote(alpha * promote(x) + beta * promote(y)), elementwise.

    The mixed path stages vl*vl elements at a time through one reused
    compute-precision block (the remainder runs through a short final
    block); pure paths update in place.  beta = 0 never reads y.
    """
    if x.shape != y.shape or x.ndim != 1:
        raise KernelError("axpby expects two 1-D vectors of equal length")
    n = x.size
    ct = mode.compute_dtype
    al = ct.type(alpha)
    be = ct.type(beta)
    if not mode.mixed:
        if beta == 0.0:
            np.multiply(x, al, out=y)
        else:
            y *= be
            y += al * x
    else:
        unroll = vl * vl
        wrk = np.empty(min(unroll, n), dtype=ct)
        for lo in range(0, n, unroll):
            hi = min(lo + unroll, n)
            blk = wrk[: hi - lo]
            np.multiply(promote(x[lo:hi], mode), al, out=blk)
            if beta != 0.0:
                blk += be * promote(y[lo:hi], mode)
            y[lo:hi] = demote(blk, mode)
    if counters is not None:
        read = n + (n if beta != 0.0 else 0)
        counters.count("axpby", read, n, mode.storage_bytes)


def norm2(x: np.ndarray, *, mode: PrecisionMode = F64, counters: KernelCounters | None = None) -> float:
    """Euclidean norm accumulated in compute precision."""
    xc = promote(x, mode)
    if counters is not None:
        counters.count("norm2", x.size, 0, mode.storage_bytes)
    return float(np.sqrt(np.dot(xc, xc)))


def normalize(x: np.ndarray, *, mode: PrecisionMode = F64, counters: KernelCounters | None = None) -> float:
    """Scale x to unit norm in place; returns the norm it had.

    Touches 3n elements: one read pass for the norm, one read and one
    write pass for the scale.
    """
    nrm = norm2(x, mode=mode, counters=counters)
    if nrm == 0.0:
        raise NormalizationError("cannot normalize a zero vector")
    x[:] = demote(promote(x, mode) / mode.compute_dtype.type(nrm), mode)
    if counters is not None:
        counters.count("scale", x.size, x.size, mode.storage_bytes)
    return nrm
