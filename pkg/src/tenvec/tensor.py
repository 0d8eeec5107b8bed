"""Dense tensors in last-order (C) layout plus 1D splitting and reassembly.

A tensor of order d keeps its elements in one contiguous buffer, the last
mode fastest.  Splitting cuts along a single mode s into near-equal chunks
whose size is promoted to a multiple of the kernel vector length when the
extent allows it; reassembly undoes a split either by interleaving owner
blocks into the joint buffer or by gathering everything first and copying
once more.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .precision import F64, PrecisionMode, demote, promote, storage_zeros


class AssemblyError(ValueError):
    """Subtensors do not belong to the given split plan."""


@dataclass(frozen=True)
class Shape:
    """Extents of a dense tensor, order >= 1, every extent >= 1."""

    extents: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.extents) < 1:
            raise ValueError("a tensor has at least one mode")
        if any(int(n) != n or n < 1 for n in self.extents):
            raise ValueError(f"extents must be positive integers, got {self.extents}")
        object.__setattr__(self, "extents", tuple(int(n) for n in self.extents))

    @property
    def order(self) -> int:
        return len(self.extents)

    @property
    def size(self) -> int:
        return math.prod(self.extents)

    def drop(self, k: int) -> "Shape":
        """Shape after contracting mode k away (order-1 result for vectors)."""
        if self.order == 1:
            if k != 0:
                raise IndexError(f"mode {k} out of range for order-1 shape")
            return Shape((1,))
        return Shape(self.extents[:k] + self.extents[k + 1 :])

    def with_extent(self, k: int, n: int) -> "Shape":
        e = list(self.extents)
        e[k] = n
        return Shape(tuple(e))

    def __str__(self) -> str:
        return "x".join(str(n) for n in self.extents)


def parse_shape(text: str) -> Shape:
    """Parse ``2,3,4``, ``2x3x4`` or the power form ``979^3``."""
    text = text.strip()
    if "^" in text:
        base, _, exp = text.partition("^")
        return Shape((int(base),) * int(exp))
    sep = "," if "," in text else "x"
    return Shape(tuple(int(tok) for tok in text.split(sep)))


def linear_index(shape: Shape, idx: tuple[int, ...]) -> int:
    """Row-major offset of a multi-index; the last mode varies fastest."""
    if len(idx) != shape.order:
        raise IndexError(f"index of length {len(idx)} for order-{shape.order} shape")
    off = 0
    for i, n in zip(idx, shape.extents):
        if not 0 <= i < n:
            raise IndexError(f"component {i} out of range [0, {n})")
        off = off * n + i
    return off


@dataclass(frozen=True)
class MatricizedDims:
    """Row/column factorization (u, n_k, v) of a shape around mode k.

    u is the product of the extents before k and v the product after, so
    the buffer reads as u stacked row-major slabs of n_k x v each.
    """

    u: int
    nk: int
    v: int


def matricize_dims(shape: Shape, k: int) -> MatricizedDims:
    if not 0 <= k < shape.order:
        raise IndexError(f"mode {k} out of range for order-{shape.order} shape")
    e = shape.extents
    return MatricizedDims(math.prod(e[:k]), e[k], math.prod(e[k + 1 :]))


def optimal_division(n: int, p: int, vl: int = 1) -> tuple[int, int]:
    """Divide an extent n over at most p workers in vl-friendly chunks.

    The base chunk ceil(n/p) is promoted to the next multiple of vl when
    the extent is at least vl, capped at n; fewer workers than requested
    may come back.  Returns (chunk, p_eff) with chunk*(p_eff-1) < n and
    n <= chunk*p_eff.
    """
    if n < 1 or p < 1 or vl < 1:
        raise ValueError("extent, worker count and vector length must be >= 1")
    q = -(-n // p)
    if n >= vl:
        q = min(vl * -(-q // vl), n)
    return q, -(-n // q)


@dataclass(frozen=True)
class SplitPlan:
    """How one mode was cut: requested and effective worker counts plus
    the half-open index ranges each rank owns along mode s."""

    s: int
    p_requested: int
    p_eff: int
    chunk: int
    ranges: tuple[tuple[int, int], ...]

    @property
    def extent(self) -> int:
        return self.ranges[-1][1]

    def rank_extent(self, rank: int) -> int:
        a, b = self.ranges[rank]
        return b - a


def make_split_plan(n: int, s: int, p: int, vl: int = 1) -> SplitPlan:
    q, p_eff = optimal_division(n, p, vl)
    ranges = tuple((i * q, min((i + 1) * q, n)) for i in range(p_eff))
    return SplitPlan(s=s, p_requested=p, p_eff=p_eff, chunk=q, ranges=ranges)


class Tensor:
    """A dense tensor: shape + flat storage buffer + precision mode.

    The buffer holds exactly shape.size scalars in storage format (brain
    buffers are uint16 bit patterns).  ``view()`` reshapes without copy.
    """

    __slots__ = ("shape", "buf", "mode")

    def __init__(self, shape: Shape, buf: np.ndarray, mode: PrecisionMode = F64):
        if buf.ndim != 1 or buf.size != shape.size:
            raise ValueError(f"buffer of {buf.size} elements for shape {shape} ({shape.size})")
        if buf.dtype != mode.storage_dtype:
            raise ValueError(f"buffer dtype {buf.dtype} does not store {mode.name}")
        self.shape = shape
        self.buf = buf
        self.mode = mode

    @property
    def order(self) -> int:
        return self.shape.order

    @property
    def size(self) -> int:
        return self.shape.size

    @classmethod
    def from_array(cls, arr: np.ndarray, mode: PrecisionMode = F64) -> "Tensor":
        a = np.ascontiguousarray(arr)
        return cls(Shape(a.shape), demote(a.reshape(-1), mode).copy(), mode)

    @classmethod
    def zeros(cls, shape: Shape, mode: PrecisionMode = F64) -> "Tensor":
        return cls(shape, storage_zeros(shape.size, mode), mode)

    def view(self) -> np.ndarray:
        return self.buf.reshape(self.shape.extents)

    def to_float64(self) -> np.ndarray:
        return promote(self.buf, self.mode).astype(np.float64).reshape(self.shape.extents)

    def copy(self) -> "Tensor":
        return Tensor(self.shape, self.buf.copy(), self.mode)


def split(t: Tensor, s: int, p: int, vl: int = 1) -> tuple[list[Tensor], SplitPlan]:
    """Cut t along mode s into p_eff owned copies.

    Rank r takes index range plan.ranges[r]; the last rank absorbs the
    short remainder chunk.  Each part owns its buffer (a copy): one
    contiguous block copy for s=0, a strided gather otherwise.
    """
    if not 0 <= s < t.order:
        raise IndexError(f"split mode {s} out of range for order-{t.order} tensor")
    plan = make_split_plan(t.shape.extents[s], s, p, vl)
    view = t.view()
    parts = []
    for a, b in plan.ranges:
        sl = tuple(slice(a, b) if i == s else slice(None) for i in range(t.order))
        block = np.ascontiguousarray(view[sl])
        parts.append(Tensor(Shape(block.shape), block.reshape(-1), t.mode))
    return parts, plan


@dataclass
class AssemblyStats:
    """What a reassembly moved: logical messages issued per rank and the
    extra elements copied locally on top of them (gather-copy only)."""

    strategy: str
    messages_per_rank: int
    extra_local_elements: int


def interleave_messages_per_rank(shape: Shape, s: int) -> int:
    """Contiguous owner blocks per rank when interleaving a mode-s split.

    Viewing the joint tensor matricized around mode s-1, one rank
    contributes one column group per row, i.e. prod(extents[:s-1])
    messages; a single message suffices for s=0 and s=1.
    """
    if s < 1:
        return 1
    return math.prod(shape.extents[: s - 1])


def reassemble_with_stats(
    parts: list[Tensor], plan: SplitPlan, strategy: str = "interleave"
) -> tuple[Tensor, AssemblyStats]:
    if len(parts) != plan.p_eff:
        raise AssemblyError(f"{len(parts)} parts for a {plan.p_eff}-rank plan")
    s = plan.s
    base = parts[0].shape
    for r, part in enumerate(parts):
        want = base.with_extent(s, plan.rank_extent(r))
        if part.shape != want:
            raise AssemblyError(f"rank {r} part has shape {part.shape}, plan expects {want}")
        if part.mode != parts[0].mode:
            raise AssemblyError("parts disagree on precision mode")
    full = base.with_extent(s, plan.extent)
    md = matricize_dims(full, s)
    w = interleave_messages_per_rank(full, s)
    rows = md.u // w  # n_{s-1}, or 1 when s <= 1

    out = np.empty(full.size, dtype=parts[0].buf.dtype)
    gview = out.reshape(w, rows, full.extents[s], md.v)
    if strategy == "interleave":
        # one contiguous local block per (rank, group), scattered in place
        for r, part in enumerate(parts):
            a, b = plan.ranges[r]
            lview = part.buf.reshape(w, rows, b - a, md.v)
            for g in range(w):
                gview[g, :, a:b, :] = lview[g]
        stats = AssemblyStats("interleave", w, 0)
    elif strategy == "gather-copy":
        # collect every part back to back, then one copy pass into joint order
        disjoint = np.concatenate([part.buf for part in parts])
        off = 0
        for r, part in enumerate(parts):
            a, b = plan.ranges[r]
            seg = disjoint[off : off + part.size]
            off += part.size
            gview[:, :, a:b, :] = seg.reshape(w, rows, b - a, md.v)
        stats = AssemblyStats("gather-copy", 1, full.size)
    else:
        raise AssemblyError(f"unknown assembly strategy {strategy!r}")
    return Tensor(full, out, parts[0].mode), stats


def reassemble(parts: list[Tensor], plan: SplitPlan, strategy: str = "interleave") -> Tensor:
    tensor, _ = reassemble_with_stats(parts, plan, strategy)
    return tensor
