"""A virtual communicator: ranks as threads in one process, ring collectives.

Each rank is a single logical thread of control that owns its buffers;
collectives are the only synchronization points.  The allreduce follows a
ring schedule: a reduce-scatter over ceil(n/p) chunks (p-1 steps) followed
by a ring allgather (p-1 steps).  Per-rank counters charge one read at the
sender and one write at the receiver for every transferred element, which
comes to 4n(p-1)/p elements per rank when p divides n.

Value conventions:

* the exact-width allreduce accumulates every chunk in ascending rank
  order, so the result equals the serial rank-ordered sum bit for bit and
  is independent of thread scheduling;
* the mixed-width allreduce is order-faithful to the ring instead: chunk c
  starts at rank c and each hop promotes both operands, adds in compute
  precision and demotes before forwarding, keeping transfers narrow.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

import numpy as np

from .precision import PrecisionMode, demote, promote


class CollectiveError(RuntimeError):
    """Mismatched participation in a collective."""


class CollectiveTimeout(CollectiveError):
    """A collective gave up waiting; reports which ranks never arrived."""

    def __init__(self, kind: str, absent: list[int]):
        self.kind = kind
        self.absent = absent
        super().__init__(f"collective {kind!r} timed out waiting for ranks {absent}")


@dataclass
class CommCounters:
    elements_sent: int = 0
    elements_received: int = 0
    touched_elements: int = 0
    collective_calls: int = 0

    def add(self, other: "CommCounters") -> None:
        self.elements_sent += other.elements_sent
        self.elements_received += other.elements_received
        self.touched_elements += other.touched_elements
        self.collective_calls += other.collective_calls


def ring_chunks(n: int, p: int) -> list[tuple[int, int]]:
    """ceil(n/p)-sized chunks with a short (possibly empty) tail."""
    q = -(-n // p) if n else 0
    return [(min(i * q, n), min((i + 1) * q, n)) for i in range(p)]


def _charge(counters, sender: int, receiver: int, size: int) -> None:
    if counters is None or size == 0:
        return
    counters[sender].elements_sent += size
    counters[sender].touched_elements += size
    counters[receiver].elements_received += size
    counters[receiver].touched_elements += size


def _charge_allreduce_movement(counters, sizes: list[int], p: int) -> None:
    # reduce-scatter: step t moves chunk (r - t) mod p from r to r+1
    for t in range(p - 1):
        for r in range(p):
            _charge(counters, r, (r + 1) % p, sizes[(r - t) % p])
    # allgather: step t moves the finished chunk (r + 1 - t) mod p onward
    for t in range(p - 1):
        for r in range(p):
            _charge(counters, r, (r + 1) % p, sizes[(r + 1 - t) % p])


def ring_all_reduce(bufs: list[np.ndarray], counters: list[CommCounters] | None = None) -> None:
    """Exact-width allreduce; in place, ascending rank-order accumulation."""
    p = len(bufs)
    n = bufs[0].size
    if any(b.size != n for b in bufs):
        raise CollectiveError("allreduce buffers differ in length across ranks")
    if counters is not None:
        for c in counters:
            c.collective_calls += 1
    if p == 1:
        return
    acc = bufs[0].copy()
    for r in range(1, p):
        acc += bufs[r]
    _charge_allreduce_movement(counters, [b - a for a, b in ring_chunks(n, p)], p)
    for b in bufs:
        b[:] = acc


def ring_all_reduce_mixed(
    bufs: list[np.ndarray],
    mode: PrecisionMode,
    counters: list[CommCounters] | None = None,
) -> None:
    """Mixed-width allreduce: narrow transfers, wide accumulation per hop.

    Chunk c travels rank c -> c+1 -> ... around the ring; every hop
    computes demote(promote(partial) + promote(contribution)).  All ranks
    end with identical storage-format bits.
    """
    p = len(bufs)
    n = bufs[0].size
    if any(b.size != n for b in bufs):
        raise CollectiveError("allreduce buffers differ in length across ranks")
    if counters is not None:
        for c in counters:
            c.collective_calls += 1
    if p == 1:
        return
    chunks = ring_chunks(n, p)
    final = []
    for c, (a, b) in enumerate(chunks):
        cur = bufs[c % p][a:b].copy()
        for i in range(1, p):
            r = (c + i) % p
            cur = demote(promote(cur, mode) + promote(bufs[r][a:b], mode), mode)
        final.append(cur)
    _charge_allreduce_movement(counters, [b - a for a, b in chunks], p)
    for buf in bufs:
        for (a, b), cur in zip(chunks, final):
            buf[a:b] = cur


def ring_all_gather(locals_: list[np.ndarray], counters: list[CommCounters] | None = None) -> np.ndarray:
    """Concatenate per-rank blocks in rank order via a ring.

    Every rank receives total - len(own) elements; blocks may differ in
    length (the last rank usually holds the short chunk).
    """
    p = len(locals_)
    if counters is not None:
        for c in counters:
            c.collective_calls += 1
    out = np.concatenate(locals_) if p > 1 else locals_[0].copy()
    if p > 1 and counters is not None:
        sizes = [b.size for b in locals_]
        for t in range(p - 1):
            for r in range(p):
                _charge(counters, r, (r + 1) % p, sizes[(r - t) % p])
    return out


class _Slot:
    __slots__ = ("kind", "payloads", "results", "error", "done", "taken")

    def __init__(self, kind: str):
        self.kind = kind
        self.payloads: dict[int, object] = {}
        self.results: list | None = None
        self.error: BaseException | None = None
        self.done = False
        self.taken = 0


class WorkerGroup:
    """p ranks inside one process; collectives rendezvous through slots.

    Rank bodies run as threads (see run()); each collective blocks until
    all ranks deposited their payload, then the last arriver executes the
    ring algorithm once and every rank picks up its result.  A wall-clock
    guard turns missing participants into CollectiveTimeout instead of a
    deadlock.
    """

    def __init__(self, size: int, *, timeout: float = 30.0):
        if size < 1:
            raise ValueError("group size must be >= 1")
        self.size = size
        self.timeout = timeout
        self.counters = [CommCounters() for _ in range(size)]
        self._cond = threading.Condition()
        self._slots: dict[int, _Slot] = {}
        self._call_index = [0] * size

    # -- rank-side collectives -------------------------------------------

    def all_reduce_sum(self, rank: int, buf: np.ndarray) -> None:
        self._collective(rank, "all_reduce_sum", buf)

    def all_reduce_sum_mixed(self, rank: int, buf: np.ndarray, mode: PrecisionMode) -> None:
        self._collective(rank, f"all_reduce_sum_mixed:{mode.name}", (buf, mode))

    def all_gather(self, rank: int, local: np.ndarray) -> np.ndarray:
        return self._collective(rank, "all_gather", local)

    def barrier(self, rank: int) -> None:
        self._collective(rank, "barrier", None)

    def _collective(self, rank: int, kind: str, payload):
        if not 0 <= rank < self.size:
            raise CollectiveError(f"rank {rank} outside group of {self.size}")
        with self._cond:
            idx = self._call_index[rank]
            self._call_index[rank] += 1
            slot = self._slots.get(idx)
            if slot is None:
                slot = self._slots[idx] = _Slot(kind)
            elif slot.kind != kind and slot.error is None:
                slot.error = CollectiveError(
                    f"rank {rank} entered {kind!r} while others run {slot.kind!r}"
                )
                slot.done = True
                self._cond.notify_all()
            slot.payloads[rank] = payload
            if len(slot.payloads) == self.size and not slot.done:
                try:
                    slot.results = self._execute(kind, [slot.payloads[r] for r in range(self.size)])
                except BaseException as exc:
                    slot.error = exc
                slot.done = True
                self._cond.notify_all()
            else:
                deadline = time.monotonic() + self.timeout
                while not slot.done:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        absent = sorted(set(range(self.size)) - set(slot.payloads))
                        slot.error = CollectiveTimeout(kind, absent)
                        slot.done = True
                        self._cond.notify_all()
                        break
                    self._cond.wait(remaining)
            error = slot.error
            results = slot.results
            slot.taken += 1
            if slot.taken == self.size:
                self._slots.pop(idx, None)
        if error is not None:
            raise error
        return results[rank] if results is not None else None

    def _execute(self, kind: str, payloads: list):
        if kind == "barrier":
            return None
        if kind == "all_reduce_sum":
            ring_all_reduce(payloads, self.counters)
            return None
        if kind.startswith("all_reduce_sum_mixed"):
            bufs = [p[0] for p in payloads]
            ring_all_reduce_mixed(bufs, payloads[0][1], self.counters)
            return None
        if kind == "all_gather":
            out = ring_all_gather(payloads, self.counters)
            return [out.copy() for _ in range(self.size)]
        raise CollectiveError(f"unknown collective {kind!r}")

    # -- harness side ----------------------------------------------------

    def run(self, fn, *args) -> list:
        """Drive fn(rank, *args) on every rank concurrently; returns the
        per-rank results or re-raises the first rank failure."""
        if self.size == 1:
            return [fn(0, *args)]
        results = [None] * self.size
        errors: list[BaseException | None] = [None] * self.size
        def body(r: int) -> None:
            try:
                results[r] = fn(r, *args)
            except BaseException as exc:
                errors[r] = exc
        threads = [threading.Thread(target=body, args=(r,), name=f"rank{r}") for r in range(self.size)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        # a real failure beats the timeouts it caused on the other ranks
        first = next((e for e in errors if e is not None and not isinstance(e, CollectiveTimeout)), None)
        first = first or next((e for e in errors if e is not None), None)
        if first is not None:
            raise first
        return results
