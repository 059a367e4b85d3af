"""
Exhaustive minimisation of flow/capacity ratios over vertex subsets.

Subsets T of a list of free vertices are enumerated in blocks: the low bits
of the subset mask index a precomputed table and the high bits are applied
per step, so each step is a handful of vectorised numpy operations. For a
symmetric weight matrix W with zero diagonal and off-diagonal degrees u,

    F(T) = sum_{i in T} u_i - sum_{i, j in T} W_ij

is the weight leaving T. The high-bit range can be split into shards that
run on separate workers; the reduction only depends on the set of values,
never on shard order.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Literal, Sequence

import numpy as np
import scipy.sparse as sparse
from numpy.typing import NDArray

from .concurrency import ordered_map

LOW_BITS = 14
TIE_RTOL = 1e-12

Orientation = Literal["inner", "outer"]


@dataclasses.dataclass(frozen=True)
class SubsetMinimum:
    ratio: float
    vertices: tuple[int, ...]
    examined: int
    feasible: int


@dataclasses.dataclass
class _ShardResult:
    best: float
    candidates: list[tuple[float, int, int, Orientation]]
    examined: int
    feasible: int


def within_tie(value: float, best: float) -> bool:
    return value <= best + TIE_RTOL * max(abs(best), 1e-300)


class _Problem:
    def __init__(
        self,
        adjacency: sparse.csr_matrix,
        pi: NDArray[np.float64],
        free: Sequence[int],
        both_orientations: bool,
        cap_limit: float | None,
    ):
        self.n_vertices = adjacency.shape[0]
        self.free = np.asarray(free, dtype=np.int64)
        self.both_orientations = both_orientations
        self.cap_limit = math.inf if cap_limit is None else cap_limit
        self.total_pi = float(pi.sum())

        f = len(self.free)
        self.low = min(f, LOW_BITS)
        self.high = f - self.low

        u_all = np.asarray(adjacency.sum(axis=1)).ravel()
        w = adjacency[self.free][:, self.free].toarray()
        u = u_all[self.free]
        pi_free = pi[self.free]
        self.snap = 1e-13 * max(float(u_all.sum()), 1e-300)

        l = self.low
        bits = ((np.arange(1 << l)[:, None] >> np.arange(l)) & 1).astype(np.float64)
        w_ll = w[:l, :l]
        self.flow_low = bits @ u[:l] - ((bits @ w_ll) * bits).sum(axis=1)
        self.cap_low = bits @ pi_free[:l]
        self.cross = bits @ w[:l, l:]
        self.u_high = u[l:]
        self.w_hh = w[l:, l:]
        self.pi_high = pi_free[l:]

    def high_bits(self, h: int) -> NDArray[np.float64]:
        return ((h >> np.arange(self.high)) & 1).astype(np.float64)

    def scan(self, start: int, stop: int) -> _ShardResult:
        result = _ShardResult(best=math.inf, candidates=[], examined=0, feasible=0)
        for h in range(start, stop):
            b = self.high_bits(h)
            const_flow = float(b @ self.u_high - b @ self.w_hh @ b)
            flow = self.flow_low + const_flow - 2.0 * (self.cross @ b)
            flow[flow < self.snap] = 0.0
            cap = self.cap_low + float(b @ self.pi_high)

            nonempty = np.ones(flow.shape[0], dtype=bool)
            if h == 0:
                nonempty[0] = False
            result.examined += int(nonempty.sum())

            orientations: list[tuple[Orientation, NDArray[np.float64]]] = [
                ("inner", cap)
            ]
            if self.both_orientations:
                orientations.append(("outer", self.total_pi - cap))
            for orientation, capacity in orientations:
                feasible = nonempty & (capacity > 0.0) & (capacity <= self.cap_limit)
                count = int(feasible.sum())
                if count == 0:
                    continue
                result.feasible += count
                ratio = np.full(flow.shape[0], math.inf)
                ratio[feasible] = flow[feasible] / capacity[feasible]
                chunk_min = float(ratio.min())
                if not within_tie(chunk_min, result.best):
                    continue
                if chunk_min < result.best:
                    result.best = chunk_min
                    result.candidates = [
                        c for c in result.candidates if within_tie(c[0], chunk_min)
                    ]
                threshold = result.best + TIE_RTOL * max(abs(result.best), 1e-300)
                for i in np.nonzero(ratio <= threshold)[0]:
                    result.candidates.append((float(ratio[i]), h, int(i), orientation))
        return result

    def vertices(self, h: int, i: int, orientation: Orientation) -> tuple[int, ...]:
        mask = (h << self.low) | i
        inner = [int(v) for k, v in enumerate(self.free) if (mask >> k) & 1]
        if orientation == "inner":
            return tuple(sorted(inner))
        inner_set = set(inner)
        return tuple(v for v in range(self.n_vertices) if v not in inner_set)


def minimize_ratio(
    adjacency: sparse.csr_matrix,
    pi: NDArray[np.float64],
    free: Sequence[int],
    *,
    both_orientations: bool,
    cap_limit: float | None,
    workers: int = 1,
) -> SubsetMinimum | None:
    """
    Minimise F(T)/C(T) over nonempty T ⊆ free (vertices outside `free` stay out).

    With `both_orientations`, each complement V \\ T is considered as well.
    Only subsets with capacity ≤ `cap_limit` are feasible. Ties within a
    relative 1e-12 go to the lexicographically smallest sorted vertex tuple.
    Returns None when no subset is feasible.
    """
    if len(free) == 0:
        return None
    problem = _Problem(adjacency, pi, free, both_orientations, cap_limit)
    n_high = 1 << problem.high
    shards = max(1, min(workers, n_high))
    bounds = [(k * n_high // shards, (k + 1) * n_high // shards) for k in range(shards)]
    results = ordered_map(lambda b: problem.scan(*b), bounds, workers=shards)

    best = min(r.best for r in results)
    examined = sum(r.examined for r in results)
    feasible = sum(r.feasible for r in results)
    if not math.isfinite(best):
        return None
    tied = [
        problem.vertices(h, i, orientation)
        for r in results
        for ratio, h, i, orientation in r.candidates
        if within_tie(ratio, best)
    ]
    return SubsetMinimum(
        ratio=best, vertices=min(tied), examined=examined, feasible=feasible
    )
