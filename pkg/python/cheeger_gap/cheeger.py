"""
Cheeger constant of a weighted graph, the classic Cheeger bounds and the
two-valued variational upper bound.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from typing import Callable, Iterable, Iterator, Literal

import numpy as np
from numpy.typing import NDArray

from ._internal.concurrency import resolve_workers
from ._internal.enumerate import minimize_ratio, within_tie as _within
from .errors import DegenerateCutError, EmptyFamilyError, SizeLimitError
from .graph import WeightedGraph
from .setting import RunSettings

_logger = logging.getLogger(__name__)

CheegerMethod = Literal["exact", "candidate"]
CutFamily = Callable[[WeightedGraph], Iterable[NDArray[np.bool_]]]


@dataclasses.dataclass(frozen=True)
class Cut:
    vertices: tuple[int, ...]
    flow: float
    capacity: float

    @property
    def ratio(self) -> float:
        return self.flow / self.capacity

    @property
    def bitmask(self) -> int:
        return sum(1 << v for v in self.vertices)

    def to_row(self) -> dict[str, str]:
        return {
            "subset": " ".join(str(v) for v in self.vertices),
            "flow": format(self.flow, ".17g"),
            "capacity": format(self.capacity, ".17g"),
            "ratio": format(self.ratio, ".17g"),
        }


@dataclasses.dataclass(frozen=True)
class CheegerResult:
    phi: float
    cut: Cut
    method: CheegerMethod
    # Subsets (or family members) looked at, and how many passed C_S <= 1/2.
    examined: int = 0
    feasible: int = 0
    family: str | None = None


def _indicator(n_vertices: int, subset: Iterable[int]) -> NDArray[np.bool_]:
    mask = np.zeros(n_vertices, dtype=bool)
    for v in subset:
        v = int(v)
        if not 0 <= v < n_vertices:
            raise DegenerateCutError(f"vertex {v} out of range for N={n_vertices}")
        mask[v] = True
    return mask


def _mask_flow(graph: WeightedGraph, mask: NDArray[np.bool_]) -> float:
    i, j, w = graph.edges()
    return float(w[mask[i] != mask[j]].sum())


def flow_capacity(graph: WeightedGraph, subset: Iterable[int]) -> tuple[float, float]:
    """(F_S, C_S): weight crossing the boundary of S, and the pi-mass of S."""
    mask = _indicator(graph.n_vertices, subset)
    size = int(mask.sum())
    if size == 0 or size == graph.n_vertices:
        raise DegenerateCutError(
            f"cut side must be a nonempty proper subset, got {size} of {graph.n_vertices} vertices"
        )
    return _mask_flow(graph, mask), float(graph.pi[mask].sum())


def make_cut(graph: WeightedGraph, subset: Iterable[int]) -> Cut:
    vertices = tuple(sorted({int(v) for v in subset}))
    flow, capacity = flow_capacity(graph, vertices)
    return Cut(vertices=vertices, flow=flow, capacity=capacity)


def cheeger_exact(
    graph: WeightedGraph, settings: RunSettings | None = None
) -> CheegerResult:
    """
    Minimise F_S / C_S over every S with C_S <= 1/2 + cap_tol.

    Vertex 0 is fixed outside the enumerated set and both orientations of
    each subset are tested for feasibility.
    """
    settings = settings or RunSettings()
    n = graph.n_vertices
    if n > settings.enum_limit:
        raise SizeLimitError(
            f"exact Cheeger enumeration needs N <= enum_limit={settings.enum_limit}, "
            f"got N={n}; use cheeger_candidate"
        )
    best = minimize_ratio(
        graph.adjacency(),
        graph.pi,
        range(1, n),
        both_orientations=True,
        cap_limit=0.5 + settings.cap_tol,
        workers=resolve_workers(settings.threads),
    )
    if best is None:
        raise EmptyFamilyError("no subset satisfies C_S <= 1/2")
    cut = make_cut(graph, best.vertices)
    _logger.debug(
        "exact Cheeger: phi=%.6g over %d subsets (%d feasible)",
        cut.ratio,
        best.examined,
        best.feasible,
    )
    return CheegerResult(
        phi=cut.ratio,
        cut=cut,
        method="exact",
        examined=best.examined,
        feasible=best.feasible,
    )


def coordinate_cuts(graph: WeightedGraph) -> Iterator[NDArray[np.bool_]]:
    """Hypercube half-cuts {x : bit k of x is set}."""
    n_bits = graph.n_vertices.bit_length() - 1
    states = np.arange(graph.n_vertices)
    for k in range(n_bits):
        yield ((states >> k) & 1).astype(bool)


def hamming_level_cuts(graph: WeightedGraph) -> Iterator[NDArray[np.bool_]]:
    """Hypercube level sets {x : popcount(x) <= k}."""
    n_bits = graph.n_vertices.bit_length() - 1
    weight = np.array([bin(x).count("1") for x in range(graph.n_vertices)])
    for k in range(n_bits):
        yield weight <= k


def arc_cuts(graph: WeightedGraph) -> Iterator[NDArray[np.bool_]]:
    """Contiguous arcs {s, s+1, ..., s+len-1} mod N of a ring."""
    n = graph.n_vertices
    idx = np.arange(n)
    for length in range(1, n):
        for start in range(n):
            yield (idx - start) % n < length


def hypercube_cuts(graph: WeightedGraph) -> Iterator[NDArray[np.bool_]]:
    yield from coordinate_cuts(graph)
    yield from hamming_level_cuts(graph)


FAMILIES: dict[str, CutFamily] = {
    "coordinate": coordinate_cuts,
    "hamming": hamming_level_cuts,
    "hypercube": hypercube_cuts,
    "arc": arc_cuts,
}


def cheeger_candidate(
    graph: WeightedGraph,
    family: CutFamily | str,
    settings: RunSettings | None = None,
) -> CheegerResult:
    """Smallest feasible ratio over a cut family; an upper estimate of phi."""
    settings = settings or RunSettings()
    family_name = family if isinstance(family, str) else getattr(family, "__name__", None)
    generator = FAMILIES[family] if isinstance(family, str) else family
    n = graph.n_vertices
    cap_limit = 0.5 + settings.cap_tol
    i, j, w = graph.edges()

    best_ratio = math.inf
    tied: list[tuple[float, tuple[int, ...]]] = []
    examined = feasible = 0
    for mask in generator(graph):
        examined += 1
        for side in (mask, ~mask):
            size = int(side.sum())
            if size == 0 or size == n:
                continue
            capacity = float(graph.pi[side].sum())
            if capacity > cap_limit:
                continue
            feasible += 1
            ratio = float(w[side[i] != side[j]].sum()) / capacity
            if not _within(ratio, best_ratio):
                continue
            vertices = tuple(int(v) for v in np.nonzero(side)[0])
            if ratio < best_ratio:
                tied = [t for t in tied if _within(t[0], ratio)]
                best_ratio = ratio
            tied.append((ratio, vertices))
    if not tied:
        raise EmptyFamilyError(f"cut family '{family_name}' yields no feasible cut")
    cut = make_cut(graph, min(t[1] for t in tied if _within(t[0], best_ratio)))
    return CheegerResult(
        phi=cut.ratio,
        cut=cut,
        method="candidate",
        examined=examined,
        feasible=feasible,
        family=family_name,
    )


def classic_bounds(phi: float, lambda0: float) -> tuple[float, float]:
    """(2 phi, phi^2 / (2 |lambda0|))."""
    if phi < 0:
        raise ValueError(f"phi must be non-negative, got {phi}")
    if not lambda0 < 0:
        raise ValueError(f"lambda0 must be negative, got {lambda0}")
    return 2.0 * phi, phi * phi / (2.0 * abs(lambda0))


def variational_upper(
    graph: WeightedGraph,
    side_a: Iterable[int],
    side_b: Iterable[int] | None = None,
) -> float:
    """
    Rayleigh quotient of the two-valued vector psi = 1/C_A on A, -1/C_B on B.

    B defaults to the complement of A.
    """
    a = _indicator(graph.n_vertices, side_a)
    b = ~a if side_b is None else _indicator(graph.n_vertices, side_b)
    if np.any(a & b) or not np.all(a | b) or not a.any() or not b.any():
        raise DegenerateCutError("(A, B) must be a partition of V into nonempty parts")
    cap_a = float(graph.pi[a].sum())
    cap_b = float(graph.pi[b].sum())
    psi = np.where(a, 1.0 / cap_a, -1.0 / cap_b)
    i, j, w = graph.edges()
    numerator = float((w * (psi[i] - psi[j]) ** 2).sum())
    denominator = float((graph.pi * psi**2).sum())
    return numerator / denominator
