"""
Flow-network certificate for the generalised Cheeger bound.

The network has a source s, a sink t, a layer X holding a copy of a support
set and a layer Y holding a copy of every vertex. Arcs, numbered by rule:

    1. (s, x_i) with capacity (1 + phi~) pi_i
    2. (x_i, y_j) with capacity w_ij for every kept edge (i, j)
    3. (x_i, y_i) with capacity pi_i + w_ii
    4. (y_j, t) with capacity pi_j

When phi~ is feasible the minimum cut is the source side alone, so the
maximum flow saturates every source arc without overloading any sink arc.
"""

from __future__ import annotations

import collections
import dataclasses
import logging
import math
from typing import Iterable, Literal, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import CapacityOverflowError, DegeneracyError, SizeLimitError, SupportError
from .graph import WeightedGraph
from .reduced import ReducedGraph, generalized_bound
from .report import Report
from .setting import RunSettings
from .spectra import SpectralPair

_logger = logging.getLogger(__name__)

SOURCE = 0
SINK = 1
BRUTE_FORCE_MAX_NODES = 16
SUM_TOL = 1e-8
# Scaled capacity totals must stay exactly representable as float64.
_MAX_TOTAL = 1 << 53
_CHUNK_BITS = 12

Layer = Literal["s", "t", "x", "y"]


@dataclasses.dataclass(frozen=True, eq=False)
class PositiveSupport:
    """Positive part of the left excited eigenvector of the Laplacian."""

    e: NDArray[np.float64]
    vplus: tuple[int, ...]
    ehat: NDArray[np.float64]
    capacity: float
    # True when psi1 was negated to get C(V+) <= 1/2.
    flipped: bool = False


def positive_support(pair: SpectralPair, graph: WeightedGraph | None = None) -> PositiveSupport:
    """
    e_i = psi1_i psi0_i, signed so that C(V+) <= 1/2.

    Components with |e_i| <= 1e-12 max|e| count as zero and stay out of V+.
    """
    if pair.near_degenerate:
        raise DegeneracyError(
            "the first excited state is not unique; positive support is undefined"
        )
    pi = pair.psi0**2 if graph is None else graph.pi
    e = pair.psi1 * pair.psi0
    total = float(e.sum())
    if abs(total) > SUM_TOL:
        raise SupportError(f"sum of e_i is {total:.3e}; psi1 is not orthogonal to psi0")
    zero_tol = 1e-12 * float(np.abs(e).max())
    cap_plus = float(pi[e > zero_tol].sum())
    cap_minus = float(pi[e < -zero_tol].sum())
    flipped = cap_plus > 0.5 and cap_minus <= 0.5
    if flipped:
        e = -e
    positive = e > zero_tol
    if not positive.any() or positive.all():
        raise SupportError("V+ must be a nonempty proper subset of V")
    capacity = float(pi[positive].sum())
    if capacity > 0.5 + 1e-12:
        raise SupportError(f"neither sign of psi1 gives C(V+) <= 1/2 (got {capacity:.6g})")
    ehat = np.where(positive, e / pi, 0.0)
    return PositiveSupport(
        e=e,
        vplus=tuple(int(v) for v in np.nonzero(positive)[0]),
        ehat=ehat,
        capacity=capacity,
        flipped=flipped,
    )


def rayleigh_chain_bound(graph: WeightedGraph, support: PositiveSupport) -> float:
    """sum_{i<j} w_ij (e^_i - e^_j)^2 / sum_{i in V+} pi_i e^_i^2, a lower bound on the gap."""
    i, j, w = graph.edges()
    numerator = float((w * (support.ehat[i] - support.ehat[j]) ** 2).sum())
    denominator = float((graph.pi * support.ehat**2).sum())
    if not denominator > 0:
        raise SupportError("positive support has zero weight")
    return numerator / denominator


@dataclasses.dataclass(frozen=True, eq=False)
class FlowNetwork:
    """Nodes are 0 = s, 1 = t, then X in support order, then Y in vertex order."""

    support: tuple[int, ...]
    n_vertices: int
    phi_tilde: float
    tails: NDArray[np.int64]
    heads: NDArray[np.int64]
    capacities: NDArray[np.float64]
    rules: NDArray[np.int64]

    @property
    def n_nodes(self) -> int:
        return 2 + len(self.support) + self.n_vertices

    @property
    def n_arcs(self) -> int:
        return int(self.tails.shape[0])

    def x_node(self, position: int) -> int:
        return 2 + position

    def y_node(self, vertex: int) -> int:
        return 2 + len(self.support) + vertex

    def label(self, node: int) -> tuple[Layer, int | None]:
        if node == SOURCE:
            return "s", None
        if node == SINK:
            return "t", None
        if node < 2 + len(self.support):
            return "x", self.support[node - 2]
        return "y", node - 2 - len(self.support)

    def source_capacity(self) -> float:
        return float(self.capacities[self.tails == SOURCE].sum())

    @classmethod
    def from_arcs(
        cls, n_nodes: int, arcs: Sequence[tuple[int, int, float]]
    ) -> FlowNetwork:
        """A plain network: node 0 is the source, node 1 the sink, rules are 0."""
        if n_nodes < 2:
            raise ValueError("a network needs a source and a sink")
        tails, heads, caps = zip(*arcs) if arcs else ((), (), ())
        return cls(
            support=(),
            n_vertices=n_nodes - 2,
            phi_tilde=0.0,
            tails=np.array(tails, dtype=np.int64),
            heads=np.array(heads, dtype=np.int64),
            capacities=np.array(caps, dtype=np.float64),
            rules=np.zeros(len(arcs), dtype=np.int64),
        )


def build_network(
    reduced: ReducedGraph, support: Iterable[int], phi_tilde: float
) -> FlowNetwork:
    graph = reduced.parent
    support = tuple(sorted({int(v) for v in support}))
    if not support:
        raise SupportError("network support must be nonempty")
    if phi_tilde < 0:
        raise ValueError(f"phi_tilde must be non-negative, got {phi_tilde}")
    position = {v: k for k, v in enumerate(support)}
    loops = graph.self_loops()
    n_x = len(support)

    def x(v: int) -> int:
        return 2 + position[v]

    def y(v: int) -> int:
        return 2 + n_x + v

    tails: list[int] = []
    heads: list[int] = []
    caps: list[float] = []
    rules: list[int] = []

    def arc(tail: int, head: int, cap: float, rule: int) -> None:
        tails.append(tail)
        heads.append(head)
        caps.append(cap)
        rules.append(rule)

    for v in support:
        arc(SOURCE, x(v), (1.0 + phi_tilde) * float(graph.pi[v]), 1)
    kept: dict[int, list[tuple[int, float]]] = collections.defaultdict(list)
    for a, b, w in zip(reduced.rows, reduced.cols, reduced.weights):
        kept[int(a)].append((int(b), float(w)))
        kept[int(b)].append((int(a), float(w)))
    for v in support:
        for other, w in sorted(kept[v]):
            arc(x(v), y(other), w, 2)
    for v in support:
        arc(x(v), y(v), float(graph.pi[v]) + float(loops[v]), 3)
    for v in range(graph.n_vertices):
        arc(y(v), SINK, float(graph.pi[v]), 4)

    return FlowNetwork(
        support=support,
        n_vertices=graph.n_vertices,
        phi_tilde=phi_tilde,
        tails=np.array(tails, dtype=np.int64),
        heads=np.array(heads, dtype=np.int64),
        capacities=np.array(caps, dtype=np.float64),
        rules=np.array(rules, dtype=np.int64),
    )


@dataclasses.dataclass(frozen=True, eq=False)
class FlowResult:
    value: float
    arc_flows: NDArray[np.float64]
    # Nodes reachable from s in the final residual graph: a min-cut certificate.
    source_side: tuple[int, ...]
    scale_bits: int
    augmentations: int

    def cut_capacity(self, net: FlowNetwork) -> float:
        side = np.zeros(net.n_nodes, dtype=bool)
        side[list(self.source_side)] = True
        crossing = side[net.tails] & ~side[net.heads]
        return float(net.capacities[crossing].sum())


def _integerize(net: FlowNetwork, settings: RunSettings) -> tuple[list[int], int]:
    total = float(net.capacities.sum())
    bits = settings.flow_scale_bits
    while bits > 0 and total * 2.0**bits >= _MAX_TOTAL:
        bits -= 1
    source_total = net.source_capacity()
    precision = net.n_arcs / 2.0**bits / max(source_total, 1e-300)
    if source_total > 0 and precision > 1e-6:
        raise CapacityOverflowError(
            f"capacities cannot be integerized: relative precision {precision:.1e} at scale 2^{bits}"
        )
    if bits < settings.flow_scale_bits:
        _logger.info("flow scale reduced to 2^%d to avoid overflow", bits)
    scale = 2.0**bits
    # Source arcs round down and every other arc rounds up, so a network whose
    # real minimum cut is the source side keeps that property after scaling.
    scaled = net.capacities * scale
    rounded = np.where(net.tails == SOURCE, np.floor(scaled), np.ceil(scaled))
    return [int(c) for c in rounded], bits


def max_flow(net: FlowNetwork, settings: RunSettings | None = None) -> FlowResult:
    """
    Maximum s-t flow by shortest augmenting paths (Edmonds-Karp) on integer
    capacities scaled by 2^flow_scale_bits.
    """
    settings = settings or RunSettings()
    int_caps, bits = _integerize(net, settings)

    # Residual edge 2k is arc k, edge 2k+1 its reverse.
    n_nodes = net.n_nodes
    heads: list[int] = []
    residual: list[int] = []
    adjacency: list[list[int]] = [[] for _ in range(n_nodes)]
    for k, (tail, head) in enumerate(zip(net.tails.tolist(), net.heads.tolist())):
        adjacency[tail].append(2 * k)
        heads.append(head)
        residual.append(int_caps[k])
        adjacency[head].append(2 * k + 1)
        heads.append(tail)
        residual.append(0)

    total = 0
    augmentations = 0
    while True:
        parent_edge = [-1] * n_nodes
        visited = [False] * n_nodes
        visited[SOURCE] = True
        queue = collections.deque([SOURCE])
        while queue and not visited[SINK]:
            node = queue.popleft()
            for edge in adjacency[node]:
                nxt = heads[edge]
                if residual[edge] > 0 and not visited[nxt]:
                    visited[nxt] = True
                    parent_edge[nxt] = edge
                    queue.append(nxt)
        if not visited[SINK]:
            break
        bottleneck = None
        node = SINK
        while node != SOURCE:
            edge = parent_edge[node]
            bottleneck = residual[edge] if bottleneck is None else min(bottleneck, residual[edge])
            node = heads[edge ^ 1]
        assert bottleneck is not None
        node = SINK
        while node != SOURCE:
            edge = parent_edge[node]
            residual[edge] -= bottleneck
            residual[edge ^ 1] += bottleneck
            node = heads[edge ^ 1]
        total += bottleneck
        augmentations += 1

    scale = 2.0**bits
    flows = np.array([residual[2 * k + 1] for k in range(net.n_arcs)], dtype=np.float64) / scale
    _logger.debug(
        "max flow %.12g after %d augmenting paths on %d nodes",
        total / scale,
        augmentations,
        n_nodes,
    )
    return FlowResult(
        value=total / scale,
        arc_flows=flows,
        source_side=tuple(k for k in range(n_nodes) if visited[k]),
        scale_bits=bits,
        augmentations=augmentations,
    )


def min_cut_bruteforce(net: FlowNetwork) -> tuple[float, tuple[int, ...]]:
    """Smallest s-t cut over every node partition; for networks of at most 16 nodes."""
    if net.n_nodes > BRUTE_FORCE_MAX_NODES:
        raise SizeLimitError(
            f"brute-force min cut supports at most {BRUTE_FORCE_MAX_NODES} nodes, got {net.n_nodes}"
        )
    inner = list(range(2, net.n_nodes))
    best = math.inf
    best_side: tuple[int, ...] = (SOURCE,)
    for mask in range(1 << len(inner)):
        side = np.zeros(net.n_nodes, dtype=bool)
        side[SOURCE] = True
        for k, node in enumerate(inner):
            if (mask >> k) & 1:
                side[node] = True
        value = float(net.capacities[side[net.tails] & ~side[net.heads]].sum())
        if value < best:
            best = value
            best_side = tuple(int(v) for v in np.nonzero(side)[0])
    return best, best_side


def network_phi_tilde(
    reduced: ReducedGraph,
    support: Sequence[int],
    settings: RunSettings | None = None,
) -> tuple[float, tuple[int, ...]]:
    """
    Largest phi~ for which the network's minimum cut is (1 + phi~) C(support).

    A cut is fixed by its source-side X1 ⊆ X; each y outside X1 then pays the
    cheaper of its sink arc and its arcs from X1. The minimum cut equals the
    source capacity exactly when, for every nonempty X1,

        sum_{y not in X1} min(pi_y, w~(X1, y)) >= phi~ C(X1).

    Returns the smallest such ratio and its X1.
    """
    settings = settings or RunSettings()
    graph = reduced.parent
    support = sorted({int(v) for v in support})
    k = len(support)
    if k == 0:
        raise SupportError("network support must be nonempty")

    adj = reduced.adjacency()
    rows = adj[support]
    inside = np.zeros(graph.n_vertices, dtype=bool)
    inside[support] = True
    hits = np.bincount(rows.indices, minlength=graph.n_vertices)
    if not np.any(inside[rows.indices]) and np.all(hits[~inside] <= 1):
        # Every y sees at most one x and X has no inner edges: the ratio is
        # additive over X1, so singletons attain the minimum.
        per_vertex = [
            float(np.minimum(graph.pi[rows[r].indices], rows[r].data).sum()) / float(graph.pi[v])
            for r, v in enumerate(support)
        ]
        best = min(per_vertex)
        return best, (support[per_vertex.index(best)],)

    if k > settings.subset_limit:
        raise SizeLimitError(f"|support|={k} exceeds subset_limit={settings.subset_limit}")

    cols = sorted(set(rows.indices.tolist()) | set(support))
    block = rows[:, cols].toarray()
    pi_cols = graph.pi[cols]
    col_of = {v: c for c, v in enumerate(cols)}
    support_cols = np.array([col_of[v] for v in support])
    pi_support = graph.pi[support]

    best = math.inf
    tied: list[tuple[float, tuple[int, ...]]] = []
    chunk = 1 << min(k, _CHUNK_BITS)
    for start in range(1, 1 << k, chunk):
        masks = np.arange(start, min(start + chunk, 1 << k))
        bits = ((masks[:, None] >> np.arange(k)) & 1).astype(np.float64)
        into = np.minimum(bits @ block, pi_cols)
        into[:, support_cols] *= 1.0 - bits
        ratio = into.sum(axis=1) / (bits @ pi_support)
        chunk_min = float(ratio.min())
        if chunk_min > best + 1e-12 * max(abs(best), 1e-300):
            continue
        best = min(best, chunk_min)
        threshold = best + 1e-12 * max(abs(best), 1e-300)
        tied = [t for t in tied if t[0] <= threshold]
        for idx in np.nonzero(ratio <= threshold)[0]:
            mask = int(masks[idx])
            tied.append(
                (float(ratio[idx]), tuple(v for b, v in enumerate(support) if (mask >> b) & 1))
            )
    return best, min(t[1] for t in tied)


def chain_factor(
    net: FlowNetwork,
    flow: FlowResult,
    reduced: ReducedGraph,
    support: PositiveSupport,
) -> float:
    """
    The factor sum h_ij^2/w_ij (e^_i + e^_j)^2 / sum w_ij (e^_i + e^_j)^2 over
    kept edges, with h_ij the flow through both X-to-Y arcs of the edge.
    """
    pair_flow: dict[tuple[int, int], float] = collections.defaultdict(float)
    for k in np.nonzero(net.rules == 2)[0]:
        _, a = net.label(int(net.tails[k]))
        _, b = net.label(int(net.heads[k]))
        assert a is not None and b is not None
        pair_flow[(min(a, b), max(a, b))] += float(flow.arc_flows[k])
    ehat = support.ehat
    numerator = denominator = 0.0
    for a, b, w in zip(reduced.rows.tolist(), reduced.cols.tolist(), reduced.weights.tolist()):
        s = (ehat[a] + ehat[b]) ** 2
        numerator += pair_flow.get((a, b), 0.0) ** 2 / w * s
        denominator += w * s
    return numerator / denominator if denominator > 0 else math.nan


def verify_theorem1(
    graph: WeightedGraph,
    reduced: ReducedGraph,
    support: Sequence[int],
    phi_tilde: float,
    gap: float | None = None,
    settings: RunSettings | None = None,
    positive: PositiveSupport | None = None,
) -> Report:
    """
    Check the flow certificate: (a) max flow equals (1 + phi~) C(support),
    (b) every source arc is saturated, (c) no sink arc is overloaded, and
    (d) gap >= phi~^2 / (2c) when the gap is known.
    """
    settings = settings or RunSettings()
    if reduced.parent is not graph:
        raise ValueError("reduced graph does not belong to this graph")
    report = Report("theorem1")
    net = build_network(reduced, support, phi_tilde)
    flow = max_flow(net, settings)

    expected = net.source_capacity()
    report.within(
        "min_cut_value",
        abs(flow.value - expected) / expected,
        settings.flow_tol,
        f"max flow {flow.value:.12g} vs (1+phi~) C = {expected:.12g}",
    )

    out_of = np.zeros(net.n_nodes)
    into = np.zeros(net.n_nodes)
    np.add.at(out_of, net.tails, flow.arc_flows)
    np.add.at(into, net.heads, flow.arc_flows)
    x_nodes = np.arange(2, 2 + len(net.support))
    source_targets = (1.0 + phi_tilde) * graph.pi[list(net.support)]
    report.within(
        "source_saturation",
        float(np.abs(out_of[x_nodes] - source_targets).max()),
        settings.flow_abs_tol,
        "max_x |sum_j h_xj - (1+phi~) pi_x|",
    )
    y_nodes = np.arange(2 + len(net.support), net.n_nodes)
    report.within(
        "sink_feasibility",
        max(float((into[y_nodes] - graph.pi).max()), 0.0),
        settings.flow_abs_tol,
        "max_y (sum_x h_xy - pi_y)",
    )

    if gap is None:
        report.skip("generalized_bound", "no reference gap")
    else:
        bound = generalized_bound(phi_tilde, reduced.constriction)
        report.within(
            "generalized_bound",
            bound - gap,
            1e-12 * max(1.0, abs(gap)),
            f"phi~^2/(2c) = {bound:.12g} vs gap {gap:.12g}",
        )

    if positive is not None and tuple(net.support) == positive.vplus:
        _logger.info(
            "chain factor for %s: %.6g", reduced.strategy, chain_factor(net, flow, reduced, positive)
        )
    return report


def save_network(net: FlowNetwork, flow: FlowResult | None, path: str) -> None:
    """Write the node list with layer tags, then arcs 'from to capacity flow'."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"network 1\n{net.n_nodes} {net.n_arcs}\n")
        for node in range(net.n_nodes):
            layer, vertex = net.label(node)
            f.write(f"node {node} {layer}" + ("" if vertex is None else f" {vertex}") + "\n")
        for k in range(net.n_arcs):
            h = 0.0 if flow is None else float(flow.arc_flows[k])
            f.write(
                f"{int(net.tails[k])} {int(net.heads[k])} "
                f"{float(net.capacities[k]):.16e} {h:.16e}\n"
            )


def rule_counts(net: FlowNetwork) -> dict[int, int]:
    return {rule: int((net.rules == rule).sum()) for rule in (1, 2, 3, 4)}

