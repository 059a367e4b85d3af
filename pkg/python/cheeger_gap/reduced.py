"""
Reduced graphs and the generalised Cheeger lower bound.

A reduced graph keeps a subset of the edges of the parent graph. With
reduced degrees c_i = (sum of kept weights at i) / pi_i, constriction
c = max_i c_i and reduced Cheeger value phi~, the gap is bounded below by
phi~^2 / (2c).
"""

from __future__ import annotations

import collections
import dataclasses
import logging
from typing import Iterable, Literal, Sequence

import numpy as np
import scipy.sparse as sparse
from numpy.typing import NDArray
from scipy.sparse.csgraph import breadth_first_order, maximum_flow

from ._internal.concurrency import resolve_workers
from ._internal.enumerate import minimize_ratio, within_tie
from .errors import (
    ConfigurationError,
    DegenerateCutError,
    DegenerateReductionError,
    SizeLimitError,
)
from .graph import WeightedGraph
from .setting import STRATEGIES, DomainMode, RunSettings

_logger = logging.getLogger(__name__)

ResolvedDomain = Literal["all-feasible-subsets", "subsets-of-s"]

# Source capacity of the parametric min-cut network after integer scaling.
_CUT_SCALE = float(1 << 30)


@dataclasses.dataclass(frozen=True, eq=False)
class ReducedGraph:
    parent: WeightedGraph
    # Kept edges (i < j), row-major.
    rows: NDArray[np.int64]
    cols: NDArray[np.int64]
    weights: NDArray[np.float64]
    reduced_degrees: NDArray[np.float64]
    constriction: float
    strategy: str
    side: tuple[int, ...] | None = None

    @property
    def n_edges(self) -> int:
        return int(self.rows.shape[0])

    def adjacency(self) -> sparse.csr_matrix:
        n = self.parent.n_vertices
        return sparse.csr_matrix(
            (
                np.concatenate([self.weights, self.weights]),
                (
                    np.concatenate([self.rows, self.cols]),
                    np.concatenate([self.cols, self.rows]),
                ),
            ),
            shape=(n, n),
        )

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in zip(self.rows, self.cols)}


@dataclasses.dataclass(frozen=True)
class ReducedCheegerResult:
    phi_tilde: float
    subset: tuple[int, ...]
    domain: ResolvedDomain
    reference: tuple[int, ...] | None
    degenerate: bool
    # "modular" when phi~ = min_i c_i was read off directly, "parametric" when
    # found by repeated minimum cuts instead of enumeration.
    method: Literal["enumeration", "modular", "parametric"] = "enumeration"
    examined: int = 0


def _side_mask(graph: WeightedGraph, side: Iterable[int]) -> NDArray[np.bool_]:
    mask = np.zeros(graph.n_vertices, dtype=bool)
    mask[list(side)] = True
    if not mask.any() or mask.all():
        raise DegenerateCutError("cut side must be a nonempty proper subset of V")
    return mask


def _make_reduced(
    graph: WeightedGraph,
    keep: NDArray[np.bool_],
    strategy: str,
    side: tuple[int, ...] | None,
) -> ReducedGraph:
    i, j, w = graph.edges()
    rows, cols, weights = i[keep], j[keep], w[keep]
    if rows.shape[0] == 0:
        raise DegenerateReductionError(f"strategy '{strategy}' keeps no edges")
    sums = np.zeros(graph.n_vertices)
    np.add.at(sums, rows, weights)
    np.add.at(sums, cols, weights)
    degrees = sums / graph.pi
    reduced = ReducedGraph(
        parent=graph,
        rows=rows,
        cols=cols,
        weights=weights,
        reduced_degrees=degrees,
        constriction=float(degrees.max()),
        strategy=strategy,
        side=side,
    )
    _logger.debug(
        "%s: kept %d of %d edges, constriction %.6g",
        strategy,
        reduced.n_edges,
        int(i.shape[0]),
        reduced.constriction,
    )
    return reduced


def reduce_cut_only(graph: WeightedGraph, side: Iterable[int]) -> ReducedGraph:
    """Keep only the edges crossing the cut (S, V \\ S)."""
    mask = _side_mask(graph, side)
    i, j, _ = graph.edges()
    return _make_reduced(
        graph, mask[i] != mask[j], "cut-only", tuple(int(v) for v in np.nonzero(mask)[0])
    )


def reduce_cut_plus_paths(graph: WeightedGraph, side: Iterable[int]) -> ReducedGraph:
    """
    Cut edges plus, for every vertex of S without a cut edge, a shortest path
    inside S to the nearest cut-incident vertex.

    BFS starts from all cut-incident vertices of S at once and visits
    neighbours in ascending index order.
    """
    mask = _side_mask(graph, side)
    i, j, _ = graph.edges()
    crossing = mask[i] != mask[j]
    sources = sorted(
        {int(v) for v in np.concatenate([i[crossing], j[crossing]]) if mask[v]}
    )
    if not sources:
        raise DegenerateReductionError("no edge crosses the cut")

    parent: dict[int, int | None] = {v: None for v in sources}
    queue = collections.deque(sources)
    while queue:
        u = queue.popleft()
        for v in graph.neighbors(u):
            v = int(v)
            if mask[v] and v not in parent:
                parent[v] = u
                queue.append(v)
    members = [int(v) for v in np.nonzero(mask)[0]]
    unreached = [v for v in members if v not in parent]
    if unreached:
        raise DegenerateReductionError(
            f"vertices {unreached} of S cannot reach the cut inside S"
        )

    path_edges: set[tuple[int, int]] = set()
    for v in members:
        node = v
        while parent[node] is not None:
            up = parent[node]
            assert up is not None
            path_edges.add((min(node, up), max(node, up)))
            node = up
    on_path = np.array(
        [(int(a), int(b)) in path_edges for a, b in zip(i, j)], dtype=bool
    )
    return _make_reduced(graph, crossing | on_path, "cut-plus-paths", tuple(members))


def reduce_full(graph: WeightedGraph) -> ReducedGraph:
    """The parent graph itself: every off-diagonal edge is kept."""
    i, _, _ = graph.edges()
    return _make_reduced(graph, np.ones(i.shape[0], dtype=bool), "full", None)


def build_reduction(
    graph: WeightedGraph, strategy: str, side: Iterable[int]
) -> ReducedGraph:
    if strategy == "cut-only":
        return reduce_cut_only(graph, side)
    if strategy == "cut-plus-paths":
        return reduce_cut_plus_paths(graph, side)
    if strategy == "full":
        return reduce_full(graph)
    raise ConfigurationError(f"unknown strategy '{strategy}'; expected one of {', '.join(STRATEGIES)}")


def reduced_flow(reduced: ReducedGraph, subset: Iterable[int]) -> float:
    """Kept weight leaving `subset`."""
    mask = np.zeros(reduced.parent.n_vertices, dtype=bool)
    mask[list(subset)] = True
    return float(reduced.weights[mask[reduced.rows] != mask[reduced.cols]].sum())


def resolve_domain(
    domain: DomainMode, n_vertices: int, settings: RunSettings
) -> ResolvedDomain:
    if domain == "auto":
        return "all-feasible-subsets" if n_vertices <= settings.enum_limit else "subsets-of-s"
    return domain


def _is_modular(reduced: ReducedGraph, mask: NDArray[np.bool_]) -> bool:
    return not bool(np.any(mask[reduced.rows] & mask[reduced.cols]))


def reduced_cheeger(
    reduced: ReducedGraph,
    side: Sequence[int] | None,
    domain: DomainMode = "auto",
    settings: RunSettings | None = None,
) -> ReducedCheegerResult:
    """
    Minimise F~(S_i) / C(S_i) over the chosen domain.

    "subsets-of-s" ranges over nonempty S_i of the reference side without a
    capacity constraint; "all-feasible-subsets" ranges over every S_i with
    C(S_i) <= 1/2 + cap_tol.
    """
    settings = settings or RunSettings()
    graph = reduced.parent
    n = graph.n_vertices
    resolved = resolve_domain(domain, n, settings)
    workers = resolve_workers(settings.threads)
    reference = None if side is None else tuple(sorted(int(v) for v in side))

    if resolved == "subsets-of-s":
        if reference is None:
            raise ValueError("domain 'subsets-of-s' requires a reference side S")
        mask = _side_mask(graph, reference)
        if _is_modular(reduced, mask):
            # F~ is additive over S, so the ratio is a pi-weighted mean of c_i.
            degrees = reduced.reduced_degrees[list(reference)]
            phi_tilde = float(degrees.min())
            vertex = next(
                v for v, c in zip(reference, degrees) if within_tie(float(c), phi_tilde)
            )
            if phi_tilde == 0.0:
                _logger.warning(
                    "%s reduction leaves vertex %d of S without kept edges; bound is trivial",
                    reduced.strategy,
                    vertex,
                )
            return ReducedCheegerResult(
                phi_tilde=phi_tilde,
                subset=(vertex,),
                domain=resolved,
                reference=reference,
                degenerate=phi_tilde == 0.0,
                method="modular",
                examined=len(reference),
            )
        if len(reference) > settings.subset_limit:
            raise SizeLimitError(
                f"|S|={len(reference)} exceeds subset_limit={settings.subset_limit}"
            )
        best = minimize_ratio(
            reduced.adjacency(),
            graph.pi,
            reference,
            both_orientations=False,
            cap_limit=None,
            workers=workers,
        )
    else:
        if n > settings.enum_limit:
            raise SizeLimitError(
                f"all-feasible-subsets needs N <= enum_limit={settings.enum_limit}, got N={n}"
            )
        best = minimize_ratio(
            reduced.adjacency(),
            graph.pi,
            range(1, n),
            both_orientations=True,
            cap_limit=0.5 + settings.cap_tol,
            workers=workers,
        )
    if best is None:
        raise DegenerateReductionError(f"domain '{resolved}' has no feasible subset")

    subset = best.vertices
    phi_tilde = reduced_flow(reduced, subset) / float(graph.pi[list(subset)].sum())
    degenerate = phi_tilde == 0.0
    if degenerate:
        _logger.warning(
            "%s reduction has a zero-flow subset in domain %s; bound is trivial",
            reduced.strategy,
            resolved,
        )
    return ReducedCheegerResult(
        phi_tilde=phi_tilde,
        subset=subset,
        domain=resolved,
        reference=reference,
        degenerate=degenerate,
        examined=best.examined,
    )


def _min_ratio_cut(
    reduced: ReducedGraph, members: tuple[int, ...], lam: float
) -> tuple[int, ...]:
    """
    The T ⊆ members minimising F~(T) - lam C(T), read off a minimum s-t cut.

    Network: s -> i with capacity lam pi_i, kept edges inside `members` in
    both directions, kept edges leaving `members` into t. A cut with source
    side {s} ∪ T costs lam C(members \\ T) + F~(T). Arcs are clipped at the
    source total, which no minimum cut exceeds, then scaled to int32.
    """
    graph = reduced.parent
    k = len(members)
    source, sink = k, k + 1
    position = np.full(graph.n_vertices, -1, dtype=np.int64)
    position[list(members)] = np.arange(k)
    pa, pb = position[reduced.rows], position[reduced.cols]
    inner = (pa >= 0) & (pb >= 0)
    a_out = (pa >= 0) & (pb < 0)
    b_out = (pa < 0) & (pb >= 0)
    pi = graph.pi[list(members)]
    source_total = lam * float(pi.sum())

    tails = np.concatenate([np.full(k, source), pa[inner], pb[inner], pa[a_out], pb[b_out]])
    heads = np.concatenate(
        [
            np.arange(k),
            pb[inner],
            pa[inner],
            np.full(int(a_out.sum()), sink),
            np.full(int(b_out.sum()), sink),
        ]
    )
    w = reduced.weights
    caps = np.concatenate([lam * pi, w[inner], w[inner], w[a_out], w[b_out]])
    capacity = sparse.csr_matrix((caps, (tails, heads)), shape=(k + 2, k + 2))
    capacity.data = np.rint(np.minimum(capacity.data, source_total) * (_CUT_SCALE / source_total))
    capacity = capacity.astype(np.int32)
    capacity.eliminate_zeros()

    flow = maximum_flow(capacity, source, sink).flow
    residual = sparse.csr_matrix(capacity - flow)
    residual.data = (residual.data > 0).astype(np.int32)
    residual.eliminate_zeros()
    reached = breadth_first_order(residual, source, directed=True, return_predecessors=False)
    return tuple(sorted(members[int(p)] for p in reached if p < k))


def reduced_cheeger_parametric(
    reduced: ReducedGraph,
    side: Sequence[int],
    settings: RunSettings | None = None,
) -> ReducedCheegerResult:
    """
    phi~ over the nonempty subsets of `side` by repeated minimum cuts, for
    sides too large to enumerate.

    Starting from the best singleton or the whole side, each round solves one
    minimum cut for the current ratio lam; a returned T with a smaller ratio
    replaces lam, and an empty or no-better T ends the search. phi~ is always
    the ratio of an actual subset.
    """
    settings = settings or RunSettings()
    graph = reduced.parent
    reference = tuple(sorted({int(v) for v in side}))
    _side_mask(graph, reference)

    def ratio(subset: tuple[int, ...]) -> float:
        return reduced_flow(reduced, subset) / float(graph.pi[list(subset)].sum())

    degrees = reduced.reduced_degrees[list(reference)]
    phi_tilde = float(degrees.min())
    subset: tuple[int, ...] = (reference[int(np.argmin(degrees))],)
    whole = ratio(reference)
    if whole < phi_tilde:
        phi_tilde, subset = whole, reference

    cuts = 0
    while phi_tilde > 0.0 and cuts < settings.max_iter:
        candidate = _min_ratio_cut(reduced, reference, phi_tilde)
        cuts += 1
        if not candidate:
            break
        value = ratio(candidate)
        if not value < phi_tilde * (1.0 - 1e-12):
            break
        phi_tilde, subset = value, candidate
    _logger.debug(
        "%s: parametric phi~ %.6g on |S|=%d after %d minimum cuts",
        reduced.strategy,
        phi_tilde,
        len(reference),
        cuts,
    )
    degenerate = phi_tilde == 0.0
    if degenerate:
        _logger.warning(
            "%s reduction has a zero-flow subset of S; bound is trivial", reduced.strategy
        )
    return ReducedCheegerResult(
        phi_tilde=phi_tilde,
        subset=subset,
        domain="subsets-of-s",
        reference=reference,
        degenerate=degenerate,
        method="parametric",
        examined=cuts,
    )


def generalized_bound(phi_tilde: float, constriction: float) -> float:
    """phi~^2 / (2c)."""
    if not constriction > 0:
        raise DegenerateReductionError(f"constriction must be positive, got {constriction}")
    if phi_tilde < 0:
        raise ValueError(f"phi_tilde must be non-negative, got {phi_tilde}")
    return phi_tilde * phi_tilde / (2.0 * constriction)


@dataclasses.dataclass(frozen=True)
class StrategyEvaluation:
    strategy: str
    reduced: ReducedGraph | None = None
    result: ReducedCheegerResult | None = None
    bound: float | None = None
    skipped: str | None = None

    @property
    def usable(self) -> bool:
        return self.bound is not None and self.bound > 0.0

    def to_row(self) -> dict[str, str]:
        def fmt(x: float | None) -> str:
            return "" if x is None else format(x, ".17g")

        return {
            "strategy": self.strategy,
            "edges": "" if self.reduced is None else str(self.reduced.n_edges),
            "c": fmt(None if self.reduced is None else self.reduced.constriction),
            "phi_tilde": fmt(None if self.result is None else self.result.phi_tilde),
            "bound": fmt(self.bound),
            "degenerate": "" if self.result is None else str(self.result.degenerate).lower(),
        }


def evaluate_strategy(
    graph: WeightedGraph,
    side: Sequence[int],
    strategy: str,
    domain: DomainMode = "auto",
    settings: RunSettings | None = None,
) -> StrategyEvaluation:
    """
    Build one reduction and bound it; empty reductions become skips.

    A side too large to enumerate is minimised by parametric minimum cuts
    instead; only an oversized all-feasible-subsets domain is skipped.
    """
    settings = settings or RunSettings()
    try:
        reduced = build_reduction(graph, strategy, side)
    except DegenerateReductionError as e:
        _logger.warning("strategy %s is degenerate: %s", strategy, e)
        return StrategyEvaluation(strategy=strategy, skipped=str(e))
    try:
        result = reduced_cheeger(reduced, side, domain, settings)
    except SizeLimitError as e:
        if resolve_domain(domain, graph.n_vertices, settings) != "subsets-of-s":
            _logger.info("skipping strategy %s: %s", strategy, e)
            return StrategyEvaluation(strategy=strategy, skipped=str(e))
        _logger.info("strategy %s: %s; minimising phi~ by parametric minimum cut", strategy, e)
        result = reduced_cheeger_parametric(reduced, side, settings)
    except DegenerateReductionError as e:
        _logger.warning("strategy %s is degenerate: %s", strategy, e)
        return StrategyEvaluation(strategy=strategy, skipped=str(e))
    bound = generalized_bound(result.phi_tilde, reduced.constriction)
    return StrategyEvaluation(strategy=strategy, reduced=reduced, result=result, bound=bound)


def best_reduction(
    graph: WeightedGraph,
    side: Sequence[int],
    strategies: Sequence[str] = STRATEGIES,
    domain: DomainMode = "auto",
    settings: RunSettings | None = None,
) -> tuple[StrategyEvaluation, list[StrategyEvaluation]]:
    """
    Evaluate `strategies` in order and return the one with the largest bound,
    together with every evaluation. Earlier strategies win ties.
    """
    if not strategies:
        raise ConfigurationError("at least one strategy is required")
    evaluations = [evaluate_strategy(graph, side, s, domain, settings) for s in strategies]
    return select_best(evaluations), evaluations


def select_best(evaluations: Sequence[StrategyEvaluation]) -> StrategyEvaluation:
    """The usable evaluation with the largest bound; the earliest wins ties."""
    best: StrategyEvaluation | None = None
    for evaluation in evaluations:
        if evaluation.usable and (
            best is None or (evaluation.bound or 0.0) > (best.bound or 0.0)
        ):
            best = evaluation
    if best is None:
        raise DegenerateReductionError(
            "every strategy is degenerate or skipped: "
            + ", ".join(e.strategy for e in evaluations)
        )
    return best

