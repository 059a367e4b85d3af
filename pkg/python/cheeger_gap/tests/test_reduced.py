"""Tests for reduced graphs and the generalised bound."""

import logging

import numpy as np
import pytest

from cheeger_gap.errors import DegenerateCutError, DegenerateReductionError, SizeLimitError
from cheeger_gap.graph import WeightedGraph, graph_from
from cheeger_gap.model import (
    StoquasticMatrix,
    build_ising_chain,
    build_ring,
    build_transverse_field,
    random_stoquastic,
)
from cheeger_gap.reduced import (
    StrategyEvaluation,
    best_reduction,
    build_reduction,
    evaluate_strategy,
    generalized_bound,
    reduce_cut_only,
    reduce_cut_plus_paths,
    reduce_full,
    reduced_cheeger,
    reduced_cheeger_parametric,
    reduced_flow,
    resolve_domain,
    select_best,
)
from cheeger_gap.setting import RunSettings
from cheeger_gap.spectra import low_spectrum


def _graph(matrix: StoquasticMatrix) -> WeightedGraph:
    pair = low_spectrum(matrix)
    return graph_from(matrix, pair.lambda0, pair.psi0)


RING_SIDE = (0, 1, 2, 3)


class TestReductions:
    """Test which edges each strategy keeps."""

    def test_cut_only_on_ring(self) -> None:
        reduced = reduce_cut_only(_graph(build_ring(8, 1.0)), RING_SIDE)
        assert reduced.edge_set() == {(3, 4), (0, 7)}
        assert reduced.strategy == "cut-only"
        assert reduced.side == RING_SIDE
        assert reduced.constriction == pytest.approx(1.0)

    def test_cut_plus_paths_on_ring(self) -> None:
        """BFS from the cut-incident vertices 0 and 3 adds (0, 1) and (2, 3)."""
        reduced = reduce_cut_plus_paths(_graph(build_ring(8, 1.0)), RING_SIDE)
        assert reduced.edge_set() == {(3, 4), (0, 7), (0, 1), (2, 3)}
        np.testing.assert_allclose(
            reduced.reduced_degrees, [2, 1, 1, 2, 1, 0, 0, 1], atol=1e-10
        )
        assert reduced.constriction == pytest.approx(2.0)

    def test_cut_plus_paths_reaches_every_side_vertex(self) -> None:
        graph = _graph(build_ring(12, 1.0))
        side = tuple(range(6))
        reduced = reduce_cut_plus_paths(graph, side)
        touched = {v for edge in reduced.edge_set() for v in edge}
        assert set(side) <= touched

    def test_full_keeps_every_edge(self) -> None:
        graph = _graph(build_ising_chain(3, 1.0))
        reduced = reduce_full(graph)
        assert reduced.n_edges == 12
        # Off-diagonal degrees exclude self-loops, so c < |lambda0|.
        assert reduced.constriction < graph.bare_degree

    def test_reduced_flow(self) -> None:
        reduced = reduce_cut_plus_paths(_graph(build_ring(8, 1.0)), RING_SIDE)
        assert reduced_flow(reduced, (0, 1)) == pytest.approx(1.0 / 8)
        assert reduced_flow(reduced, (0,)) == pytest.approx(2.0 / 8)

    def test_build_reduction_dispatch(self) -> None:
        graph = _graph(build_ring(8, 1.0))
        assert build_reduction(graph, "full", RING_SIDE).n_edges == 8
        with pytest.raises(ValueError, match="unknown strategy"):
            build_reduction(graph, "spanning-tree", RING_SIDE)

    def test_degenerate_sides(self) -> None:
        graph = _graph(build_ring(4, 1.0))
        with pytest.raises(DegenerateCutError):
            reduce_cut_only(graph, ())
        with pytest.raises(DegenerateCutError):
            reduce_cut_plus_paths(graph, range(4))


class TestReducedCheeger:
    """Test phi~ over both domains."""

    def test_ring_cut_plus_paths(self) -> None:
        """phi~ = 1/2 on S_i = {0, 1}; with c = 2 the bound is 1/16."""
        reduced = reduce_cut_plus_paths(_graph(build_ring(8, 1.0)), RING_SIDE)
        result = reduced_cheeger(reduced, RING_SIDE, "subsets-of-s")
        assert result.phi_tilde == pytest.approx(0.5)
        assert result.subset == (0, 1)
        assert result.method == "enumeration"
        assert not result.degenerate
        assert generalized_bound(result.phi_tilde, reduced.constriction) == pytest.approx(1 / 16)

    def test_ring_cut_only_is_degenerate(self, caplog: pytest.LogCaptureFixture) -> None:
        """Vertex 1 keeps no edge, so the modular minimum is zero."""
        reduced = reduce_cut_only(_graph(build_ring(8, 1.0)), RING_SIDE)
        with caplog.at_level(logging.WARNING, logger="cheeger_gap.reduced"):
            result = reduced_cheeger(reduced, RING_SIDE, "subsets-of-s")
        assert result.method == "modular"
        assert result.phi_tilde == 0.0
        assert result.degenerate
        assert result.subset == (1,)
        assert "trivial" in caplog.text

    def test_hypercube_strategies(self) -> None:
        graph = _graph(build_transverse_field(3, 1.0))
        cut = reduce_cut_only(graph, RING_SIDE)
        modular = reduced_cheeger(cut, RING_SIDE, "subsets-of-s")
        assert modular.method == "modular"
        assert modular.phi_tilde == pytest.approx(1.0)
        assert generalized_bound(modular.phi_tilde, cut.constriction) == pytest.approx(0.5)

        full = reduce_full(graph)
        on_side = reduced_cheeger(full, RING_SIDE, "subsets-of-s")
        assert on_side.phi_tilde == pytest.approx(1.0)
        assert generalized_bound(on_side.phi_tilde, full.constriction) == pytest.approx(1 / 6)

    @pytest.mark.parametrize("n_spins", [2, 3, 4])
    def test_full_all_feasible_on_hypercube(self, n_spins: int) -> None:
        """The full reduction recovers phi = B and the bound B / (2n)."""
        b_field = 1.5
        full = reduce_full(_graph(build_transverse_field(n_spins, b_field)))
        result = reduced_cheeger(full, None, "all-feasible-subsets")
        assert result.phi_tilde == pytest.approx(b_field)
        assert generalized_bound(result.phi_tilde, full.constriction) == pytest.approx(
            b_field / (2 * n_spins)
        )

    @pytest.mark.parametrize(
        ("matrix", "side"),
        [
            (build_ring(8, 1.0), RING_SIDE),
            (build_ising_chain(4, 1.0), tuple(range(1, 16, 2))),
            (build_transverse_field(3, 0.5), (0, 1, 2, 5)),
        ],
    )
    def test_removing_edges_never_raises_phi(
        self, matrix: StoquasticMatrix, side: tuple[int, ...]
    ) -> None:
        """cut-only ⊆ cut-plus-paths ⊆ full on the same S."""
        graph = _graph(matrix)
        reductions = [
            reduce_cut_only(graph, side),
            reduce_cut_plus_paths(graph, side),
            reduce_full(graph),
        ]
        for smaller, larger in zip(reductions, reductions[1:]):
            assert smaller.edge_set() <= larger.edge_set()
        phis = [reduced_cheeger(r, side, "subsets-of-s").phi_tilde for r in reductions]
        assert phis[0] <= phis[1] + 1e-12
        assert phis[1] <= phis[2] + 1e-12

    def test_subsets_of_s_requires_side(self) -> None:
        reduced = reduce_full(_graph(build_ring(6, 1.0)))
        with pytest.raises(ValueError, match="reference side"):
            reduced_cheeger(reduced, None, "subsets-of-s")

    def test_size_limits(self) -> None:
        graph = _graph(build_transverse_field(3, 1.0))
        full = reduce_full(graph)
        with pytest.raises(SizeLimitError, match="enum_limit"):
            reduced_cheeger(full, None, "all-feasible-subsets", RunSettings(enum_limit=4))
        with pytest.raises(SizeLimitError, match="subset_limit"):
            reduced_cheeger(full, RING_SIDE, "subsets-of-s", RunSettings(subset_limit=2))

    def test_resolve_domain(self) -> None:
        settings = RunSettings(enum_limit=10)
        assert resolve_domain("auto", 8, settings) == "all-feasible-subsets"
        assert resolve_domain("auto", 16, settings) == "subsets-of-s"
        assert resolve_domain("subsets-of-s", 4, settings) == "subsets-of-s"

    def test_generalized_bound_errors(self) -> None:
        with pytest.raises(DegenerateReductionError):
            generalized_bound(0.5, 0.0)
        with pytest.raises(ValueError):
            generalized_bound(-0.5, 1.0)

    def test_bound_below_gap(self) -> None:
        matrix = build_ising_chain(4, 2.0)
        pair = low_spectrum(matrix)
        graph = graph_from(matrix, pair.lambda0, pair.psi0)
        side = tuple(v for v in range(16) if v & 1)
        for strategy in ("cut-only", "cut-plus-paths", "full"):
            evaluation = evaluate_strategy(graph, side, strategy, "all-feasible-subsets")
            assert evaluation.bound is not None
            assert evaluation.bound <= pair.gap + 1e-10


class TestStrategySelection:
    """Test per-strategy evaluation and the best-of selection."""

    def test_hypercube_prefers_earliest_on_tie(self) -> None:
        graph = _graph(build_transverse_field(3, 1.0))
        best, evaluations = best_reduction(graph, RING_SIDE, domain="subsets-of-s")
        assert [e.strategy for e in evaluations] == ["cut-only", "cut-plus-paths", "full"]
        assert [e.bound for e in evaluations] == pytest.approx([0.5, 0.5, 1 / 6])
        assert best.strategy == "cut-only"

    def test_ring_picks_cut_plus_paths(self) -> None:
        graph = _graph(build_ring(8, 1.0))
        best, evaluations = best_reduction(
            graph, RING_SIDE, strategies=("cut-only", "cut-plus-paths"), domain="subsets-of-s"
        )
        assert not evaluations[0].usable
        assert best.strategy == "cut-plus-paths"
        assert best.bound == pytest.approx(1 / 16)
        row = best.to_row()
        assert row["edges"] == "4"
        assert row["degenerate"] == "false"

    def test_large_side_uses_parametric_cut(self) -> None:
        graph = _graph(build_transverse_field(3, 1.0))
        evaluation = evaluate_strategy(
            graph, RING_SIDE, "full", "subsets-of-s", RunSettings(subset_limit=2)
        )
        assert evaluation.skipped is None
        assert evaluation.result is not None
        assert evaluation.result.method == "parametric"
        assert evaluation.result.phi_tilde == pytest.approx(1.0)
        assert evaluation.bound == pytest.approx(1 / 6)

    def test_oversized_domain_becomes_skip(self) -> None:
        graph = _graph(build_transverse_field(3, 1.0))
        evaluation = evaluate_strategy(
            graph, RING_SIDE, "full", "all-feasible-subsets", RunSettings(enum_limit=4)
        )
        assert evaluation.skipped is not None
        assert "enum_limit" in evaluation.skipped
        assert not evaluation.usable
        assert evaluation.to_row()["bound"] == ""

    def test_hypercube_n4_cut_only_beats_full(self) -> None:
        """Cut-only gives B/2 on a coordinate cut of Q4, the full graph B/8."""
        b_field = 1.5
        graph = _graph(build_transverse_field(4, b_field))
        best, evaluations = best_reduction(graph, tuple(range(8)), domain="subsets-of-s")
        by_strategy = {e.strategy: e for e in evaluations}
        assert by_strategy["cut-only"].bound == pytest.approx(b_field / 2)
        assert by_strategy["full"].bound == pytest.approx(b_field / 8)
        assert best.strategy == "cut-only"
        assert best.bound == pytest.approx(b_field / 2)

    def test_nothing_usable(self) -> None:
        with pytest.raises(DegenerateReductionError, match="cut-only"):
            select_best([StrategyEvaluation(strategy="cut-only", skipped="too big")])
        with pytest.raises(ValueError):
            best_reduction(_graph(build_ring(4, 1.0)), (0, 1), strategies=())


class TestParametric:
    """Test the minimum-cut search for phi~ on large sides."""

    @pytest.mark.parametrize(
        ("matrix", "side", "strategy"),
        [
            (build_ring(8, 1.0), RING_SIDE, "cut-plus-paths"),
            (build_ising_chain(4, 1.0), tuple(range(1, 16, 2)), "cut-plus-paths"),
            (build_ising_chain(4, 2.0), tuple(range(1, 16, 2)), "full"),
            (build_transverse_field(3, 1.0), RING_SIDE, "full"),
        ],
    )
    def test_matches_enumeration(
        self, matrix: StoquasticMatrix, side: tuple[int, ...], strategy: str
    ) -> None:
        graph = _graph(matrix)
        reduced = build_reduction(graph, strategy, side)
        enumerated = reduced_cheeger(reduced, side, "subsets-of-s")
        parametric = reduced_cheeger_parametric(reduced, side)
        assert parametric.method == "parametric"
        assert parametric.domain == "subsets-of-s"
        assert parametric.phi_tilde == pytest.approx(enumerated.phi_tilde, rel=1e-6)
        assert set(parametric.subset) <= set(side)
        capacity = float(graph.pi[list(parametric.subset)].sum())
        assert reduced_flow(reduced, parametric.subset) / capacity == pytest.approx(
            parametric.phi_tilde
        )

    def test_random_graphs(self) -> None:
        for seed in range(5):
            graph = _graph(random_stoquastic(np.random.default_rng(40 + seed)))
            side = tuple(range(graph.n_vertices // 2))
            reduced = reduce_full(graph)
            enumerated = reduced_cheeger(reduced, side, "subsets-of-s")
            parametric = reduced_cheeger_parametric(reduced, side)
            assert parametric.phi_tilde == pytest.approx(enumerated.phi_tilde, rel=1e-6)

    def test_zero_degree_vertex_is_degenerate(self, caplog: pytest.LogCaptureFixture) -> None:
        reduced = reduce_cut_only(_graph(build_ring(8, 1.0)), RING_SIDE)
        with caplog.at_level(logging.WARNING, logger="cheeger_gap.reduced"):
            result = reduced_cheeger_parametric(reduced, RING_SIDE)
        assert result.phi_tilde == 0.0
        assert result.degenerate
        assert result.examined == 0
        assert "trivial" in caplog.text

    def test_side_must_be_proper(self) -> None:
        reduced = reduce_full(_graph(build_ring(4, 1.0)))
        with pytest.raises(DegenerateCutError):
            reduced_cheeger_parametric(reduced, range(4))
