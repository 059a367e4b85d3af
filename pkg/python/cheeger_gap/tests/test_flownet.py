"""Tests for the flow-network certificate."""

import dataclasses
import logging
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

from cheeger_gap.errors import (
    CapacityOverflowError,
    DegeneracyError,
    SizeLimitError,
    SupportError,
)
from cheeger_gap.flownet import (
    SINK,
    SOURCE,
    FlowNetwork,
    build_network,
    max_flow,
    min_cut_bruteforce,
    network_phi_tilde,
    positive_support,
    rayleigh_chain_bound,
    rule_counts,
    save_network,
    verify_theorem1,
)
from cheeger_gap.graph import WeightedGraph, graph_from
from cheeger_gap.model import (
    StoquasticMatrix,
    build_ising_chain,
    build_ring,
    build_transverse_field,
)
from cheeger_gap.pipeline import certificate_inputs
from cheeger_gap.reduced import ReducedGraph, reduce_cut_only, reduce_cut_plus_paths
from cheeger_gap.setting import RunSettings
from cheeger_gap.spectra import low_spectrum


def _graph(matrix: StoquasticMatrix) -> WeightedGraph:
    pair = low_spectrum(matrix)
    return graph_from(matrix, pair.lambda0, pair.psi0)


def _square_cut() -> ReducedGraph:
    """Q_2 at B = 1 with the cut {0, 1} | {2, 3}: pi = w = 1/4 everywhere."""
    return reduce_cut_only(_graph(build_transverse_field(2, 1.0)), (0, 1))


def _random_network(seed: int) -> FlowNetwork:
    rng = np.random.default_rng(seed)
    n_nodes = int(rng.integers(5, 9))
    arcs = []
    for tail in range(n_nodes):
        for head in range(n_nodes):
            if tail != head and tail != SINK and head != SOURCE and rng.random() < 0.45:
                arcs.append((tail, head, float(rng.uniform(0.05, 2.0))))
    return FlowNetwork.from_arcs(n_nodes, arcs)


def _networkx_flow(net: FlowNetwork) -> float:
    digraph = nx.DiGraph()
    digraph.add_nodes_from(range(net.n_nodes))
    for tail, head, cap in zip(net.tails.tolist(), net.heads.tolist(), net.capacities.tolist()):
        if digraph.has_edge(tail, head):
            digraph[tail][head]["capacity"] += cap
        else:
            digraph.add_edge(tail, head, capacity=cap)
    return float(nx.maximum_flow_value(digraph, SOURCE, SINK))


class TestBuildNetwork:
    """Test the four arc rules."""

    def test_square_layout(self) -> None:
        net = build_network(_square_cut(), (0, 1), 1.0)
        assert net.n_nodes == 8
        assert net.n_arcs == 10
        assert rule_counts(net) == {1: 2, 2: 2, 3: 2, 4: 4}
        assert net.source_capacity() == pytest.approx(1.0)
        assert net.label(SOURCE) == ("s", None)
        assert net.label(net.x_node(1)) == ("x", 1)
        assert net.label(net.y_node(3)) == ("y", 3)

    def test_rule_two_follows_kept_edges(self) -> None:
        net = build_network(_square_cut(), (0, 1), 1.0)
        rule2 = [
            (net.label(int(t))[1], net.label(int(h))[1])
            for t, h in zip(net.tails[net.rules == 2], net.heads[net.rules == 2])
        ]
        assert rule2 == [(0, 2), (1, 3)]

    def test_self_loops_enter_rule_three(self) -> None:
        graph = _graph(build_ising_chain(2, 1.0))
        reduced = reduce_cut_only(graph, (0, 1))
        net = build_network(reduced, (0, 1), 0.5)
        rule3 = net.capacities[net.rules == 3]
        expected = graph.pi[[0, 1]] + graph.self_loops()[[0, 1]]
        np.testing.assert_allclose(rule3, expected)

    def test_rejects_bad_input(self) -> None:
        with pytest.raises(SupportError):
            build_network(_square_cut(), (), 1.0)
        with pytest.raises(ValueError):
            build_network(_square_cut(), (0, 1), -0.1)


class TestMaxFlow:
    """Test Edmonds-Karp on scaled integer capacities."""

    def test_square_network(self) -> None:
        net = build_network(_square_cut(), (0, 1), 1.0)
        flow = max_flow(net)
        assert flow.value == pytest.approx(1.0, abs=1e-8)
        assert SOURCE in flow.source_side and SINK not in flow.source_side
        assert flow.cut_capacity(net) == pytest.approx(1.0, abs=1e-7)
        assert flow.scale_bits == 30

    @pytest.mark.parametrize("seed", range(8))
    def test_agrees_with_networkx(self, seed: int) -> None:
        net = _random_network(seed)
        flow = max_flow(net)
        expected = _networkx_flow(net)
        assert flow.value == pytest.approx(expected, abs=1e-6)
        assert flow.cut_capacity(net) == pytest.approx(flow.value, abs=1e-6)
        np.testing.assert_array_less(flow.arc_flows, net.capacities + 1e-6)

    @pytest.mark.parametrize("seed", range(4))
    def test_agrees_with_brute_force(self, seed: int) -> None:
        net = _random_network(100 + seed)
        value, side = min_cut_bruteforce(net)
        assert max_flow(net).value == pytest.approx(value, abs=1e-6)
        assert SOURCE in side and SINK not in side

    def test_brute_force_size_limit(self) -> None:
        net = FlowNetwork.from_arcs(17, [(0, 1, 1.0)])
        with pytest.raises(SizeLimitError):
            min_cut_bruteforce(net)
        with pytest.raises(ValueError):
            FlowNetwork.from_arcs(1, [])

    def test_empty_network(self) -> None:
        assert max_flow(FlowNetwork.from_arcs(3, [])).value == 0.0

    def test_capacity_overflow(self) -> None:
        net = build_network(_square_cut(), (0, 1), 1.0)
        with pytest.raises(CapacityOverflowError):
            max_flow(net, RunSettings(flow_scale_bits=1))


class TestNetworkPhiTilde:
    """Test the largest phi~ the network certifies."""

    def test_square_modular(self) -> None:
        phi, subset = network_phi_tilde(_square_cut(), (0, 1))
        assert phi == pytest.approx(1.0)
        assert subset in {(0,), (1,)}

    def test_ring_enumeration(self) -> None:
        reduced = reduce_cut_plus_paths(_graph(build_ring(8, 1.0)), (0, 1, 2, 3))
        phi, subset = network_phi_tilde(reduced, (0, 1, 2, 3))
        assert phi == pytest.approx(0.5)
        assert subset == (0, 1)

    def test_size_limit(self) -> None:
        reduced = reduce_cut_plus_paths(_graph(build_ring(8, 1.0)), (0, 1, 2, 3))
        with pytest.raises(SizeLimitError):
            network_phi_tilde(reduced, (0, 1, 2, 3), RunSettings(subset_limit=2))
        with pytest.raises(SupportError):
            network_phi_tilde(reduced, ())

    def test_min_cut_is_source_side_at_the_threshold(self) -> None:
        reduced = reduce_cut_plus_paths(_graph(build_ring(8, 1.0)), (0, 1, 2, 3))
        phi, _ = network_phi_tilde(reduced, (0, 1, 2, 3))
        net = build_network(reduced, (0, 1, 2, 3), phi)
        value, _ = min_cut_bruteforce(net)
        assert value == pytest.approx(net.source_capacity(), rel=1e-10)


class TestPositiveSupport:
    """Test V+ and the Rayleigh chain bound."""

    def test_ising_support(self) -> None:
        matrix = build_ising_chain(3, 1.0)
        pair = low_spectrum(matrix)
        graph = graph_from(matrix, pair.lambda0, pair.psi0)
        support = positive_support(pair, graph)
        assert 0 < len(support.vplus) < 8
        assert support.capacity <= 0.5 + 1e-12
        assert abs(float(support.e.sum())) < 1e-8
        outside = np.ones(8, dtype=bool)
        outside[list(support.vplus)] = False
        assert np.all(support.ehat[outside] == 0.0)
        assert np.all(support.ehat[list(support.vplus)] > 0.0)
        assert rayleigh_chain_bound(graph, support) <= pair.gap + 1e-10

    def test_degenerate_pair(self) -> None:
        pair = low_spectrum(build_ising_chain(3, 1.0), RunSettings(degeneracy_tol=10.0))
        with pytest.raises(DegeneracyError):
            positive_support(pair)

    def test_non_orthogonal_excited_state(self) -> None:
        pair = low_spectrum(build_ising_chain(3, 1.0))
        with pytest.raises(SupportError):
            positive_support(dataclasses.replace(pair, psi1=pair.psi0))


class TestVerifyTheorem1:
    """Test the certificate checks."""

    def test_square_passes(self) -> None:
        reduced = _square_cut()
        report = verify_theorem1(reduced.parent, reduced, (0, 1), 1.0, gap=2.0)
        assert report.passed, str(report)
        assert report["min_cut_value"].value == pytest.approx(0.0, abs=1e-8)

    def test_inflated_phi_fails(self) -> None:
        reduced = _square_cut()
        report = verify_theorem1(reduced.parent, reduced, (0, 1), 1.5)
        assert not report.passed
        assert report.first_failure() is report["min_cut_value"]
        assert report["generalized_bound"].skipped

    def test_ring_certificate(self) -> None:
        graph = _graph(build_ring(8, 1.0))
        certificate = certificate_inputs(graph, (0, 1, 2, 3), "cut-plus-paths", RunSettings())
        reduced, phi = certificate.reduced, certificate.phi_tilde
        assert phi == pytest.approx(0.5)
        assert not certificate.capped
        report = verify_theorem1(graph, reduced, (0, 1, 2, 3), phi, gap=2.0 - np.sqrt(2.0))
        assert report.passed, str(report)
        assert "0.75" in report["min_cut_value"].detail

    def test_rejected_phi_is_capped(self, caplog: pytest.LogCaptureFixture) -> None:
        """At B = 3 the sink arcs of Q_2 bind: phi~ = 3 on the cut, the network takes only 1."""
        graph = _graph(build_transverse_field(2, 3.0))
        with caplog.at_level(logging.WARNING, logger="cheeger_gap.pipeline"):
            certificate = certificate_inputs(graph, (0, 1), "cut-only", RunSettings())
        assert certificate.domain_phi == pytest.approx(3.0)
        assert certificate.network_phi == pytest.approx(1.0)
        assert certificate.capped
        assert certificate.phi_tilde == pytest.approx(1.0)
        assert "fails the min-cut claim" in caplog.text

        reduced = certificate.reduced
        uncapped = verify_theorem1(graph, reduced, (0, 1), certificate.domain_phi)
        assert not uncapped["min_cut_value"].passed
        capped = verify_theorem1(graph, reduced, (0, 1), certificate.phi_tilde, gap=6.0)
        assert capped.passed, str(capped)

    def test_foreign_reduced_graph(self) -> None:
        reduced = _square_cut()
        other = _graph(build_transverse_field(2, 1.0))
        with pytest.raises(ValueError, match="does not belong"):
            verify_theorem1(other, reduced, (0, 1), 1.0)

    def test_chain_factor_is_logged(self, caplog: pytest.LogCaptureFixture) -> None:
        matrix = build_ising_chain(3, 1.0)
        pair = low_spectrum(matrix)
        graph = graph_from(matrix, pair.lambda0, pair.psi0)
        support = positive_support(pair, graph)
        certificate = certificate_inputs(graph, support.vplus, "full", RunSettings())
        reduced, phi = certificate.reduced, certificate.phi_tilde
        with caplog.at_level(logging.INFO, logger="cheeger_gap.flownet"):
            report = verify_theorem1(
                graph, reduced, support.vplus, phi, gap=pair.gap, positive=support
            )
        assert report.passed, str(report)
        assert "chain factor for full" in caplog.text


def test_save_network(tmp_path: Path) -> None:
    net = build_network(_square_cut(), (0, 1), 1.0)
    path = tmp_path / "square.net"
    save_network(net, max_flow(net), str(path))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[:5] == ["network 1", "8 10", "node 0 s", "node 1 t", "node 2 x 0"]
    assert lines[6] == "node 4 y 0"
    assert len(lines) == 2 + 8 + 10
    tail, head, cap, flow = lines[10].split()
    assert (tail, head) == ("0", "2")
    assert float(cap) == pytest.approx(0.5)
    assert float(flow) == pytest.approx(0.5, abs=1e-8)
