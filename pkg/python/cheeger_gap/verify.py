"""
Invariant suites run by `cheeger-gap verify`.

Each suite maps a list of instances to a Report. Instances are either seeded
random stoquastic matrices (one generator per instance, spawned from a single
seed, so results do not depend on the worker count), a fixed list of named
models, or a single user-supplied model.
"""

from __future__ import annotations

import dataclasses
import logging
from typing import Callable, Sequence

import numpy as np

from ._internal.concurrency import ordered_map, resolve_workers
from .cheeger import cheeger_candidate, cheeger_exact, classic_bounds, variational_upper
from .errors import CheegerGapError, ConfigurationError, DegeneracyError, SizeLimitError
from .flownet import (
    BRUTE_FORCE_MAX_NODES,
    build_network,
    max_flow,
    min_cut_bruteforce,
    positive_support,
    rayleigh_chain_bound,
    verify_theorem1,
)
from .graph import WeightedGraph, graph_from, laplacian, verify_laplacian
from .model import (
    ModelSpec,
    StoquasticMatrix,
    build_ising_chain,
    build_model,
    build_ring,
    build_transverse_field,
    random_stoquastic,
)
from .pipeline import Certificate, certificate_inputs
from .reduced import evaluate_strategy
from .report import Report
from .setting import STRATEGIES, RunSettings
from .spectra import SpectralPair, low_spectrum

_logger = logging.getLogger(__name__)

SUITES: tuple[str, ...] = (
    "laplacian",
    "cheeger",
    "generalized",
    "theorem1",
    "rayleigh",
    "maxflow-oracle",
)
DEFAULT_INSTANCES = 100
THEOREM1_RANDOM_INSTANCES = 25
PARTITIONS_PER_INSTANCE = 100
INFLATION = 1.5
# Slack on "bound <= gap" comparisons.
SOUNDNESS_TOL = 1e-12


@dataclasses.dataclass(frozen=True, eq=False)
class Instance:
    label: str
    matrix: StoquasticMatrix
    # Spin models take their reference cut from the coordinate family.
    spin_model: bool = False
    # Reduction for the flow certificate on the reference cut; None certifies
    # V+ with cut-plus-paths instead.
    certificate: str | None = None
    rng_seed: np.random.SeedSequence | None = None


@dataclasses.dataclass(frozen=True, eq=False)
class Prepared:
    instance: Instance
    pair: SpectralPair
    graph: WeightedGraph
    oracle_gap: float


@dataclasses.dataclass(frozen=True)
class VerifyOptions:
    only: tuple[str, ...] = SUITES
    instances: int | None = None
    seed: int = 42
    inject_inflated_phi: bool = False
    model: ModelSpec | None = None


def random_instances(count: int, seed: int) -> list[Instance]:
    children = np.random.SeedSequence(seed).spawn(count)
    instances = []
    for k, child in enumerate(children):
        matrix = random_stoquastic(np.random.default_rng(child))
        instances.append(Instance(label=f"random{k}", matrix=matrix, rng_seed=child))
    return instances


def named_instances(settings: RunSettings) -> list[Instance]:
    named = [
        Instance("hypercube-n2", build_transverse_field(2, 1.0, settings.n_max), True, "cut-only"),
        Instance("hypercube-n3", build_transverse_field(3, 1.0, settings.n_max), True, "cut-only"),
        Instance("ring-N8", build_ring(8, 1.0), certificate="cut-plus-paths"),
    ]
    named.extend(
        Instance(f"ising-n{n}", build_ising_chain(n, 2.0, settings.n_max), True, "cut-plus-paths")
        for n in range(3, 7)
    )
    return named


def oracle_gap(matrix: StoquasticMatrix, pair: SpectralPair, settings: RunSettings) -> float:
    """Gap from a full dense diagonalisation when N <= dense_limit."""
    if matrix.dim > settings.dense_limit:
        return pair.gap
    values = np.linalg.eigvalsh(matrix.to_dense())
    return float(values[1] - values[0])


def prepare(instance: Instance, settings: RunSettings) -> Prepared:
    pair = low_spectrum(instance.matrix, settings)
    graph = graph_from(instance.matrix, pair.lambda0, pair.psi0)
    return Prepared(instance, pair, graph, oracle_gap(instance.matrix, pair, settings))


def reference_side(prepared: Prepared, settings: RunSettings) -> tuple[int, ...]:
    if prepared.instance.spin_model:
        return cheeger_candidate(prepared.graph, "coordinate", settings).cut.vertices
    return cheeger_exact(prepared.graph, settings).cut.vertices


def laplacian_suite(prepared: Prepared, settings: RunSettings) -> Report:
    lap = laplacian(prepared.instance.matrix, prepared.pair.lambda0, prepared.pair.psi0)
    return verify_laplacian(lap, prepared.pair, settings)


def cheeger_suite(prepared: Prepared, settings: RunSettings) -> Report:
    report = Report("cheeger")
    graph, gap = prepared.graph, prepared.oracle_gap
    if graph.n_vertices > settings.enum_limit:
        report.skip("sandwich", f"N={graph.n_vertices} exceeds enum_limit")
        return report
    result = cheeger_exact(graph, settings)
    upper, lower = classic_bounds(result.phi, prepared.pair.lambda0)
    report.within("upper", gap - upper, SOUNDNESS_TOL, f"gap {gap:.12g} <= 2 phi = {upper:.12g}")
    report.within("lower", lower - gap, SOUNDNESS_TOL, f"phi^2/(2|l0|) = {lower:.12g} <= gap")
    report.within(
        "cut_upper",
        variational_upper(graph, result.cut.vertices) - upper,
        SOUNDNESS_TOL * max(1.0, upper),
        "R(psi) at the Cheeger cut <= 2 phi",
    )

    seed = prepared.instance.rng_seed or np.random.SeedSequence(settings.seed)
    rng = np.random.default_rng(seed.spawn(1)[0])
    worst = -np.inf
    for _ in range(PARTITIONS_PER_INSTANCE):
        mask = rng.random(graph.n_vertices) < 0.5
        if mask.all() or not mask.any():
            mask[0] = not mask[0]
        worst = max(worst, gap - variational_upper(graph, np.nonzero(mask)[0]))
    report.within(
        "variational", float(worst), SOUNDNESS_TOL, "max over random partitions of gap - R(psi)"
    )
    return report


def generalized_suite(prepared: Prepared, settings: RunSettings) -> Report:
    report = Report("generalized")
    side = reference_side(prepared, settings)
    gap = prepared.oracle_gap
    for strategy in STRATEGIES:
        for domain in ("all-feasible-subsets", "subsets-of-s"):
            name = f"{strategy}.{domain}"
            evaluation = evaluate_strategy(prepared.graph, side, strategy, domain, settings)
            if evaluation.bound is None:
                report.skip(name, evaluation.skipped or "no bound")
                continue
            excess = evaluation.bound - gap
            if domain == "subsets-of-s" and excess > SOUNDNESS_TOL:
                _logger.warning(
                    "%s: subsets-of-s bound %.6g exceeds the gap %.6g (%s)",
                    prepared.instance.label,
                    evaluation.bound,
                    gap,
                    strategy,
                )
                report.skip(name, f"subsets-of-s bound exceeds gap by {excess:.3e} (logged)")
                continue
            report.within(name, excess, SOUNDNESS_TOL, f"phi~^2/(2c) = {evaluation.bound:.12g}")
    return report


def theorem1_setup(prepared: Prepared, settings: RunSettings) -> tuple[Certificate, bool]:
    """
    Certificate inputs for an instance, and whether the support is V+.

    Named models certify their reference cut with their own reduction; every
    other instance certifies V+ with a cut-plus-paths reduction.
    """
    strategy = prepared.instance.certificate
    on_vplus = strategy is None
    if strategy is None:
        support = positive_support(prepared.pair, prepared.graph).vplus
        strategy = "cut-plus-paths"
    else:
        support = reference_side(prepared, settings)
    return certificate_inputs(prepared.graph, support, strategy, settings), on_vplus


def theorem1_suite(
    prepared: Prepared, settings: RunSettings, inflate: bool = False
) -> Report:
    certificate, on_vplus = theorem1_setup(prepared, settings)
    reduced, support = certificate.reduced, certificate.support
    phi_tilde = INFLATION * certificate.network_phi if inflate else certificate.phi_tilde
    positive = positive_support(prepared.pair, prepared.graph) if on_vplus else None
    report = verify_theorem1(
        prepared.graph,
        reduced,
        support,
        phi_tilde,
        gap=prepared.oracle_gap,
        settings=settings,
        positive=positive,
    )
    if certificate.capped and not inflate:
        uncapped = verify_theorem1(
            prepared.graph, reduced, support, certificate.domain_phi, settings=settings
        )["min_cut_value"]
        detail = (
            f"reduced phi~ {certificate.domain_phi:.6g} > network phi~ "
            f"{certificate.network_phi:.6g}: {uncapped.detail}"
        )
        if uncapped.passed:
            report.add("uncapped_min_cut", True, uncapped.value, uncapped.tolerance, detail)
        else:
            report.skip("uncapped_min_cut", f"{detail} (logged)")
    return report


def rayleigh_suite(prepared: Prepared, settings: RunSettings) -> Report:
    report = Report("rayleigh")
    support = positive_support(prepared.pair, prepared.graph)
    value = rayleigh_chain_bound(prepared.graph, support)
    gap = prepared.oracle_gap
    report.within(
        "chain_bound",
        value - gap,
        1e-9 * max(1.0, gap),
        f"quotient {value:.12g} <= gap {gap:.12g}",
    )
    return report


def maxflow_oracle_suite(prepared: Prepared, settings: RunSettings) -> Report:
    report = Report("maxflow-oracle")
    certificate, _ = theorem1_setup(prepared, settings)
    net = build_network(certificate.reduced, certificate.support, certificate.domain_phi)
    if net.n_nodes > BRUTE_FORCE_MAX_NODES:
        report.skip("equal", f"{net.n_nodes} nodes exceed {BRUTE_FORCE_MAX_NODES}")
        return report
    flow = max_flow(net, settings)
    cut, _ = min_cut_bruteforce(net)
    report.within(
        "equal",
        abs(flow.value - cut),
        net.n_arcs * 2.0 ** (-settings.flow_scale_bits),
        f"max flow {flow.value:.12g} vs brute-force cut {cut:.12g}",
    )
    return report


SuiteFn = Callable[[Prepared, RunSettings], Report]


def _suite_fn(name: str, options: VerifyOptions) -> SuiteFn:
    if name == "laplacian":
        return laplacian_suite
    if name == "cheeger":
        return cheeger_suite
    if name == "generalized":
        return generalized_suite
    if name == "theorem1":
        return lambda p, s: theorem1_suite(p, s, inflate=options.inject_inflated_phi)
    if name == "rayleigh":
        return rayleigh_suite
    if name == "maxflow-oracle":
        return maxflow_oracle_suite
    raise ConfigurationError(f"unknown suite '{name}'; expected one of {', '.join(SUITES)}")


def _instances_for(
    suite: str, options: VerifyOptions, settings: RunSettings
) -> list[Instance]:
    if options.model is not None:
        spin = options.model.kind in ("transverse_field", "ising_chain")
        return [Instance("model", build_model(options.model, settings.n_max), spin)]
    if suite in ("theorem1", "rayleigh", "maxflow-oracle"):
        count = THEOREM1_RANDOM_INSTANCES if options.instances is None else options.instances
        return named_instances(settings) + random_instances(count, options.seed)
    count = DEFAULT_INSTANCES if options.instances is None else options.instances
    return random_instances(count, options.seed)


def _run_one(
    fn: SuiteFn, instance: Instance, suite: str, settings: RunSettings
) -> Report:
    try:
        return fn(prepare(instance, settings), settings)
    except (SizeLimitError, DegeneracyError) as e:
        report = Report(suite)
        report.skip("size" if isinstance(e, SizeLimitError) else "degenerate", str(e))
        return report
    except CheegerGapError as e:
        report = Report(suite)
        report.add("error", False, detail=f"{type(e).__name__}: {e}")
        return report


def run_verify(
    options: VerifyOptions, settings: RunSettings | None = None
) -> Report:
    """Run the selected suites; check names read `<suite>.<instance>.<check>`."""
    settings = settings or RunSettings()
    workers = resolve_workers(settings.threads)
    inner = dataclasses.replace(settings, threads=1) if workers > 1 else settings
    report = Report("verify")
    for suite in options.only:
        fn = _suite_fn(suite, options)
        instances = _instances_for(suite, options, settings)
        results = ordered_map(
            lambda inst: _run_one(fn, inst, suite, inner), instances, workers=workers
        )
        for instance, result in zip(instances, results):
            report.extend(result, prefix=f"{suite}.{instance.label}")
        _logger.info("suite %s: %d instances", suite, len(instances))
    return report


def suites_from(names: Sequence[str]) -> tuple[str, ...]:
    """Validate suite names, keeping the canonical order."""
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ConfigurationError(f"unknown suite(s) {', '.join(unknown)}; expected {', '.join(SUITES)}")
    return tuple(s for s in SUITES if s in names) if names else SUITES
