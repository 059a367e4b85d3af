"""
The bound pipeline shared by the `bounds`, `sweep` and `verify` commands:
spectrum, graph, Cheeger constant, classic bounds and the generalised bound
for each reduction strategy.
"""

from __future__ import annotations

import dataclasses
import logging
from typing import Literal, Sequence

from ._internal.concurrency import ordered_map, resolve_workers
from .cheeger import CheegerResult, cheeger_candidate, cheeger_exact, classic_bounds
from .errors import ConfigurationError, DegenerateReductionError, SizeLimitError
from .flownet import network_phi_tilde
from .graph import WeightedGraph, graph_from
from .model import ModelKind, ModelSpec, StoquasticMatrix, build_model
from .reduced import (
    ReducedGraph,
    StrategyEvaluation,
    build_reduction,
    evaluate_strategy,
    reduced_cheeger,
    resolve_domain,
    select_best,
)
from .setting import PhiMethod, RunConfig, RunSettings
from .spectra import SpectralPair, low_spectrum

_logger = logging.getLogger(__name__)

DEFAULT_FAMILIES: dict[ModelKind, str] = {
    "ring": "arc",
    "transverse_field": "hypercube",
    "ising_chain": "hypercube",
}

SweepParam = Literal["N", "n", "t", "B"]


def _fmt(value: float | None) -> str:
    return "" if value is None else format(value, ".17g")


def cheeger_for(
    graph: WeightedGraph,
    kind: ModelKind,
    method: PhiMethod,
    settings: RunSettings,
) -> CheegerResult:
    """Exact Phi when allowed (and, for "auto", small enough), else the model's cut family."""
    if method == "exact" or (method == "auto" and graph.n_vertices <= settings.enum_limit):
        return cheeger_exact(graph, settings)
    family = DEFAULT_FAMILIES.get(kind)
    if family is None:
        raise SizeLimitError(
            f"N={graph.n_vertices} exceeds enum_limit={settings.enum_limit} and "
            f"model '{kind}' has no candidate cut family"
        )
    return cheeger_candidate(graph, family, settings)


@dataclasses.dataclass(frozen=True, eq=False)
class BoundsResult:
    spec: ModelSpec
    matrix: StoquasticMatrix
    pair: SpectralPair
    graph: WeightedGraph
    cheeger: CheegerResult
    upper: float
    classic_lower: float
    evaluations: list[StrategyEvaluation]
    best: StrategyEvaluation | None
    domain: str

    @property
    def gap(self) -> float:
        return self.pair.gap

    @property
    def generalized_lower(self) -> float:
        if self.best is None or self.best.bound is None:
            return 0.0
        return self.best.bound

    def to_row(self) -> dict[str, str]:
        """One CSV row with a fixed column order."""
        row = dict(self.spec.params())
        row.update(
            {
                "dim": str(self.graph.n_vertices),
                "lambda0": _fmt(self.pair.lambda0),
                "lambda1": _fmt(self.pair.lambda1),
                "gap": _fmt(self.gap),
                "phi": _fmt(self.cheeger.phi),
                "phi_method": self.cheeger.method,
                "upper": _fmt(self.upper),
                "classic_lower": _fmt(self.classic_lower),
            }
        )
        for evaluation in self.evaluations:
            s = evaluation.strategy
            reduced = evaluation.reduced
            result = evaluation.result
            row[f"{s}_c"] = _fmt(None if reduced is None else reduced.constriction)
            row[f"{s}_phi_tilde"] = _fmt(None if result is None else result.phi_tilde)
            row[f"{s}_bound"] = _fmt(evaluation.bound)
        row["best_generalized"] = _fmt(self.generalized_lower)
        row["domain"] = self.domain
        return row


def run_bounds(config: RunConfig, phi_method: PhiMethod | None = None) -> BoundsResult:
    settings = config.settings
    matrix = build_model(config.model, n_max=settings.n_max)
    pair = low_spectrum(matrix, settings)
    graph = graph_from(matrix, pair.lambda0, pair.psi0)
    cheeger = cheeger_for(graph, config.model.kind, phi_method or config.phi_method, settings)
    upper, classic_lower = classic_bounds(cheeger.phi, pair.lambda0)

    domain = resolve_domain(config.domain, graph.n_vertices, settings)
    side = cheeger.cut.vertices
    evaluations = [
        evaluate_strategy(graph, side, s, config.domain, settings) for s in config.strategies
    ]
    best: StrategyEvaluation | None
    try:
        best = select_best(evaluations)
    except DegenerateReductionError as e:
        _logger.warning("no usable reduction, generalised bound is 0: %s", e)
        best = None
    return BoundsResult(
        spec=config.model,
        matrix=matrix,
        pair=pair,
        graph=graph,
        cheeger=cheeger,
        upper=upper,
        classic_lower=classic_lower,
        evaluations=evaluations,
        best=best,
        domain=domain,
    )


def sweep_values(start: float, stop: float, step: float) -> list[float]:
    """start, start + step, ... up to stop inclusive, rounded to 12 decimals."""
    if not step > 0:
        raise ConfigurationError(f"step must be positive, got {step}")
    count = int((stop - start) / step + 1e-9) + 1
    return [round(start + k * step, 12) for k in range(max(count, 0))]


def _with_param(spec: ModelSpec, param: SweepParam, value: float) -> ModelSpec:
    if param in ("N", "n"):
        return dataclasses.replace(spec, size=int(value))
    return dataclasses.replace(spec, coupling=float(value))


def _dimension(spec: ModelSpec) -> int:
    assert spec.size is not None
    return spec.size if spec.kind == "ring" else 1 << spec.size


def run_sweep(
    config: RunConfig, param: SweepParam, values: Sequence[float]
) -> list[BoundsResult]:
    """
    Evaluate the pipeline at every sweep point, in sweep order.

    Phi is computed with a single method for the whole sweep: exact only if
    every point fits enum_limit.
    """
    if config.model.kind == "file":
        raise ConfigurationError("sweeps need a built-in model")
    specs = [_with_param(config.model, param, v) for v in values]
    settings = config.settings
    method: PhiMethod = config.phi_method
    if method == "auto":
        fits = all(_dimension(s) <= settings.enum_limit for s in specs)
        method = "exact" if fits else "candidate"
    _logger.info("sweep over %s: %d points, phi method %s", param, len(specs), method)

    workers = resolve_workers(settings.threads)
    point_settings = dataclasses.replace(settings, threads=1) if workers > 1 else settings

    def one(spec: ModelSpec) -> BoundsResult:
        return run_bounds(dataclasses.replace(config, model=spec, settings=point_settings), method)

    return ordered_map(one, specs, workers=workers)


def sweep_row(result: BoundsResult, param: SweepParam) -> dict[str, str]:
    spec = result.spec
    value = spec.size if param in ("N", "n") else spec.coupling
    return {
        param: str(value) if param in ("N", "n") else _fmt(value),
        "gap": _fmt(result.gap),
        "phi": _fmt(result.cheeger.phi),
        "upper": _fmt(result.upper),
        "classic_lower": _fmt(result.classic_lower),
        "generalized_lower": _fmt(result.generalized_lower),
    }


@dataclasses.dataclass(frozen=True, eq=False)
class Certificate:
    """A reduction on `support` with its two candidate phi~ values."""

    reduced: ReducedGraph
    support: tuple[int, ...]
    # min over nonempty subsets of the support (reduced_cheeger, subsets-of-s)
    domain_phi: float
    # largest phi~ whose network has minimum cut (1 + phi~) C(support)
    network_phi: float

    @property
    def capped(self) -> bool:
        return self.domain_phi > self.network_phi * (1.0 + 1e-12) + 1e-300

    @property
    def phi_tilde(self) -> float:
        """The value certified by the flow network."""
        return min(self.domain_phi, self.network_phi)


def certificate_inputs(
    graph: WeightedGraph,
    support: Sequence[int],
    strategy: str,
    settings: RunSettings,
) -> Certificate:
    """
    Reduction on `support` with its subsets-of-s phi~ and the largest phi~ the
    flow network accepts. A reduced Cheeger value the network rejects is
    logged; the certified value is then the network one.
    """
    support = tuple(sorted({int(v) for v in support}))
    reduced = build_reduction(graph, strategy, support)
    domain_phi = reduced_cheeger(reduced, support, "subsets-of-s", settings).phi_tilde
    network_phi, witness = network_phi_tilde(reduced, support, settings)
    certificate = Certificate(reduced, support, domain_phi, network_phi)
    if certificate.capped:
        _logger.warning(
            "%s reduction: phi~ %.6g fails the min-cut claim on its network "
            "(sink arcs bind at %s); certifying the network value %.6g",
            strategy,
            domain_phi,
            witness,
            network_phi,
        )
    return certificate
