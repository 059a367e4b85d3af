import csv
import functools
import logging
import os
import sys
from typing import IO, Any, Callable, Iterable, Mapping, Sequence, TypeVar, cast

import click
from dotenv import find_dotenv, load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import _version
from .errors import CheegerGapError, VerificationError
from .flownet import (
    build_network,
    max_flow,
    positive_support,
    rule_counts,
    save_network,
)
from .graph import graph_from, save_graph
from .model import ModelKind, ModelSpec, build_model
from .pipeline import (
    BoundsResult,
    SweepParam,
    certificate_inputs,
    cheeger_for,
    run_bounds,
    run_sweep,
    sweep_row,
    sweep_values,
)
from .setting import DOMAIN_MODES, PHI_METHODS, STRATEGIES, RunConfig, RunSettings
from .spectra import low_spectrum
from .verify import SUITES, VerifyOptions, run_verify, suites_from

_logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

MODEL_CHOICES: dict[str, ModelKind] = {
    "ring": "ring",
    "transverse": "transverse_field",
    "ising": "ising_chain",
    "file": "file",
}


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose >= 2:
        level = logging.DEBUG
    handler = RichHandler(
        console=Console(stderr=True), show_path=False, rich_tracebacks=verbose >= 2
    )
    root = logging.getLogger("cheeger_gap")
    root.handlers[:] = [handler]
    root.setLevel(level)


def _handle_errors(fn: F) -> F:
    """Report library errors on stderr and exit with their code."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except CheegerGapError as e:
            click.secho(f"Error: {e}", fg="red", err=True)
            sys.exit(e.exit_code)

    return wrapper  # type: ignore[return-value]


def _model_options(required: bool) -> Callable[[F], F]:
    def decorator(fn: F) -> F:
        options = [
            click.option(
                "--model",
                "model",
                type=click.Choice(list(MODEL_CHOICES)),
                required=required,
                help="Model to build: the hopping ring, the transverse-field "
                "hypercube, the ferromagnetic Ising chain, or a matrix file.",
            ),
            click.option("--N", "n_sites", type=int, default=None, help="Ring length."),
            click.option("--n", "n_spins", type=int, default=None, help="Number of spins."),
            click.option(
                "--t", "hopping", type=float, default=1.0, show_default=True,
                help="Ring hopping amplitude.",
            ),
            click.option(
                "--B", "b_field", type=float, default=1.0, show_default=True,
                help="Transverse field strength.",
            ),
            click.option(
                "--path",
                type=click.Path(dir_okay=False),
                default=None,
                help="Matrix file for --model file.",
            ),
        ]
        for option in reversed(options):
            fn = option(fn)
        return fn

    return decorator


def _tuning_options(fn: F) -> F:
    options = [
        click.option("--tol", type=float, default=None, help="Eigensolver residual tolerance."),
        click.option(
            "--degeneracy-tol", type=float, default=None,
            help="Gaps below this mark the spectrum as near-degenerate.",
        ),
        click.option(
            "--cap-tol", type=float, default=None, help="Slack on the C(S) <= 1/2 constraint."
        ),
        click.option(
            "--flow-tol", type=float, default=None, help="Relative tolerance on max-flow values."
        ),
        click.option(
            "--dense-limit", type=int, default=None,
            help="Largest dimension solved by dense diagonalization.",
        ),
        click.option(
            "--enum-limit", type=int, default=None,
            help="Largest vertex count for exhaustive cut enumeration.",
        ),
        click.option(
            "--subset-limit", type=int, default=None,
            help="Largest support enumerated for subsets-of-s and flow networks.",
        ),
        click.option("--n-max", type=int, default=None, help="Largest spin count accepted."),
        click.option(
            "--max-iter", type=int, default=None, help="Power iteration step limit."
        ),
        click.option(
            "--threads", type=int, default=None,
            help="Worker threads. Defaults to CHEEGER_GAP_THREADS, or 1.",
        ),
        click.option(
            "--config",
            "config_file",
            type=click.Path(exists=True, dir_okay=False, readable=True),
            default=None,
            help="A key=value file of settings, applied before these flags.",
        ),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _analysis_options(fn: F) -> F:
    options = [
        click.option(
            "--strategy",
            "strategies",
            type=click.Choice(list(STRATEGIES)),
            multiple=True,
            help="Reduction strategy (repeatable). Defaults to all of them.",
        ),
        click.option(
            "--domain",
            type=click.Choice(list(DOMAIN_MODES)),
            default="auto",
            show_default=True,
            help="Subsets over which the reduced Cheeger constant is minimised.",
        ),
        click.option(
            "--phi-method",
            type=click.Choice(list(PHI_METHODS)),
            default="auto",
            show_default=True,
            help="Exact enumeration, the model's candidate cut family, "
            "or exact when N <= enum-limit.",
        ),
        click.option(
            "-o",
            "--output",
            type=click.Path(dir_okay=False, writable=True),
            default=None,
            help="Write CSV here instead of stdout.",
        ),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _model_spec(
    model: str | None,
    n_sites: int | None,
    n_spins: int | None,
    hopping: float,
    b_field: float,
    path: str | None,
) -> ModelSpec | None:
    if model is None:
        return None
    kind = MODEL_CHOICES[model]
    if kind == "file":
        return ModelSpec(kind="file", path=path)
    if kind == "ring":
        return ModelSpec(kind="ring", size=n_sites, coupling=hopping)
    return ModelSpec(kind=kind, size=n_spins, coupling=b_field)


def _settings(config_file: str | None, **overrides: Any) -> RunSettings:
    settings = RunSettings.from_env()
    if config_file is not None:
        settings = settings.with_config_file(config_file)
    return settings.with_overrides(**overrides)


def _split_tuning(kwargs: dict[str, Any]) -> RunSettings:
    keys = (
        "tol", "degeneracy_tol", "cap_tol", "flow_tol", "dense_limit", "enum_limit",
        "subset_limit", "n_max", "max_iter", "threads",
    )
    overrides = {k: kwargs.pop(k) for k in keys}
    return _settings(kwargs.pop("config_file"), **overrides)


def _split_model(kwargs: dict[str, Any]) -> ModelSpec | None:
    return _model_spec(
        kwargs.pop("model"),
        kwargs.pop("n_sites"),
        kwargs.pop("n_spins"),
        kwargs.pop("hopping"),
        kwargs.pop("b_field"),
        kwargs.pop("path"),
    )


def _write_csv(rows: Sequence[Mapping[str, str]], stream: IO[str]) -> None:
    if not rows:
        return
    writer = csv.DictWriter(stream, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def _emit_csv(rows: Sequence[Mapping[str, str]], output: str | None) -> None:
    if output is None:
        _write_csv(rows, sys.stdout)
        return
    with open(output, "w", encoding="utf-8", newline="") as f:
        _write_csv(rows, f)
    click.echo(f"Wrote {len(rows)} row(s) to {output}", err=True)


@click.group()
@click.version_option(
    _version.__version__,
    "-V",
    "--version",
    package_name="cheeger-gap",
    message="%(prog)s version %(version)s",
)
@click.option(
    "-e",
    "--env-file",
    type=click.Path(
        exists=True, file_okay=True, dir_okay=False, readable=True, resolve_path=True
    ),
    help="Path to a .env file to load environment variables from. "
    "If not provided, attempts to load '.env' from the current directory.",
    default=None,
    show_default=False,
)
@click.option(
    "-v",
    "--verbose",
    count=True,
    help="Log progress to stderr: -v for INFO, -vv for DEBUG.",
)
def cli(env_file: str | None = None, verbose: int = 0) -> None:
    """
    Bound the spectral gap of stoquastic Hamiltonians with Cheeger inequalities.
    """
    _configure_logging(verbose)
    dotenv_path = env_file or find_dotenv(usecwd=True)

    if dotenv_path and load_dotenv(dotenv_path=dotenv_path):
        loaded_env_path = os.path.abspath(dotenv_path)
        click.echo(f"Loaded environment variables from: {loaded_env_path}\n", err=True)


@cli.command()
@_model_options(required=True)
@_tuning_options
@click.option("--csv", "as_csv", is_flag=True, help="Print one CSV row instead of a table.")
@_handle_errors
def gap(as_csv: bool, **kwargs: Any) -> None:
    """
    Print the two lowest eigenvalues and the spectral gap.

    \b
    CSV columns: model parameters, dim, lambda0, lambda1, gap,
    residual0, residual1, solver.
    """
    settings = _split_tuning(kwargs)
    spec = _split_model(kwargs)
    assert spec is not None
    matrix = build_model(spec, n_max=settings.n_max)
    pair = low_spectrum(matrix, settings)
    row = dict(spec.params())
    row.update(
        {
            "dim": str(matrix.dim),
            "lambda0": format(pair.lambda0, ".17g"),
            "lambda1": format(pair.lambda1, ".17g"),
            "gap": format(pair.gap, ".17g"),
            "residual0": format(pair.residual0, ".3e"),
            "residual1": format(pair.residual1, ".3e"),
            "solver": pair.method,
        }
    )
    if as_csv:
        _write_csv([row], sys.stdout)
        return
    table = Table(title="Spectral gap", title_style="cyan", header_style="bold magenta")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    for key, value in row.items():
        table.add_row(key, value)
    Console().print(table)


@cli.command()
@_model_options(required=True)
@_tuning_options
@_analysis_options
@_handle_errors
def bounds(**kwargs: Any) -> None:
    """
    Compute Phi, the classic Cheeger bounds and the generalised lower bound.

    Prints one CSV row. Columns, in order: model parameters, dim, lambda0,
    lambda1, gap, phi, phi_method, upper (2 Phi), classic_lower
    (Phi^2 / 2|lambda0|), then for each strategy <s>_c, <s>_phi_tilde,
    <s>_bound, and finally best_generalized and domain.
    """
    settings = _split_tuning(kwargs)
    spec = _split_model(kwargs)
    assert spec is not None
    config = RunConfig(
        model=spec,
        settings=settings,
        strategies=tuple(kwargs["strategies"]) or STRATEGIES,
        domain=kwargs["domain"],
        phi_method=kwargs["phi_method"],
        output=kwargs["output"],
    )
    result: BoundsResult = run_bounds(config)
    _emit_csv([result.to_row()], config.output)


@cli.command()
@_model_options(required=True)
@_tuning_options
@_analysis_options
@click.option(
    "--param",
    type=click.Choice(["N", "n", "t", "B"]),
    required=True,
    help="Parameter to sweep; N and t for the ring, n and B for spin models.",
)
@click.option("--start", type=float, required=True)
@click.option("--stop", type=float, required=True)
@click.option("--step", type=float, default=1.0, show_default=True)
@_handle_errors
def sweep(param: str, start: float, stop: float, step: float, **kwargs: Any) -> None:
    """
    Evaluate the bounds over a range of one parameter and write CSV.

    \b
    Columns: <param>, gap, phi, upper, classic_lower, generalized_lower.
    Rows come out in sweep order whatever the thread count.
    """
    settings = _split_tuning(kwargs)
    spec = _split_model(kwargs)
    assert spec is not None
    ring_params = ("N", "t")
    if spec.kind == "file":
        raise click.UsageError("sweeps need a built-in model")
    if (spec.kind == "ring") != (param in ring_params):
        raise click.BadParameter(
            f"'{param}' is not a parameter of model '{spec.kind}'", param_hint="--param"
        )
    config = RunConfig(
        model=spec,
        settings=settings,
        strategies=tuple(kwargs["strategies"]) or STRATEGIES,
        domain=kwargs["domain"],
        phi_method=kwargs["phi_method"],
        output=kwargs["output"],
    )
    sweep_param = cast(SweepParam, param)
    results = run_sweep(config, sweep_param, sweep_values(start, stop, step))
    _emit_csv([sweep_row(r, sweep_param) for r in results], config.output)


@cli.command()
@_model_options(required=False)
@_tuning_options
@click.option(
    "--only",
    type=click.Choice(list(SUITES)),
    multiple=True,
    help="Suite to run (repeatable). Defaults to every suite.",
)
@click.option(
    "--instances",
    type=int,
    default=None,
    help="Random instances per suite (100 by default, 25 for the flow suites).",
)
@click.option("--seed", type=int, default=None, help="Seed for the random instances.")
@click.option(
    "--inject-inflated-phi",
    is_flag=True,
    help="Certify 1.5 times the feasible phi~ so the flow check must fail.",
)
@_handle_errors
def verify(
    only: tuple[str, ...],
    instances: int | None,
    seed: int | None,
    inject_inflated_phi: bool,
    **kwargs: Any,
) -> None:
    """
    Run the invariant suites and print one CSV row per check.

    Exits 1 naming the first failing check. With --model, every suite runs
    on that model alone instead of the random instances.
    """
    settings = _split_tuning(kwargs)
    if seed is not None:
        settings = settings.with_overrides(seed=seed)
    options = VerifyOptions(
        only=suites_from(only),
        instances=instances,
        seed=settings.seed,
        inject_inflated_phi=inject_inflated_phi,
        model=_split_model(kwargs),
    )
    report = run_verify(options, settings)
    rows = [
        {
            "check": c.name,
            "status": "skip" if c.skipped else ("pass" if c.passed else "fail"),
            "value": "" if c.value is None else format(c.value, ".6e"),
            "tolerance": "" if c.tolerance is None else format(c.tolerance, ".1e"),
            "detail": c.detail,
        }
        for c in report
    ]
    _write_csv(rows, sys.stdout)
    counts = _status_counts(rows)
    click.echo(
        f"{len(rows)} checks: {counts['pass']} passed, {counts['skip']} skipped, "
        f"{counts['fail']} failed",
        err=True,
    )
    report.raise_for_failure(VerificationError)


def _status_counts(rows: Iterable[Mapping[str, str]]) -> dict[str, int]:
    counts = {"pass": 0, "skip": 0, "fail": 0}
    for row in rows:
        counts[row["status"]] += 1
    return counts


@cli.command("export-graph")
@_model_options(required=True)
@_tuning_options
@click.option(
    "-o", "--output", type=click.Path(dir_okay=False, writable=True), required=True
)
@_handle_errors
def export_graph(output: str, **kwargs: Any) -> None:
    """
    Write the weighted graph of the model's ground state.

    Format 'graph 1': a header line, then 'N edge_count', one 'i j w_ij' line
    per edge with i <= j (self-loops included), then 'v i pi_i' per vertex.
    """
    settings = _split_tuning(kwargs)
    spec = _split_model(kwargs)
    assert spec is not None
    matrix = build_model(spec, n_max=settings.n_max)
    pair = low_spectrum(matrix, settings)
    save_graph(graph_from(matrix, pair.lambda0, pair.psi0), output)
    click.echo(f"Wrote graph with {matrix.dim} vertices to {output}", err=True)


@cli.command("export-network")
@_model_options(required=True)
@_tuning_options
@click.option(
    "--strategy",
    type=click.Choice(list(STRATEGIES)),
    default="cut-plus-paths",
    show_default=True,
    help="Reduction the network is built from.",
)
@click.option(
    "--support",
    "support_rule",
    type=click.Choice(["vplus", "cut"]),
    default="vplus",
    show_default=True,
    help="Network support: the positive part of the excited state, or the Cheeger cut.",
)
@click.option(
    "--phi-tilde",
    type=float,
    default=None,
    help="phi~ to certify. Defaults to the largest value the network accepts.",
)
@click.option(
    "-o", "--output", type=click.Path(dir_okay=False, writable=True), required=True
)
@_handle_errors
def export_network(
    strategy: str,
    support_rule: str,
    phi_tilde: float | None,
    output: str,
    **kwargs: Any,
) -> None:
    """
    Build the flow network certificate, solve it and write it with its flow.

    Format 'network 1': 'node_count arc_count', one 'node k layer [vertex]'
    line per node, then 'tail head capacity flow' per arc.
    """
    settings = _split_tuning(kwargs)
    spec = _split_model(kwargs)
    assert spec is not None
    matrix = build_model(spec, n_max=settings.n_max)
    pair = low_spectrum(matrix, settings)
    graph = graph_from(matrix, pair.lambda0, pair.psi0)
    if support_rule == "vplus":
        support = positive_support(pair, graph).vplus
    else:
        support = cheeger_for(graph, spec.kind, "auto", settings).cut.vertices
    certificate = certificate_inputs(graph, support, strategy, settings)
    reduced = certificate.reduced
    if phi_tilde is None:
        phi_tilde = certificate.phi_tilde
    net = build_network(reduced, support, phi_tilde)
    flow = max_flow(net, settings)
    save_network(net, flow, output)

    table = Table(title="Flow network", title_style="cyan", header_style="bold magenta")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("support", " ".join(map(str, support)))
    table.add_row("phi~", format(phi_tilde, ".12g"))
    table.add_row("reduced phi~", format(certificate.domain_phi, ".12g"))
    table.add_row("network phi~", format(certificate.network_phi, ".12g"))
    table.add_row("max flow", format(flow.value, ".12g"))
    table.add_row("(1+phi~) C(support)", format(net.source_capacity(), ".12g"))
    for rule, count in rule_counts(net).items():
        table.add_row(f"rule {rule} arcs", str(count))
    Console(stderr=True).print(table)


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
