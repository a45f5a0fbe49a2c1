# import via the common imports route
from imports import Any, Optional, Path, Console, Table, typer
# initialise global objects
from globals import get_config
CONFIG = get_config()
# local module imports
from utils import load_config, log, load_json, dumps_json, Aborting
from matcore import ToleranceAmbiguity, Tolerances, make_rng
from model import (
    PencilFile,
    ProblemFile,
    SolveReport,
    encode_matrix,
    load_pencil_file,
)
from pencil import MatrixPencil, format_complex, kcf_structure, kronecker_chains, render_structure
from strat import enumerate_covers, parse_bundle, render_bundle
from twopar import SolveOptions, delta_matrices, solve
from corpus import CorpusMismatch, list_examples, run_all, run_example

EXIT_ABORT = 1
EXIT_AMBIGUITY = 2
EXIT_CORPUS_MISMATCH = 3
OUTPUT_FORMATS = ("json", "text")

# run the app
app = typer.Typer(help="Singular two-parameter eigenvalue problems through the Delta pencils.")
strat_app = typer.Typer(help="Bundle stratification queries.")
examples_app = typer.Typer(help="The worked example corpus under problems/.")
app.add_typer(strat_app, name="strat")
app.add_typer(examples_app, name="examples")

stdout = Console(highlight=False, soft_wrap=True)


def _setup(config: Optional[Path], output_format: str = "json") -> None:
    if config:
        log("DEBUG", f"Loading user-specified config from: {config}", prefix="CLI")
        load_config(config)
    else:
        load_config()
    if output_format not in OUTPUT_FORMATS:
        log("ERROR", f"--format must be one of {', '.join(OUTPUT_FORMATS)}, got {output_format!r}", prefix="CLI")


def _tolerances(tol: Optional[float]) -> Tolerances:
    """Configured tolerances; --tol replaces rank_tol and wins over SING2EP_TOL."""
    try:
        return Tolerances.from_config(rank_tol=tol)
    except ValueError as e:
        log("ERROR", str(e), prefix="CLI")


def _seed(seed: Optional[int]) -> int:
    return int(CONFIG.get("default_seed", 1729)) if seed is None else seed


def _run(action, *args, **kwargs) -> Any:
    """Map library failures to exit codes."""
    try:
        return action(*args, **kwargs)
    except ToleranceAmbiguity as e:
        log("WARN", f"Tolerance ambiguity: {e}", prefix="CLI")
        raise typer.Exit(EXIT_AMBIGUITY)
    except CorpusMismatch as e:
        for line in e.diff:
            log("WARN", line, prefix="CLI")
        raise typer.Exit(EXIT_CORPUS_MISMATCH)
    except Aborting:
        raise typer.Exit(EXIT_ABORT)
    except ValueError as e:
        log("WARN", f"Invalid input: {e}", prefix="CLI")
        raise typer.Exit(EXIT_ABORT)


def _load_problem(path: Path) -> ProblemFile:
    data = load_json(path)
    try:
        return ProblemFile.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        log("ERROR", f"Invalid problem file {path}: {e}", prefix="CLI")


def _format_value(z: complex) -> str:
    return format_complex(z, 8)


@app.command("solve", no_args_is_help=True)
def solve_command(
    path: Path = typer.Argument(..., exists=True, file_okay=True, dir_okay=False, help="Problem file (JSON)"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Relative rank tolerance"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed"),
    rotate: str = typer.Option("auto", "--rotate", help="auto, none or an angle in radians"),
    output_format: str = typer.Option("json", "--format", help="json or text"),
    config: Optional[Path] = typer.Option(None, "--config", help="Override config file path"),
):
    """
    Eigenvalues of a two-parameter problem that own a common regular eigenvector.
    """
    def action():
        _setup(config, output_format)
        tolerances = _tolerances(tol)
        problem_file = _load_problem(path)
        options = SolveOptions(rotate=rotate, seed=_seed(seed), tolerances=tolerances)
        log("INFO", f"Solving {problem_file.name or path} (seed {options.seed}, rotate {rotate})", prefix="CLI")
        result = solve(problem_file.to_problem(), options)
        report = SolveReport.from_result(problem_file.name, result, tolerances)
        if output_format == "json":
            typer.echo(dumps_json(report.to_dict()))
            return
        table = Table(title=f"Eigenvalues of {report.name or path}")
        for column in ("lambda", "mu", "on common factor", "hint", "residual"):
            table.add_column(column)
        for e in report.eigenvalues:
            residual = "-" if e.residual is None else f"{e.residual:.2e}"
            table.add_row(_format_value(e.lam), _format_value(e.mu), str(e.on_common_factor),
                          str(e.multiplicity_hint), residual)
        stdout.print(table)
        for key in sorted(report.diagnostics):
            if key != "tolerances":
                stdout.print(f"{key}: {report.diagnostics[key]}")

    _run(action)


@app.command(no_args_is_help=True)
def kcf(
    path: Path = typer.Argument(..., exists=True, file_okay=True, dir_okay=False, help="Pencil or problem file (JSON)"),
    delta: Optional[int] = typer.Option(None, "--delta", help="Analyse Delta_i - lambda Delta_0 of a problem file"),
    chains: bool = typer.Option(False, "--chains", help="Report Kronecker chain residuals"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Relative rank tolerance"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed"),
    output_format: str = typer.Option("json", "--format", help="json or text"),
    config: Optional[Path] = typer.Option(None, "--config", help="Override config file path"),
):
    """
    Kronecker canonical structure of a pencil A - lambda B.
    """
    def action():
        _setup(config, output_format)
        tolerances = _tolerances(tol)
        rng = make_rng(_seed(seed))
        if delta is not None:
            if delta not in (1, 2):
                log("ERROR", f"--delta must be 1 or 2, got {delta}", prefix="CLI")
            problem = _load_problem(path).to_problem()
            D0, D1, D2 = delta_matrices(problem)
            name = f"{problem.name or path.stem} delta{delta}"
            pencil = MatrixPencil(D1 if delta == 1 else D2, D0)
        else:
            pencil_file: PencilFile = load_pencil_file(path)
            name = pencil_file.name or path.stem
            pencil = pencil_file.to_pencil()
        structure = kcf_structure(pencil, rng, tolerances)
        rendered = render_structure(structure, tolerances.kcf_render_digits)
        output = {"name": name, "structure": rendered}
        if chains:
            output["chains"] = [{"block": c.block.token(tolerances.kcf_render_digits), "residual": c.residual(pencil)}
                                for c in kronecker_chains(pencil, structure, rng, tolerances)]
        if output_format == "json":
            typer.echo(dumps_json(output))
            return
        stdout.print(f"{name}: {rendered}")
        if chains:
            table = Table(title="Kronecker chains")
            table.add_column("block")
            table.add_column("residual")
            for chain in output["chains"]:
                table.add_row(chain["block"], f"{chain['residual']:.2e}")
            stdout.print(table)

    _run(action)


@app.command(no_args_is_help=True)
def delta(
    path: Path = typer.Argument(..., exists=True, file_okay=True, dir_okay=False, help="Problem file (JSON)"),
    config: Optional[Path] = typer.Option(None, "--config", help="Override config file path"),
):
    """
    The operator determinants Delta_0, Delta_1 and Delta_2 as matrix JSON.
    """
    def action():
        _setup(config)
        problem_file = _load_problem(path)
        D0, D1, D2 = delta_matrices(problem_file.to_problem())
        typer.echo(dumps_json({
            "name": problem_file.name,
            "Delta0": encode_matrix(D0),
            "Delta1": encode_matrix(D1),
            "Delta2": encode_matrix(D2),
        }))

    _run(action)


@strat_app.command(no_args_is_help=True)
def covers(
    bundle: str = typer.Argument(..., help='Bundle string, e.g. "{2,1}|{1}|inf:{1}"'),
    output_format: str = typer.Option("json", "--format", help="json or text"),
    config: Optional[Path] = typer.Option(None, "--config", help="Override config file path"),
):
    """
    Every bundle one minimum leftward or horizontal cut move away.
    """
    def action():
        _setup(config, output_format)
        try:
            parsed = parse_bundle(bundle)
        except ValueError as e:
            log("ERROR", f"Invalid bundle {bundle!r}: {e}", prefix="CLI")
        found = [render_bundle(b) for b in enumerate_covers(parsed)]
        if output_format == "json":
            typer.echo(dumps_json({"bundle": render_bundle(parsed), "covers": found}))
        else:
            for line in found:
                stdout.print(line)

    _run(action)


@examples_app.command("list")
def examples_list(
    config: Optional[Path] = typer.Option(None, "--config", help="Override config file path"),
):
    """
    Names of the worked examples.
    """
    def action():
        _setup(config)
        for name in list_examples():
            typer.echo(name)

    _run(action)


@examples_app.command("run")
def examples_run(
    name: Optional[str] = typer.Argument(None, help="Example name, see 'examples list'"),
    run_everything: bool = typer.Option(False, "--all", help="Run every example"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Relative rank tolerance"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed"),
    output_format: str = typer.Option("json", "--format", help="json or text"),
    config: Optional[Path] = typer.Option(None, "--config", help="Override config file path"),
):
    """
    Run examples and compare against their stored expectations.
    """
    def action():
        _setup(config, output_format)
        if (name is None) == (not run_everything):
            log("ERROR", "Give either an example name or --all", prefix="CLI")
        tolerances = _tolerances(tol)
        if run_everything:
            results = run_all(_seed(seed), tolerances, strict=False)
        else:
            results = [run_example(name, _seed(seed), tolerances)]
        if output_format == "json":
            typer.echo(dumps_json({"seed": _seed(seed), "results": [r.to_dict() for r in results]}))
        else:
            table = Table(title="Example corpus")
            for column in ("example", "check", "expected", "actual", "passed"):
                table.add_column(column)
            for r in results:
                for c in r.checks:
                    table.add_row(r.name, c.check, str(c.expected), str(c.actual),
                                  "[green]yes[/green]" if c.passed else "[red]no[/red]")
            stdout.print(table)
        diff = [line for r in results for line in r.diff()]
        if diff:
            raise CorpusMismatch(diff, results)

    _run(action)


if __name__ == "__main__":
    exit_code = 0
    try:
        app()
    except Aborting:
        log("INFO", "Caught abort signal... exiting!", prefix="CLI")
        exit_code = EXIT_ABORT
    if exit_code:
        raise SystemExit(exit_code)
