# external module imports
from imports import dataclass, field, Any, Dict, List, Optional, Path
# get global state objects (CONFIG and console)
from globals import get_config
CONFIG = get_config()
# local module imports
from utils import log, SCRIPT_DIR
from matcore import Subspace, Tolerances, default_tolerances, make_rng, nullspace, subspace_intersect, subspaces_equal
from model import ProblemFile, decode_complex, decode_matrix, load_problem_file
from pencil import format_complex, generic_kernel
from twopar import (
    Eigenvalue2P,
    SolveOptions,
    TwoParameterProblem,
    build_deltas,
    delta_kernel_drop,
    rank_sum_drop,
    solve,
)

"""
The worked examples shipped under problems/, each with the results it is expected
to reproduce, and a runner that compares computed against stored values.
"""


class CorpusMismatch(Exception):
    """At least one stored expectation was not reproduced."""

    def __init__(self, diff: list[str], results: Optional[list["ExampleResult"]] = None):
        super().__init__("\n".join(diff))
        self.diff = diff
        self.results = results or []


@dataclass
class ExampleCheck:
    check: str
    expected: Any
    actual: Any
    passed: bool

    def to_dict(self) -> dict:
        return {"check": self.check, "expected": self.expected, "actual": self.actual, "passed": self.passed}


@dataclass
class ExampleResult:
    name: str
    checks: List[ExampleCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: str, expected: Any, actual: Any, passed: Optional[bool] = None) -> None:
        self.checks.append(ExampleCheck(check, expected, actual, expected == actual if passed is None else passed))

    def diff(self) -> list[str]:
        return [f"{self.name}: {c.check} expected {c.expected!r}, got {c.actual!r}"
                for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def problems_dir() -> Path:
    path = Path(CONFIG.get("problems_dir", "problems"))
    return path if path.is_absolute() else Path(SCRIPT_DIR) / path


def list_examples() -> list[str]:
    return sorted(p.stem for p in problems_dir().glob("*.json"))


def load_example_file(name: str) -> ProblemFile:
    path = problems_dir() / f"{name}.json"
    if not path.is_file():
        log("ERROR", f"Unknown example {name!r}; available: {', '.join(list_examples())}", prefix="CORPUS")
    return load_problem_file(path)


def load_example(name: str) -> TwoParameterProblem:
    return load_example_file(name).to_problem()


def _render_point(lam: complex, mu: complex) -> str:
    return f"({format_complex(lam, 6)}, {format_complex(mu, 6)})"


def _match_eigenvalues(expected: list[dict], found: list[Eigenvalue2P], tol: float) -> list[Optional[Eigenvalue2P]]:
    """Greedy one-to-one matching of expected points to computed eigenvalues."""
    unused = list(found)
    matches: list[Optional[Eigenvalue2P]] = []
    for entry in expected:
        lam, mu = decode_complex(entry["lambda"]), decode_complex(entry["mu"])
        close = [e for e in unused if abs(e.lam - lam) <= tol and abs(e.mu - mu) <= tol]
        if close:
            best = min(close, key=lambda e: abs(e.lam - lam) + abs(e.mu - mu))
            unused.remove(best)
            matches.append(best)
        else:
            matches.append(None)
    return matches


def _check_eigenvalues(result: ExampleResult, expected: Dict[str, Any], found: list[Eigenvalue2P]) -> None:
    entries = expected["eigenvalues"]
    tol = float(expected.get("eigenvalue_tol", 1e-6))
    exact = bool(expected.get("eigenvalues_exact", True))
    matches = _match_eigenvalues(entries, found, tol)
    wanted = [_render_point(decode_complex(e["lambda"]), decode_complex(e["mu"])) for e in entries]
    actual = [_render_point(e.lam, e.mu) for e in found]
    ok = all(m is not None for m in matches) and (not exact or len(found) == len(entries))
    result.add("eigenvalues" if exact else "eigenvalues_include", wanted, actual, ok)

    for entry, match in zip(entries, matches):
        if match is None:
            continue
        point = _render_point(match.lam, match.mu)
        if "on_common_factor" in entry:
            result.add(f"on_common_factor {point}", entry["on_common_factor"], match.on_common_factor)
        if "multiplicity_hint" in entry:
            result.add(f"multiplicity_hint {point}", entry["multiplicity_hint"], match.multiplicity_hint)


def run_example(name: str, seed: Optional[int] = None, tolerances: Optional[Tolerances] = None) -> ExampleResult:
    """Solve one example and compare every result its problem file stores an expectation for."""
    problem_file = load_example_file(name)
    P = problem_file.to_problem()
    expected = problem_file.expected
    tols = tolerances or default_tolerances()
    seed = CONFIG.get("default_seed", 1729) if seed is None else seed
    rng = make_rng(seed)
    result = ExampleResult(name)
    log("INFO", f"Running example {name} (seed {seed})", prefix="CORPUS")

    wants_kcf = "kcf" in expected or "same_bundle" in expected
    solved = solve(P, SolveOptions(rotate="auto", seed=seed, tolerances=tols, kcf_diagnostics=wants_kcf))
    diagnostics = solved.diagnostics
    if "eigenvalues" in expected:
        _check_eigenvalues(result, expected, solved.eigenvalues)
    if "kcf" in expected:
        result.add("kcf delta1", expected["kcf"]["delta1"], diagnostics.kcf[0])
        result.add("kcf delta2", expected["kcf"]["delta2"], diagnostics.kcf[1])
    if "same_bundle" in expected:
        result.add("same_bundle", expected["same_bundle"], diagnostics.same_bundle)
    if "coprime" in expected:
        result.add("coprime", expected["coprime"], diagnostics.coprime)
    if "common_degree" in expected:
        result.add("common_degree", expected["common_degree"], diagnostics.common_degree)

    # subspace figures refer to the unrotated Delta pencils
    if {"reducing_dims", "reducing_equal", "reducing_basis", "generic_kernel", "kernel_intersection"} & expected.keys():
        D = build_deltas(P, rng, tols)
        if "reducing_dims" in expected:
            result.add("reducing_dims", list(expected["reducing_dims"]), [D.R1.dim, D.R2.dim])
        if "reducing_equal" in expected:
            result.add("reducing_equal", expected["reducing_equal"], subspaces_equal(D.R1, D.R2, tols.subspace_tol))
        if "reducing_basis" in expected:
            target = Subspace.span(decode_matrix(expected["reducing_basis"], "reducing_basis").T)
            result.add("reducing_basis", [True, True],
                       [subspaces_equal(R, target, tols.subspace_tol) for R in (D.R1, D.R2)])
        if "generic_kernel" in expected:
            lam0 = decode_complex(expected["generic_kernel"]["lambda"])
            gker = generic_kernel(D.pencil(1), lam0, rng=rng, tols=tols)
            result.add("generic_kernel_dim", expected["generic_kernel"]["dim"], gker.dim)
        if "kernel_intersection" in expected:
            wanted = expected["kernel_intersection"]
            pencil1, pencil2 = D.pencil(1), D.pencil(2)
            first = nullspace(pencil1.at(decode_complex(wanted["lambda"])), tols.kernel_tol, tols.subspace_tol,
                              pencil1.scale)
            second = nullspace(pencil2.at(decode_complex(wanted["mu"])), tols.kernel_tol, tols.subspace_tol,
                               pencil2.scale)
            common = subspace_intersect(first, second, tols.intersection_tol)
            result.add("kernel_intersection_dims", list(wanted["dims"]), [first.dim, second.dim, common.dim])
            if "equals_generic_kernel" in wanted:
                gker = generic_kernel(pencil1, decode_complex(wanted["lambda"]), rng=rng, tols=tols)
                result.add("kernel_intersection_is_generic_kernel", wanted["equals_generic_kernel"],
                           subspaces_equal(common, gker, tols.subspace_tol))

    if "kernel_drop" in expected:
        wanted = expected["kernel_drop"]
        dims = delta_kernel_drop(P, decode_complex(wanted["lambda"]), float(wanted["eps"]), tols)
        result.add("kernel_drop", list(wanted["dims"]), list(dims))
    for entry in expected.get("rank_sum_drop", []):
        point = (decode_complex(entry["lambda"]), decode_complex(entry["mu"]))
        report = rank_sum_drop(P, point, rng, tols)
        if "drops" in entry:
            result.add(f"rank_sum_drop {_render_point(*point)}", entry["drops"], report.drops)
        if "drops_along_curves" in entry:
            result.add(f"rank_sum_drop_along_curves {_render_point(*point)}", entry["drops_along_curves"],
                       report.drops_along_curves)

    status = "passed" if result.passed else "FAILED"
    log("INFO" if result.passed else "WARN", f"Example {name} {status} ({len(result.checks)} checks)", prefix="CORPUS")
    return result


def run_all(seed: Optional[int] = None, tolerances: Optional[Tolerances] = None,
            strict: bool = True) -> list[ExampleResult]:
    results = [run_example(name, seed, tolerances) for name in list_examples()]
    diff = [line for r in results for line in r.diff()]
    if diff and strict:
        raise CorpusMismatch(diff, results)
    return results
