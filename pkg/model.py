# external module imports
from imports import dataclass, field, np, Any, Dict, List, Optional, Path
# get global state objects (CONFIG and console)
from globals import get_config
CONFIG = get_config()
# local module imports
from utils import log, load_json
from matcore import Tolerances
from pencil import MatrixPencil
from twopar import SolveResult, TwoParameterProblem

"""
File formats of the command line: problem files, pencil files and solve reports.
Complex numbers travel as [re, im] pairs, matrices as row-major nested arrays of them.
"""


# ── Complex values ──────────────────────────────────────────────────
def encode_complex(z: complex) -> list[float]:
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise ValueError(f"cannot encode non-finite value {z!r}")
    # normalise negative zero so equal values serialise identically
    return [float(z.real) + 0.0, float(z.imag) + 0.0]


def decode_complex(value: Any) -> complex:
    if isinstance(value, bool):
        raise ValueError(f"expected a number or an [re, im] pair, got {value!r}")
    if isinstance(value, (int, float)):
        z = complex(value)
    elif isinstance(value, (list, tuple)) and len(value) == 2 \
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        z = complex(value[0], value[1])
    else:
        raise ValueError(f"expected a number or an [re, im] pair, got {value!r}")
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise ValueError(f"non-finite value {value!r}")
    return z


def encode_matrix(M: np.ndarray) -> list[list[list[float]]]:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {M.shape}")
    return [[encode_complex(z) for z in row] for row in M]


def decode_matrix(rows: Any, name: str = "matrix") -> np.ndarray:
    if not isinstance(rows, list) or not all(isinstance(row, list) for row in rows):
        raise ValueError(f"{name} must be a list of rows")
    widths = {len(row) for row in rows}
    if len(widths) > 1:
        raise ValueError(f"{name} is ragged: row lengths {sorted(widths)}")
    width = widths.pop() if widths else 0
    try:
        values = [[decode_complex(z) for z in row] for row in rows]
    except ValueError as e:
        raise ValueError(f"{name}: {e}") from None
    return np.array(values, dtype=complex).reshape(len(rows), width)


def _decode_square(block: Any, index: int) -> dict[str, np.ndarray]:
    if not isinstance(block, dict):
        raise ValueError(f"W{index} must be an object with keys A, B, C")
    missing = [key for key in ("A", "B", "C") if key not in block]
    if missing:
        raise ValueError(f"W{index} is missing {', '.join(missing)}")
    matrices = {key: decode_matrix(block[key], f"W{index}.{key}") for key in ("A", "B", "C")}
    shapes = {M.shape for M in matrices.values()}
    if len(shapes) != 1:
        raise ValueError(f"W{index} matrices differ in shape: {sorted(shapes)}")
    rows, cols = shapes.pop()
    if rows != cols or rows == 0:
        raise ValueError(f"W{index} matrices must be square and nonempty, got {rows}x{cols}")
    return matrices


@dataclass(eq=False)
class ProblemFile:
    name: str
    W1: Dict[str, np.ndarray]
    W2: Dict[str, np.ndarray]
    expected: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ProblemFile':
        """
        Parse {name, W1: {A, B, C}, W2: {A, B, C}} and an optional "expected" block
        used by the example corpus.
        """
        if not isinstance(data, dict):
            raise ValueError("problem file must contain a JSON object")
        for key in ("W1", "W2"):
            if key not in data:
                raise ValueError(f"problem file is missing {key}")
        log("DEBUG", f"Parsing problem {data.get('name', '')!r}", prefix="MODEL")
        expected = data.get("expected") or {}
        if not isinstance(expected, dict):
            raise ValueError("expected must be an object")
        return cls(
            name=str(data.get("name", "")),
            W1=_decode_square(data["W1"], 1),
            W2=_decode_square(data["W2"], 2),
            expected=expected,
        )

    @classmethod
    def from_problem(cls, P: TwoParameterProblem) -> 'ProblemFile':
        return cls(
            name=P.name,
            W1={"A": P.A1, "B": P.B1, "C": P.C1},
            W2={"A": P.A2, "B": P.B2, "C": P.C2},
        )

    def to_dict(self) -> dict:
        data = {
            "name": self.name,
            "W1": {key: encode_matrix(M) for key, M in self.W1.items()},
            "W2": {key: encode_matrix(M) for key, M in self.W2.items()},
        }
        if self.expected:
            data["expected"] = self.expected
        return data

    def to_problem(self) -> TwoParameterProblem:
        return TwoParameterProblem(
            self.W1["A"], self.W1["B"], self.W1["C"],
            self.W2["A"], self.W2["B"], self.W2["C"],
            name=self.name,
        )


@dataclass(eq=False)
class PencilFile:
    name: str
    A: np.ndarray
    B: np.ndarray

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PencilFile':
        if not isinstance(data, dict) or "A" not in data or "B" not in data:
            raise ValueError("pencil file must be an object with keys A and B")
        A = decode_matrix(data["A"], "A")
        B = decode_matrix(data["B"], "B")
        if A.shape != B.shape:
            raise ValueError(f"A and B differ in shape: {A.shape} vs {B.shape}")
        return cls(str(data.get("name", "")), A, B)

    def to_dict(self) -> dict:
        return {"name": self.name, "A": encode_matrix(self.A), "B": encode_matrix(self.B)}

    def to_pencil(self) -> MatrixPencil:
        return MatrixPencil(self.A, self.B)


@dataclass
class EigenvalueRecord:
    lam: complex
    mu: complex
    on_common_factor: bool = False
    multiplicity_hint: int = 1
    residual: Optional[float] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EigenvalueRecord':
        residual = data.get("residual")
        return cls(
            lam=decode_complex(data["lambda"]),
            mu=decode_complex(data["mu"]),
            on_common_factor=bool(data.get("on_common_factor", False)),
            multiplicity_hint=int(data.get("multiplicity_hint", 1)),
            residual=None if residual is None else float(residual),
        )

    def to_dict(self) -> dict:
        return {
            "lambda": encode_complex(self.lam),
            "mu": encode_complex(self.mu),
            "on_common_factor": self.on_common_factor,
            "multiplicity_hint": self.multiplicity_hint,
            "residual": self.residual,
        }


@dataclass
class SolveReport:
    name: str
    eigenvalues: List[EigenvalueRecord] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_result(cls, name: str, result: SolveResult, tolerances: Tolerances) -> 'SolveReport':
        d = result.diagnostics
        diagnostics = {
            "nranks": list(d.nranks),
            "reducing_dims": list(d.reducing_dims),
            "reducing_equal": d.reducing_equal,
            "coprime": d.coprime,
            "common_degree": d.common_degree,
            "candidates": list(d.candidates),
            "phi": d.phi,
            "seed": d.seed,
            "tolerances": tolerances.to_dict(),
        }
        if d.kcf is not None:
            diagnostics["kcf"] = {"delta1": d.kcf[0], "delta2": d.kcf[1]}
            diagnostics["same_bundle"] = d.same_bundle
        records = [
            EigenvalueRecord(e.lam, e.mu, e.on_common_factor, e.multiplicity_hint,
                             None if e.residual is None else float(e.residual))
            for e in result.eigenvalues
        ]
        return cls(name, records, diagnostics)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SolveReport':
        return cls(
            name=str(data.get("name", "")),
            eigenvalues=[EigenvalueRecord.from_dict(e) for e in data.get("eigenvalues", [])],
            diagnostics=dict(data.get("diagnostics", {})),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "eigenvalues": [e.to_dict() for e in self.eigenvalues],
            "diagnostics": self.diagnostics,
        }


def _load(path: str | Path, parser, what: str):
    # read and parse failures are logged at ERROR inside load_json, which raises Aborting
    data = load_json(path)
    try:
        return parser(data)
    except (KeyError, TypeError, ValueError) as e:
        log("ERROR", f"Invalid {what} {path}: {e}", prefix="MODEL")


def load_problem_file(path: str | Path) -> ProblemFile:
    return _load(path, ProblemFile.from_dict, "problem file")


def load_pencil_file(path: str | Path) -> PencilFile:
    return _load(path, PencilFile.from_dict, "pencil file")
