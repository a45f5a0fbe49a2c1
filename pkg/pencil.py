# external module imports
from imports import dataclass, Enum, field, np, la, re, Any, Iterable, Optional, Sequence
# get global state objects (CONFIG and console)
from globals import get_config
CONFIG = get_config()
# local module imports
from utils import log
from matcore import (
    Subspace,
    ToleranceAmbiguity,
    Tolerances,
    as_matrix,
    contains_subspace,
    default_tolerances,
    make_rng,
    matrix_scale,
    nullity_tol,
    nullspace,
    random_complex,
    random_orthonormal,
    rank_tol,
    subspace_union,
    well_conditioned,
)
from strat import RegularBundle, Segre

"""
Analysis of a single matrix pencil A - lambda*B: normal rank, minimal bases,
generic kernels, the minimal reducing subspace, eigenvalues, the Kronecker
canonical structure and Kronecker chains.
"""


class BlockKind(Enum):
    J = "J"
    N = "N"
    L = "L"
    LT = "LT"


@dataclass(frozen=True)
class KroneckerBlock:
    kind: BlockKind
    size: int
    eigenvalue: Optional[complex] = None

    def __post_init__(self):
        if self.kind is BlockKind.J:
            if self.eigenvalue is None or not np.isfinite(self.eigenvalue):
                raise ValueError("J blocks need a finite eigenvalue")
            object.__setattr__(self, "eigenvalue", complex(self.eigenvalue))
        elif self.eigenvalue is not None:
            raise ValueError(f"{self.kind.value} blocks carry no eigenvalue")
        minimum = 1 if self.kind in (BlockKind.J, BlockKind.N) else 0
        if int(self.size) != self.size or self.size < minimum:
            raise ValueError(f"{self.kind.value} block size must be an integer >= {minimum}, got {self.size}")

    @property
    def rows(self) -> int:
        return self.size + 1 if self.kind is BlockKind.LT else self.size

    @property
    def cols(self) -> int:
        return self.size + 1 if self.kind is BlockKind.L else self.size

    @property
    def chain_length(self) -> int:
        return self.cols

    @property
    def is_regular(self) -> bool:
        return self.kind in (BlockKind.J, BlockKind.N)

    def token(self, digits: int = 8) -> str:
        if self.kind is BlockKind.J:
            return f"J{self.size}({format_complex(self.eigenvalue, digits)})"
        if self.kind is BlockKind.LT:
            return f"L{self.size}T"
        return f"{self.kind.value}{self.size}"


@dataclass(frozen=True, eq=False)
class MatrixPencil:
    """The pencil A - lambda*B."""
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        if A.shape != B.shape:
            raise ValueError(f"Pencil matrices differ in shape: {A.shape} vs {B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    @property
    def is_square(self) -> bool:
        return self.A.shape[0] == self.A.shape[1]

    @property
    def scale(self) -> float:
        return matrix_scale(self.A, self.B)

    def at(self, lam: complex) -> np.ndarray:
        return self.A - lam * self.B

    def transpose(self) -> "MatrixPencil":
        return MatrixPencil(self.A.T, self.B.T)

    def reversed(self) -> "MatrixPencil":
        """B - mu*A, whose eigenvalue 0 carries the infinite structure."""
        return MatrixPencil(self.B, self.A)


@dataclass
class MinimalBasisVector:
    degree: int
    coefficients: list[np.ndarray]

    def evaluate(self, lam: complex) -> np.ndarray:
        return sum((lam ** k) * p for k, p in enumerate(self.coefficients))

    def residual(self, P: MatrixPencil) -> float:
        """Largest coefficient residual of A p0 = 0, A p(i+1) = B p(i), B pd = 0, relative to the pencil scale."""
        p = self.coefficients
        terms = [P.A @ p[0], P.B @ p[-1]]
        terms += [P.A @ p[i + 1] - P.B @ p[i] for i in range(self.degree)]
        return max(float(la.norm(t)) for t in terms) / P.scale


@dataclass
class RegularEigenvalue:
    value: complex
    geometric_excess: int
    algebraic_multiplicity: int = 1


@dataclass(frozen=True)
class KroneckerStructure:
    blocks: tuple[KroneckerBlock, ...]
    m: int
    n: int

    @classmethod
    def from_blocks(cls, blocks: Iterable[KroneckerBlock]) -> "KroneckerStructure":
        blocks = tuple(sorted(blocks, key=_block_sort_key))
        return cls(blocks, sum(b.rows for b in blocks), sum(b.cols for b in blocks))

    @property
    def right_indices(self) -> list[int]:
        return sorted(b.size for b in self.blocks if b.kind is BlockKind.L)

    @property
    def left_indices(self) -> list[int]:
        return sorted(b.size for b in self.blocks if b.kind is BlockKind.LT)

    @property
    def infinite_segre(self) -> list[int]:
        return sorted((b.size for b in self.blocks if b.kind is BlockKind.N), reverse=True)

    @property
    def is_regular(self) -> bool:
        return all(b.is_regular for b in self.blocks)

    def eigen_segres(self, rtol: float = 1e-6) -> list[tuple[complex, list[int]]]:
        """Distinct finite eigenvalues with their Segre characteristics."""
        groups: list[tuple[complex, list[int]]] = []
        for block in self.blocks:
            if block.kind is not BlockKind.J:
                continue
            for alpha, sizes in groups:
                if abs(alpha - block.eigenvalue) <= rtol * max(1.0, abs(alpha)):
                    sizes.append(block.size)
                    break
            else:
                groups.append((block.eigenvalue, [block.size]))
        return [(alpha, sorted(sizes, reverse=True)) for alpha, sizes in groups]

    def matches(self, other: "KroneckerStructure", rtol: float = 1e-6) -> bool:
        """Same block multiset, eigenvalues compared within rtol."""
        if (self.m, self.n) != (other.m, other.n):
            return False
        if (self.right_indices, self.left_indices, self.infinite_segre) != \
                (other.right_indices, other.left_indices, other.infinite_segre):
            return False
        mine = self.eigen_segres(rtol)
        theirs = other.eigen_segres(rtol)
        if len(mine) != len(theirs):
            return False
        unmatched = list(theirs)
        for alpha, sizes in mine:
            for index, (beta, other_sizes) in enumerate(unmatched):
                if abs(alpha - beta) <= rtol * max(1.0, abs(alpha)) and sizes == other_sizes:
                    del unmatched[index]
                    break
            else:
                return False
        return True

    def render(self, digits: Optional[int] = None) -> str:
        return render_structure(self, digits)


@dataclass
class KroneckerChain:
    block: KroneckerBlock
    vectors: list[np.ndarray]

    def residual(self, P: MatrixPencil) -> float:
        """Largest recurrence residual relative to pencil scale and chain size."""
        A, B, u = P.A, P.B, self.vectors
        kind = self.block.kind
        terms: list[np.ndarray] = []
        if kind is BlockKind.J:
            shifted = P.at(self.block.eigenvalue)
            terms.append(shifted @ u[0])
            terms += [shifted @ u[i] - B @ u[i - 1] for i in range(1, len(u))]
        elif kind in (BlockKind.N, BlockKind.L):
            terms.append(B @ u[0])
            terms += [B @ u[i + 1] - A @ u[i] for i in range(len(u) - 1)]
            if kind is BlockKind.L:
                terms.append(A @ u[-1])
        else:
            terms += [B @ u[i] - A @ u[i + 1] for i in range(len(u) - 1)]
        if not terms:
            return 0.0
        size = max(float(la.norm(v)) for v in u)
        return max(float(la.norm(t)) for t in terms) / (P.scale * max(size, np.finfo(float).tiny))


@dataclass
class EigenvalueEquivalenceReport:
    """The four equivalent characterisations of an eigenvalue of a square pencil."""
    point: complex
    rank_drop: bool
    generic_kernel_smaller: bool
    kernel_outside_generic_kernel: bool
    kernel_outside_reducing_subspace: bool
    kernel_dim: int = 0
    generic_kernel_dim: int = 0

    @property
    def verdicts(self) -> list[bool]:
        return [self.rank_drop, self.generic_kernel_smaller,
                self.kernel_outside_generic_kernel, self.kernel_outside_reducing_subspace]

    @property
    def consistent(self) -> bool:
        return len(set(self.verdicts)) == 1

    @property
    def is_eigenvalue(self) -> bool:
        return self.consistent and self.rank_drop


@dataclass(frozen=True)
class PencilBundle:
    """Block structure with eigenvalue values abstracted away."""
    right_indices: tuple[int, ...]
    left_indices: tuple[int, ...]
    regular: RegularBundle = field(default_factory=RegularBundle)

    def render(self) -> str:
        right = ",".join(str(d) for d in self.right_indices)
        left = ",".join(str(d) for d in self.left_indices)
        return f"L:[{right}] LT:[{left}] {self.regular.render()}"


# ── Structure strings ──────────────────────────────────────────────
_TOKEN_RE = re.compile(r"^(?:(\d+)\*)?(?:L(\d+)(T?)|N(\d+)|J(\d+)\((.+)\))$")


def _rounded(z: complex, digits: int) -> tuple[float, float]:
    re_part = round(z.real, digits) + 0.0
    im_part = round(z.imag, digits) + 0.0
    return re_part, im_part


def _format_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def format_complex(z: complex, digits: int = 8) -> str:
    """Shortest decimal rendering; '2', '-0.5', '1+2i', '0-1i'."""
    re_part, im_part = _rounded(complex(z), digits)
    if im_part == 0.0:
        return _format_real(re_part)
    sign = "+" if im_part > 0 else "-"
    return f"{_format_real(re_part)}{sign}{_format_real(abs(im_part))}i"


def parse_complex(text: str) -> complex:
    try:
        value = complex(text.strip().replace("i", "j"))
    except ValueError:
        raise ValueError(f"Invalid complex value {text!r}") from None
    if not np.isfinite(value):
        raise ValueError(f"Non-finite complex value {text!r}")
    return value


def _block_sort_key(block: KroneckerBlock, digits: int = 8) -> tuple:
    kind_order = {BlockKind.L: 0, BlockKind.LT: 1, BlockKind.J: 2, BlockKind.N: 3}
    if block.kind is BlockKind.J:
        re_part, im_part = _rounded(block.eigenvalue, digits)
        return kind_order[block.kind], -re_part, -im_part, -block.size
    if block.kind is BlockKind.N:
        return kind_order[block.kind], 0.0, 0.0, -block.size
    return kind_order[block.kind], 0.0, 0.0, block.size


def render_structure(S: KroneckerStructure, digits: Optional[int] = None) -> str:
    """
    Render as e.g. "L0+L0T+J1(1)+J1(0)+N1": right blocks ascending, left blocks ascending,
    Jordan blocks grouped by eigenvalue (real part, then imaginary part, descending), infinite blocks descending.
    Repeated blocks get a "k*" prefix.
    """
    if digits is None:
        digits = default_tolerances().kcf_render_digits
    tokens = [b.token(digits) for b in sorted(S.blocks, key=lambda b: _block_sort_key(b, digits))]
    grouped: list[list[Any]] = []
    for token in tokens:
        if grouped and grouped[-1][0] == token:
            grouped[-1][1] += 1
        else:
            grouped.append([token, 1])
    return "+".join(token if count == 1 else f"{count}*{token}" for token, count in grouped)


def _split_top_level(text: str) -> list[str]:
    parts, depth, current = [], 0, []
    for char in text:
        if char == "(":
            depth += 1
        elif char == ")":
            depth -= 1
            if depth < 0:
                raise ValueError(f"Unbalanced parentheses in {text!r}")
        if char == "+" and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(char)
    if depth != 0:
        raise ValueError(f"Unbalanced parentheses in {text!r}")
    parts.append("".join(current))
    return parts


def parse_structure(text: str) -> KroneckerStructure:
    text = "".join(text.split())
    if text == "":
        return KroneckerStructure.from_blocks([])
    blocks: list[KroneckerBlock] = []
    for token in _split_top_level(text):
        match = _TOKEN_RE.match(token)
        if not match:
            raise ValueError(f"Invalid Kronecker block token {token!r}")
        count = int(match.group(1)) if match.group(1) else 1
        if count < 1:
            raise ValueError(f"Block multiplicity must be positive in {token!r}")
        if match.group(2) is not None:
            kind = BlockKind.LT if match.group(3) else BlockKind.L
            block = KroneckerBlock(kind, int(match.group(2)))
        elif match.group(4) is not None:
            block = KroneckerBlock(BlockKind.N, int(match.group(4)))
        else:
            block = KroneckerBlock(BlockKind.J, int(match.group(5)), parse_complex(match.group(6)))
        blocks.extend([block] * count)
    return KroneckerStructure.from_blocks(blocks)


def bundle_of(S: KroneckerStructure, rtol: float = 1e-6) -> PencilBundle:
    regular = RegularBundle.of(
        [Segre.from_sizes(sizes) for _, sizes in S.eigen_segres(rtol)],
        Segre.from_sizes(S.infinite_segre),
    )
    return PencilBundle(tuple(S.right_indices), tuple(S.left_indices), regular)


# ── Normal rank and minimal bases ──────────────────────────────────
def _resolve(rng: Optional[np.random.Generator], tols: Optional[Tolerances]):
    if rng is None:
        rng = make_rng(CONFIG.get("default_seed", 1729))
    if tols is None:
        tols = default_tolerances()
    return rng, tols


def normal_rank(P: MatrixPencil, rng: Optional[np.random.Generator] = None,
                tols: Optional[Tolerances] = None) -> int:
    """Rank of A - xi*B at random xi; two rounds of samples must agree on one value."""
    rng, tols = _resolve(rng, tols)
    if 0 in P.shape:
        return 0
    seen: list[int] = []
    for attempt in range(2):
        ranks = [rank_tol(P.at(xi), tols.rank_tol) for xi in random_complex(rng, tols.normal_rank_samples)]
        seen += ranks
        if len(set(ranks)) == 1:
            log("DEBUG", f"normal rank {ranks[0]} of {P.shape[0]}x{P.shape[1]} pencil", prefix="PENCIL")
            return ranks[0]
        log("WARN", f"normal rank samples disagree ({ranks}), resampling", prefix="PENCIL")
    raise ToleranceAmbiguity(f"normal rank samples disagree: {seen}", partial=seen)


def _toeplitz(A: np.ndarray, B: np.ndarray, d: int) -> np.ndarray:
    """Stacked coefficient operator: rows A p0, A pi - B p(i-1), -B pd."""
    m, n = A.shape
    T = np.zeros(((d + 2) * m, (d + 1) * n), dtype=complex)
    for i in range(d + 1):
        T[i * m:(i + 1) * m, i * n:(i + 1) * n] = A
        T[(i + 1) * m:(i + 2) * m, i * n:(i + 1) * n] = -B
    return T


def _minimal_indices(P: MatrixPencil, s: int, tols: Tolerances) -> list[int]:
    """Right minimal indices from the nullity growth of the stacked coefficient operators."""
    n = P.shape[1]
    if s == 0:
        return []
    indices: list[int] = []
    previous_nullity, previous_count = 0, 0
    for d in range(n + 1):
        nullity = nullity_tol(_toeplitz(P.A, P.B, d), tols.rank_tol)
        count = nullity - previous_nullity
        new = count - previous_count
        if new < 0 or count > s:
            break
        indices += [d] * new
        if count == s:
            log("DEBUG", f"minimal indices {indices}", prefix="PENCIL")
            return indices
        previous_nullity, previous_count = nullity, count
    raise ToleranceAmbiguity(f"minimal index sequence inconsistent with {s} singular directions",
                             partial=indices)


def _shifted(vector: MinimalBasisVector, shift: int, degree: int) -> np.ndarray:
    n = vector.coefficients[0].shape[0]
    stack = np.zeros((degree + 1) * n, dtype=complex)
    for k, p in enumerate(vector.coefficients):
        stack[(k + shift) * n:(k + shift + 1) * n] = p
    return stack


def minimal_basis(P: MatrixPencil, rng: Optional[np.random.Generator] = None,
                  tols: Optional[Tolerances] = None) -> list[MinimalBasisVector]:
    """
    Minimal polynomial basis of the right kernel, degrees nondecreasing.
    Degree-d vectors are the kernel directions of the degree-d coefficient operator
    that are not spanned by shifts of the lower-degree vectors.
    """
    rng, tols = _resolve(rng, tols)
    n = P.shape[1]
    s = n - normal_rank(P, rng, tols)
    indices = _minimal_indices(P, s, tols)
    basis: list[MinimalBasisVector] = []
    for d in sorted(set(indices)):
        wanted = indices.count(d)
        K = nullspace(_toeplitz(P.A, P.B, d), tols.rank_tol).basis
        shifts = [_shifted(v, j, d) for v in basis for j in range(d - v.degree + 1)]
        if shifts:
            K = Subspace.span(shifts, rcond=tols.kernel_tol).complement_component(K)
        if K.shape[1] < wanted:
            raise ToleranceAmbiguity(f"kernel too small for {wanted} minimal basis vectors of degree {d}")
        U, sigma, _ = la.svd(K, full_matrices=False)
        if sigma.size < wanted or sigma[wanted - 1] <= tols.subspace_tol:
            raise ToleranceAmbiguity(f"could not isolate {wanted} new minimal basis vectors of degree {d}")
        for column in U[:, :wanted].T:
            column = column / la.norm(column)
            basis.append(MinimalBasisVector(d, [column[k * n:(k + 1) * n].copy() for k in range(d + 1)]))
    return basis


def left_minimal_indices(P: MatrixPencil, rng: Optional[np.random.Generator] = None,
                         tols: Optional[Tolerances] = None) -> list[int]:
    rng, tols = _resolve(rng, tols)
    transposed = P.transpose()
    s = transposed.shape[1] - normal_rank(transposed, rng, tols)
    return _minimal_indices(transposed, s, tols)


def generic_kernel(P: MatrixPencil, lam0: complex, basis: Optional[list[MinimalBasisVector]] = None,
                   rng: Optional[np.random.Generator] = None, tols: Optional[Tolerances] = None) -> Subspace:
    rng, tols = _resolve(rng, tols)
    if basis is None:
        basis = minimal_basis(P, rng, tols)
    return Subspace.span([v.evaluate(lam0) for v in basis], ambient_dim=P.shape[1],
                         tol=tols.subspace_tol, rcond=tols.kernel_tol)


def minimal_reducing(P: MatrixPencil, rng: Optional[np.random.Generator] = None,
                     tols: Optional[Tolerances] = None,
                     basis: Optional[list[MinimalBasisVector]] = None) -> Subspace:
    """
    Span of all minimal basis coefficients, cross-checked against the union of
    kernels of A - xi*B at random xi (kernel and generic kernel agree off the spectrum).
    """
    rng, tols = _resolve(rng, tols)
    if basis is None:
        basis = minimal_basis(P, rng, tols)
    n = P.shape[1]
    if not basis:
        return Subspace.zero(n, tols.subspace_tol)
    reducing = Subspace.span([p for v in basis for p in v.coefficients], ambient_dim=n,
                             tol=tols.subspace_tol, rcond=tols.kernel_tol)
    samples = max(v.degree for v in basis) + 2
    kernels = [nullspace(P.at(xi), tols.rank_tol, tols.subspace_tol) for xi in random_complex(rng, samples)]
    union = subspace_union(kernels, tol=tols.kernel_tol)
    if union.dim != reducing.dim:
        raise ToleranceAmbiguity(
            f"reducing subspace dimension {reducing.dim} from coefficients, {union.dim} from kernel union",
            partial=reducing)
    log("DEBUG", f"minimal reducing subspace of dimension {reducing.dim}", prefix="PENCIL")
    return reducing


# ── Eigenvalues ─────────────────────────────────────────────────────
def _clusters(values: Sequence[complex], merge_rtol: float) -> list[tuple[complex, list[complex]]]:
    """Single-linkage clusters, each replaced by its mean, members kept."""
    values = list(values)
    labels = list(range(len(values)))

    def root(i: int) -> int:
        while labels[i] != i:
            labels[i] = labels[labels[i]]
            i = labels[i]
        return i

    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if abs(values[i] - values[j]) <= merge_rtol * max(1.0, abs(values[i])):
                labels[root(j)] = root(i)
    members: dict[int, list[complex]] = {}
    for i, value in enumerate(values):
        members.setdefault(root(i), []).append(value)
    return [(complex(np.mean(group)), group) for group in members.values()]


def _projected_run(P: MatrixPencil, r: int, rng: np.random.Generator,
                   tols: Tolerances) -> list[tuple[complex, list[complex]]]:
    m, n = P.shape
    for attempt in range(tols.projection_retries):
        U = random_orthonormal(rng, m, r)
        V = random_orthonormal(rng, n, r)
        A = U.conj().T @ P.A @ V
        B = U.conj().T @ P.B @ V
        xi = random_complex(rng, 1)[0]
        if rank_tol(A - xi * B, tols.rank_tol) == r:
            break
        log("WARN", "projected pencil is singular, drawing new projectors", prefix="PENCIL")
    else:
        raise ToleranceAmbiguity("projected pencil stayed singular after all retries")
    alpha, beta = la.eigvals(A, B, homogeneous_eigvals=True)
    scale_A, scale_B = matrix_scale(A), matrix_scale(B)
    alpha = alpha / scale_A
    beta = beta / scale_B
    finite = []
    for a, b in zip(alpha, beta):
        size = np.hypot(abs(a), abs(b))
        if size == 0.0 or abs(b) <= tols.infinite_rtol * size:
            continue
        finite.append(complex(a / b) * scale_A / scale_B)
    return _clusters(finite, tols.cluster_merge_rtol)


def _match_runs(first: list[tuple[complex, list[complex]]], second: list[tuple[complex, list[complex]]],
                tols: Tolerances) -> Optional[list[tuple[complex, list[complex]]]]:
    """Clusters present in both runs; None when a near miss makes the comparison unreliable."""
    matched = []
    for value, members in first:
        radius = max(1.0, abs(value))
        close = [(other, other_members) for other, other_members in second
                 if abs(other - value) <= tols.cluster_merge_rtol * radius]
        hits = [(other, other_members) for other, other_members in close
                if abs(other - value) <= tols.cluster_rtol * radius]
        if hits and len(hits[0][1]) == len(members) and len(close) == 1:
            matched.append(((value + hits[0][0]) / 2, members))
        elif close:
            return None
    return matched


def _regular_eigenvalues(P: MatrixPencil, rng: np.random.Generator, tols: Tolerances) -> list[RegularEigenvalue]:
    """Finite eigenvalues of a pencil of any shape by two independent projections."""
    r = normal_rank(P, rng, tols)
    if r == 0:
        return []
    n = P.shape[1]
    for attempt in range(tols.projection_retries):
        matched = _match_runs(_projected_run(P, r, rng, tols), _projected_run(P, r, rng, tols), tols)
        if matched is not None:
            break
        log("WARN", "projected eigenvalues nearly coincide across runs, resampling", prefix="PENCIL")
    else:
        raise ToleranceAmbiguity("projected eigenvalues could not be separated from spurious ones")
    eigenvalues = []
    for value, members in matched:
        excess = nullity_tol(P.at(value), tols.kernel_tol, P.scale) - (n - r)
        if excess >= 1:
            eigenvalues.append(RegularEigenvalue(value, excess, len(members)))
        elif len(members) > 1:
            # close but distinct simple eigenvalues merged into one cluster
            for member in members:
                member_excess = nullity_tol(P.at(member), tols.kernel_tol, P.scale) - (n - r)
                if member_excess >= 1:
                    eigenvalues.append(RegularEigenvalue(member, member_excess, 1))
        else:
            log("DEBUG", f"dropping candidate {value:.6g}: no rank drop", prefix="PENCIL")
    eigenvalues.sort(key=lambda e: (round(e.value.real, 8), round(e.value.imag, 8)))
    log("DEBUG", f"eigenvalues {[format_complex(e.value) for e in eigenvalues]}", prefix="PENCIL")
    return eigenvalues


def eigenvalues_regular(P: MatrixPencil, rng: Optional[np.random.Generator] = None,
                        tols: Optional[Tolerances] = None) -> list[RegularEigenvalue]:
    if not P.is_square:
        raise ValueError(f"eigenvalues_regular needs a square pencil, got {P.shape}")
    rng, tols = _resolve(rng, tols)
    return _regular_eigenvalues(P, rng, tols)


# ── Kronecker structure ─────────────────────────────────────────────
def _chain_operator(A: np.ndarray, B: np.ndarray, alpha: complex, k: int) -> np.ndarray:
    """Block rows (A - alpha B) u1 and (A - alpha B) ui - B u(i-1)."""
    m, n = A.shape
    shifted = A - alpha * B
    M = np.zeros((k * m, k * n), dtype=complex)
    for i in range(k):
        M[i * m:(i + 1) * m, i * n:(i + 1) * n] = shifted
        if i:
            M[i * m:(i + 1) * m, (i - 1) * n:i * n] = -B
    return M


def _segre_at(A: np.ndarray, B: np.ndarray, alpha: complex, s: int, tols: Tolerances) -> list[int]:
    """
    Sizes of the Jordan blocks at alpha. Every right singular block adds one
    solution per chain level, so blocks of size >= k number nu_k - nu_(k-1) - s.
    """
    n = A.shape[1]
    scale = matrix_scale(A, B)
    at_least: list[int] = []
    previous = 0
    for k in range(1, n + 1):
        nu = nullity_tol(_chain_operator(A, B, alpha, k), tols.kernel_tol, scale)
        count = nu - previous - s
        previous = nu
        if count <= 0:
            break
        at_least.append(count)
    sizes: list[int] = []
    for k, count in enumerate(at_least, start=1):
        following = at_least[k] if k < len(at_least) else 0
        sizes += [k] * (count - following)
    return sorted(sizes, reverse=True)


def _tiles(blocks: list[KroneckerBlock], m: int, n: int) -> bool:
    return sum(b.rows for b in blocks) == m and sum(b.cols for b in blocks) == n


def kcf_structure(P: MatrixPencil, rng: Optional[np.random.Generator] = None,
                  tols: Optional[Tolerances] = None) -> KroneckerStructure:
    rng, tols = _resolve(rng, tols)
    m, n = P.shape
    s = n - normal_rank(P, rng, tols)
    right = _minimal_indices(P, s, tols)
    left = left_minimal_indices(P, rng, tols)
    blocks = [KroneckerBlock(BlockKind.L, d) for d in right]
    blocks += [KroneckerBlock(BlockKind.LT, d) for d in left]
    blocks += [KroneckerBlock(BlockKind.N, d) for d in _segre_at(P.B, P.A, 0.0, s, tols)]
    partial = KroneckerStructure.from_blocks(blocks)
    for attempt in range(tols.projection_retries):
        finite: list[KroneckerBlock] = []
        consistent = True
        for eigenvalue in _regular_eigenvalues(P, rng, tols):
            sizes = _segre_at(P.A, P.B, eigenvalue.value, s, tols)
            if sum(sizes) != eigenvalue.algebraic_multiplicity:
                log("WARN", f"Segre characteristic {sizes} at {format_complex(eigenvalue.value)} "
                            f"disagrees with multiplicity {eigenvalue.algebraic_multiplicity}", prefix="PENCIL")
                consistent = False
            finite += [KroneckerBlock(BlockKind.J, d, eigenvalue.value) for d in sizes]
        if consistent and _tiles(blocks + finite, m, n):
            structure = KroneckerStructure.from_blocks(blocks + finite)
            log("DEBUG", f"KCF {render_structure(structure)}", prefix="PENCIL")
            return structure
        partial = KroneckerStructure.from_blocks(blocks + finite)
        log("WARN", f"block sizes {render_structure(partial)} do not tile {m}x{n}, retrying", prefix="PENCIL")
    raise ToleranceAmbiguity(f"Kronecker blocks do not tile the {m}x{n} pencil", partial=partial)


# ── Kronecker chains ────────────────────────────────────────────────
def _split(stack: np.ndarray, n: int) -> list[np.ndarray]:
    return [stack[k * n:(k + 1) * n].copy() for k in range(stack.shape[0] // n)]


def _jordan_chains(A: np.ndarray, B: np.ndarray, alpha: complex, sizes: list[int],
                   reducing: np.ndarray, tols: Tolerances) -> list[list[np.ndarray]]:
    """
    Chains u1..ud with (A - alpha B) u1 = 0 and (A - alpha B) ui = B u(i-1), longest first.
    Each top vector is kept away from shorter chain heights, the reducing subspace,
    the same level of longer chains and the tops already chosen.
    """
    n = A.shape[1]
    scale = matrix_scale(A, B)
    kernels: dict[int, np.ndarray] = {}

    def kernel(k: int) -> np.ndarray:
        if k not in kernels:
            kernels[k] = nullspace(_chain_operator(A, B, alpha, k), tols.kernel_tol, scale=scale).basis
        return kernels[k]

    chains: list[list[np.ndarray]] = []
    for d in sorted(set(sizes), reverse=True):
        K = kernel(d)
        tops = K[(d - 1) * n:, :]
        forbidden = [reducing] if reducing.shape[1] else []
        if d > 1:
            forbidden.append(kernel(d - 1)[(d - 2) * n:, :])
        forbidden += [chain[d - 1][:, None] for chain in chains]
        for _ in range(sizes.count(d)):
            residual = tops
            stacked = np.hstack(forbidden) if forbidden else np.zeros((n, 0))
            if stacked.shape[1]:
                residual = Subspace.span(stacked, rcond=tols.kernel_tol).complement_component(tops)
            if residual.shape[1] == 0:
                raise ToleranceAmbiguity(f"no Jordan chain of length {d} left at {format_complex(alpha)}")
            _, sigma, Wh = la.svd(residual, full_matrices=False)
            if sigma[0] <= tols.subspace_tol:
                raise ToleranceAmbiguity(f"no Jordan chain of length {d} left at {format_complex(alpha)}")
            chain = _split(K @ Wh[0].conj(), n)
            chains.append(chain)
            forbidden.append(chain[-1][:, None])
    return chains


def _left_chain(A: np.ndarray, B: np.ndarray, eta: int, current: np.ndarray,
                rng: np.random.Generator, tols: Tolerances) -> list[np.ndarray]:
    """Chain u1..u_eta with B ui = A u(i+1), independent of the vectors chosen so far."""
    m, n = A.shape
    Q = np.zeros(((eta - 1) * m, eta * n), dtype=complex)
    for i in range(eta - 1):
        Q[i * m:(i + 1) * m, i * n:(i + 1) * n] = B
        Q[i * m:(i + 1) * m, (i + 1) * n:(i + 2) * n] = -A
    K = nullspace(Q, tols.kernel_tol).basis
    base_rank = rank_tol(current, tols.kernel_tol) if current.shape[1] else 0
    for attempt in range(5):
        stack = K @ random_complex(rng, K.shape[1])
        chain = _split(stack / la.norm(stack), n)
        candidate = np.hstack([current] + [u[:, None] for u in chain])
        if rank_tol(candidate, tols.kernel_tol) == base_rank + eta:
            return chain
    raise ToleranceAmbiguity(f"no independent L{eta}T chain found")


def kronecker_chains(P: MatrixPencil, S: KroneckerStructure, rng: Optional[np.random.Generator] = None,
                     tols: Optional[Tolerances] = None) -> list[KroneckerChain]:
    rng, tols = _resolve(rng, tols)
    if (S.m, S.n) != P.shape:
        raise ValueError(f"structure tiles {S.m}x{S.n}, pencil is {P.shape[0]}x{P.shape[1]}")
    m, n = P.shape
    basis = minimal_basis(P, rng, tols)
    if [v.degree for v in basis] != S.right_indices:
        raise ValueError(f"structure right indices {S.right_indices} do not match the pencil")
    chains = [KroneckerChain(KroneckerBlock(BlockKind.L, v.degree), list(reversed(v.coefficients)))
              for v in basis]
    reducing = np.column_stack([p for v in basis for p in v.coefficients]) if basis else np.zeros((n, 0))

    for alpha, sizes in S.eigen_segres(tols.cluster_rtol):
        for vectors in _jordan_chains(P.A, P.B, alpha, sizes, reducing, tols):
            chains.append(KroneckerChain(KroneckerBlock(BlockKind.J, len(vectors), alpha), vectors))
    if S.infinite_segre:
        for vectors in _jordan_chains(P.B, P.A, 0.0, S.infinite_segre, reducing, tols):
            chains.append(KroneckerChain(KroneckerBlock(BlockKind.N, len(vectors)), vectors))

    current = np.column_stack([u for chain in chains for u in chain.vectors]) if chains else np.zeros((n, 0))
    for eta in sorted((d for d in S.left_indices if d > 0), reverse=True):
        vectors = _left_chain(P.A, P.B, eta, current, rng, tols)
        chains.append(KroneckerChain(KroneckerBlock(BlockKind.LT, eta), vectors))
        current = np.hstack([current] + [u[:, None] for u in vectors])
    chains += [KroneckerChain(KroneckerBlock(BlockKind.LT, 0), []) for d in S.left_indices if d == 0]

    for chain in chains:
        residual = chain.residual(P)
        if residual > tols.chain_residual_tol:
            raise ToleranceAmbiguity(f"chain {chain.block.token()} has residual {residual:.2e}")
    if current.shape[1] != n or rank_tol(current, tols.kernel_tol) != n:
        raise ToleranceAmbiguity(f"chain vectors do not form a basis of the {n}-dimensional column space")
    log("DEBUG", f"{len(chains)} Kronecker chains for a {m}x{n} pencil", prefix="PENCIL")
    return sorted(chains, key=lambda chain: _block_sort_key(chain.block))


# ── Synthesis and diagnostics ───────────────────────────────────────
def canonical_block(block: KroneckerBlock) -> tuple[np.ndarray, np.ndarray]:
    d = block.size
    if block.kind is BlockKind.J:
        return block.eigenvalue * np.eye(d) + np.eye(d, k=1), np.eye(d)
    if block.kind is BlockKind.N:
        return np.eye(d), np.eye(d, k=1)
    if block.kind is BlockKind.L:
        return np.eye(d, d + 1, k=1), np.eye(d, d + 1)
    return np.eye(d + 1, d, k=-1), np.eye(d + 1, d)


def canonical_pencil(S: KroneckerStructure) -> MatrixPencil:
    A = np.zeros((S.m, S.n), dtype=complex)
    B = np.zeros((S.m, S.n), dtype=complex)
    row = col = 0
    for block in S.blocks:
        block_A, block_B = canonical_block(block)
        A[row:row + block.rows, col:col + block.cols] = block_A
        B[row:row + block.rows, col:col + block.cols] = block_B
        row += block.rows
        col += block.cols
    return MatrixPencil(A, B)


def synth_pencil(S: KroneckerStructure, rng: Optional[np.random.Generator] = None) -> MatrixPencil:
    """Canonical pencil of S under a random strict equivalence with condition number at most 100."""
    rng, _ = _resolve(rng, None)
    canonical = canonical_pencil(S)
    left = well_conditioned(rng, S.m)
    right = well_conditioned(rng, S.n)
    return MatrixPencil(left @ canonical.A @ right, left @ canonical.B @ right)


def is_eigenvalue_equiv(P: MatrixPencil, lam0: complex, rng: Optional[np.random.Generator] = None,
                        tols: Optional[Tolerances] = None) -> EigenvalueEquivalenceReport:
    if not P.is_square:
        raise ValueError(f"is_eigenvalue_equiv needs a square pencil, got {P.shape}")
    rng, tols = _resolve(rng, tols)
    basis = minimal_basis(P, rng, tols)
    n = P.shape[1]
    nrank = n - len(basis)
    shifted = P.at(lam0)
    kernel = nullspace(shifted, tols.kernel_tol, tols.subspace_tol, P.scale)
    gker = generic_kernel(P, lam0, basis, rng, tols)
    reducing = minimal_reducing(P, rng, tols, basis)
    report = EigenvalueEquivalenceReport(
        point=complex(lam0),
        rank_drop=rank_tol(shifted, tols.kernel_tol, P.scale) < nrank,
        generic_kernel_smaller=gker.dim < kernel.dim,
        kernel_outside_generic_kernel=not contains_subspace(gker, kernel),
        kernel_outside_reducing_subspace=not contains_subspace(reducing, kernel),
        kernel_dim=kernel.dim,
        generic_kernel_dim=gker.dim,
    )
    if not report.consistent:
        log("WARN", f"eigenvalue characterisations disagree at {format_complex(lam0)}: {report.verdicts}",
            prefix="PENCIL")
    return report


def perturbed_nullity(P: MatrixPencil, lam0: complex, eps: float,
                      tols: Optional[Tolerances] = None) -> tuple[int, int]:
    """Kernel dimension at lam0 and at lam0 + eps, both at the rank tolerance."""
    _, tols = _resolve(None, tols)
    return (nullity_tol(P.at(lam0), tols.rank_tol, P.scale),
            nullity_tol(P.at(lam0 + eps), tols.rank_tol, P.scale))
