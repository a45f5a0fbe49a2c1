# external module imports
from imports import dataclass, field, np, Optional
# get global state objects (CONFIG and console)
from globals import get_config
CONFIG = get_config()
# local module imports
from utils import log
from matcore import Subspace, Tolerances, default_tolerances, kron, make_rng, nullity_tol, nullspace
from pencil import (
    BlockKind,
    KroneckerBlock,
    KroneckerChain,
    KroneckerStructure,
    MatrixPencil,
    kcf_structure,
    kronecker_chains,
)
from strat import Segre, t_alpha


@dataclass
class PairContribution:
    """
    A pair of blocks (one from each pencil) that contributes to the tensor kernel.
    dim is only known for Jordan/Jordan and infinite/infinite pairs.
    """
    left_block: KroneckerBlock
    right_block: KroneckerBlock
    pair_type: str
    dim: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "left": self.left_block.token(),
            "right": self.right_block.token(),
            "type": self.pair_type,
            "dim": self.dim,
        }


@dataclass
class TensorKernelReport:
    total_dim: int
    contributions: list[PairContribution] = field(default_factory=list)
    basis: Optional[Subspace] = None

    @property
    def structural_dim(self) -> Optional[int]:
        dims = [c.dim for c in self.contributions]
        if any(d is None for d in dims):
            return None
        return sum(dims)

    def to_dict(self) -> dict:
        return {
            "total_dim": self.total_dim,
            "structural_dim": self.structural_dim,
            "contributions": [c.to_dict() for c in self.contributions],
        }


def tensor_operator(P1: MatrixPencil, P2: MatrixPencil) -> np.ndarray:
    """A (x) D - B (x) C for P1 = A - lambda B and P2 = C - mu D."""
    return kron(P1.A, P2.B) - kron(P1.B, P2.A)


def t_dim_numeric(P1: MatrixPencil, P2: MatrixPencil, tols: Optional[Tolerances] = None) -> int:
    if not (P1.is_square and P2.is_square):
        raise ValueError("t_dim_numeric needs square pencils")
    tols = tols or default_tolerances()
    T = nullity_tol(tensor_operator(P1, P2), tols.rank_tol, P1.scale * P2.scale)
    log("DEBUG", f"tensor kernel dimension {T}", prefix="TENSORKER")
    return T


def _same_eigenvalue(a: complex, b: complex, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(1.0, abs(a))


def classify_pair(left: KroneckerBlock, right: KroneckerBlock, rtol: float = 1e-6) -> Optional[str]:
    """Pair type a) to i) of blocks that contribute kernel vectors, None otherwise."""
    kinds = (left.kind, right.kind)
    if kinds == (BlockKind.J, BlockKind.J):
        return "a" if _same_eigenvalue(left.eigenvalue, right.eigenvalue, rtol) else None
    table = {
        (BlockKind.N, BlockKind.N): "b",
        (BlockKind.N, BlockKind.L): "c",
        (BlockKind.L, BlockKind.N): "d",
        (BlockKind.L, BlockKind.J): "e",
        (BlockKind.J, BlockKind.L): "f",
        (BlockKind.L, BlockKind.L): "g",
    }
    if kinds in table:
        return table[kinds]
    if kinds == (BlockKind.L, BlockKind.LT) and left.size < right.size:
        return "h"
    if kinds == (BlockKind.LT, BlockKind.L) and left.size > right.size:
        return "i"
    return None


def t_dim_structural(S1: KroneckerStructure, S2: KroneckerStructure, rtol: Optional[float] = None) -> int:
    """Sum of t_alpha over common eigenvalues, infinity included."""
    if not (S1.is_regular and S2.is_regular):
        raise ValueError("t_dim_structural is defined for regular structures only")
    rtol = default_tolerances().cluster_rtol if rtol is None else rtol
    total = t_alpha(Segre.from_sizes(S1.infinite_segre), Segre.from_sizes(S2.infinite_segre))
    for alpha, sizes in S1.eigen_segres(rtol):
        for beta, other_sizes in S2.eigen_segres(rtol):
            if _same_eigenvalue(alpha, beta, rtol):
                total += t_alpha(Segre.from_sizes(sizes), Segre.from_sizes(other_sizes))
    return total


def _pair_vectors(u: list[np.ndarray], v: list[np.ndarray]) -> list[np.ndarray]:
    """z_j = sum_(i <= j) u_i (x) v_(j+1-i) for j = 1..min(d1, d2)."""
    return [sum(np.kron(u[i], v[j - i]) for i in range(j + 1)) for j in range(min(len(u), len(v)))]


def kernel_basis_regular(P1: MatrixPencil, P2: MatrixPencil,
                         chains1: Optional[list[KroneckerChain]] = None,
                         chains2: Optional[list[KroneckerChain]] = None,
                         rng: Optional[np.random.Generator] = None,
                         tols: Optional[Tolerances] = None) -> Subspace:
    tols = tols or default_tolerances()
    rng = rng if rng is not None else make_rng(CONFIG.get("default_seed", 1729))
    if chains1 is None:
        chains1 = kronecker_chains(P1, kcf_structure(P1, rng, tols), rng, tols)
    if chains2 is None:
        chains2 = kronecker_chains(P2, kcf_structure(P2, rng, tols), rng, tols)
    if any(not c.block.is_regular for c in chains1 + chains2):
        raise ValueError("kernel_basis_regular is defined for regular pencils only")
    vectors: list[np.ndarray] = []
    for left in chains1:
        for right in chains2:
            if classify_pair(left.block, right.block, tols.cluster_rtol) in ("a", "b"):
                vectors += _pair_vectors(left.vectors, right.vectors)
    ambient = P1.shape[1] * P2.shape[1]
    return Subspace.span(vectors, ambient_dim=ambient, tol=tols.subspace_tol, rcond=tols.kernel_tol)


def tensor_kernel_report(P1: MatrixPencil, P2: MatrixPencil, rng: Optional[np.random.Generator] = None,
                         tols: Optional[Tolerances] = None) -> TensorKernelReport:
    tols = tols or default_tolerances()
    rng = rng if rng is not None else make_rng(CONFIG.get("default_seed", 1729))
    S1 = kcf_structure(P1, rng, tols)
    S2 = kcf_structure(P2, rng, tols)
    contributions = []
    for left in S1.blocks:
        for right in S2.blocks:
            pair_type = classify_pair(left, right, tols.cluster_rtol)
            if pair_type is None:
                continue
            dim = min(left.size, right.size) if pair_type in ("a", "b") else None
            contributions.append(PairContribution(left, right, pair_type, dim))
    report = TensorKernelReport(t_dim_numeric(P1, P2, tols), contributions)
    if S1.is_regular and S2.is_regular:
        report.basis = kernel_basis_regular(P1, P2, rng=rng, tols=tols)
        if report.structural_dim != report.total_dim:
            log("WARN", f"structural kernel dimension {report.structural_dim} differs from numerical "
                        f"{report.total_dim}", prefix="TENSORKER")
    else:
        report.basis = nullspace(tensor_operator(P1, P2), tols.rank_tol, tols.subspace_tol, P1.scale * P2.scale)
    return report
