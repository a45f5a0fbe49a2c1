# external module imports
from imports import dataclass, fields, np, la, Any, Iterable, Optional, Sequence
# get global state objects (CONFIG and console)
from globals import get_config
CONFIG = get_config()
# local module imports
from utils import log

"""
Dense complex matrix primitives and the tolerance-aware subspace algebra used
by every analysis module. All randomness is drawn from a caller-owned
numpy Generator.
"""


class ToleranceAmbiguity(Exception):
    """A numerical rank decision stayed inconsistent after all retries."""

    def __init__(self, message: str, partial: Any = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class Tolerances:
    """
    The single tolerance policy threaded through all modules.
    Relative tolerances are scaled by the largest singular value of the matrix in question.
    """
    rank_tol: float = 1e-10
    kernel_tol: float = 1e-8
    subspace_tol: float = 1e-6
    intersection_tol: float = 1e-8
    cluster_rtol: float = 1e-6
    cluster_merge_rtol: float = 1e-2
    infinite_rtol: float = 1e-6
    chain_residual_tol: float = 1e-8
    projection_retries: int = 3
    normal_rank_samples: int = 3
    genericity_radius: float = 1e-3
    genericity_probe_directions: int = 8
    common_factor_tol: float = 1e-6
    eigenvector_residual_tol: float = 1e-6
    kcf_render_digits: int = 8

    @classmethod
    def from_config(cls, **overrides) -> "Tolerances":
        values = {}
        for f in fields(cls):
            raw = overrides.get(f.name)
            if raw is None:
                raw = CONFIG.get(f.name, f.default)
            values[f.name] = int(raw) if isinstance(f.default, int) else float(raw)
        tolerances = cls(**values)
        tolerances.validate()
        return tolerances

    def validate(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"Tolerance {f.name} must be a finite positive number, got {value!r}")

    def to_dict(self) -> dict[str, float | int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def default_tolerances() -> Tolerances:
    return Tolerances.from_config()


# ── Matrices ────────────────────────────────────────────────────────
def as_matrix(M: Any, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    array = np.asarray(M, dtype=complex)
    if array.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return array


def as_vector(v: Any, name: str = "vector") -> np.ndarray:
    array = np.asarray(v, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return array


def kron(A: Any, B: Any) -> np.ndarray:
    return np.kron(as_matrix(A), as_matrix(B))


def singular_values(M: np.ndarray) -> np.ndarray:
    if M.size == 0:
        return np.zeros(0)
    return la.svdvals(M)


def rank_tol(M: Any, tol: Optional[float] = None, scale: Optional[float] = None) -> int:
    """
    Numerical rank: singular values above tol * sigma_max.
    Without tol the standard max(m, n) * eps policy applies. A scale, typically the
    norm of the pencil M was evaluated from, raises the reference when M itself is tiny.
    """
    M = as_matrix(M)
    s = singular_values(M)
    reference = _reference(s, scale)
    if reference == 0.0:
        return 0
    if tol is None:
        tol = max(M.shape) * np.finfo(float).eps
    if tol < 0:
        raise ValueError(f"tol must be nonnegative, got {tol}")
    return int(np.sum(s > tol * reference))


def nullity_tol(M: Any, tol: Optional[float] = None, scale: Optional[float] = None) -> int:
    M = as_matrix(M)
    return M.shape[1] - rank_tol(M, tol, scale)


def _reference(s: np.ndarray, scale: Optional[float]) -> float:
    largest = float(s[0]) if s.size else 0.0
    return max(largest, float(scale)) if scale is not None else largest


def matrix_scale(*matrices: np.ndarray) -> float:
    """Largest 2-norm among the given matrices, at least 1."""
    scale = 1.0
    for M in matrices:
        if M.size:
            scale = max(scale, float(la.norm(M, 2)))
    return scale


# ── Subspaces ───────────────────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class Subspace:
    basis: np.ndarray
    tol: float = 1e-6

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])

    @property
    def ambient_dim(self) -> int:
        return int(self.basis.shape[0])

    @classmethod
    def zero(cls, ambient_dim: int, tol: Optional[float] = None) -> "Subspace":
        return cls(np.zeros((ambient_dim, 0), dtype=complex), _containment_tol(tol))

    @classmethod
    def full(cls, ambient_dim: int, tol: Optional[float] = None) -> "Subspace":
        return cls(np.eye(ambient_dim, dtype=complex), _containment_tol(tol))

    @classmethod
    def span(cls, vectors: np.ndarray | Sequence[np.ndarray], ambient_dim: Optional[int] = None,
             tol: Optional[float] = None, rcond: Optional[float] = None) -> "Subspace":
        """Orthonormal basis for the span of the columns (or of a list of vectors)."""
        if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
            stacked = vectors.astype(complex)
        else:
            vectors = [as_vector(v) for v in vectors]
            if not vectors:
                if ambient_dim is None:
                    raise ValueError("ambient_dim is required for an empty span")
                return cls.zero(ambient_dim, tol)
            stacked = np.column_stack(vectors)
        if stacked.shape[1] == 0 or not np.any(stacked):
            return cls.zero(stacked.shape[0], tol)
        if rcond is None:
            rcond = default_tolerances().kernel_tol
        return cls(la.orth(stacked, rcond=rcond), _containment_tol(tol))

    def project(self, v: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.conj().T @ v)

    def complement_component(self, V: np.ndarray) -> np.ndarray:
        """Part of V (vector or matrix) orthogonal to this subspace."""
        if self.dim == 0:
            return V
        return V - self.basis @ (self.basis.conj().T @ V)

    def to_dict(self) -> dict[str, int]:
        return {"dim": self.dim, "ambient_dim": self.ambient_dim}


def _containment_tol(tol: Optional[float]) -> float:
    return default_tolerances().subspace_tol if tol is None else float(tol)


def nullspace(M: Any, tol: Optional[float] = None, containment_tol: Optional[float] = None,
              scale: Optional[float] = None) -> Subspace:
    """Right kernel at relative tolerance tol; dimension equals cols - rank_tol(M, tol, scale)."""
    M = as_matrix(M)
    m, n = M.shape
    if n == 0:
        return Subspace.zero(0, containment_tol)
    if m == 0 or not np.any(M):
        return Subspace.full(n, containment_tol)
    if tol is None:
        tol = max(m, n) * np.finfo(float).eps
    if tol < 0:
        raise ValueError(f"tol must be nonnegative, got {tol}")
    _, s, Vh = la.svd(M)
    rank = int(np.sum(s > tol * _reference(s, scale)))
    return Subspace(Vh[rank:].conj().T.astype(complex), _containment_tol(containment_tol))


def _check_ambient(spaces: Sequence[Subspace]) -> int:
    ambient_dims = {S.ambient_dim for S in spaces}
    if len(ambient_dims) != 1:
        raise ValueError(f"Subspaces live in different ambient dimensions: {sorted(ambient_dims)}")
    return ambient_dims.pop()


def subspace_union(spaces: Iterable[Subspace], tol: Optional[float] = None) -> Subspace:
    """Orthonormal basis of the sum of the given subspaces."""
    spaces = list(spaces)
    if not spaces:
        raise ValueError("subspace_union needs at least one subspace")
    ambient_dim = _check_ambient(spaces)
    stacked = np.hstack([S.basis for S in spaces])
    return Subspace.span(stacked, ambient_dim=ambient_dim, tol=spaces[0].tol, rcond=tol)


def subspace_intersect(S1: Subspace, S2: Subspace, tol: Optional[float] = None) -> Subspace:
    """Intersection through principal angles: keep directions with cos(theta) >= 1 - tol."""
    ambient_dim = _check_ambient([S1, S2])
    if S1.dim == 0 or S2.dim == 0:
        return Subspace.zero(ambient_dim, S1.tol)
    if tol is None:
        tol = default_tolerances().intersection_tol
    U, s, _ = la.svd(S1.basis.conj().T @ S2.basis)
    k = int(np.sum(s >= 1.0 - tol))
    basis = S1.basis @ U[:, :k]
    return Subspace(basis, S1.tol)


def contains(S: Subspace, v: Any) -> bool:
    v = as_vector(v)
    if v.shape[0] != S.ambient_dim:
        raise ValueError(f"Vector of length {v.shape[0]} does not live in ambient dimension {S.ambient_dim}")
    norm_v = la.norm(v)
    if norm_v == 0.0:
        raise ValueError("contains() is undefined for the zero vector")
    if S.dim == 0:
        return False
    return bool(la.norm(S.complement_component(v)) <= S.tol * norm_v)


def contains_subspace(S: Subspace, T: Subspace) -> bool:
    """True when every basis direction of T lies in S."""
    _check_ambient([S, T])
    if T.dim == 0:
        return True
    if S.dim == 0:
        return False
    return bool(la.norm(S.complement_component(T.basis), 2) <= S.tol)


def max_principal_angle(S1: Subspace, S2: Subspace) -> float:
    """Largest principal angle in radians; pi/2 for subspaces of different dimension."""
    _check_ambient([S1, S2])
    if S1.dim != S2.dim:
        return float(np.pi / 2)
    if S1.dim == 0:
        return 0.0
    return float(np.max(la.subspace_angles(S1.basis, S2.basis)))


def subspaces_equal(S1: Subspace, S2: Subspace, tol: float = 1e-8) -> bool:
    return S1.dim == S2.dim and max_principal_angle(S1, S2) <= tol


# ── Randomness ──────────────────────────────────────────────────────
def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_complex(rng: np.random.Generator, shape: int | tuple[int, ...]) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    Q, R = la.qr(random_complex(rng, (n, n)))
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases


def random_orthonormal(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """n x k matrix with orthonormal columns."""
    if k == 0:
        return np.zeros((n, 0), dtype=complex)
    Q, _ = la.qr(random_complex(rng, (n, k)), mode="economic")
    return Q


def well_conditioned(rng: np.random.Generator, n: int, max_condition: float = 10.0) -> np.ndarray:
    """Random n x n matrix with singular values spread over [1, max_condition]."""
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    sigma = np.linspace(1.0, max_condition, n)
    return random_unitary(rng, n) @ np.diag(sigma) @ random_unitary(rng, n)


def log_rank_decision(what: str, singular: np.ndarray, tol: float, prefix: str = "MATCORE") -> None:
    """Debug trace of a rank decision, showing the singular values around the cut."""
    if singular.size == 0:
        log("DEBUG", f"{what}: empty matrix", prefix=prefix)
        return
    cut = tol * singular[0]
    kept = int(np.sum(singular > cut))
    below = singular[kept] if kept < singular.size else 0.0
    above = singular[kept - 1] if kept else 0.0
    log("DEBUG", f"{what}: rank {kept}, cut {cut:.3e}, smallest kept {above:.3e}, largest dropped {below:.3e}",
        prefix=prefix)
