# external module imports
from imports import dataclass, field, np, la, npoly, Any, Optional, Union
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
    kron,
    log_rank_decision,
    make_rng,
    matrix_scale,
    nullspace,
    random_complex,
    rank_tol,
    singular_values,
    subspace_intersect,
    subspace_union,
    subspaces_equal,
)
from pencil import (
    MatrixPencil,
    PencilBundle,
    bundle_of,
    eigenvalues_regular,
    format_complex,
    kcf_structure,
    minimal_reducing,
    normal_rank,
    render_structure,
)
from tensorker import t_dim_numeric

"""
The two-parameter problem W_i(lambda, mu) x_i = (A_i + lambda B_i + mu C_i) x_i = 0, i = 1, 2,
solved through the operator determinants and the two Delta pencils.
"""


@dataclass(frozen=True, eq=False)
class TwoParameterProblem:
    A1: np.ndarray
    B1: np.ndarray
    C1: np.ndarray
    A2: np.ndarray
    B2: np.ndarray
    C2: np.ndarray
    name: str = ""

    def __post_init__(self):
        for label in ("A1", "B1", "C1", "A2", "B2", "C2"):
            object.__setattr__(self, label, as_matrix(getattr(self, label), label))
        for i in (1, 2):
            shapes = {M.shape for M in self.matrices(i)}
            if len(shapes) != 1:
                raise ValueError(f"W{i} matrices differ in shape: {sorted(shapes)}")
            rows, cols = shapes.pop()
            if rows != cols or rows == 0:
                raise ValueError(f"W{i} matrices must be square and nonempty, got {rows}x{cols}")

    @property
    def n1(self) -> int:
        return self.A1.shape[0]

    @property
    def n2(self) -> int:
        return self.A2.shape[0]

    def matrices(self, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if i == 1:
            return self.A1, self.B1, self.C1
        if i == 2:
            return self.A2, self.B2, self.C2
        raise ValueError(f"parameter index must be 1 or 2, got {i}")

    def W(self, i: int, lam: complex, mu: complex) -> np.ndarray:
        A, B, C = self.matrices(i)
        return A + lam * B + mu * C

    def scale(self, i: int) -> float:
        """Reference norm for rank decisions on W_i at a point."""
        return matrix_scale(*self.matrices(i))


@dataclass(eq=False)
class DeltaSystem:
    D0: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    nrank1: int
    nrank2: int
    R1: Subspace
    R2: Subspace
    identity_residual: float = 0.0

    def pencil(self, i: int) -> MatrixPencil:
        """Delta_i - lambda Delta_0."""
        return MatrixPencil(self.D1 if i == 1 else self.D2, self.D0)


@dataclass(frozen=True)
class RotationAngle:
    """(lambda, mu) = R(phi) (lambda~, mu~) with R(phi) = [[cos, -sin], [sin, cos]]."""
    phi: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.phi):
            raise ValueError(f"rotation angle must be finite, got {self.phi}")
        object.__setattr__(self, "phi", float(self.phi) % (2 * np.pi))

    @property
    def cos(self) -> float:
        return float(np.cos(self.phi))

    @property
    def sin(self) -> float:
        return float(np.sin(self.phi))

    def to_rotated(self, lam: complex, mu: complex) -> tuple[complex, complex]:
        return self.cos * lam + self.sin * mu, -self.sin * lam + self.cos * mu

    def from_rotated(self, lam: complex, mu: complex) -> tuple[complex, complex]:
        return self.cos * lam - self.sin * mu, self.sin * lam + self.cos * mu


@dataclass
class BivarPoly:
    """c[j, k] is the coefficient of lambda^j mu^k."""
    coeffs: np.ndarray

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    @property
    def total_degree(self) -> int:
        nonzero = np.argwhere(self.coeffs != 0)
        if nonzero.size == 0:
            return -1
        return int(nonzero.sum(axis=1).max())

    def evaluate(self, lam: complex, mu: complex) -> complex:
        return complex(npoly.polyval2d(lam, mu, self.coeffs))

    def magnitude(self, lam: complex, mu: complex) -> float:
        """Sum of |c_jk| |lambda|^j |mu|^k, the natural scale of an evaluation."""
        return float(npoly.polyval2d(abs(lam), abs(mu), np.abs(self.coeffs)))

    def restrict_to_line(self, a: complex, b: complex, c: complex, e: complex) -> np.ndarray:
        """Ascending coefficients in t of p(a t + b, c t + e)."""
        result = np.zeros(1, dtype=complex)
        for (j, k), coef in np.ndenumerate(self.coeffs):
            if coef == 0:
                continue
            term = npoly.polymul(npoly.polypow([b, a], j), npoly.polypow([e, c], k))
            result = npoly.polyadd(result, coef * term)
        return np.asarray(result, dtype=complex)

    def terms(self) -> list[tuple[int, int, complex]]:
        return [(j, k, complex(c)) for (j, k), c in np.ndenumerate(self.coeffs) if c != 0]


@dataclass
class CoprimeReport:
    coprime: bool
    common_degree: int
    line_degrees: list[int] = field(default_factory=list)


@dataclass
class CommonFactor:
    coprime: bool
    common_degree: int
    factor: Optional[BivarPoly] = None

    def contains(self, lam: complex, mu: complex, tol: float = 1e-6) -> bool:
        if self.coprime or self.factor is None:
            return False
        value = abs(self.factor.evaluate(lam, mu))
        return value <= tol * max(1.0, self.factor.magnitude(lam, mu))


@dataclass
class Eigenvalue2P:
    lam: complex
    mu: complex
    z: np.ndarray
    x1: Optional[np.ndarray] = None
    x2: Optional[np.ndarray] = None
    on_common_factor: bool = False
    multiplicity_hint: int = 1
    residual: Optional[float] = None


@dataclass
class SolveOptions:
    rotate: Union[str, float] = "auto"
    seed: Optional[int] = None
    tolerances: Optional[Tolerances] = None
    kcf_diagnostics: bool = True

    @classmethod
    def from_config(cls, **overrides) -> "SolveOptions":
        options = cls(rotate=CONFIG.get("default_rotate", "auto"), seed=CONFIG.get("default_seed", 1729))
        for key, value in overrides.items():
            if value is not None:
                setattr(options, key, value)
        return options


@dataclass
class SolveDiagnostics:
    phi: float
    seed: Optional[int]
    nranks: tuple[int, int]
    reducing_dims: tuple[int, int]
    reducing_equal: bool
    coprime: bool
    common_degree: int
    candidates: tuple[int, int] = (0, 0)
    kcf: Optional[tuple[str, str]] = None
    same_bundle: Optional[bool] = None


@dataclass
class SolveResult:
    eigenvalues: list[Eigenvalue2P]
    diagnostics: SolveDiagnostics


@dataclass
class WEigenvalueVerdict:
    """is_W_eigenvalue is None for points on a common factor of the characteristic polynomials."""
    is_W_eigenvalue: Optional[bool]
    on_common_factor: bool
    kernel_dims: tuple[int, int]


@dataclass
class RankSumReport:
    """min_rank_sum_nearby is taken on the probe circle, min_rank_sum_on_curves on points of det W_i = 0."""
    rank_sum_at_point: int
    min_rank_sum_nearby: int
    probes: int
    min_rank_sum_on_curves: Optional[int] = None
    curve_points: int = 0

    @property
    def drops(self) -> bool:
        return self.rank_sum_at_point < self.min_rank_sum_nearby

    @property
    def drops_along_curves(self) -> bool:
        if self.min_rank_sum_on_curves is None:
            return self.drops
        return self.rank_sum_at_point < min(self.min_rank_sum_nearby, self.min_rank_sum_on_curves)


@dataclass
class GenericityReport:
    point: tuple[complex, complex]
    items: dict[int, bool]
    rank_sum: RankSumReport

    @property
    def passed(self) -> bool:
        return all(self.items.values())

    @property
    def failed_items(self) -> list[int]:
        return [item for item, ok in sorted(self.items.items()) if not ok]


@dataclass
class SingularityDiagnostics:
    homogeneously_singular: bool
    degree_deficient: bool
    common_factor: bool


def _resolve(rng: Optional[np.random.Generator], tols: Optional[Tolerances]):
    if rng is None:
        rng = make_rng(CONFIG.get("default_seed", 1729))
    return rng, tols or default_tolerances()


# ── Operator determinants ──────────────────────────────────────────
def delta_matrices(P: TwoParameterProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    D0 = kron(P.B1, P.C2) - kron(P.C1, P.B2)
    D1 = kron(P.C1, P.A2) - kron(P.A1, P.C2)
    D2 = kron(P.A1, P.B2) - kron(P.B1, P.A2)
    return D0, D1, D2


def delta_identity_residual(P: TwoParameterProblem, D0: np.ndarray, D1: np.ndarray, D2: np.ndarray,
                            lam: complex) -> float:
    """
    Relative residual of Delta_1 - lam Delta_0 = C1 (x) W2(lam, 0) - W1(lam, 0) (x) C2
    and Delta_2 - lam Delta_0 = W1(0, lam) (x) B2 - B1 (x) W2(0, lam).
    """
    first_left = kron(P.C1, P.W(2, lam, 0)) - kron(P.W(1, lam, 0), P.C2)
    second_left = kron(P.W(1, 0, lam), P.B2) - kron(P.B1, P.W(2, 0, lam))
    first = D1 - lam * D0
    second = D2 - lam * D0
    scale = matrix_scale(first, second, first_left, second_left)
    return max(float(la.norm(first - first_left, 2)), float(la.norm(second - second_left, 2))) / scale


def build_deltas(P: TwoParameterProblem, rng: Optional[np.random.Generator] = None,
                 tols: Optional[Tolerances] = None) -> DeltaSystem:
    rng, tols = _resolve(rng, tols)
    D0, D1, D2 = delta_matrices(P)
    residual = max(delta_identity_residual(P, D0, D1, D2, lam) for lam in random_complex(rng, 3))
    if residual > 1e-12:
        raise RuntimeError(f"operator determinant identity fails with relative residual {residual:.2e}")
    first = MatrixPencil(D1, D0)
    second = MatrixPencil(D2, D0)
    system = DeltaSystem(
        D0=D0, D1=D1, D2=D2,
        nrank1=normal_rank(first, rng, tols),
        nrank2=normal_rank(second, rng, tols),
        R1=minimal_reducing(first, rng, tols),
        R2=minimal_reducing(second, rng, tols),
        identity_residual=residual,
    )
    log("DEBUG", f"Delta pencils of size {D0.shape[0]}: normal ranks {system.nrank1}/{system.nrank2}, "
                 f"reducing subspaces {system.R1.dim}/{system.R2.dim}", prefix="TWOPAR")
    return system


def rotate(P: TwoParameterProblem, phi: RotationAngle | float) -> TwoParameterProblem:
    if not isinstance(phi, RotationAngle):
        phi = RotationAngle(phi)
    c, s = phi.cos, phi.sin
    return TwoParameterProblem(
        A1=P.A1, B1=c * P.B1 + s * P.C1, C1=-s * P.B1 + c * P.C1,
        A2=P.A2, B2=c * P.B2 + s * P.C2, C2=-s * P.B2 + c * P.C2,
        name=P.name,
    )


def local_pencils(P: TwoParameterProblem, lam0: complex) -> tuple[MatrixPencil, MatrixPencil]:
    """W_i(lam0, 0) - gamma C_i; a common eigenvalue gamma belongs to mu0 = -gamma."""
    return MatrixPencil(P.W(1, lam0, 0), P.C1), MatrixPencil(P.W(2, lam0, 0), P.C2)


def delta_kernel_drop(P: TwoParameterProblem, lam0: complex, eps: float = 1e-4,
                      tols: Optional[Tolerances] = None) -> tuple[int, int]:
    """dim ker(Delta_1 - lambda Delta_0) at lam0 and lam0 + eps, from the tensor kernels of the local pencils."""
    tols = tols or default_tolerances()
    return t_dim_numeric(*local_pencils(P, lam0), tols=tols), t_dim_numeric(*local_pencils(P, lam0 + eps), tols=tols)


# ── Characteristic polynomials ─────────────────────────────────────
def char_poly(P: TwoParameterProblem, i: int, rng: Optional[np.random.Generator] = None,
              tols: Optional[Tolerances] = None) -> BivarPoly:
    """
    Coefficients of det W_i(lambda, mu) by interpolation on a tensor grid of
    rotated roots of unity.
    """
    rng, tols = _resolve(rng, tols)
    n = P.matrices(i)[0].shape[0]
    order = np.arange(n + 1)
    for attempt in range(2):
        nodes_lam = np.exp(2j * np.pi * (order / (n + 1) + rng.uniform()))
        nodes_mu = np.exp(2j * np.pi * (order / (n + 1) + rng.uniform()))
        values = np.array([[la.det(P.W(i, x, y)) for y in nodes_mu] for x in nodes_lam])
        V_lam = np.vander(nodes_lam, n + 1, increasing=True)
        V_mu = np.vander(nodes_mu, n + 1, increasing=True)
        coeffs = la.solve(V_mu, la.solve(V_lam, values).T).T
        largest = np.max(np.abs(coeffs))
        degree = np.add.outer(order, order)
        coeffs[(np.abs(coeffs) <= 1e-10 * largest) | (degree > n)] = 0.0
        poly = BivarPoly(coeffs)
        probes = random_complex(rng, (5, 2))
        residual = max(abs(poly.evaluate(x, y) - la.det(P.W(i, x, y)))
                       / max(1.0, poly.magnitude(x, y)) for x, y in probes)
        if residual < 1e-8:
            log("DEBUG", f"p{i} has total degree {poly.total_degree}", prefix="TWOPAR")
            return poly
        log("WARN", f"interpolated p{i} misses probe points by {residual:.2e}, drawing new nodes", prefix="TWOPAR")
    raise ToleranceAmbiguity(f"could not interpolate det W{i}")


def _trim(q: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    q = np.asarray(q, dtype=complex)
    largest = np.max(np.abs(q)) if q.size else 0.0
    if largest == 0.0:
        return np.zeros(0, dtype=complex)
    q = q / largest
    keep = np.nonzero(np.abs(q) > tol)[0]
    return q[:keep[-1] + 1]


def sylvester(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Sylvester matrix of two ascending coefficient vectors."""
    m, n = len(f) - 1, len(g) - 1
    S = np.zeros((m + n, m + n), dtype=complex)
    for row in range(n):
        S[row, row:row + m + 1] = f[::-1]
    for row in range(m):
        S[n + row, row:row + n + 1] = g[::-1]
    return S


def gcd_degree(f: np.ndarray, g: np.ndarray, tol: float = 1e-8) -> int:
    f, g = _trim(f), _trim(g)
    if len(f) <= 1 or len(g) <= 1:
        return 0
    S = sylvester(f, g)
    log_rank_decision("Sylvester matrix", singular_values(S), tol, prefix="TWOPAR")
    return S.shape[0] - rank_tol(S, tol)


def coprime_test(p1: BivarPoly, p2: BivarPoly, rng: Optional[np.random.Generator] = None) -> CoprimeReport:
    """Common factor degree from univariate GCDs along random lines."""
    if p1.is_zero or p2.is_zero:
        raise ValueError("coprime_test needs nonzero polynomials")
    rng, _ = _resolve(rng, None)
    seen: list[int] = []
    for attempt in range(2):
        degrees = []
        for a, b, c, e in random_complex(rng, (3, 4)):
            degrees.append(gcd_degree(p1.restrict_to_line(a, b, c, e), p2.restrict_to_line(a, b, c, e)))
        seen += degrees
        if len(set(degrees)) == 1:
            log("DEBUG", f"common factor degree {degrees[0]}", prefix="TWOPAR")
            return CoprimeReport(degrees[0] == 0, degrees[0], degrees)
        log("WARN", f"common factor degrees disagree across lines {degrees}, drawing new lines", prefix="TWOPAR")
    raise ToleranceAmbiguity(f"inconsistent common factor degrees {seen}", partial=seen)


def _monomials(degree: int) -> list[tuple[int, int]]:
    return [(total - k, k) for total in range(degree + 1) for k in range(total + 1)]


def _coefficient_vector(p: BivarPoly, degree: int) -> np.ndarray:
    return np.array([p.coeffs[j, k] if j < p.coeffs.shape[0] and k < p.coeffs.shape[1] else 0.0
                     for j, k in _monomials(degree)], dtype=complex)


def _multiplication_matrix(p: BivarPoly, degree: int) -> np.ndarray:
    """Matrix of q -> p*q for q of total degree <= degree."""
    rows = {mono: index for index, mono in enumerate(_monomials(p.total_degree + degree))}
    columns = _monomials(degree)
    M = np.zeros((len(rows), len(columns)), dtype=complex)
    for column, (a, b) in enumerate(columns):
        for j, k, coef in p.terms():
            M[rows[(a + j, b + k)], column] += coef
    return M


def extract_common_factor(p1: BivarPoly, p2: BivarPoly, degree: int,
                          tols: Optional[Tolerances] = None) -> Optional[BivarPoly]:
    """
    Approximate GCD h of the given degree: p1 q2 = p2 q1 with q_i = p_i / h, then
    h from the least-squares division p1 = h q1.
    """
    if degree <= 0:
        return None
    tols = tols or default_tolerances()
    p1 = BivarPoly(p1.coeffs / np.max(np.abs(p1.coeffs)))
    p2 = BivarPoly(p2.coeffs / np.max(np.abs(p2.coeffs)))
    d1, d2 = p1.total_degree, p2.total_degree
    if degree > min(d1, d2):
        return None
    M = np.hstack([_multiplication_matrix(p1, d2 - degree), -_multiplication_matrix(p2, d1 - degree)])
    _, _, Vh = la.svd(M)
    v = Vh[-1].conj()
    q1_vector = v[len(_monomials(d2 - degree)):]
    q1 = BivarPoly(np.zeros((d1 - degree + 1, d1 - degree + 1), dtype=complex))
    for (j, k), coef in zip(_monomials(d1 - degree), q1_vector):
        q1.coeffs[j, k] = coef
    target = _coefficient_vector(p1, d1)
    h_vector, *_ = la.lstsq(_multiplication_matrix(q1, degree), target)
    fit = la.norm(_multiplication_matrix(q1, degree) @ h_vector - target) / la.norm(target)
    if fit > tols.common_factor_tol:
        log("WARN", f"common factor division leaves relative residual {fit:.2e}", prefix="TWOPAR")
        return None
    h = np.zeros((degree + 1, degree + 1), dtype=complex)
    for (j, k), coef in zip(_monomials(degree), h_vector):
        h[j, k] = coef
    return BivarPoly(h / np.max(np.abs(h)))


def analyse_common_factor(P: TwoParameterProblem, rng: Optional[np.random.Generator] = None,
                          tols: Optional[Tolerances] = None,
                          polys: Optional[tuple[BivarPoly, BivarPoly]] = None) -> CommonFactor:
    rng, tols = _resolve(rng, tols)
    p1, p2 = polys if polys is not None else (char_poly(P, 1, rng, tols), char_poly(P, 2, rng, tols))
    report = coprime_test(p1, p2, rng)
    factor = None if report.coprime else extract_common_factor(p1, p2, report.common_degree, tols)
    if not report.coprime and factor is None:
        log("DEBUG", f"no common factor of degree {report.common_degree} extracted, on_common_factor stays false",
            prefix="TWOPAR")
    return CommonFactor(report.coprime, report.common_degree, factor)


# ── Solver ──────────────────────────────────────────────────────────
def _rotation_for(options: SolveOptions, rng: np.random.Generator) -> RotationAngle:
    mode = options.rotate
    if isinstance(mode, str):
        if mode == "auto":
            return RotationAngle(rng.uniform(0.0, 2 * np.pi))
        if mode == "none":
            return RotationAngle(0.0)
        try:
            return RotationAngle(float(mode))
        except ValueError:
            raise ValueError(f"rotate must be 'auto', 'none' or an angle, got {mode!r}") from None
    return RotationAngle(float(mode))


def _factor_eigenvector(P: TwoParameterProblem, lam: complex, mu: complex, z: np.ndarray,
                        tols: Tolerances) -> tuple[Optional[np.ndarray], Optional[np.ndarray], Optional[float]]:
    """x1, x2 from the best rank-one approximation of z, else from the kernels of W_i."""
    U, s, Vh = la.svd(z.reshape(P.n1, P.n2))
    candidates = [(U[:, 0], s[0] * Vh[0])]
    kernels = [nullspace(P.W(i, lam, mu), tols.kernel_tol, scale=P.scale(i)).basis for i in (1, 2)]
    if all(K.shape[1] for K in kernels):
        candidates.append((kernels[0][:, 0], kernels[1][:, 0]))
    for x1, x2 in candidates:
        residual = max(
            float(la.norm(P.W(i, lam, mu) @ x)) / (matrix_scale(P.W(i, lam, mu), *P.matrices(i)) * float(la.norm(x)))
            for i, x in ((1, x1), (2, x2))
        )
        if residual <= tols.eigenvector_residual_tol:
            return x1, x2, residual
    return None, None, None


def _regular_eigenvector(K: Subspace, reducing: Subspace, rng: np.random.Generator,
                         tols: Tolerances) -> tuple[np.ndarray, int]:
    """
    Unit vector of K outside both reducing subspaces, and the number of directions of K
    outside their sum. When K lies in R1 + R2 but in neither, nothing survives the
    deflation; a generic vector of K still avoids R1 and R2 and the count is reported as 1.
    """
    hint = K.dim - subspace_intersect(K, reducing, tols.intersection_tol).dim
    if hint > 0:
        _, _, Wh = la.svd(reducing.complement_component(K.basis), full_matrices=False)
        z = K.basis @ Wh[0].conj()
    else:
        log("DEBUG", f"eigenvector space of dimension {K.dim} lies in R1 + R2, taking a generic vector",
            prefix="TWOPAR")
        z = K.basis @ random_complex(rng, K.dim)
    return z / la.norm(z), max(hint, 1)


def solve(P: TwoParameterProblem, opts: Optional[SolveOptions] = None) -> SolveResult:
    """
    Eigenvalues with a common regular eigenvector: candidate pairs from the two Delta
    pencils, kept when ker(Delta_1 - lam Delta_0) and ker(Delta_2 - mu Delta_0)
    share a vector outside both minimal reducing subspaces.
    """
    opts = opts or SolveOptions.from_config()
    tols = opts.tolerances or default_tolerances()
    rng = make_rng(opts.seed)
    p1, p2 = char_poly(P, 1, rng, tols), char_poly(P, 2, rng, tols)
    for i, p in ((1, p1), (2, p2)):
        if p.is_zero:
            raise ValueError(f"W{i}(lambda, mu) is a singular pencil: det W{i} vanishes identically")
    common = analyse_common_factor(P, rng, tols, (p1, p2))

    angle = _rotation_for(opts, rng)
    rotated = rotate(P, angle) if angle.phi else P
    D = build_deltas(rotated, rng, tols)
    lambdas = eigenvalues_regular(D.pencil(1), rng, tols)
    mus = eigenvalues_regular(D.pencil(2), rng, tols)
    log("DEBUG", f"{len(lambdas)} lambda and {len(mus)} mu candidates at phi={angle.phi:.6f}", prefix="TWOPAR")
    reducing = subspace_union([D.R1, D.R2], tol=tols.kernel_tol)

    pencil1, pencil2 = D.pencil(1), D.pencil(2)
    eigenvalues: list[Eigenvalue2P] = []
    for lam_candidate in lambdas:
        first = nullspace(pencil1.at(lam_candidate.value), tols.kernel_tol, tols.subspace_tol, pencil1.scale)
        for mu_candidate in mus:
            second = nullspace(pencil2.at(mu_candidate.value), tols.kernel_tol, tols.subspace_tol, pencil2.scale)
            K = subspace_intersect(first, second, tols.intersection_tol)
            if K.dim == 0 or contains_subspace(D.R1, K) or contains_subspace(D.R2, K):
                continue
            z, hint = _regular_eigenvector(K, reducing, rng, tols)
            lam, mu = angle.from_rotated(lam_candidate.value, mu_candidate.value)
            x1, x2, residual = _factor_eigenvector(P, lam, mu, z, tols)
            eigenvalues.append(Eigenvalue2P(
                lam=complex(lam), mu=complex(mu), z=z, x1=x1, x2=x2,
                on_common_factor=common.contains(lam, mu, tols.common_factor_tol),
                multiplicity_hint=hint, residual=residual,
            ))
    eigenvalues.sort(key=lambda e: (round(e.lam.real, 8), round(e.lam.imag, 8), round(e.mu.real, 8), round(e.mu.imag, 8)))

    diagnostics = SolveDiagnostics(
        phi=angle.phi,
        seed=opts.seed,
        nranks=(D.nrank1, D.nrank2),
        reducing_dims=(D.R1.dim, D.R2.dim),
        reducing_equal=subspaces_equal(D.R1, D.R2, tols.subspace_tol),
        coprime=common.coprime,
        common_degree=common.common_degree,
        candidates=(len(lambdas), len(mus)),
    )
    if not diagnostics.reducing_equal:
        log("DEBUG", "minimal reducing subspaces of the two Delta pencils differ", prefix="TWOPAR")
    if opts.kcf_diagnostics:
        unrotated = build_deltas(P, rng, tols) if angle.phi else D
        structures = [kcf_structure(unrotated.pencil(i), rng, tols) for i in (1, 2)]
        diagnostics.kcf = (render_structure(structures[0], tols.kcf_render_digits),
                           render_structure(structures[1], tols.kcf_render_digits))
        diagnostics.same_bundle = bundle_of(structures[0], tols.cluster_rtol) == bundle_of(structures[1], tols.cluster_rtol)
    log("DEBUG", f"{len(eigenvalues)} eigenvalues: "
                 f"{[(format_complex(e.lam), format_complex(e.mu)) for e in eigenvalues]}", prefix="TWOPAR")
    return SolveResult(eigenvalues, diagnostics)


def verify_W_eigenvalue(P: TwoParameterProblem, point: tuple[complex, complex],
                        rng: Optional[np.random.Generator] = None, tols: Optional[Tolerances] = None,
                        common: Optional[CommonFactor] = None) -> WEigenvalueVerdict:
    rng, tols = _resolve(rng, tols)
    lam, mu = point
    if common is None:
        common = analyse_common_factor(P, rng, tols)
    dims = tuple(nullspace(P.W(i, lam, mu), tols.kernel_tol, scale=P.scale(i)).dim for i in (1, 2))
    if common.contains(lam, mu, tols.common_factor_tol):
        return WEigenvalueVerdict(None, True, dims)
    return WEigenvalueVerdict(all(d > 0 for d in dims), False, dims)


# ── Genericity diagnostics ──────────────────────────────────────────
def _probe_radius(tols: Tolerances, *coordinates: complex) -> float:
    return tols.genericity_radius * max([1.0] + [abs(c) for c in coordinates])


def _regular_along(A: np.ndarray, B: np.ndarray, rng: np.random.Generator, tols: Tolerances) -> bool:
    n = A.shape[0]
    return max(rank_tol(A - g * B, tols.rank_tol) for g in random_complex(rng, 3)) == n


def _isolated_zero(p: BivarPoly, point: tuple[complex, complex], direction: tuple[complex, complex],
                   radius: float, tols: Tolerances) -> bool:
    """
    True when t -> p(point + t direction) has no zero with 0 < |t| <= radius. The zero
    at t = 0 is divided out by dropping the low order coefficients that vanish relative
    to the largest, so its multiplicity does not matter.
    """
    q = p.restrict_to_line(direction[0], point[0], direction[1], point[1])
    size = float(np.max(np.abs(q), initial=0.0))
    if size == 0.0:
        return False
    kept = np.flatnonzero(np.abs(q) > tols.common_factor_tol * size)
    deflated = q[kept[0]:kept[-1] + 1]
    if deflated.size < 2:
        return True
    return bool(np.all(np.abs(npoly.polyroots(deflated)) > radius))


def rank_sum_drop(P: TwoParameterProblem, point: tuple[complex, complex],
                  rng: Optional[np.random.Generator] = None, tols: Optional[Tolerances] = None,
                  polys: Optional[tuple[BivarPoly, BivarPoly]] = None) -> RankSumReport:
    """
    Sum of rank W_i at the point against points on a small circle around it. Points
    that follow each curve det W_i = 0 through the neighbourhood are compared
    separately and only enter drops_along_curves.
    """
    rng, tols = _resolve(rng, tols)
    lam0, mu0 = point
    radius = _probe_radius(tols, lam0, mu0)
    p1, p2 = polys if polys is not None else (char_poly(P, 1, rng, tols), char_poly(P, 2, rng, tols))

    def rank_sum(lam: complex, mu: complex) -> int:
        return sum(rank_tol(P.W(i, lam, mu), tols.kernel_tol, P.scale(i)) for i in (1, 2))

    def circle_rank(i: int, p: BivarPoly, direction: np.ndarray) -> int:
        # det W_i has no zero on the way out, so W_i is regular on the circle
        if _isolated_zero(p, (lam0, mu0), (direction[0], direction[1]), radius, tols):
            return P.matrices(i)[0].shape[0]
        lam, mu = lam0 + radius * direction[0], mu0 + radius * direction[1]
        return rank_tol(P.W(i, lam, mu), tols.kernel_tol, P.scale(i))

    directions = [d / la.norm(d) for d in random_complex(rng, (tols.genericity_probe_directions, 2))]
    nearby = min(circle_rank(1, p1, d) + circle_rank(2, p2, d) for d in directions)

    on_curves: list[tuple[complex, complex]] = []
    angles = 2 * np.pi * (np.arange(tols.genericity_probe_directions) + rng.uniform()) / tols.genericity_probe_directions
    for i in (1, 2):
        A, B, C = P.matrices(i)
        for theta in angles:
            lam = lam0 + radius * np.exp(1j * theta)
            roots = la.eigvals(A + lam * B, -C)
            roots = roots[np.isfinite(roots)]
            if roots.size == 0:
                continue
            mu = roots[np.argmin(np.abs(roots - mu0))]
            if abs(mu - mu0) <= 10 * radius:
                on_curves.append((lam, complex(mu)))
    curve_min = min(rank_sum(lam, mu) for lam, mu in on_curves) if on_curves else None
    return RankSumReport(rank_sum(lam0, mu0), nearby, len(directions), curve_min, len(on_curves))


def check_genericity(P: TwoParameterProblem, point: tuple[complex, complex],
                     rng: Optional[np.random.Generator] = None,
                     eigenvalues: Optional[list[tuple[complex, complex]]] = None,
                     tols: Optional[Tolerances] = None) -> GenericityReport:
    rng, tols = _resolve(rng, tols)
    lam0, mu0 = point
    polys = (char_poly(P, 1, rng, tols), char_poly(P, 2, rng, tols))
    items: dict[int, bool] = {}
    items[1] = all(_regular_along(P.W(i, lam0, 0), P.matrices(i)[2], rng, tols) for i in (1, 2))
    items[2] = all(_regular_along(P.W(i, 0, mu0), P.matrices(i)[1], rng, tols) for i in (1, 2))

    # W_i regular on the punctured disc along each coordinate line through the point
    radius = _probe_radius(tols, lam0, mu0)
    items[3] = all(_isolated_zero(p, (lam0, mu0), (1.0, 0.0), radius, tols) for p in polys)
    items[4] = all(_isolated_zero(p, (lam0, mu0), (0.0, 1.0), radius, tols) for p in polys)

    if eigenvalues is None:
        found = solve(P, SolveOptions(rotate="none", seed=int(rng.integers(2 ** 31)), tolerances=tols,
                                      kcf_diagnostics=False))
        eigenvalues = [(e.lam, e.mu) for e in found.eigenvalues]
    close = lambda a, b: abs(a - b) <= tols.cluster_rtol * max(1.0, abs(a))
    others = [(lam, mu) for lam, mu in eigenvalues if not (close(lam, lam0) and close(mu, mu0))]
    items[5] = not any(close(lam, lam0) or close(mu, mu0) for lam, mu in others)

    rank_sum = rank_sum_drop(P, point, rng, tols, polys)
    items[6] = rank_sum.drops
    report = GenericityReport((complex(lam0), complex(mu0)), items, rank_sum)
    if not report.passed:
        log("DEBUG", f"genericity items {report.failed_items} fail at "
                     f"({format_complex(lam0)}, {format_complex(mu0)})", prefix="TWOPAR")
    return report


def same_bundle_check(D: DeltaSystem, rng: Optional[np.random.Generator] = None,
                      tols: Optional[Tolerances] = None) -> bool:
    rng, tols = _resolve(rng, tols)
    first = bundle_of(kcf_structure(D.pencil(1), rng, tols), tols.cluster_rtol)
    second = bundle_of(kcf_structure(D.pencil(2), rng, tols), tols.cluster_rtol)
    return first == second


def rotation_family_bundle(D: DeltaSystem, phi: float, rng: Optional[np.random.Generator] = None,
                           tols: Optional[Tolerances] = None) -> PencilBundle:
    """Bundle of cos(phi) Delta_1 + sin(phi) Delta_2 - lambda Delta_0."""
    rng, tols = _resolve(rng, tols)
    combined = MatrixPencil(np.cos(phi) * D.D1 + np.sin(phi) * D.D2, D.D0)
    return bundle_of(kcf_structure(combined, rng, tols), tols.cluster_rtol)


def singularity_diagnostics(P: TwoParameterProblem, rng: Optional[np.random.Generator] = None,
                            tols: Optional[Tolerances] = None) -> SingularityDiagnostics:
    """The three ways a Delta pencil becomes singular, tested numerically."""
    rng, tols = _resolve(rng, tols)
    D0, _, _ = delta_matrices(P)
    p1, p2 = char_poly(P, 1, rng, tols), char_poly(P, 2, rng, tols)
    common = coprime_test(p1, p2, rng)
    return SingularityDiagnostics(
        homogeneously_singular=rank_tol(D0, tols.rank_tol) < D0.shape[0],
        degree_deficient=p1.total_degree < P.n1 or p2.total_degree < P.n2,
        common_factor=not common.coprime,
    )


def eigenvalue_to_dict(e: Eigenvalue2P) -> dict[str, Any]:
    return {
        "lambda": e.lam,
        "mu": e.mu,
        "on_common_factor": e.on_common_factor,
        "multiplicity_hint": e.multiplicity_hint,
        "residual": e.residual,
    }
