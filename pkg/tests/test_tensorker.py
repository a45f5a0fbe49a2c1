import unittest

import numpy as np

from sing2ep_test_support import configure_for_tests

from matcore import Tolerances, make_rng, max_principal_angle, nullspace, well_conditioned
from pencil import (
    BlockKind,
    KroneckerBlock,
    KroneckerStructure,
    MatrixPencil,
    canonical_pencil,
    parse_structure,
    synth_pencil,
)
from strat import Segre, hc_move, mlw_move, mlw_sites, t_alpha
from tensorker import (
    classify_pair,
    kernel_basis_regular,
    t_dim_numeric,
    t_dim_structural,
    tensor_kernel_report,
    tensor_operator,
)

EIGENVALUES = (0.0, 1.0, -2.0)


def random_regular_structure(rng: np.random.Generator, max_block: int = 3, max_dim: int = 5) -> KroneckerStructure:
    """Jordan and infinite blocks only; a shared small eigenvalue set makes overlaps likely."""
    while True:
        blocks = []
        for _ in range(int(rng.integers(1, 4))):
            size = int(rng.integers(1, max_block + 1))
            if rng.uniform() < 0.25:
                blocks.append(KroneckerBlock(BlockKind.N, size))
            else:
                blocks.append(KroneckerBlock(BlockKind.J, size, EIGENVALUES[int(rng.integers(0, len(EIGENVALUES)))]))
        S = KroneckerStructure.from_blocks(blocks)
        if S.n <= max_dim:
            return S


class PairTypeTests(unittest.TestCase):
    def test_pair_types(self):
        J1 = KroneckerBlock(BlockKind.J, 2, 1.0)
        J2 = KroneckerBlock(BlockKind.J, 1, 2.0)
        N = KroneckerBlock(BlockKind.N, 1)
        L0 = KroneckerBlock(BlockKind.L, 0)
        L2 = KroneckerBlock(BlockKind.L, 2)
        LT1 = KroneckerBlock(BlockKind.LT, 1)

        self.assertEqual(classify_pair(J1, KroneckerBlock(BlockKind.J, 1, 1.0 + 1e-9)), "a")
        self.assertIsNone(classify_pair(J1, J2))
        self.assertEqual(classify_pair(N, N), "b")
        self.assertEqual(classify_pair(N, L0), "c")
        self.assertEqual(classify_pair(L0, N), "d")
        self.assertEqual(classify_pair(L0, J1), "e")
        self.assertEqual(classify_pair(J1, L0), "f")
        self.assertEqual(classify_pair(L0, L2), "g")
        self.assertEqual(classify_pair(L0, LT1), "h")
        self.assertIsNone(classify_pair(L2, LT1))
        self.assertEqual(classify_pair(LT1, L0), "i")
        self.assertIsNone(classify_pair(LT1, J1))
        self.assertIsNone(classify_pair(LT1, LT1))

    def test_structural_dimension_sums_interaction_counts(self):
        S1 = parse_structure("J2(1)+J1(1)+J1(3)+N2")
        S2 = parse_structure("J2(1)+J1(0)+N1")

        # eigenvalue 1: min(2,2) + min(1,2); infinity: min(2,1)
        self.assertEqual(t_dim_structural(S1, S2), 2 + 1 + 1)

    def test_structural_dimension_needs_regular_structures(self):
        with self.assertRaises(ValueError):
            t_dim_structural(parse_structure("L0+L0T"), parse_structure("J1(1)"))


class TensorKernelTests(unittest.TestCase):
    def setUp(self):
        configure_for_tests()

    def test_numeric_dimension_matches_structure_for_random_regular_pairs(self):
        rng = make_rng(99)
        for trial in range(200):
            S1, S2 = random_regular_structure(rng), random_regular_structure(rng)
            P1, P2 = synth_pencil(S1, rng), synth_pencil(S2, rng)
            with self.subTest(trial=trial, left=S1.render(), right=S2.render()):
                self.assertEqual(t_dim_numeric(P1, P2), t_dim_structural(S1, S2))

    def test_chain_basis_spans_the_numeric_kernel(self):
        rng = make_rng(7)
        tols = Tolerances.from_config()
        for trial in range(200):
            S1 = random_regular_structure(rng, max_block=2, max_dim=4)
            S2 = random_regular_structure(rng, max_block=2, max_dim=4)
            P1, P2 = synth_pencil(S1, rng), synth_pencil(S2, rng)
            with self.subTest(trial=trial, left=S1.render(), right=S2.render()):
                basis = kernel_basis_regular(P1, P2, rng=rng, tols=tols)
                numeric = nullspace(tensor_operator(P1, P2), tols.rank_tol, tols.subspace_tol, P1.scale * P2.scale)

                self.assertEqual(basis.dim, t_dim_structural(S1, S2))
                self.assertLess(max_principal_angle(basis, numeric), 1e-8)

    def test_common_eigenvector_pair_lies_in_the_kernel(self):
        P1 = canonical_pencil(parse_structure("J1(2)+J1(5)"))
        P2 = canonical_pencil(parse_structure("J1(2)+N1"))

        # J1(5) renders first, so the eigenvector for 2 is the second unit vector of P1
        z = np.kron([0.0, 1.0], [1.0, 0.0])
        self.assertLess(np.linalg.norm(tensor_operator(P1, P2) @ z), 1e-12)
        self.assertEqual(t_dim_numeric(P1, P2), 1)

    def test_numeric_dimension_needs_square_pencils(self):
        with self.assertRaises(ValueError):
            t_dim_numeric(canonical_pencil(parse_structure("L1")), canonical_pencil(parse_structure("J1(1)")))

    def test_report_of_singular_pair_lists_contributing_blocks(self):
        rng = make_rng(3)
        P1 = synth_pencil(parse_structure("L0+L0T+J1(1)"), rng)
        P2 = synth_pencil(parse_structure("J1(1)+N1"), rng)
        report = tensor_kernel_report(P1, P2, rng)

        self.assertEqual(sorted(c.pair_type for c in report.contributions), ["a", "d", "e"])
        self.assertIsNone(report.structural_dim)
        self.assertGreaterEqual(report.total_dim, 1)
        self.assertEqual(report.basis.dim, report.total_dim)

    def test_report_of_regular_pair_has_a_structural_dimension(self):
        rng = make_rng(4)
        P1 = synth_pencil(parse_structure("J2(1)+J1(0)"), rng)
        P2 = synth_pencil(parse_structure("J1(1)+N1"), rng)
        report = tensor_kernel_report(P1, P2, rng)

        self.assertEqual(report.structural_dim, 1)
        self.assertEqual(report.total_dim, 1)
        self.assertEqual(report.to_dict()["contributions"], [{"left": "J2(1)", "right": "J1(1)", "type": "a", "dim": 1}])

def random_segre(rng: np.random.Generator, max_parts: int = 3, max_part: int = 3, max_total: int = 4) -> Segre:
    while True:
        parts = rng.integers(1, max_part + 1, size=int(rng.integers(1, max_parts + 1)))
        if parts.sum() <= max_total:
            return Segre.from_sizes(parts)


def structure_with(*placed: tuple[Segre, complex]) -> KroneckerStructure:
    """Jordan blocks for each Segre characteristic at its eigenvalue, plus a simple eigenvalue 0."""
    blocks = [KroneckerBlock(BlockKind.J, size, value) for segre, value in placed for size in segre.parts]
    return KroneckerStructure.from_blocks(blocks + [KroneckerBlock(BlockKind.J, 1, 0.0)])


class StratificationMoveTests(unittest.TestCase):
    def setUp(self):
        configure_for_tests()

    def numeric(self, S1: KroneckerStructure, S2: KroneckerStructure, rng: np.random.Generator) -> int:
        return t_dim_numeric(synth_pencil(S1, rng), synth_pencil(S2, rng))

    def test_mlw_move_never_raises_the_kernel_dimension(self):
        rng = make_rng(41)
        trials = 0
        while trials < 200:
            d, e = random_segre(rng), random_segre(rng)
            sites = mlw_sites(d)
            if not sites:
                continue
            trials += 1
            p, q = sites[int(rng.integers(0, len(sites)))]
            moved = mlw_move(d, p, q).segre
            S2 = structure_with((e, 1.0))
            with self.subTest(d=d.parts, e=e.parts, p=p, q=q):
                before = self.numeric(structure_with((d, 1.0)), S2, rng)
                after = self.numeric(structure_with((moved, 1.0)), S2, rng)

                self.assertLessEqual(after, before)
                self.assertEqual(before - after, t_alpha(d, e) - t_alpha(moved, e))

    def test_hc_move_on_both_sides_never_raises_the_kernel_dimension(self):
        rng = make_rng(42)
        trials = 0
        while trials < 200:
            d, e = random_segre(rng), random_segre(rng)
            if d.parts[0] < 2 or e.parts[0] < 2:
                continue
            trials += 1
            beta_d, gamma_d = hc_move(d, int(rng.integers(1, d.parts[0])))
            beta_e, gamma_e = hc_move(e, int(rng.integers(1, e.parts[0])))
            with self.subTest(trial=trials, d=d.parts, e=e.parts):
                before = self.numeric(structure_with((d, 1.0)), structure_with((e, 1.0)), rng)
                after = self.numeric(structure_with((beta_d, 1.0), (gamma_d, 2.5)),
                                     structure_with((beta_e, 1.0), (gamma_e, 2.5)), rng)

                self.assertLessEqual(after, before)

    def test_numeric_dimension_is_invariant_under_strict_equivalence(self):
        rng = make_rng(43)
        for trial in range(100):
            S1, S2 = random_regular_structure(rng), random_regular_structure(rng)
            C1, C2 = canonical_pencil(S1), canonical_pencil(S2)
            U1, V1 = well_conditioned(rng, S1.m), well_conditioned(rng, S1.n)
            U2, V2 = well_conditioned(rng, S2.m), well_conditioned(rng, S2.n)
            moved1 = MatrixPencil(U1 @ C1.A @ V1, U1 @ C1.B @ V1)
            moved2 = MatrixPencil(U2 @ C2.A @ V2, U2 @ C2.B @ V2)
            with self.subTest(trial=trial, left=S1.render(), right=S2.render()):
                self.assertEqual(t_dim_numeric(moved1, moved2), t_dim_numeric(C1, C2))


if __name__ == "__main__":
    unittest.main()
