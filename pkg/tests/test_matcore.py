import unittest

import numpy as np

from sing2ep_test_support import configure_for_tests

from matcore import (
    Subspace,
    Tolerances,
    contains,
    contains_subspace,
    make_rng,
    max_principal_angle,
    nullity_tol,
    nullspace,
    random_orthonormal,
    random_unitary,
    rank_tol,
    subspace_intersect,
    subspace_union,
    subspaces_equal,
    well_conditioned,
)


class RankTests(unittest.TestCase):
    def setUp(self):
        configure_for_tests()

    def test_rank_of_diagonal_matrix_respects_relative_tolerance(self):
        M = np.diag([1.0, 1e-5, 1e-12])

        self.assertEqual(rank_tol(M, 1e-10), 2)
        self.assertEqual(rank_tol(M, 1e-3), 1)
        self.assertEqual(nullity_tol(M, 1e-10), 1)

    def test_zero_and_empty_matrices_have_rank_zero(self):
        self.assertEqual(rank_tol(np.zeros((3, 2))), 0)
        self.assertEqual(rank_tol(np.zeros((0, 4))), 0)
        self.assertEqual(nullity_tol(np.zeros((3, 2))), 2)

    def test_default_tolerance_detects_exact_rank_deficiency(self):
        rng = make_rng(1)
        U = random_orthonormal(rng, 6, 3)
        V = random_orthonormal(rng, 5, 3)

        self.assertEqual(rank_tol(U @ np.diag([3.0, 2.0, 1.0]) @ V.conj().T), 3)

    def test_negative_tolerance_is_rejected(self):
        with self.assertRaises(ValueError):
            rank_tol(np.eye(2), -1.0)

    def test_non_finite_entries_are_rejected(self):
        with self.assertRaises(ValueError):
            rank_tol(np.array([[1.0, np.nan], [0.0, 1.0]]))


class SubspaceTests(unittest.TestCase):
    def setUp(self):
        configure_for_tests()

    def test_nullspace_dimension_matches_rank(self):
        M = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        kernel = nullspace(M, 1e-10)

        self.assertEqual(kernel.dim, 1)
        self.assertTrue(contains(kernel, [1.0, -1.0, 0.0]))
        self.assertLess(np.linalg.norm(M @ kernel.basis), 1e-12)

    def test_nullspace_of_zero_matrix_is_everything(self):
        self.assertEqual(nullspace(np.zeros((2, 3))).dim, 3)

    def test_intersection_of_coordinate_planes_is_their_common_axis(self):
        xy = Subspace.span([[1, 0, 0], [0, 1, 0]])
        yz = Subspace.span([[0, 1, 0], [0, 0, 1]])
        common = subspace_intersect(xy, yz, 1e-8)

        self.assertEqual(common.dim, 1)
        self.assertTrue(contains(common, [0, 1, 0]))
        self.assertFalse(contains(common, [1, 0, 0]))

    def test_union_spans_the_sum(self):
        x = Subspace.span([[1, 0, 0]])
        y = Subspace.span([[1, 1, 0]])

        union = subspace_union([x, y])
        self.assertEqual(union.dim, 2)
        self.assertTrue(contains(union, [0, 1, 0]))
        self.assertTrue(contains_subspace(union, x))

    def test_empty_spaces_behave_as_zero(self):
        zero = Subspace.zero(3)
        plane = Subspace.span([[1, 0, 0], [0, 1, 0]])

        self.assertEqual(subspace_intersect(zero, plane).dim, 0)
        self.assertTrue(contains_subspace(plane, zero))
        self.assertFalse(contains_subspace(zero, plane))
        self.assertFalse(contains(zero, [1, 0, 0]))

    def test_contains_rejects_zero_vector_and_wrong_dimension(self):
        plane = Subspace.span([[1, 0, 0], [0, 1, 0]])

        with self.assertRaises(ValueError):
            contains(plane, [0, 0, 0])
        with self.assertRaises(ValueError):
            contains(plane, [1, 0])

    def test_mixed_ambient_dimensions_are_rejected(self):
        with self.assertRaises(ValueError):
            subspace_intersect(Subspace.span([[1, 0]]), Subspace.span([[1, 0, 0]]))

    def test_principal_angles_compare_spans_not_bases(self):
        rng = make_rng(7)
        Q = random_orthonormal(rng, 5, 2)
        mixed = Q @ np.array([[1.0, 2.0], [3.0, -1.0]])

        self.assertTrue(subspaces_equal(Subspace.span(Q), Subspace.span(mixed)))
        self.assertAlmostEqual(max_principal_angle(Subspace.span(Q), Subspace.span(Q[:, :1])), np.pi / 2)


class RandomMatrixTests(unittest.TestCase):
    def test_random_unitary_is_unitary(self):
        Q = random_unitary(make_rng(3), 4)

        self.assertLess(np.linalg.norm(Q.conj().T @ Q - np.eye(4)), 1e-12)

    def test_well_conditioned_respects_condition_bound(self):
        M = well_conditioned(make_rng(5), 6, 10.0)

        self.assertLessEqual(np.linalg.cond(M), 10.0 + 1e-8)

    def test_same_seed_same_draws(self):
        self.assertTrue(np.array_equal(random_unitary(make_rng(11), 3), random_unitary(make_rng(11), 3)))


class ToleranceTests(unittest.TestCase):
    def test_tolerances_follow_config(self):
        configure_for_tests(rank_tol=1e-9, projection_retries=5)
        tolerances = Tolerances.from_config()

        self.assertEqual(tolerances.rank_tol, 1e-9)
        self.assertEqual(tolerances.projection_retries, 5)
        self.assertEqual(tolerances.kernel_tol, 1e-8)

    def test_overrides_win_over_config(self):
        configure_for_tests(rank_tol=1e-9)

        self.assertEqual(Tolerances.from_config(rank_tol=1e-6).rank_tol, 1e-6)

    def test_non_positive_tolerance_is_rejected(self):
        configure_for_tests()

        with self.assertRaises(ValueError):
            Tolerances.from_config(kernel_tol=0.0)
        with self.assertRaises(ValueError):
            Tolerances.from_config(rank_tol=float("nan"))


if __name__ == "__main__":
    unittest.main()
