import json
import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

from sing2ep_test_support import PROJECT_ROOT, configure_for_tests

from model import (
    EigenvalueRecord,
    PencilFile,
    ProblemFile,
    SolveReport,
    decode_complex,
    decode_matrix,
    encode_complex,
    encode_matrix,
    load_pencil_file,
    load_problem_file,
)
from matcore import Tolerances
from twopar import Eigenvalue2P, SolveDiagnostics, SolveResult
from utils import Aborting, dumps_json


def square_block(n: int = 1) -> dict:
    return {key: [[[1, 0]] * n for _ in range(n)] for key in ("A", "B", "C")}


class ComplexEncodingTests(unittest.TestCase):
    def test_numbers_and_pairs_are_accepted(self):
        self.assertEqual(decode_complex(2), 2 + 0j)
        self.assertEqual(decode_complex(-0.5), -0.5 + 0j)
        self.assertEqual(decode_complex([1, -1]), 1 - 1j)

    def test_malformed_values_are_rejected(self):
        for value in (True, [1, True], "1", [1, 2, 3], [1.0], None, {"re": 1}):
            with self.subTest(value=value):
                with self.assertRaises(ValueError):
                    decode_complex(value)

    def test_non_finite_values_are_rejected(self):
        with self.assertRaises(ValueError):
            decode_complex([float("inf"), 0])
        with self.assertRaises(ValueError):
            encode_complex(complex(float("nan"), 0.0))

    def test_negative_zero_is_normalised(self):
        encoded = encode_complex(complex(-0.0, -0.0))

        self.assertEqual(encoded, [0.0, 0.0])
        self.assertEqual(math.copysign(1.0, encoded[0]), 1.0)
        self.assertEqual(math.copysign(1.0, encoded[1]), 1.0)


class MatrixEncodingTests(unittest.TestCase):
    def test_rows_become_a_complex_array(self):
        M = decode_matrix([[[1, 0], 2], [0, [0, 3]]])

        self.assertEqual(M.dtype, complex)
        self.assertTrue(np.array_equal(M, np.array([[1, 2], [0, 3j]])))
        self.assertEqual(encode_matrix(M)[1][1], [0.0, 3.0])

    def test_empty_matrix(self):
        self.assertEqual(decode_matrix([]).shape, (0, 0))

    def test_ragged_rows_are_rejected(self):
        with self.assertRaises(ValueError):
            decode_matrix([[1, 2], [3]])

    def test_bad_entries_name_the_matrix(self):
        with self.assertRaises(ValueError) as ctx:
            decode_matrix([[1, "x"]], "W1.A")
        self.assertIn("W1.A", str(ctx.exception))

    def test_vector_is_not_a_matrix(self):
        with self.assertRaises(ValueError):
            encode_matrix(np.ones(3))


class ProblemFileTests(unittest.TestCase):
    def setUp(self):
        configure_for_tests()

    def test_example_file_builds_a_problem(self):
        problem_file = load_problem_file(PROJECT_ROOT / "problems" / "ex5_1.json")
        P = problem_file.to_problem()

        self.assertEqual(problem_file.name, "ex5_1")
        self.assertEqual((P.n1, P.n2), (2, 2))
        self.assertTrue(np.array_equal(P.C1, np.diag([1, -1])))
        self.assertFalse(problem_file.expected["coprime"])

    def test_problem_written_out_reads_back(self):
        problem_file = load_problem_file(PROJECT_ROOT / "problems" / "ex5_2.json")
        again = ProblemFile.from_dict(json.loads(dumps_json(ProblemFile.from_problem(problem_file.to_problem()).to_dict())))

        for key in ("A", "B", "C"):
            self.assertTrue(np.array_equal(again.W1[key], problem_file.W1[key]))
            self.assertTrue(np.array_equal(again.W2[key], problem_file.W2[key]))
        self.assertEqual(again.expected, {})

    def test_structural_problems_are_rejected(self):
        non_square = {key: [[1, 2]] for key in ("A", "B", "C")}
        mixed = dict(square_block(1), C=[[1, 0], [0, 1]])
        missing = {"A": [[1]], "B": [[1]]}
        empty = {key: [] for key in ("A", "B", "C")}
        for label, W1 in (("non-square", non_square), ("mixed", mixed), ("missing", missing), ("empty", empty)):
            with self.subTest(case=label):
                with self.assertRaises(ValueError):
                    ProblemFile.from_dict({"W1": W1, "W2": square_block(1)})
        with self.assertRaises(ValueError):
            ProblemFile.from_dict({"W1": square_block(1)})
        with self.assertRaises(ValueError):
            ProblemFile.from_dict([1, 2])

    def test_unreadable_files_abort(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            broken = Path(tmp_dir) / "broken.json"
            broken.write_text("{", encoding="utf-8")
            incomplete = Path(tmp_dir) / "incomplete.json"
            incomplete.write_text(json.dumps({"W1": square_block(1)}), encoding="utf-8")
            non_finite = Path(tmp_dir) / "nan.json"
            non_finite.write_text('{"W1": {"A": [[NaN]], "B": [[1]], "C": [[1]]}}', encoding="utf-8")

            for path in (broken, incomplete, non_finite, Path(tmp_dir) / "absent.json"):
                with self.subTest(path=path.name):
                    with self.assertRaises(Aborting):
                        load_problem_file(path)


class PencilFileTests(unittest.TestCase):
    def setUp(self):
        configure_for_tests()

    def test_identity_pencil(self):
        pencil = load_pencil_file(PROJECT_ROOT / "problems" / "pencils" / "identity2.json").to_pencil()

        self.assertEqual(pencil.shape, (2, 2))
        self.assertTrue(np.array_equal(pencil.A, np.eye(2)))

    def test_shapes_must_agree(self):
        with self.assertRaises(ValueError):
            PencilFile.from_dict({"A": [[1, 2]], "B": [[1]]})
        with self.assertRaises(ValueError):
            PencilFile.from_dict({"A": [[1]]})

    def test_rectangular_pencils_are_allowed(self):
        pencil_file = PencilFile.from_dict({"name": "L1", "A": [[0, 1]], "B": [[1, 0]]})

        self.assertEqual(pencil_file.to_pencil().shape, (1, 2))
        self.assertEqual(pencil_file.to_dict()["A"], [[[0.0, 0.0], [1.0, 0.0]]])


class SolveReportTests(unittest.TestCase):
    def setUp(self):
        configure_for_tests()

    def make_result(self, kcf=None):
        eigenvalue = Eigenvalue2P(1 + 0j, -2j, np.ones(1), residual=np.float64(1e-14), multiplicity_hint=2)
        diagnostics = SolveDiagnostics(phi=0.5, seed=3, nranks=(3, 3), reducing_dims=(1, 1), reducing_equal=True,
                                       coprime=False, common_degree=1, candidates=(2, 2), kcf=kcf,
                                       same_bundle=None if kcf is None else True)
        return SolveResult([eigenvalue], diagnostics)

    def test_report_carries_points_and_diagnostics(self):
        report = SolveReport.from_result("demo", self.make_result(), Tolerances())
        data = json.loads(dumps_json(report.to_dict()))

        self.assertEqual(data["name"], "demo")
        self.assertEqual(data["eigenvalues"], [{
            "lambda": [1.0, 0.0],
            "mu": [0.0, -2.0],
            "on_common_factor": False,
            "multiplicity_hint": 2,
            "residual": 1e-14,
        }])
        self.assertEqual(data["diagnostics"]["nranks"], [3, 3])
        self.assertEqual(data["diagnostics"]["tolerances"]["rank_tol"], 1e-10)
        self.assertNotIn("kcf", data["diagnostics"])

    def test_kcf_strings_are_reported_when_computed(self):
        report = SolveReport.from_result("demo", self.make_result(("L0+J1(1)", "L0+J1(2)")), Tolerances())

        self.assertEqual(report.diagnostics["kcf"], {"delta1": "L0+J1(1)", "delta2": "L0+J1(2)"})
        self.assertTrue(report.diagnostics["same_bundle"])

    def test_report_reads_back(self):
        data = SolveReport.from_result("demo", self.make_result(), Tolerances()).to_dict()
        again = SolveReport.from_dict(data)

        self.assertEqual(again.eigenvalues, [EigenvalueRecord(1 + 0j, -2j, False, 2, 1e-14)])
        self.assertEqual(again.diagnostics["seed"], 3)


if __name__ == "__main__":
    unittest.main()
