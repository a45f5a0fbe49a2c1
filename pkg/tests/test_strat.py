import unittest

from strat import (
    RegularBundle,
    Segre,
    check_hc_lemma,
    check_mlw_lemma,
    enumerate_covers,
    hc_move,
    is_mlw_site,
    mlw_move,
    mlw_sites,
    parse_bundle,
    render_bundle,
    t_alpha,
)


def partitions(total: int, largest: int = None):
    """All partitions of total into weakly decreasing positive parts."""
    if largest is None:
        largest = total
    if total == 0:
        yield ()
        return
    for first in range(min(total, largest), 0, -1):
        for rest in partitions(total - first, first):
            yield (first,) + rest


ALL_SEGRES = [Segre(p) for total in range(1, 7) for p in partitions(total)]


class SegreTests(unittest.TestCase):
    def test_parts_must_be_positive_and_decreasing(self):
        with self.assertRaises(ValueError):
            Segre((1, 2))
        with self.assertRaises(ValueError):
            Segre((2, 0))

    def test_from_sizes_sorts_and_drops_zeros(self):
        self.assertEqual(Segre.from_sizes([1, 0, 3, 2]).parts, (3, 2, 1))

    def test_partition_count_up_to_six(self):
        self.assertEqual(len(ALL_SEGRES), 1 + 2 + 3 + 5 + 7 + 11)

    def test_t_alpha_sums_pairwise_minima(self):
        self.assertEqual(t_alpha(Segre((2, 1)), Segre((3,))), 3)
        self.assertEqual(t_alpha(Segre((2, 2)), Segre((2, 1))), 6)
        self.assertEqual(t_alpha(Segre(), Segre((4,))), 0)


class MoveTests(unittest.TestCase):
    def test_mlw_sites_need_a_level_run_before_q(self):
        s = Segre((3, 3, 2, 1))

        self.assertTrue(is_mlw_site(s, 1, 3))
        self.assertTrue(is_mlw_site(s, 2, 3))
        self.assertFalse(is_mlw_site(s, 1, 4))
        self.assertFalse(is_mlw_site(s, 3, 3))
        self.assertIn((3, 4), mlw_sites(s))

    def test_mlw_move_grows_p_and_shrinks_q(self):
        self.assertEqual(mlw_move(Segre((2, 2)), 1, 2), (Segre((3, 1)), False))
        self.assertEqual(mlw_move(Segre((1, 1)), 1, 2), (Segre((2,)), True))
        with self.assertRaises(ValueError):
            mlw_move(Segre((3, 2, 1)), 1, 3)

    def test_mlw_move_keeps_the_eigenvalue_and_flags_a_lost_block(self):
        lost = mlw_move(Segre((2, 2, 1)), 1, 3)
        tail = mlw_move(Segre((3, 1, 1)), 2, 3)

        self.assertEqual(lost.segre, Segre((3, 2)))
        self.assertTrue(lost.drops_block)
        self.assertEqual(tail.segre, Segre((3, 2)))
        self.assertTrue(tail.drops_block)
        self.assertFalse(mlw_move(Segre((3, 3, 2)), 1, 3).drops_block)
        for s in ALL_SEGRES:
            for p, q in mlw_sites(s):
                moved = mlw_move(s, p, q)
                with self.subTest(s=s.parts, p=p, q=q):
                    self.assertEqual(moved.segre.total, s.total)
                    self.assertEqual(moved.drops_block, len(moved.segre) == len(s) - 1)

    def test_hc_move_splits_at_the_cut(self):
        self.assertEqual(hc_move(Segre((3, 1)), 2), (Segre((2, 1)), Segre((1,))))
        self.assertEqual(hc_move(Segre((3, 3)), 1), (Segre((1, 1)), Segre((2, 2))))
        with self.assertRaises(ValueError):
            hc_move(Segre((2, 1)), 2)
        with self.assertRaises(ValueError):
            hc_move(Segre(()), 1)

    def test_mlw_drop_counts_the_blocks_between_d_q_and_d_p(self):
        for d in ALL_SEGRES:
            for e in ALL_SEGRES:
                for p, q in mlw_sites(d):
                    report = check_mlw_lemma(d, e, p, q)
                    between = sum(1 for e_j in e.parts if d.parts[q - 1] <= e_j <= d.parts[p - 1])
                    with self.subTest(d=d.parts, e=e.parts, p=p, q=q):
                        self.assertTrue(report.holds)
                        self.assertEqual(report.T - report.T_tilde, between)

    def test_hc_never_increases_the_interaction_count(self):
        for d in ALL_SEGRES:
            for e in ALL_SEGRES:
                for cut_d in range(1, d.parts[0]):
                    for cut_e in range(1, e.parts[0]):
                        with self.subTest(d=d.parts, e=e.parts, cut_d=cut_d, cut_e=cut_e):
                            self.assertTrue(check_hc_lemma(d, e, cut_d, cut_e).holds)

    def test_hc_reports_the_better_pairing(self):
        report = check_hc_lemma(Segre((3,)), Segre((3,)), 1, 2)

        # {1}+{2} against {2}+{1}: pairing the equal halves keeps everything
        self.assertTrue(report.swapped)
        self.assertEqual(report.T_tilde, 3)
        self.assertEqual(report.T, 3)
        self.assertTrue(report.holds)


class BundleTests(unittest.TestCase):
    def test_parse_render_round_trip(self):
        for text in ("{2,1}|{1}|inf:{1}", "{3}", "{2,2}|{2,2}", "{1}|inf:{2,1}"):
            with self.subTest(text=text):
                self.assertEqual(render_bundle(parse_bundle(text)), text)

    def test_partitions_are_put_in_canonical_order(self):
        self.assertEqual(render_bundle(parse_bundle("{1} | {1,2} | inf:{1}")), "{2,1}|{1}|inf:{1}")

    def test_invalid_bundles_are_rejected(self):
        for text in ("", "{}", "{0}", "{a}", "inf:{1}|inf:{2}", "{1}|", "[1]"):
            with self.subTest(text=text):
                with self.assertRaises(ValueError):
                    parse_bundle(text)

    def test_single_simple_eigenvalue_has_no_cover(self):
        self.assertEqual(enumerate_covers(parse_bundle("{1}")), [])

    def test_covers_of_a_double_pair(self):
        covers = [render_bundle(b) for b in enumerate_covers(parse_bundle("{2,2}"))]

        self.assertIn("{3,1}", covers)
        self.assertIn("{1,1}|{1,1}", covers)
        self.assertEqual(covers, sorted(covers))
        self.assertNotIn("{2,2}", covers)

    def test_infinite_eigenvalue_may_turn_finite(self):
        covers = [render_bundle(b) for b in enumerate_covers(parse_bundle("{1}|inf:{1}"))]

        self.assertIn("{1}|{1}", covers)
        self.assertTrue(all("inf:" not in c for c in covers))

    def test_covers_preserve_the_total_size(self):
        for text in ("{2,1}|{1}", "{3}|inf:{1,1}", "{2,2}|inf:{2}"):
            bundle = parse_bundle(text)
            for cover in enumerate_covers(bundle):
                with self.subTest(bundle=text, cover=render_bundle(cover)):
                    self.assertEqual(cover.size, bundle.size)

    def test_bundle_equality_ignores_partition_order(self):
        first = RegularBundle.of([Segre((1,)), Segre((2, 1))])
        second = RegularBundle.of([Segre((2, 1)), Segre((1,))])

        self.assertEqual(first, second)


if __name__ == "__main__":
    unittest.main()
