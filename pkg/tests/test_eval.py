import pytest

from cliqueseg.corpus import GoldSegment
from cliqueseg.evaluation import (
    WP3T,
    WPT,
    EvalReport,
    grouped_report,
    score,
)


def seg(surface, start, end, lemma=None, cls="noun:x=a"):
    return GoldSegment(surface, lemma or f"l_{surface}", cls, start, end)


def perfect_data(n=4):
    golds = {}
    for i in range(n):
        golds[f"s{i}"] = [seg("aa", 0, 2), seg("bb", 3, 5)]
    preds = {k: list(v) for k, v in golds.items()}
    return preds, golds


class TestScore:
    def test_perfect_prediction_scores_100(self):
        preds, golds = perfect_data()
        for task in (WPT, WP3T):
            rep = score(preds, golds, task)
            assert rep.macro_p == rep.macro_r == rep.macro_f == rep.pm == 100.0

    def test_half_correct_sentence(self):
        golds = {"s": [seg("aa", 0, 2), seg("bb", 3, 5)]}
        preds = {"s": [seg("aa", 0, 2), seg("zz", 3, 5)]}
        rep = score(preds, golds, WPT)
        assert rep.macro_p == pytest.approx(50.0)
        assert rep.macro_r == pytest.approx(50.0)
        assert rep.macro_f == pytest.approx(50.0)
        assert rep.pm == 0.0

    def test_wrong_class_counts_for_wpt_not_wp3t(self):
        golds = {"s": [seg("aa", 0, 2, cls="noun:x=a")]}
        preds = {"s": [seg("aa", 0, 2, cls="noun:x=b")]}
        assert score(preds, golds, WPT).macro_f == 100.0
        assert score(preds, golds, WP3T).macro_f == 0.0

    def test_wp3t_never_exceeds_wpt(self):
        import numpy as np

        rng = np.random.default_rng(0)
        surfaces = ["aa", "bb", "cc"]
        classes = ["noun:x=a", "noun:x=b"]
        preds, golds = {}, {}
        for i in range(50):
            sid = f"s{i}"
            gold = [
                seg(surfaces[rng.integers(3)], 3 * j, 3 * j + 2,
                    cls=classes[rng.integers(2)])
                for j in range(rng.integers(1, 4))
            ]
            pred = [
                seg(
                    surfaces[rng.integers(3)] if rng.random() < 0.4 else g.surface,
                    g.start,
                    g.end,
                    cls=classes[rng.integers(2)] if rng.random() < 0.4 else g.morph_class,
                )
                for g in gold
            ]
            golds[sid], preds[sid] = gold, pred
        a = score(preds, golds, WPT)
        b = score(preds, golds, WP3T)
        assert b.macro_p <= a.macro_p + 1e-9
        assert b.macro_r <= a.macro_r + 1e-9
        assert b.macro_f <= a.macro_f + 1e-9
        assert b.pm <= a.pm + 1e-9

    def test_repeated_words_matched_positionally(self):
        # the same surface twice: only the span-matched one counts
        golds = {"s": [seg("aa", 0, 2), seg("aa", 3, 5)]}
        preds = {"s": [seg("aa", 0, 2), seg("aa", 6, 8)]}
        rep = score(preds, golds, WPT)
        assert rep.macro_p == pytest.approx(50.0)

    def test_prediction_order_invariant(self):
        golds = {"s": [seg("aa", 0, 2), seg("bb", 3, 5)]}
        p1 = {"s": [seg("aa", 0, 2), seg("bb", 3, 5)]}
        p2 = {"s": [seg("bb", 3, 5), seg("aa", 0, 2)]}
        assert score(p1, golds, WPT).macro_f == score(p2, golds, WPT).macro_f

    def test_id_mismatch_rejected(self):
        preds, golds = perfect_data()
        del preds["s0"]
        with pytest.raises(ValueError, match="s0"):
            score(preds, golds, WPT)

    def test_unknown_task_rejected(self):
        preds, golds = perfect_data()
        with pytest.raises(ValueError, match="task"):
            score(preds, golds, "nope")

    def test_pm_100_implies_f_100(self):
        preds, golds = perfect_data()
        rep = score(preds, golds, WPT)
        assert rep.pm == 100.0 and rep.macro_f == 100.0


class TestGroupedReport:
    def test_single_bucket_equals_global(self):
        preds, golds = perfect_data()
        rows = grouped_report(preds, golds, "gold_word_count", WPT)
        assert len(rows) == 1
        global_rep = score(preds, golds, WPT)
        assert rows[0]["macro_f"] == global_rep.macro_f
        assert rows[0]["n_sentences"] == len(golds)

    def test_buckets_partition_sentences(self):
        golds = {
            "a": [seg("aa", 0, 2)],
            "b": [seg("aa", 0, 2), seg("bb", 3, 5)],
            "c": [seg("aa", 0, 2), seg("bb", 3, 5)],
        }
        preds = {k: list(v) for k, v in golds.items()}
        rows = grouped_report(preds, golds, "gold_word_count", WPT)
        assert sum(r["n_sentences"] for r in rows) == len(golds)
        assert [r["bucket"] for r in rows] == [1, 2]

    def test_pos_grouping_micro_recall(self):
        golds = {
            "s": [
                seg("aa", 0, 2, cls="noun:x=a"),
                seg("bb", 3, 5, cls="verb:y=a"),
                seg("cc", 6, 8, cls="verb:y=a"),
            ]
        }
        preds = {"s": [seg("aa", 0, 2, cls="noun:x=a"), seg("bb", 3, 5, cls="verb:y=a")]}
        rows = grouped_report(preds, golds, "coarse_pos", WPT)
        by_pos = {r["bucket"]: r for r in rows}
        assert by_pos["noun"]["recall"] == pytest.approx(100.0)
        assert by_pos["verb"]["recall"] == pytest.approx(50.0)

    def test_pos_wp3t_recall_below_wpt(self):
        golds = {
            "s": [
                seg("aa", 0, 2, cls="noun:x=a"),
                seg("bb", 3, 5, cls="noun:x=a"),
            ]
        }
        preds = {
            "s": [
                seg("aa", 0, 2, cls="noun:x=a"),
                seg("bb", 3, 5, cls="noun:x=b"),  # right word, wrong class
            ]
        }
        wpt = {r["bucket"]: r["recall"] for r in grouped_report(preds, golds, "coarse_pos", WPT)}
        wp3t = {r["bucket"]: r["recall"] for r in grouped_report(preds, golds, "coarse_pos", WP3T)}
        for pos in wpt:
            assert wp3t[pos] <= wpt[pos] + 1e-9

    def test_node_count_grouping(self):
        preds, golds = perfect_data()
        counts = {sid: 5 for sid in golds}
        rows = grouped_report(preds, golds, "node_count", WPT, node_counts=counts)
        assert len(rows) == 1 and rows[0]["bucket"] == 5

    def test_unknown_grouping_rejected(self):
        preds, golds = perfect_data()
        with pytest.raises(ValueError, match="grouping"):
            grouped_report(preds, golds, "nope", WPT)
