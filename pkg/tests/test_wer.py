import random
from fractions import Fraction

import pytest

from latrescore.errors import ToolkitError
from latrescore.wer import (corpus_wer, format_report_tsv, oracle_wer,
                            relative_reduction, wer)

from oracles import levenshtein


class TestWer:
    def test_identical_is_zero(self):
        counts = wer(["a", "b", "c"], ["a", "b", "c"])
        assert counts.errors == 0
        assert counts.wer == 0.0

    def test_empty_hypothesis_all_deletions(self):
        counts = wer(["a", "b", "c", "d"], [])
        assert counts.deletions == 4
        assert counts.substitutions == counts.insertions == 0
        assert counts.wer == 1.0

    def test_sub_plus_deletion(self):
        counts = wer(["a", "b", "c", "d"], ["a", "x", "c"])
        assert counts.substitutions == 1
        assert counts.deletions == 1
        assert counts.insertions == 0
        assert counts.wer == 0.5

    def test_substitution_preferred_over_ins_del(self):
        counts = wer(["a"], ["b"])
        assert counts.substitutions == 1
        assert counts.deletions == 0 and counts.insertions == 0

    def test_empty_reference_rejected(self):
        with pytest.raises(ToolkitError, match="empty reference"):
            wer([], ["a"])

    def test_error_count_matches_independent_levenshtein(self):
        rng = random.Random(8)
        vocab = ["a", "b", "c", "d"]
        for _ in range(200):
            ref = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
            hyp = [rng.choice(vocab) for _ in range(rng.randint(0, 12))]
            counts = wer(ref, hyp)
            assert counts.errors == levenshtein(ref, hyp)
            assert counts.errors <= len(ref) + len(hyp)

    def test_wer_can_exceed_one(self):
        counts = wer(["a"], ["b", "c", "d"])
        assert counts.wer > 1.0


class TestCorpusWer:
    def test_single_pair(self):
        pair = (["a", "b"], ["a", "c"])
        assert corpus_wer([pair]).errors == wer(*pair).errors

    def test_perfect_plus_empty_is_half(self):
        ref = ["a", "b", "c"]
        counts = corpus_wer([(ref, ref), (ref, [])])
        assert counts.wer == 0.5

    def test_matches_independent_script_totals(self):
        rng = random.Random(44)
        vocab = ["a", "b", "c", "d", "e"]
        pairs = []
        for _ in range(100):
            ref = [rng.choice(vocab) for _ in range(rng.randint(1, 10))]
            hyp = [w if rng.random() > 0.2 else rng.choice(vocab)
                   for w in ref]
            if rng.random() < 0.2:
                hyp = hyp[:-1]
            pairs.append((ref, hyp))
        counts = corpus_wer(pairs)
        total_errors = sum(levenshtein(r, h) for r, h in pairs)
        total_len = sum(len(r) for r, _ in pairs)
        assert counts.errors == total_errors
        assert counts.reference_length == total_len

    def test_equals_length_weighted_mean(self):
        pairs = [(["a", "b"], ["a", "x"]), (["c"] * 5, ["c"] * 4)]
        counts = corpus_wer(pairs)
        parts = [wer(r, h) for r, h in pairs]
        weighted = sum(Fraction(p.errors, 1) for p in parts) / \
            sum(Fraction(p.reference_length, 1) for p in parts)
        assert Fraction(counts.errors, counts.reference_length) == weighted


class TestRelativeReduction:
    def test_headline_values(self):
        assert relative_reduction(9.0, 6.8) == pytest.approx(24.4, abs=0.05)

    def test_dev_column_values(self):
        assert relative_reduction(7.7, 5.9) == pytest.approx(23.4, abs=0.05)

    def test_no_change_is_zero(self):
        assert relative_reduction(3.3, 3.3) == 0.0

    def test_zero_baseline_rejected(self):
        with pytest.raises(ToolkitError):
            relative_reduction(0.0, 1.0)


class TestOracleWer:
    def test_reference_included_gives_zero(self):
        candidates = [("a", "x"), ("a", "b"), ("c",)]
        assert oracle_wer(candidates, ["a", "b"]).errors == 0

    def test_single_candidate(self):
        counts = oracle_wer([("a", "x")], ["a", "b"])
        assert counts.errors == wer(["a", "b"], ["a", "x"]).errors

    def test_never_worse_than_first_candidate(self):
        rng = random.Random(2)
        vocab = ["a", "b", "c"]
        for _ in range(50):
            ref = [rng.choice(vocab) for _ in range(rng.randint(1, 8))]
            cands = [[rng.choice(vocab)
                      for _ in range(rng.randint(0, 8))]
                     for _ in range(rng.randint(1, 10))]
            assert oracle_wer(cands, ref).errors <= \
                wer(ref, cands[0]).errors

    def test_tie_keeps_first(self):
        counts = oracle_wer([("x", "b"), ("a", "y")], ["a", "b"])
        first = wer(["a", "b"], ["x", "b"])
        assert (counts.substitutions, counts.deletions, counts.insertions) \
            == (first.substitutions, first.deletions, first.insertions)


def test_report_tsv_layout():
    rows = [{"iteration": 1, "method": "iterative", "search_setting": "rich",
             "context": "yes", "dev_wer": 0.059, "eval_wer": 0.07}]
    text = format_report_tsv(rows, comments=("note",))
    lines = text.splitlines()
    assert lines[0] == "# note"
    assert lines[1].split("\t") == ["iteration", "method", "search_setting",
                                    "context", "dev_wer", "eval_wer"]
    assert lines[2].split("\t") == ["1", "iterative", "rich", "yes", "5.9",
                                    "7.0"]
