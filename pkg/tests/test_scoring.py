import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latrescore.arpa import parse_arpa
from latrescore.errors import ScorerError
from latrescore.scoring import (MockScorer, NgramScorer, TableScorer,
                                perplexity, score_sequence, uniform_scorer)

from oracles import WittenBellModel, synthetic_corpus

VOCAB = ("a", "b", "c", "d")


@pytest.fixture(scope="module")
def wb3():
    corpus = synthetic_corpus(23, sentences=1000)
    oracle = WittenBellModel(corpus, order=3)
    scorer = NgramScorer(parse_arpa(oracle.to_arpa().encode("utf-8")))
    return corpus, oracle, scorer


def test_uniform_unigram_quarter():
    scorer = uniform_scorer(VOCAB)
    state = scorer.init_state()
    for word in VOCAB:
        _, logp = scorer.advance(state, word)
        assert logp == pytest.approx(math.log(0.25), abs=1e-12)


def test_ngram_init_state_is_empty_history(wb3):
    _, _, scorer = wb3
    assert scorer.init_state() == ()


def test_oov_maps_to_unk(wb3):
    _, oracle, scorer = wb3
    state, logp = scorer.advance((), "NOT-IN-VOCAB")
    assert state == ("<unk>",)
    assert logp == pytest.approx(oracle.logprob((), "<unk>"), abs=1e-9)


def test_missing_unk_rejected_at_load():
    arpa = b"\\data\\\nngram 1=1\n\n\\1-grams:\n-0.301030 a\n\n\\end\\\n"
    with pytest.raises(ScorerError, match="<unk>"):
        NgramScorer(parse_arpa(arpa))


def test_ngram_matches_backoff_oracle(wb3):
    corpus, oracle, scorer = wb3
    rng = random.Random(5)
    words = [g[0] for g in oracle.probs if len(g) == 1]
    for _ in range(100):
        hist = tuple(rng.choice(words) for _ in range(rng.randint(0, 4)))
        word = rng.choice(words)
        _, state = score_sequence(scorer, hist)
        _, logp = scorer.advance(state, word)
        assert logp == pytest.approx(oracle.logprob(hist, word), abs=1e-9)


class TestScoreSequence:
    def test_empty_sequence_is_identity(self):
        scorer = MockScorer(1, VOCAB)
        start = scorer.init_state()
        total, state = score_sequence(scorer, [], start)
        assert total == 0.0
        assert state == start

    def test_uniform_three_words(self):
        scorer = uniform_scorer(VOCAB)
        total, _ = score_sequence(scorer, ["a", "b", "a"])
        assert total == pytest.approx(3 * math.log(0.25), abs=1e-12)

    def test_split_equals_whole_bit_exact(self):
        scorer = MockScorer(42, VOCAB)
        rng = random.Random(13)
        for _ in range(50):
            words = [rng.choice(VOCAB) for _ in range(rng.randint(0, 12))]
            cut = rng.randint(0, len(words))
            whole_total, whole_state = score_sequence(scorer, words)
            head_total, head_state = score_sequence(scorer, words[:cut])
            tail_total, tail_state = score_sequence(scorer, words[cut:],
                                                    start=head_state)
            assert head_total + tail_total == whole_total
            assert tail_state == whole_state


class TestPerplexity:
    def test_uniform_vocab_of_four(self):
        scorer = uniform_scorer(VOCAB)
        corpus = [["a", "b"], ["c"], ["d", "d", "a"]]
        assert perplexity(scorer, corpus) == pytest.approx(4.0, abs=1e-12)

    def test_single_certain_word(self):
        scorer = TableScorer({"w": 0.0})
        assert perplexity(scorer, [["w"]]) == pytest.approx(1.0, abs=1e-12)

    def test_matches_independent_script(self, wb3):
        corpus, oracle, scorer = wb3
        held_out = synthetic_corpus(501, sentences=50)
        expected = oracle.perplexity(held_out)
        got = perplexity(scorer, held_out)
        assert got == pytest.approx(expected, rel=1e-6)

    def test_score_eos_needs_boundary_tokens(self, wb3):
        _, _, scorer = wb3
        with pytest.raises(ScorerError):
            perplexity(scorer, [["v00"]], score_eos=True)

    def test_score_eos_follows_arpa_convention(self):
        arpa = (b"\\data\\\nngram 1=4\n\n\\1-grams:\n"
                b"-0.60206 a\n-0.60206 </s>\n-99 <s>\n-1.0 <unk>\n"
                b"\n\\end\\\n")
        scorer = NgramScorer(parse_arpa(arpa))
        # one word plus </s>, both scored log10(0.25); <s> conditions only
        value = perplexity(scorer, [["a"]], score_eos=True)
        assert value == pytest.approx(10 ** 0.60206, rel=1e-6)


class TestMockScorer:
    def test_distribution_normalizes(self):
        scorer = MockScorer(3, VOCAB)
        state = scorer.init_state()
        for words in ((), ("a",), ("a", "b"), ("d", "d", "c")):
            _, state_n = score_sequence(scorer, words)
            total = sum(math.exp(scorer.advance(state_n, w)[1])
                        for w in VOCAB)
            assert total == pytest.approx(1.0, abs=1e-9)
        assert state == scorer.init_state()

    def test_seeds_change_rankings(self):
        a = MockScorer(1, VOCAB)
        b = MockScorer(2, VOCAB)
        rng = random.Random(3)
        differing = 0
        for _ in range(100):
            hist = [rng.choice(VOCAB) for _ in range(rng.randint(0, 6))]
            _, sa = score_sequence(a, hist)
            _, sb = score_sequence(b, hist)
            rank_a = sorted(VOCAB, key=lambda w: -a.advance(sa, w)[1])
            rank_b = sorted(VOCAB, key=lambda w: -b.advance(sb, w)[1])
            differing += rank_a != rank_b
        assert differing > 0

    def test_same_history_same_distribution(self):
        scorer = MockScorer(7, VOCAB)
        _, s1 = score_sequence(scorer, ["a", "b", "c"])
        _, s2 = score_sequence(scorer, ["a", "b", "c"])
        assert s1 == s2
        for w in VOCAB:
            assert scorer.advance(s1, w) == scorer.advance(s2, w)

    def test_frozen_values_stable_across_processes(self):
        # pinned from a reference run; blake2b makes these process-stable
        scorer = MockScorer(42, VOCAB)
        _, logp = scorer.advance(scorer.init_state(), "a")
        assert logp == pytest.approx(-1.2264290752951084, abs=1e-15)
        _, state = score_sequence(scorer, ["a", "b"])
        _, logp2 = scorer.advance(state, "d")
        assert logp2 == pytest.approx(-1.7501847527696484, abs=1e-15)

    def test_oov_rejected(self):
        scorer = MockScorer(1, VOCAB)
        with pytest.raises(ScorerError):
            scorer.advance(scorer.init_state(), "zzz")

    @given(st.lists(st.sampled_from(VOCAB), max_size=8))
    @settings(max_examples=40, deadline=None)
    def test_purity_for_any_history(self, words):
        scorer = MockScorer(11, VOCAB)
        t1, s1 = score_sequence(scorer, words)
        t2, s2 = score_sequence(scorer, words)
        assert t1 == t2 and s1 == s2


def test_backward_scorer_is_forward_over_reversed_corpus():
    corpus = synthetic_corpus(31, sentences=200)
    reversed_corpus = [list(reversed(sent)) for sent in corpus]
    fwd = WittenBellModel(corpus, order=2)
    bwd = WittenBellModel(reversed_corpus, order=2)
    scorer = NgramScorer(parse_arpa(bwd.to_arpa().encode("utf-8")),
                         direction="backward")
    # scoring code is direction-blind; direction only labels the feeding
    sent = corpus[0]
    total, _ = score_sequence(scorer, list(reversed(sent)))
    assert total == pytest.approx(bwd.sentence_logprob(list(reversed(sent))),
                                  abs=1e-9)
    assert scorer.direction == "backward"
    assert fwd.sentence_logprob(sent) != pytest.approx(total, abs=1e-6)
