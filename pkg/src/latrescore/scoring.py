"""Sequence scorers: stateful incremental language models behind one API.

A scorer is a pure function of (state, word): advancing the same state
with the same word always yields the same (next state, log-prob), bit for
bit, across runs and processes.  States are immutable values.  Backward
scorers are ordinary forward scorers whose model was built from reversed
text; the direction attribute only tells session orchestration which way
to feed data.
"""

import hashlib
import math
from abc import ABC, abstractmethod

from .arpa import BOS, EOS, UNK, NgramTable
from .errors import ScorerError

FORWARD = "forward"
BACKWARD = "backward"


class SequenceScorer(ABC):
    """Incremental scorer interface.

    ``context_kind`` declares how much carried-over context is usable:
    ``unbounded`` (recurrent-like, the whole past matters) or ``bounded``
    (only a window does, so session context may be truncated).
    ``proper`` marks scorers whose conditional distributions sum to one.
    """

    name = "scorer"
    direction = FORWARD
    context_kind = "unbounded"
    proper = True

    @abstractmethod
    def init_state(self):
        """The empty-context state; deterministic."""

    @abstractmethod
    def advance(self, state, word):
        """Return (next state, natural-log probability of word)."""

    def in_vocab(self, word):
        """True/False when membership is decidable, else None."""
        return None


def score_sequence(scorer, words, start=None):
    """Fold advance over ``words`` left to right.

    Returns (total log-prob, final state).  Feeding a prefix first and
    continuing is bit-identical to one pass, which is what makes prefix
    feeding usable for context carry-over.
    """
    state = scorer.init_state() if start is None else start
    total = 0.0
    for word in words:
        state, logp = scorer.advance(state, word)
        total += logp
    return total, state


def perplexity(scorer, corpus, score_eos=False):
    """Corpus perplexity exp(-sum logp / tokens) over sentences.

    With ``score_eos`` the ARPA sentence-boundary convention applies:
    ``<s>`` conditions the first word without being scored and ``</s>``
    is scored and counted.  Default is off: raw word streams, matching
    boundary-free rescoring.
    """
    if score_eos and (scorer.in_vocab(BOS) is False
                      or scorer.in_vocab(EOS) is False):
        raise ScorerError(
            "score_eos needs <s> and </s> in the model vocabulary")
    total = 0.0
    tokens = 0
    for sentence in corpus:
        state = scorer.init_state()
        if score_eos:
            state, _ = scorer.advance(state, BOS)
        for word in sentence:
            state, logp = scorer.advance(state, word)
            total += logp
            tokens += 1
        if score_eos:
            _, logp = scorer.advance(state, EOS)
            total += logp
            tokens += 1
    if tokens == 0:
        raise ScorerError("perplexity needs at least one scored token")
    return math.exp(-total / tokens)


class NgramScorer(SequenceScorer):
    """Back-off n-gram scorer over an :class:`NgramTable`.

    Out-of-vocabulary words map to ``<unk>`` and the state advances with
    ``<unk>``; a table without ``<unk>`` is refused up front unless the
    caller explicitly opts out (closed-vocabulary tables built in code).
    """

    context_kind = "bounded"

    def __init__(self, table, direction=FORWARD, name="ngram", unk=UNK):
        if unk is not None and (unk,) not in table.probs:
            raise ScorerError(f"model has no {unk} entry; cannot map OOVs")
        self.table = table
        self.direction = direction
        self.name = name
        self.unk = unk
        self._history = max(0, table.order - 1)

    def init_state(self):
        return ()

    def in_vocab(self, word):
        return (word,) in self.table.probs

    def _map(self, word):
        if (word,) in self.table.probs:
            return word
        if self.unk is None:
            raise ScorerError(f"out-of-vocabulary word {word!r}")
        return self.unk

    def advance(self, state, word):
        word = self._map(word)
        logp = self.table.logprob(state, word)
        next_state = (state + (word,))[max(0, len(state) + 1 - self._history):]
        if self._history == 0:
            next_state = ()
        return next_state, logp


class MockScorer(SequenceScorer):
    """Deterministic stand-in for a neural LM.

    The conditional distribution over the vocabulary is derived from a
    keyed hash of (history digest, word) and normalized, so it is proper,
    unbounded-context, pure, and reproducible across processes.  Scheme:
    blake2b keyed with the seed; the state digest starts at H("init") and
    advances as H("w:" + digest + word); each word's weight is the first
    8 bytes of H("p:" + digest + word) plus one.
    """

    def __init__(self, seed, vocab, direction=FORWARD, name=None):
        if not vocab:
            raise ScorerError("mock scorer needs a non-empty vocab")
        self.seed = seed
        self.vocab = tuple(sorted(set(vocab)))
        self.direction = direction
        self.name = name or f"mock-{seed}"
        self._key = int(seed).to_bytes(8, "little", signed=True)
        self._dist_cache = {}

    def _h(self, payload):
        return hashlib.blake2b(payload, key=self._key,
                               digest_size=16).digest()

    def in_vocab(self, word):
        return word in self.vocab

    def init_state(self):
        return self._h(b"init")

    def _weights(self, state):
        cached = self._dist_cache.get(state)
        if cached is None:
            weights = {w: int.from_bytes(
                self._h(b"p:" + state + w.encode("utf-8"))[:8], "big") + 1
                for w in self.vocab}
            log_total = math.log(sum(weights.values()))
            cached = {w: math.log(n) - log_total for w, n in weights.items()}
            self._dist_cache[state] = cached
        return cached

    def advance(self, state, word):
        dist = self._weights(state)
        if word not in dist:
            raise ScorerError(f"word {word!r} not in mock vocabulary")
        next_state = self._h(b"w:" + state + word.encode("utf-8"))
        return next_state, dist[word]


class TableScorer(SequenceScorer):
    """Context-free scorer from a fixed word -> log-prob table.

    Handy as a controllable test double (e.g. mirroring a lattice's own
    language scores).  Not a probability model unless the table happens
    to normalize, hence ``proper=False``.
    """

    proper = False
    context_kind = "bounded"

    def __init__(self, logprobs, direction=FORWARD, name="table",
                 default=None):
        self.logprobs = dict(logprobs)
        self.direction = direction
        self.name = name
        self.default = default

    def init_state(self):
        return ()

    def in_vocab(self, word):
        return word in self.logprobs or self.default is not None

    def advance(self, state, word):
        if word in self.logprobs:
            return (), self.logprobs[word]
        if self.default is None:
            raise ScorerError(f"word {word!r} not in table")
        return (), self.default


def uniform_scorer(vocab, direction=FORWARD, name="uniform"):
    """Proper unigram scorer assigning log(1/|vocab|) to every vocab word."""
    vocab = tuple(sorted(set(vocab)))
    if not vocab:
        raise ScorerError("uniform scorer needs a non-empty vocab")
    logp = -math.log(len(vocab))
    scorer = TableScorer({w: logp for w in vocab}, direction=direction,
                         name=name)
    scorer.proper = True
    return scorer


def table_from_conditionals(order, unigrams, conditionals):
    """Build a complete (no-backoff-needed) NgramTable from distributions.

    ``unigrams`` maps word -> prob; ``conditionals`` maps context tuple ->
    {word: prob}.  Probabilities are plain (not log); zero entries are
    skipped.
    """
    table = NgramTable(order=order)
    for word, p in unigrams.items():
        if p > 0.0:
            table.probs[(word,)] = math.log(p)
    for context, dist in conditionals.items():
        for word, p in dist.items():
            if p > 0.0:
                table.probs[context + (word,)] = math.log(p)
    return table
