"""Desk-scale synthetic replica of the rescoring experiments.

A world plants a known "true" language model (a random Markov chain over
a small vocabulary), samples truth word streams from it, and wraps them
in lattices whose confusable alternatives are sometimes acoustically more
attractive than the truth.  The ensemble scorers are perturbed variants
of the true model (forward/backward pairs), so combining more of them
averages the perturbations away and pulls the 1-best back toward the
truth, which is the regime that makes equal-weight combination sensible.
"""

import hashlib
import math
import os
from dataclasses import dataclass

import numpy as np

from .arpa import UNK
from .context import ContextPolicy, MODE_NONE, MODE_SCHEDULE
from .ensemble import IterationSchedule, run_iterative
from .errors import ToolkitError
from .lattice import Arc, make_lattice
from .nbest import extract_nbest, rescore_nbest_session
from .pushforward import RescoreParams
from .scoring import (BACKWARD, FORWARD, NgramScorer, SequenceScorer,
                      table_from_conditionals)
from .sessions import LatticeSession, SessionEntry, write_manifest
from .slf import write_slf
from .wer import corpus_wer


class PerturbedScorer(SequenceScorer):
    """A base scorer with seed-keyed log-prob noise, renormalized.

    Each (state, word) gets a deterministic offset drawn uniformly from
    [-scale, scale] via a keyed hash, and the conditional distribution is
    renormalized over the base vocabulary, so the result stays a proper
    model with perplexity close to the base one.
    """

    def __init__(self, base, seed, scale, name=None):
        self.base = base
        self.direction = base.direction
        self.context_kind = base.context_kind
        self.scale = scale
        self.name = name or f"{base.name}+p{seed}"
        self._key = int(seed).to_bytes(8, "little", signed=True)
        self._vocab = tuple(sorted(base.table.vocab))
        self._dist_cache = {}

    def init_state(self):
        return self.base.init_state()

    def _delta(self, state, word):
        payload = repr((state, word)).encode("utf-8")
        digest = hashlib.blake2b(payload, key=self._key,
                                 digest_size=8).digest()
        unit = int.from_bytes(digest, "big") / float(1 << 64)
        return (2.0 * unit - 1.0) * self.scale

    def _dist(self, state):
        cached = self._dist_cache.get(state)
        if cached is None:
            noisy = {}
            for w in self._vocab:
                _, logp = self.base.advance(state, w)
                noisy[w] = logp + self._delta(state, w)
            peak = max(noisy.values())
            log_z = peak + math.log(
                sum(math.exp(v - peak) for v in noisy.values()))
            cached = {w: v - log_z for w, v in noisy.items()}
            self._dist_cache[state] = cached
        return cached

    def advance(self, state, word):
        dist = self._dist(state)
        next_state, _ = self.base.advance(state, word)
        mapped = word if word in dist else UNK
        return next_state, dist[mapped]


@dataclass
class SyntheticWorld:
    seed: int
    vocab: tuple
    true_forward: object
    true_backward: object
    ensemble: list
    noise: float
    alpha: float = 1.0
    original_lm: float = 0.0  # uniform language score planted on arcs


def _chain_tables(rng, vocab):
    """Random stationary Markov chain and its exact time reversal.

    Returns (forward table, backward table, transition matrix, pi):
    complete bigram tables whose unigrams are the stationary distribution,
    so the backward model is the true model of reversed text.
    """
    words = vocab + (UNK,)
    v = len(words)
    trans = rng.gamma(0.35, size=(v, v)) + 1e-6
    trans /= trans.sum(axis=1, keepdims=True)
    # stationary distribution by power iteration
    pi = np.full(v, 1.0 / v)
    for _ in range(500):
        pi = pi @ trans
        pi /= pi.sum()
    back = (pi[:, None] * trans).T / pi[:, None]
    back /= back.sum(axis=1, keepdims=True)

    def build(matrix):
        unigrams = {w: float(pi[i]) for i, w in enumerate(words)}
        conditionals = {(w,): {u: float(matrix[i, j])
                               for j, u in enumerate(words)}
                        for i, w in enumerate(words)}
        return table_from_conditionals(2, unigrams, conditionals)

    return build(trans), build(back), trans, pi


def _sample_stream(rng, trans_pi, vocab, length):
    # truth text is sampled over real words only: the chain's <unk> state
    # exists for OOV mapping, not for generation
    trans, pi = trans_pi
    v = len(vocab)
    pi_w = pi[:v] / pi[:v].sum()
    trans_w = trans[:v, :v] / trans[:v, :v].sum(axis=1, keepdims=True)
    stream = []
    state = rng.choice(v, p=pi_w)
    for _ in range(length):
        stream.append(vocab[state])
        state = rng.choice(v, p=trans_w[state])
    return stream


def _utterance_lattice(rng, utt_id, truth, vocab, noise, uniform_lm):
    arcs = []
    arc_id = 0
    for i, word in enumerate(truth):
        acou = -1.0 + 0.25 * rng.standard_normal()
        arcs.append(Arc(arc_id, i, i + 1, word, round(acou, 6), uniform_lm))
        arc_id += 1
        if rng.random() < noise:
            for _ in range(1 + (rng.random() < 0.35)):
                alt = vocab[rng.integers(len(vocab))]
                if alt == word:
                    continue
                bias = -0.15 + 0.35 * rng.standard_normal()
                arcs.append(Arc(arc_id, i, i + 1, alt,
                                round(acou + bias, 6), uniform_lm))
                arc_id += 1
    return make_lattice(utt_id, range(len(truth) + 1), arcs)


def build_world(seed, ensemble_size=8, vocab_size=12,
                utterances_per_session=4, sessions=1,
                words_per_utterance=6, noise=0.7, perturb_scale=2.4,
                alpha=1.0):
    """Deterministic synthetic world plus its lattice sessions.

    Truth word streams continue across utterance boundaries within a
    session, so context carry-over has something real to exploit.  Every
    lattice embeds its truth path; references are recorded per entry.
    """
    if ensemble_size < 2:
        raise ToolkitError("need at least two ensemble scorers")
    if vocab_size < 4:
        raise ToolkitError("vocab_size must be >= 4")
    rng = np.random.default_rng(seed)
    vocab = tuple(f"w{i:02d}" for i in range(vocab_size))
    fwd_table, bwd_table, trans, pi = _chain_tables(rng, vocab)
    true_forward = NgramScorer(fwd_table, FORWARD, name="true-fwd")
    true_backward = NgramScorer(bwd_table, BACKWARD, name="true-bwd")

    ensemble = []
    for e in range(ensemble_size):
        base = true_forward if e % 2 == 0 else true_backward
        tag = "F" if e % 2 == 0 else "B"
        ensemble.append(PerturbedScorer(base, seed * 1009 + e, perturb_scale,
                                        name=f"m{tag}{e // 2 + 1}"))
    pi_norm = pi / pi.sum()

    uniform_lm = round(-math.log(len(vocab)), 6)
    session_list = []
    for s in range(sessions):
        stream = _sample_stream(rng, (trans, pi_norm), vocab,
                                utterances_per_session * words_per_utterance)
        entries = []
        for u in range(utterances_per_session):
            truth = stream[u * words_per_utterance:
                           (u + 1) * words_per_utterance]
            utt_id = f"s{seed:03d}-{s:02d}-u{u:03d}"
            lattice = _utterance_lattice(rng, utt_id, truth, vocab, noise,
                                         uniform_lm)
            entries.append(SessionEntry(utt_id, lattice, tuple(truth)))
        session_list.append(LatticeSession(f"session-{seed:03d}-{s:02d}",
                                           entries))
    world = SyntheticWorld(seed, vocab, true_forward, true_backward,
                           ensemble, noise, alpha, uniform_lm)
    return world, session_list


def replay_curves(world, sessions, iterations, alpha=None, params=None,
                  n_best=100, contexts=(False, True)):
    """WER-vs-iteration series: lattice and 100-best, context off/on.

    Returns rows {iteration, method, context, wer} with WER as a
    fraction, aggregated over all sessions.
    """
    if iterations > len(world.ensemble):
        raise ToolkitError("iterations exceed the ensemble size")
    if alpha is None:
        alpha = world.alpha
    if params is None:
        params = RescoreParams(alpha=alpha, ngram_approx=5, beam_k=10)
    scorers = world.ensemble[:iterations]
    rows = []
    for context_on in contexts:
        label = "yes" if context_on else "no"
        schedule = IterationSchedule.from_scorers(scorers, context=context_on)
        policy = ContextPolicy(MODE_SCHEDULE if context_on else MODE_NONE,
                               window_j=1)

        per_iter = [[] for _ in range(iterations)]
        for session in sessions:
            trace = run_iterative(session, schedule, params, policy)
            for rec in trace.records:
                per_iter[rec.iteration - 1].extend(
                    zip(session.references, rec.transcripts))
        for i, pairs in enumerate(per_iter, start=1):
            rows.append({"iteration": i, "method": "lattice",
                         "context": label, "wer": corpus_wer(pairs).wer})

        per_iter = [[] for _ in range(iterations)]
        for session in sessions:
            lists = [extract_nbest(e.lattice, n_best, alpha)
                     for e in session.entries]
            steps = [(st.scorer, st.mode) for st in schedule.steps]
            snapshots = rescore_nbest_session(lists, steps, alpha, policy)
            for i, snapshot in enumerate(snapshots):
                per_iter[i].extend(
                    zip(session.references,
                        [nb.best.words for nb in snapshot]))
        for i, pairs in enumerate(per_iter, start=1):
            rows.append({"iteration": i, "method": "100best",
                         "context": label, "wer": corpus_wer(pairs).wer})
    return rows


def curves_tsv(rows):
    lines = ["iteration\tmethod\tcontext\twer"]
    for row in rows:
        lines.append(f"{row['iteration']}\t{row['method']}\t"
                     f"{row['context']}\t{100.0 * row['wer']:.2f}")
    return "\n".join(lines) + "\n"


def write_sessions(sessions, out_dir):
    """Write each session as SLF files plus a JSON Lines manifest."""
    os.makedirs(out_dir, exist_ok=True)
    manifests = []
    for session in sessions:
        session_dir = os.path.join(out_dir, session.session_id)
        os.makedirs(session_dir, exist_ok=True)
        records = []
        for entry in session.entries:
            rel = os.path.join(session.session_id,
                               f"{entry.utterance_id}.slf")
            with open(os.path.join(out_dir, rel), "wb") as fh:
                fh.write(write_slf(entry.lattice))
            records.append((entry.utterance_id, rel, entry.reference))
        manifest = os.path.join(out_dir, f"{session.session_id}.jsonl")
        write_manifest(manifest, records)
        manifests.append(manifest)
    return manifests
