"""N-best lists: exact extraction of distinct word sequences from a
lattice, whole-sequence ensemble rescoring, and the flat file format.

Extraction runs a per-node beam over distinct word sequences (duplicates
by different arc paths keep their best-scoring path), pruning only
strictly-dominated sequences, so the result equals the top N of brute
force enumeration after deduplication.
"""

from dataclasses import dataclass, field

from .errors import FormatError, ToolkitError
from .lattice import EPSILON, path_from_arcs, topo_order, validate
from .pushforward import interpolation_weight
from .scoring import score_sequence

ITERATIVE = "iterative"
SIMULTANEOUS = "simultaneous"


@dataclass
class NBestEntry:
    words: tuple
    acoustic_total: float
    lm_total: float
    combined: float
    arcs: tuple = ()


@dataclass
class NBestList:
    utterance_id: str
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    @property
    def best(self):
        return self.entries[0]


def extract_nbest(lattice, n, alpha):
    """The n highest-scoring distinct word sequences in the lattice.

    Scores are acoustic_total + alpha * lm_total; exact ties order by the
    lexicographically smaller word sequence.
    """
    if n < 1:
        raise ToolkitError("n must be >= 1")
    report = validate(lattice)
    if not report.ok:
        raise ToolkitError("; ".join(report.violations))
    order = topo_order(lattice)
    # per node: words -> (combined score, arc tuple)
    book = {node: {} for node in order}
    book[lattice.begin][()] = (0.0, ())
    for node in order:
        entries = _prune_dominated(book[node], n)
        book[node] = entries
        for words, (score, arcs) in entries.items():
            for arc in sorted(lattice.out_arcs(node), key=lambda a: a.arc_id):
                new_words = words if arc.word == EPSILON \
                    else words + (arc.word,)
                new_score = score + arc.acoustic + alpha * arc.lm
                new_arcs = arcs + (arc,)
                target = book[arc.to_node]
                cur = target.get(new_words)
                if cur is None or new_score > cur[0] or (
                        new_score == cur[0] and
                        _arc_ids(new_arcs) < _arc_ids(cur[1])):
                    target[new_words] = (new_score, new_arcs)

    finals = sorted(book[lattice.end].items(),
                    key=lambda item: (-item[1][0], item[0]))[:n]
    entries = []
    for words, (score, arcs) in finals:
        path = path_from_arcs(arcs)
        entries.append(NBestEntry(words, path.acoustic_total, path.lm_total,
                                  score, tuple(arcs)))
    return NBestList(lattice.utterance_id, entries)


def _arc_ids(arcs):
    return tuple(a.arc_id for a in arcs)


def _prune_dominated(entries, n):
    """Keep sequences not strictly beaten by n others (boundary ties stay).

    Only strictly-worse prefixes can be dropped without affecting the
    exact final top n, because a shared suffix preserves strict score
    order but not lexicographic order.
    """
    if len(entries) <= n:
        return entries
    scores = sorted((s for s, _ in entries.values()), reverse=True)
    floor = scores[n - 1]
    return {w: v for w, v in entries.items() if v[0] >= floor}


def rescore_nbest(nblist, scorers, alpha, mode=ITERATIVE, contexts=None):
    """Whole-sequence ensemble rescoring of one list.

    Iterative mode folds each scorer's sequence score into the language
    total with weight 1/(1+i); simultaneous mode mixes the original total
    with the scorers' mean using beta = I/(I+1).  Both equal the plain
    mean of {original, model scores}, so the two modes coincide.

    ``contexts`` optionally gives one context word sequence per scorer
    (already in that scorer's feeding orientation).
    """
    if not nblist.entries:
        raise ToolkitError("empty n-best list")
    if not scorers:
        raise ToolkitError("need at least one scorer")
    model_totals = [_sequence_scores(nblist, scorer,
                                     contexts[i] if contexts else ())
                    for i, scorer in enumerate(scorers)]
    refined = []
    for e, entry in enumerate(nblist.entries):
        if mode == ITERATIVE:
            lm = entry.lm_total
            for i in range(len(scorers)):
                beta = interpolation_weight(i + 1)
                lm = (1.0 - beta) * lm + beta * model_totals[i][e]
        elif mode == SIMULTANEOUS:
            count = len(scorers)
            beta = count / (count + 1.0)
            mean = sum(model_totals[i][e] for i in range(count)) / count
            lm = (1.0 - beta) * entry.lm_total + beta * mean
        else:
            raise ToolkitError(f"unknown mode {mode!r}")
        refined.append(NBestEntry(entry.words, entry.acoustic_total, lm,
                                  entry.acoustic_total + alpha * lm,
                                  entry.arcs))
    refined.sort(key=lambda e: (-e.combined, e.words))
    return NBestList(nblist.utterance_id, refined)


def _sequence_scores(nblist, scorer, context_words):
    _, start = score_sequence(scorer, context_words)
    totals = []
    for entry in nblist.entries:
        words = entry.words if scorer.direction == "forward" \
            else tuple(reversed(entry.words))
        total, _ = score_sequence(scorer, words, start=start)
        totals.append(total)
    return totals


def rescore_nbest_session(lists, steps, alpha, policy, mode=ITERATIVE,
                          window_j=None):
    """Session-level ensemble rescoring with context carry-over.

    ``steps`` is a list of (scorer, context mode) pairs; the carried
    context for each pass is the reranked 1-best of the utterances
    already processed in that same pass, in the pass's direction.
    Returns the per-iteration lists, one list-of-lists per iteration.
    """
    from .context import MODE_NONE, SessionContext

    if window_j is None:
        window_j = policy.window_j
    lm_totals = [[e.lm_total for e in nb.entries] for nb in lists]
    snapshots = []

    def rerank(nb, lms):
        ranked = sorted(range(len(nb.entries)),
                        key=lambda e: (-(nb.entries[e].acoustic_total
                                         + alpha * lms[e]),
                                       nb.entries[e].words))
        return ranked

    if mode != ITERATIVE:
        raise ToolkitError("session rescoring is defined iteratively; "
                           "use rescore_nbest for one-shot simultaneous")

    for i, (scorer, step_mode) in enumerate(steps, start=1):
        beta = interpolation_weight(i)
        use_context = policy.mode != MODE_NONE and step_mode != MODE_NONE
        backward = scorer.direction == "backward"
        indices = range(len(lists) - 1, -1, -1) if backward \
            else range(len(lists))
        ctx = SessionContext()
        for j in indices:
            nb = lists[j]
            fed = ()
            if use_context:
                limit = window_j if scorer.context_kind == "bounded" else None
                fed = tuple(w for entry in ctx.window(limit) for w in entry)
            _, start = score_sequence(scorer, fed)
            totals = []
            for entry in nb.entries:
                words = entry.words if scorer.direction == "forward" \
                    else tuple(reversed(entry.words))
                total, _ = score_sequence(scorer, words, start=start)
                totals.append(total)
            for e in range(len(nb.entries)):
                lm_totals[j][e] = ((1.0 - beta) * lm_totals[j][e]
                                   + beta * totals[e])
            best = rerank(nb, lm_totals[j])[0]
            best_words = nb.entries[best].words
            ctx.push(tuple(reversed(best_words)) if backward else best_words)
        snapshot = []
        for j, nb in enumerate(lists):
            entries = [NBestEntry(e.words, e.acoustic_total, lm_totals[j][k],
                                  e.acoustic_total + alpha * lm_totals[j][k],
                                  e.arcs)
                       for k, e in enumerate(nb.entries)]
            entries.sort(key=lambda e: (-e.combined, e.words))
            snapshot.append(NBestList(nb.utterance_id, entries))
        snapshots.append(snapshot)
    return snapshots


def write_nbest(lists, alpha=None):
    """Serialize lists to the flat format, one entry per line:
    ``<utt-id> <rank> <acoustic> <lm> <combined> <w1> <w2> ...``"""
    lines = []
    for nb in lists:
        for rank, entry in enumerate(nb.entries, start=1):
            words = " ".join(entry.words)
            lines.append(f"{nb.utterance_id} {rank} "
                         f"{entry.acoustic_total:.6f} {entry.lm_total:.6f} "
                         f"{entry.combined:.6f}"
                         + (f" {words}" if words else ""))
    return ("\n".join(lines) + "\n").encode("utf-8")


def read_nbest(text):
    """Parse the flat format back into NBestLists, preserving order."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lists = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 5:
            raise FormatError("expected utt, rank, and three scores", lineno)
        utt_id, rank = parts[0], parts[1]
        try:
            acoustic, lm, combined = (float(parts[2]), float(parts[3]),
                                      float(parts[4]))
            int(rank)
        except ValueError:
            raise FormatError(f"bad numbers in {line!r}", lineno)
        if current is None or current.utterance_id != utt_id:
            current = NBestList(utt_id)
            lists.append(current)
        current.entries.append(NBestEntry(tuple(parts[5:]), acoustic, lm,
                                          combined))
    if not lists:
        raise FormatError("empty n-best file")
    return lists
