"""Push-forward lattice rescoring.

Hypotheses are extended arc by arc in topological order.  At every node,
hypotheses whose recent word histories agree (the merge key) are merged
Viterbi-style, and at most ``beam_k`` survive.  Each traversed arc gets a
refined language score interpolating the arc's previous score with the
rescoring model's conditional; the traversal itself emits a new lattice
whose nodes are (source node, merge key) pairs, so the output structure
may differ from the input.
"""

from dataclasses import dataclass, field, replace

from .errors import LatticeError
from .lattice import (EPSILON, Arc, Lattice, make_lattice,
                      path_from_arcs, topo_order, validate)

END_KEY = None  # merge keys are collapsed at the end node


@dataclass
class RescoreParams:
    """Search and interpolation knobs.

    ``ngram_approx`` is the n of n-gram approximation: hypotheses merge
    when their last n-1 words agree (``merge_on_n_words`` switches to the
    n-word reading), 0 merges everything, None disables merging (full
    histories).  ``beam_k`` caps hypotheses per node; None is unbounded.
    """

    alpha: float
    beta: float = 0.5
    ngram_approx: object = 5
    beam_k: object = 10
    merge_on_n_words: bool = False

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.ngram_approx is not None and self.ngram_approx < 0:
            raise ValueError("ngram_approx must be >= 0 or None")
        if self.beam_k is not None and self.beam_k < 1:
            raise ValueError("beam_k must be >= 1 or None")

    @property
    def key_len(self):
        """Merge-key length in words; None means unbounded."""
        if self.ngram_approx is None:
            return None
        n = self.ngram_approx
        return max(0, n if self.merge_on_n_words else n - 1)


@dataclass
class Hypothesis:
    """A partial path: its node, accumulated score, merge key, and the
    scorer state reached.  ``backlink`` is (predecessor, arc, refined_lm)
    or None at the search root."""

    node: int
    score: float
    merge_key: tuple
    state: object
    backlink: object = None

    def words(self):
        out = []
        h = self
        while h.backlink is not None:
            prev, arc, _ = h.backlink
            if arc.word != EPSILON:
                out.append(arc.word)
            h = prev
        return tuple(reversed(out))

    def arc_ids(self):
        out = []
        h = self
        while h.backlink is not None:
            prev, arc, _ = h.backlink
            out.append(arc.arc_id)
            h = prev
        return tuple(reversed(out))


@dataclass
class RescoredLattice:
    """A lattice of refined language scores plus provenance maps.

    ``node_source`` maps output node -> (source node, merge key); the end
    node's key is None because all end-node hypotheses terminate there.
    ``arc_source`` maps output arc -> source arc id and ``arc_origin_key``
    to the merge key of the hypothesis that traversed it, which together
    identify an arc across independent rescoring passes.
    """

    lattice: Lattice
    node_source: dict = field(default_factory=dict)
    arc_source: dict = field(default_factory=dict)
    arc_origin_key: dict = field(default_factory=dict)

    @property
    def utterance_id(self):
        return self.lattice.utterance_id


def interpolation_weight(i):
    """Equal-contribution interpolation weight for iteration i (1-based).

    Using 1/(1+i) at every iteration leaves the original score and the i
    model scores seen so far each weighted 1/(1+i).
    """
    if i < 1:
        raise ValueError("iteration index starts at 1")
    return 1.0 / (1.0 + i)


def refine_arc_lm(prev_lm, resc, beta):
    """Interpolate the arc's previous language score with the model's."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    return (1.0 - beta) * prev_lm + beta * resc


def extend(prev_score, acoustic, refined_lm, alpha):
    """Hypothesis extension: add the arc's acoustic and weighted LM score."""
    return prev_score + acoustic + alpha * refined_lm


def _hyp_sort_key(h):
    # merge keys are unique after merging, so this is a strict total order
    return (-h.score, h.merge_key)


def _merge_and_beam(candidates, beam_k):
    """Viterbi-merge equal merge keys, then keep the top beam_k survivors.

    Ordering is deterministic: score descending, then lexicographically
    smaller merge key; exact ties inside one key fall back to the word
    history and arc ids.
    """
    groups = {}
    for h in candidates:
        best = groups.get(h.merge_key)
        if best is None:
            groups[h.merge_key] = h
        elif h.score > best.score or (
                h.score == best.score and
                (h.words(), h.arc_ids()) < (best.words(), best.arc_ids())):
            groups[h.merge_key] = h
    survivors = sorted(groups.values(), key=_hyp_sort_key)
    if beam_k is not None:
        survivors = survivors[:beam_k]
    return survivors


def _run_search(lattice, scorer, params, init_state):
    """Run the search; return ({node: survivors}, {node: all candidates})."""
    order = topo_order(lattice)
    key_len = params.key_len
    incoming = {n: [] for n in order}
    survivors = {}
    incoming[lattice.begin].append(
        Hypothesis(lattice.begin, 0.0, (), init_state))
    for node in order:
        kept = _merge_and_beam(incoming[node], params.beam_k)
        survivors[node] = kept
        for h in kept:
            for arc in sorted(lattice.out_arcs(node), key=lambda a: a.arc_id):
                if arc.word == EPSILON:
                    refined = 0.0
                    state = h.state
                    key = h.merge_key
                else:
                    state, resc = scorer.advance(h.state, arc.word)
                    refined = refine_arc_lm(arc.lm, resc, params.beta)
                    key = h.merge_key + (arc.word,)
                    if key_len is not None:
                        key = key[max(0, len(key) - key_len):]
                score = extend(h.score, arc.acoustic, refined, params.alpha)
                incoming[arc.to_node].append(
                    Hypothesis(arc.to_node, score, key, state, (h, arc,
                                                                refined)))
    return survivors, incoming


def rescore_lattice(lattice, scorer, params, init_state=None):
    """Rescore one lattice with a forward pass of ``scorer``.

    Backward models are handled by the caller via lattice reversal.  The
    scorer starts from ``init_state`` (context carry-over) or its own
    empty-context state.
    """
    report = validate(lattice)
    if not report.ok:
        raise LatticeError("; ".join(report.violations))
    if init_state is None:
        init_state = scorer.init_state()
    survivors, incoming = _run_search(lattice, scorer, params, init_state)
    return _build_output(lattice, survivors, incoming)


def _build_output(lattice, survivors, incoming):
    order = topo_order(lattice)
    topo_pos = {n: i for i, n in enumerate(order)}
    end = lattice.end

    kept_keys = {(node, h.merge_key)
                 for node, hyps in survivors.items() for h in hyps}

    def out_ident(node, key):
        return (node, END_KEY) if node == end else (node, key)

    # every candidate whose destination group survived becomes an arc
    raw_arcs = []
    for node in order:
        for cand in incoming[node]:
            if cand.backlink is None:
                continue
            if (node, cand.merge_key) not in kept_keys:
                continue
            origin, arc, refined = cand.backlink
            raw_arcs.append((out_ident(origin.node, origin.merge_key),
                             out_ident(node, cand.merge_key),
                             arc, refined, origin.merge_key))

    idents = {out_ident(node, h.merge_key)
              for node, hyps in survivors.items() for h in hyps}

    # drop nodes that cannot reach the end (their continuations all fell
    # out of the beam further downstream)
    end_ident = (end, END_KEY)
    if end_ident not in idents:
        raise LatticeError("no hypothesis reached the end node")
    preds = {}
    for src, dst, *_ in raw_arcs:
        preds.setdefault(dst, []).append(src)
    alive = {end_ident}
    stack = [end_ident]
    while stack:
        ident = stack.pop()
        for prev in preds.get(ident, ()):
            if prev not in alive:
                alive.add(prev)
                stack.append(prev)
    idents &= alive

    def ident_rank(ident):
        node, key = ident
        return (topo_pos[node], key if key is not None else ())

    node_ids = {ident: i
                for i, ident in enumerate(sorted(idents, key=ident_rank))}
    nodes = {i: lattice.nodes.get(ident[0])
             for ident, i in node_ids.items()}

    kept_arcs = [(src, dst, arc, refined, okey)
                 for src, dst, arc, refined, okey in raw_arcs
                 if src in node_ids and dst in node_ids]
    kept_arcs.sort(key=lambda item: (node_ids[item[0]], item[2].arc_id))

    arcs = []
    arc_source = {}
    arc_origin_key = {}
    for arc_id, (src, dst, arc, refined, okey) in enumerate(kept_arcs):
        arcs.append(Arc(arc_id, node_ids[src], node_ids[dst], arc.word,
                        arc.acoustic, refined))
        arc_source[arc_id] = arc.arc_id
        arc_origin_key[arc_id] = okey

    out = make_lattice(lattice.utterance_id, nodes, arcs)
    node_source = {i: ident for ident, i in node_ids.items()}
    return RescoredLattice(out, node_source, arc_source, arc_origin_key)


def lattice_best_path(lattice, alpha):
    """Highest-scoring begin-to-end path under acoustic + alpha * lm.

    Exact score ties prefer the lexicographically smaller word sequence,
    then smaller arc ids.
    """
    order = topo_order(lattice)
    best = {lattice.begin: (0.0, (), ())}
    for node in order:
        if node not in best:
            continue
        score, words, arcs = best[node]
        for arc in sorted(lattice.out_arcs(node), key=lambda a: a.arc_id):
            cand_score = score + arc.acoustic + alpha * arc.lm
            cand_words = words if arc.word == EPSILON else words + (arc.word,)
            cand = (cand_score, cand_words, arcs + (arc,))
            cur = best.get(arc.to_node)
            if cur is None or _path_better(cand, cur):
                best[arc.to_node] = cand
    if lattice.end not in best:
        raise LatticeError("end node unreachable")
    _, _, arcs = best[lattice.end]
    return path_from_arcs(arcs)


def _path_better(cand, cur):
    if cand[0] != cur[0]:
        return cand[0] > cur[0]
    cand_ids = tuple(a.arc_id for a in cand[2])
    cur_ids = tuple(a.arc_id for a in cur[2])
    return (cand[1], cand_ids) < (cur[1], cur_ids)


def best_path(rescored, alpha):
    """Traceback of a rescored lattice: its best word (arc) sequence."""
    return lattice_best_path(rescored.lattice, alpha)


def path_score(path, alpha):
    """Fold acoustic + alpha * lm along the path, in arc order.

    Matches the accumulation order used by search and traceback, so the
    same path always reproduces the same float.
    """
    total = 0.0
    for arc in path.arcs:
        total = total + arc.acoustic + alpha * arc.lm
    return total


def with_beta(params, beta):
    """Copy params with a new interpolation weight."""
    return replace(params, beta=beta)
