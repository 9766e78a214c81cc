"""Multi-scorer combination.

Iterative mode regenerates the lattice once per scorer, interpolating the
new model's scores into the arcs with weight 1/(1+i) so the original
score and all models seen so far contribute equally.  Simultaneous mode
rescoreds the original lattices once per scorer independently and then
averages the rescored lattices arc by arc, aligning arcs by their
provenance (source arc id, origin merge key).
"""

from dataclasses import dataclass, field, replace

from .context import (MODE_NONE, MODE_SCHEDULE, ContextPolicy,
                      rescore_session)
from .errors import ScorerError, ToolkitError
from .lattice import Arc, make_lattice
from .pushforward import (END_KEY, RescoredLattice, best_path,
                          interpolation_weight, lattice_best_path, with_beta)
from .sessions import LatticeSession, SessionEntry
from .wer import corpus_wer


@dataclass
class IterationStep:
    name: str
    scorer: object
    mode: str  # context mode when carry-over is on: none|forward|backward


@dataclass
class IterationSchedule:
    """Ordered scorers for iterative combination; length = iterations."""

    steps: list

    def __post_init__(self):
        if not self.steps:
            raise ValueError("schedule needs at least one step")
        for step in self.steps:
            if step.mode not in (MODE_NONE, step.scorer.direction):
                raise ValueError(
                    f"step {step.name}: context mode {step.mode!r} does not "
                    f"match scorer direction {step.scorer.direction!r}")

    @classmethod
    def from_scorers(cls, scorers, context=True, names=None):
        steps = []
        for i, scorer in enumerate(scorers):
            name = names[i] if names else getattr(scorer, "name", f"s{i}")
            mode = scorer.direction if context else MODE_NONE
            steps.append(IterationStep(name, scorer, mode))
        return cls(steps)

    def __len__(self):
        return len(self.steps)


@dataclass
class IterationRecord:
    iteration: int
    step_name: str
    beta: float
    rescored: list
    transcripts: list
    wer: object = None


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)

    @property
    def final(self):
        return self.records[-1]


def _step_policy(step_mode, policy):
    if policy.mode == MODE_NONE:
        return ContextPolicy(MODE_NONE, policy.window_j)
    if policy.mode != MODE_SCHEDULE and policy.mode != step_mode:
        raise ScorerError(
            f"policy mode {policy.mode!r} conflicts with step mode "
            f"{step_mode!r}; use mode 'schedule' for mixed directions")
    return ContextPolicy(step_mode, policy.window_j)


def run_iterative(session, schedule, params, policy, hook=None):
    """Iterative lattice regeneration over the schedule.

    Iteration i consumes iteration i-1's lattices (the originals first)
    with the interpolation weight fixed to 1/(1+i); per-step context
    follows the schedule unless the policy turns carry-over off.
    """
    trace = IterationTrace()
    current = session
    for i, step in enumerate(schedule.steps, start=1):
        params_i = with_beta(params, interpolation_weight(i))
        policy_i = _step_policy(step.mode, policy)
        rescored = rescore_session(current, step.scorer, params_i, policy_i,
                                   hook=hook)
        transcripts = [best_path(r, params.alpha).words for r in rescored]
        counts = None
        if all(e.reference for e in session.entries):
            counts = corpus_wer([(e.reference, t) for e, t
                                 in zip(session.entries, transcripts)])
        trace.records.append(IterationRecord(i, step.name, params_i.beta,
                                             rescored, transcripts, counts))
        current = LatticeSession(session.session_id, [
            SessionEntry(e.utterance_id, r.lattice, e.reference)
            for e, r in zip(session.entries, rescored)])
    return trace


def combine_simultaneous(session, scorers, params, policy):
    """Rescore the original lattices once per scorer, then average.

    Every pass interpolates against the original n-gram scores with the
    caller's beta (default 0.5).  Arcs are aligned across passes by
    (source arc id, origin merge key); an arc missing from some passes
    averages over the passes that produced it.
    """
    if not scorers:
        raise ScorerError("need at least one scorer")
    passes = []
    for scorer in scorers:
        policy_s = _step_policy(
            scorer.direction if policy.mode != MODE_NONE else MODE_NONE,
            policy)
        passes.append(rescore_session(session, scorer, params, policy_s))
    return [combine_rescored([p[j] for p in passes])
            for j in range(len(session.entries))]


def combine_rescored(rescored_list):
    """Equal-weight combination of rescored lattices of one utterance.

    Node set is the union of (source node, merge key) identities; arc set
    the union keyed by (source arc id, origin merge key); each combined
    arc's language score is the arithmetic mean of that arc's refined
    scores over the lattices containing it.
    """
    if not rescored_list:
        raise ToolkitError("nothing to combine")
    if len(rescored_list) == 1:
        return rescored_list[0]
    utt_ids = {r.lattice.utterance_id for r in rescored_list}
    if len(utt_ids) != 1:
        raise ToolkitError(f"refusing to combine utterances {utt_ids}")

    nodes = {}       # identity -> time
    arcs = {}        # (source arc id, origin key) -> dict
    for r in rescored_list:
        ident_of = r.node_source
        for node_id, ident in ident_of.items():
            nodes.setdefault(ident, r.lattice.nodes.get(node_id))
        for arc in r.lattice.arcs:
            key = (r.arc_source[arc.arc_id], r.arc_origin_key[arc.arc_id])
            entry = arcs.get(key)
            if entry is None:
                arcs[key] = {
                    "from": ident_of[arc.from_node],
                    "to": ident_of[arc.to_node],
                    "word": arc.word,
                    "acoustic": arc.acoustic,
                    "lms": [arc.lm],
                }
            else:
                if (entry["from"] != ident_of[arc.from_node]
                        or entry["to"] != ident_of[arc.to_node]
                        or entry["word"] != arc.word):
                    raise ToolkitError(
                        f"provenance clash combining arc {key}")
                entry["lms"].append(arc.lm)

    # deterministic ids: source-topo-ish order via identity sorting
    def ident_rank(ident):
        node, key = ident
        return (node, key if key is not END_KEY else ())

    node_ids = {ident: i
                for i, ident in enumerate(sorted(nodes, key=ident_rank))}
    out_nodes = {i: nodes[ident] for ident, i in node_ids.items()}
    out_arcs = []
    arc_source = {}
    arc_origin_key = {}
    for arc_id, key in enumerate(sorted(arcs, key=_arc_rank)):
        entry = arcs[key]
        lm = sum(entry["lms"]) / len(entry["lms"])
        out_arcs.append(Arc(arc_id, node_ids[entry["from"]],
                            node_ids[entry["to"]], entry["word"],
                            entry["acoustic"], lm))
        arc_source[arc_id] = key[0]
        arc_origin_key[arc_id] = key[1]
    lattice = make_lattice(rescored_list[0].lattice.utterance_id,
                           out_nodes, out_arcs)
    node_source = {i: ident for ident, i in node_ids.items()}
    return RescoredLattice(lattice, node_source, arc_source, arc_origin_key)


def _arc_rank(key):
    source_arc_id, origin_key = key
    return (source_arc_id, origin_key)


RICH_SETTING = {"name": "rich", "ngram_approx": 5, "beam_k": 10}
FAST_SETTING = {"name": "fast", "ngram_approx": 0, "beam_k": 1}

COMBINATION_WEIGHT_NOTE = (
    "iterative combination weights the original n-gram score 1/(I+1); "
    "simultaneous combination weights it (1-beta) per pass before the "
    "equal-weight average, so the two differ when I > 1")


def compare_methods(session, schedule, params, policy, dev_session=None):
    """Iterative vs simultaneous under rich and fast search settings.

    Returns report rows (iteration, method, search_setting, context,
    dev_wer, eval_wer) with WERs as fractions (None when no references);
    ``session`` fills the eval column, ``dev_session`` the dev one.
    """
    scorers = [step.scorer for step in schedule.steps]
    rows = []
    sessions = {"eval": session}
    if dev_session is not None:
        sessions["dev"] = dev_session

    def wer_of(transcripts, sess):
        if not all(e.reference for e in sess.entries):
            return None
        return corpus_wer([(e.reference, t) for e, t
                           in zip(sess.entries, transcripts)]).wer

    baseline = {}
    for split, sess in sessions.items():
        transcripts = [lattice_best_path(e.lattice, params.alpha).words
                       for e in sess.entries]
        baseline[split] = wer_of(transcripts, sess)
    rows.append({"iteration": 0, "method": "baseline",
                 "search_setting": "-", "context": "-",
                 "dev_wer": baseline.get("dev"),
                 "eval_wer": baseline.get("eval")})

    for setting in (RICH_SETTING, FAST_SETTING):
        params_s = replace(params, ngram_approx=setting["ngram_approx"],
                           beam_k=setting["beam_k"])
        for context_on in (False, True):
            policy_c = ContextPolicy(
                MODE_SCHEDULE if context_on else MODE_NONE, policy.window_j)
            cells = {}
            for split, sess in sessions.items():
                trace = run_iterative(sess, schedule, params_s, policy_c)
                cells[split] = wer_of(trace.final.transcripts, sess)
            rows.append({"iteration": len(schedule), "method": "iterative",
                         "search_setting": setting["name"],
                         "context": "yes" if context_on else "no",
                         "dev_wer": cells.get("dev"),
                         "eval_wer": cells.get("eval")})
            cells = {}
            for split, sess in sessions.items():
                combined = combine_simultaneous(sess, scorers, params_s,
                                                policy_c)
                transcripts = [best_path(r, params.alpha).words
                               for r in combined]
                cells[split] = wer_of(transcripts, sess)
            rows.append({"iteration": len(schedule), "method": "simultaneous",
                         "search_setting": setting["name"],
                         "context": "yes" if context_on else "no",
                         "dev_wer": cells.get("dev"),
                         "eval_wer": cells.get("eval")})
    return rows
