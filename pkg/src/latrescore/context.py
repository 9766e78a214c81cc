"""Context carry-over across the lattices of one long speech.

The rescoring result (1-best word sequence) of each processed utterance
is fed to the scorer as a prefix before the next utterance starts.  For
recurrent-like scorers that is exactly a hidden-state copy; for bounded
scorers only the last ``window_j`` utterances are fed.  Backward mode is
the same procedure run on the mirrored session: utterances last to first,
every lattice reversed, word sequences reversed.
"""

from dataclasses import dataclass, field

from .errors import ScorerError
from .lattice import reverse
from .pushforward import RescoredLattice, best_path, rescore_lattice
from .scoring import score_sequence

MODE_NONE = "none"
MODE_FORWARD = "forward"
MODE_BACKWARD = "backward"
MODE_SCHEDULE = "schedule"  # multi-scorer runs: follow each scorer's direction

_SESSION_MODES = (MODE_NONE, MODE_FORWARD, MODE_BACKWARD)


@dataclass
class ContextPolicy:
    """``mode`` plus the carry-over window in utterances.

    ``window_j`` bounds how many previous utterances bounded-context
    scorers see (None keeps everything); unbounded scorers always receive
    the full history, mirroring a carried hidden state.
    """

    mode: str = MODE_NONE
    window_j: object = 1

    def __post_init__(self):
        if self.mode not in _SESSION_MODES + (MODE_SCHEDULE,):
            raise ValueError(f"unknown context mode {self.mode!r}")
        if self.window_j is not None and self.window_j < 1:
            raise ValueError("window_j must be >= 1 or None")


@dataclass
class SessionContext:
    """Best-hypothesis word sequences of already-rescored utterances,
    most recent last, in as-fed orientation."""

    history: list = field(default_factory=list)

    def push(self, words):
        self.history.append(tuple(words))

    def window(self, window_j):
        if window_j is None:
            return list(self.history)
        return self.history[-window_j:]


def context_state(scorer, ctx, policy=None):
    """Scorer state encoding the carried-over context.

    Feeds the concatenated context word sequences from the empty-context
    state; with no context this is exactly the initial state.
    """
    window_j = None
    if policy is not None and scorer.context_kind == "bounded":
        window_j = policy.window_j
    words = [w for entry in ctx.window(window_j) for w in entry]
    _, state = score_sequence(scorer, words)
    return state


def rescore_session(session, scorer, params, policy, hook=None):
    """Rescore every lattice of a session with one scorer.

    mode none: each lattice independently from the empty-context state.
    mode forward: first to last, each initialized from the 1-bests already
    produced in this pass.  mode backward: the mirrored procedure with a
    backward scorer.  Outputs are returned in original session order and
    orientation either way.

    ``hook(index, context_words, rescored)`` is a test instrumentation
    callback; ``index`` is the session position actually processed.
    """
    mode = policy.mode
    if mode not in _SESSION_MODES:
        raise ScorerError(f"session rescoring cannot use mode {mode!r}")
    if mode != MODE_NONE and mode != scorer.direction:
        raise ScorerError(
            f"context mode {mode!r} does not match scorer direction "
            f"{scorer.direction!r}")

    # a backward scorer always sees reversed lattices, with or without
    # carry-over; the mode only decides whether context flows and which
    # way the session is walked
    reversed_data = scorer.direction == MODE_BACKWARD
    carry = mode != MODE_NONE
    indices = range(len(session.entries) - 1, -1, -1) \
        if mode == MODE_BACKWARD else range(len(session.entries))
    ctx = SessionContext()
    results = {}
    for index in indices:
        entry = session.entries[index]
        lattice = reverse(entry.lattice) if reversed_data else entry.lattice
        if carry:
            window_j = policy.window_j if scorer.context_kind == "bounded" \
                else None
            fed = tuple(ctx.window(window_j))
            state = context_state(scorer, ctx, policy)
        else:
            fed = ()
            state = scorer.init_state()
        rescored = rescore_lattice(lattice, scorer, params, init_state=state)
        if carry:
            ctx.push(best_path(rescored, params.alpha).words)
        if reversed_data:
            rescored = reverse_rescored(rescored)
        if hook is not None:
            hook(index, fed, rescored)
        results[index] = rescored
    return [results[i] for i in range(len(session.entries))]


def reverse_rescored(rescored):
    """Reverse a rescored lattice back to original orientation.

    Arc and node ids are preserved, so the provenance maps carry over.
    The two extreme nodes are renamed to the forward-orientation
    convention (begin has the empty key, end the collapse marker) so
    that lattice combination can align passes of either direction.
    """
    from .pushforward import END_KEY

    lattice = reverse(rescored.lattice)
    node_source = dict(rescored.node_source)
    node_source[lattice.begin] = (node_source[lattice.begin][0], ())
    node_source[lattice.end] = (node_source[lattice.end][0], END_KEY)
    return RescoredLattice(lattice, node_source,
                           dict(rescored.arc_source),
                           dict(rescored.arc_origin_key))
