"""Word-lattice data model: a DAG of scored word arcs plus oracle utilities.

Arcs carry natural-log acoustic and language scores.  The token ``!NULL``
marks an epsilon arc: it has no linguistic content, always carries a zero
language score, and is dropped from word sequences.
"""

import random
from dataclasses import dataclass, field

from .errors import LatticeError

EPSILON = "!NULL"

NodeId = int


@dataclass(frozen=True)
class Arc:
    arc_id: int
    from_node: NodeId
    to_node: NodeId
    word: str
    acoustic: float
    lm: float


@dataclass
class Lattice:
    """Immutable-by-convention lattice.  Build through :func:`make_lattice`.

    ``nodes`` maps node id to an optional time in seconds.  Adjacency maps
    are precomputed so concurrent readers never mutate shared state.
    """

    utterance_id: str
    nodes: dict
    arcs: list
    begin: NodeId
    end: NodeId
    _out: dict = field(default_factory=dict, repr=False)
    _in: dict = field(default_factory=dict, repr=False)

    def out_arcs(self, node):
        return self._out.get(node, ())

    def in_arcs(self, node):
        return self._in.get(node, ())

    def arc_by_id(self, arc_id):
        return self._by_id[arc_id]

    def __post_init__(self):
        self._out = {n: [] for n in self.nodes}
        self._in = {n: [] for n in self.nodes}
        self._by_id = {}
        for arc in self.arcs:
            if arc.from_node in self._out:
                self._out[arc.from_node].append(arc)
            if arc.to_node in self._in:
                self._in[arc.to_node].append(arc)
            self._by_id[arc.arc_id] = arc


@dataclass
class Path:
    """A begin-to-end arc sequence with its score totals.

    ``words`` drops epsilon arcs; totals fold arc scores left to right so
    they are bit-reproducible for a fixed arc order.
    """

    arcs: list
    words: tuple
    acoustic_total: float
    lm_total: float


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def add(self, message):
        self.violations.append(message)


def make_lattice(utterance_id, nodes, arcs, strict=True):
    """Assemble a lattice, locate its begin/end nodes, and validate.

    ``nodes`` may be a dict (id -> time or None) or an iterable of ids.
    With ``strict`` a :class:`LatticeError` is raised on any violation.
    """
    if not isinstance(nodes, dict):
        nodes = {n: None for n in nodes}
    begins = [n for n in nodes if not any(a.to_node == n for a in arcs)]
    ends = [n for n in nodes if not any(a.from_node == n for a in arcs)]
    begin = begins[0] if len(begins) == 1 else (begins[0] if begins else -1)
    end = ends[0] if len(ends) == 1 else (ends[0] if ends else -1)
    lat = Lattice(utterance_id, dict(nodes), list(arcs), begin, end)
    if strict:
        report = validate(lat)
        if not report.ok:
            raise LatticeError(
                f"{utterance_id}: " + "; ".join(report.violations))
    return lat


def validate(lattice):
    """Report every structural violation; an empty report means valid.

    Violations are data, not failures: callers decide whether to raise.
    """
    report = ValidationReport()
    nodes = lattice.nodes
    if not lattice.arcs:
        report.add("no arcs")
    dangling = False
    for arc in lattice.arcs:
        if arc.from_node not in nodes or arc.to_node not in nodes:
            report.add(f"dangling endpoint on arc {arc.arc_id}")
            dangling = True
        if not (_finite(arc.acoustic) and _finite(arc.lm)):
            report.add(f"non-finite score on arc {arc.arc_id}")
        if arc.word == EPSILON and arc.lm != 0.0:
            report.add(f"epsilon arc {arc.arc_id} carries lm={arc.lm}")
        if arc.word != EPSILON and any(c.isspace() for c in arc.word):
            report.add(f"whitespace in word on arc {arc.arc_id}")
    for node, time in nodes.items():
        if time is not None and time < 0:
            report.add(f"negative time on node {node}")

    if dangling:
        # degree and reachability checks need resolvable endpoints
        return report

    begins = [n for n in nodes if not lattice.in_arcs(n)]
    ends = [n for n in nodes if not lattice.out_arcs(n)]
    if len(begins) != 1:
        report.add(f"expected one begin node, found {len(begins)}")
    if len(ends) != 1:
        report.add(f"expected one end node, found {len(ends)}")
    if begins and ends and (lattice.begin not in begins or lattice.end not in ends):
        report.add("begin/end markers disagree with arc degrees")

    order = _try_topo_order(lattice)
    if order is None:
        report.add("cycle detected")
    elif len(begins) == 1 and len(ends) == 1:
        reach_fwd = _reachable(lattice, lattice.begin, forward=True)
        reach_bwd = _reachable(lattice, lattice.end, forward=False)
        for n in nodes:
            if n not in reach_fwd or n not in reach_bwd:
                report.add(f"node {n} lies on no begin-to-end path")
    return report


def _finite(x):
    return x == x and x not in (float("inf"), float("-inf"))


def _reachable(lattice, start, forward):
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        arcs = lattice.out_arcs(n) if forward else lattice.in_arcs(n)
        for a in arcs:
            nxt = a.to_node if forward else a.from_node
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _try_topo_order(lattice):
    indeg = {n: 0 for n in lattice.nodes}
    for arc in lattice.arcs:
        if arc.to_node in indeg:
            indeg[arc.to_node] += 1
    ready = sorted(n for n, d in indeg.items() if d == 0)
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for arc in lattice.out_arcs(n):
            indeg[arc.to_node] -= 1
            if indeg[arc.to_node] == 0:
                # keep the frontier sorted for a deterministic order
                lo, hi = 0, len(ready)
                while lo < hi:
                    mid = (lo + hi) // 2
                    if ready[mid] < arc.to_node:
                        lo = mid + 1
                    else:
                        hi = mid
                ready.insert(lo, arc.to_node)
    if len(order) != len(lattice.nodes):
        return None
    return order


def topo_order(lattice):
    """Topologically ordered node ids, begin first and end last."""
    order = _try_topo_order(lattice)
    if order is None:
        raise LatticeError("not a DAG")
    return order


def reverse(lattice):
    """Flip every arc and swap begin/end; scores and ids are untouched.

    Applying reverse twice restores the original lattice bit for bit.
    """
    arcs = [Arc(a.arc_id, a.to_node, a.from_node, a.word, a.acoustic, a.lm)
            for a in lattice.arcs]
    return Lattice(lattice.utterance_id, dict(lattice.nodes), arcs,
                   lattice.end, lattice.begin)


def enumerate_paths(lattice, max_paths=100000):
    """Every begin-to-end path, exact totals, for use as a search oracle.

    Raises when the path count exceeds ``max_paths`` rather than looping
    for hours on a branchy lattice.
    """
    paths = []
    stack = [(lattice.begin, [], (), 0.0, 0.0)]
    while stack:
        node, arcs, words, acou, lm = stack.pop()
        if node == lattice.end:
            if len(paths) >= max_paths:
                raise LatticeError("oracle blowup")
            paths.append(Path(arcs, words, acou, lm))
            continue
        # reversed so that the lexicographically earlier arc pops first
        for arc in sorted(lattice.out_arcs(node),
                          key=lambda a: (a.word, a.arc_id), reverse=True):
            new_words = words if arc.word == EPSILON else words + (arc.word,)
            stack.append((arc.to_node, arcs + [arc], new_words,
                          acou + arc.acoustic, lm + arc.lm))
    return paths


def path_from_arcs(arcs):
    """Rebuild a Path (words and totals) from an adjacent arc sequence."""
    words = tuple(a.word for a in arcs if a.word != EPSILON)
    acou = 0.0
    lm = 0.0
    for a in arcs:
        acou += a.acoustic
        lm += a.lm
    return Path(list(arcs), words, acou, lm)


def synth_lattice(seed, nodes, branching, vocab, epsilon_rate=0.0):
    """Deterministic pseudo-random test lattice.

    Scheme (fixed so corpora are reproducible): a ``random.Random(seed)``
    stream first lays a linear chain over ``nodes`` nodes, guaranteeing a
    single begin/end and full connectivity, then adds up to ``branching``
    extra forward arcs per node.  Words are drawn uniformly from ``vocab``;
    acoustic scores from U(-8.0, -0.5) and language scores from
    U(-6.0, -0.1), both rounded to 6 decimals so SLF round-trips are exact.
    With ``epsilon_rate`` > 0, some extra arcs become ``!NULL`` skips.
    """
    if nodes < 2:
        raise LatticeError("need at least 2 nodes")
    if not vocab:
        raise LatticeError("empty vocab")
    rng = random.Random(seed)
    arcs = []
    arc_id = 0
    for i in range(nodes - 1):
        arcs.append(Arc(arc_id, i, i + 1, rng.choice(vocab),
                        round(rng.uniform(-8.0, -0.5), 6),
                        round(rng.uniform(-6.0, -0.1), 6)))
        arc_id += 1
    for i in range(nodes - 1):
        for _ in range(rng.randint(0, branching)):
            j = rng.randint(i + 1, nodes - 1)
            if rng.random() < epsilon_rate:
                arcs.append(Arc(arc_id, i, j, EPSILON,
                                round(rng.uniform(-2.0, -0.1), 6), 0.0))
            else:
                arcs.append(Arc(arc_id, i, j, rng.choice(vocab),
                                round(rng.uniform(-8.0, -0.5), 6),
                                round(rng.uniform(-6.0, -0.1), 6)))
            arc_id += 1
    return make_lattice(f"synth-{seed}", range(nodes), arcs)
