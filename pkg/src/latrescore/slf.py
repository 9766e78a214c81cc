"""SLF-subset lattice files: parse and canonical serialization.

The subset keeps the fields search needs and nothing else::

    VERSION=1.0
    UTTERANCE=<id>
    N=<node count> L=<arc count>
    I=<node id> [t=<time>]
    J=<arc id> S=<from id> E=<to id> W=<word> a=<acoustic> l=<lm>

All scores are natural logarithms, both on disk and in memory.  Unknown
``key=value`` pairs are ignored with a warning.  Writing is canonical
(nodes and arcs ascending by id, scores with 6 fractional digits), so
``write_slf(parse_slf(t)) == t`` for any canonically written ``t``.
"""

import logging

from .errors import FormatError, LatticeError
from .lattice import EPSILON, Arc, make_lattice, validate

log = logging.getLogger(__name__)


def parse_slf(text):
    """Parse SLF bytes (or str) into a validated lattice.

    Lattices with several initial or final nodes are normalized by adding
    an epsilon super-begin/super-end arc, since search assumes exactly one
    of each.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    utterance_id = ""
    declared_n = declared_l = None
    nodes = {}
    arcs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = _parse_fields(line, lineno)
        if "VERSION" in fields:
            continue
        if "UTTERANCE" in fields:
            utterance_id = fields["UTTERANCE"]
            continue
        if "N" in fields:
            declared_n = _int_field(fields, "N", lineno)
            declared_l = _int_field(fields, "L", lineno)
            continue
        if "I" in fields:
            node = _int_field(fields, "I", lineno)
            if node in nodes:
                raise FormatError(f"duplicate node id {node}", lineno)
            time = None
            if "t" in fields:
                time = _float_field(fields, "t", lineno)
            _warn_unknown(fields, ("I", "t"), lineno)
            nodes[node] = time
            continue
        if "J" in fields:
            arc_id = _int_field(fields, "J", lineno)
            for key in ("S", "E", "W", "a", "l"):
                if key not in fields:
                    raise FormatError(f"arc missing field {key}=", lineno)
            if any(arc.arc_id == arc_id for arc in arcs):
                raise FormatError(f"duplicate arc id {arc_id}", lineno)
            word = fields["W"]
            arc = Arc(arc_id, _int_field(fields, "S", lineno),
                      _int_field(fields, "E", lineno), word,
                      _float_field(fields, "a", lineno),
                      _float_field(fields, "l", lineno))
            _warn_unknown(fields, ("J", "S", "E", "W", "a", "l"), lineno)
            arcs.append(arc)
            continue
        raise FormatError(f"unrecognized line {line!r}", lineno)

    if declared_n is not None and declared_n != len(nodes):
        raise FormatError(
            f"node count mismatch: header N={declared_n}, found {len(nodes)}")
    if declared_l is not None and declared_l != len(arcs):
        raise FormatError(
            f"arc count mismatch: header L={declared_l}, found {len(arcs)}")
    if not nodes:
        raise FormatError("no nodes")

    nodes, arcs = _normalize_endpoints(nodes, arcs)
    lat = make_lattice(utterance_id, nodes, arcs, strict=False)
    report = validate(lat)
    if not report.ok:
        raise LatticeError(
            f"{utterance_id or '<no id>'}: " + "; ".join(report.violations))
    return lat


def _normalize_endpoints(nodes, arcs):
    targets = {a.to_node for a in arcs}
    sources = {a.from_node for a in arcs}
    begins = sorted(n for n in nodes if n not in targets)
    ends = sorted(n for n in nodes if n not in sources)
    next_node = max(nodes) + 1
    next_arc = max((a.arc_id for a in arcs), default=-1) + 1
    if len(begins) > 1:
        nodes[next_node] = None
        for n in begins:
            arcs.append(Arc(next_arc, next_node, n, EPSILON, 0.0, 0.0))
            next_arc += 1
        next_node += 1
    if len(ends) > 1:
        nodes[next_node] = None
        for n in ends:
            arcs.append(Arc(next_arc, n, next_node, EPSILON, 0.0, 0.0))
            next_arc += 1
    return nodes, arcs


def _parse_fields(line, lineno):
    fields = {}
    for chunk in line.split():
        if "=" not in chunk:
            raise FormatError(f"expected key=value, got {chunk!r}", lineno)
        key, value = chunk.split("=", 1)
        fields[key] = value
    return fields


def _int_field(fields, key, lineno):
    try:
        return int(fields[key])
    except ValueError:
        raise FormatError(f"{key}={fields[key]!r} is not an integer", lineno)


def _float_field(fields, key, lineno):
    try:
        value = float(fields[key])
    except ValueError:
        raise FormatError(f"{key}={fields[key]!r} is not a number", lineno)
    if value != value or value in (float("inf"), float("-inf")):
        raise FormatError(f"{key}={fields[key]!r} is not finite", lineno)
    return value


def _warn_unknown(fields, known, lineno):
    for key in fields:
        if key not in known:
            log.warning("line %d: ignoring unknown field %s=%s",
                        lineno, key, fields[key])


def write_slf(lattice):
    """Serialize to the canonical SLF subset as bytes."""
    lines = ["VERSION=1.0", f"UTTERANCE={lattice.utterance_id}",
             f"N={len(lattice.nodes)} L={len(lattice.arcs)}"]
    for node in sorted(lattice.nodes):
        time = lattice.nodes[node]
        if time is None:
            lines.append(f"I={node}")
        else:
            lines.append(f"I={node} t={time:.2f}")
    for arc in sorted(lattice.arcs, key=lambda a: a.arc_id):
        lines.append(
            f"J={arc.arc_id} S={arc.from_node} E={arc.to_node} "
            f"W={arc.word} a={arc.acoustic:.6f} l={arc.lm:.6f}")
    return ("\n".join(lines) + "\n").encode("utf-8")
