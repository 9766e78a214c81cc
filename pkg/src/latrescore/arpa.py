"""ARPA back-off n-gram files.

On disk scores are log10 per the ARPA convention; in memory everything is
natural log (one convention across the whole toolkit).  Writing is
canonical: entries sorted by token tuple, 6 fractional digits, a backoff
column on every entry below the maximum order.
"""

import math
from dataclasses import dataclass, field

from .errors import FormatError

LN10 = math.log(10.0)

UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"


@dataclass
class NgramTable:
    """Back-off table with natural-log probabilities and backoff weights.

    ``probs`` maps token tuples (any order) to log-probability; ``backoffs``
    maps context tuples to their backoff weight (absent means 0).
    """

    order: int
    probs: dict = field(default_factory=dict)
    backoffs: dict = field(default_factory=dict)

    @property
    def vocab(self):
        return {key[0] for key in self.probs if len(key) == 1}

    def logprob(self, context, word):
        """Back-off lookup of log P(word | context), all tokens in-vocab.

        ``context`` is truncated to the highest usable order.
        """
        context = tuple(context)[max(0, len(context) - self.order + 1):]
        penalty = 0.0
        while True:
            entry = self.probs.get(context + (word,))
            if entry is not None:
                return penalty + entry
            if not context:
                raise KeyError(word)
            penalty += self.backoffs.get(context, 0.0)
            context = context[1:]

    def validate(self):
        """Check the standard ARPA consistency rule.

        Every entry's length >= 2 context must itself be listed at the
        lower order (it is the carrier of the backoff weight).
        """
        problems = []
        for key in self.probs:
            if len(key) >= 2 and key[:-1] not in self.probs:
                problems.append(f"context {' '.join(key[:-1])!r} of "
                                f"{' '.join(key)!r} has no lower-order entry")
        return problems


def parse_arpa(text):
    """Parse ARPA bytes (or str) into an :class:`NgramTable`."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.splitlines()
    counts = {}
    table = None
    section = None
    section_seen = 0
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        lineno = i + 1
        i += 1
        if not line:
            continue
        if line == "\\data\\":
            section = "data"
            continue
        if line == "\\end\\":
            if section is not None and section != "data":
                _close_section(section, section_seen, counts)
            section = "end"
            break
        if line.endswith("-grams:") and line.startswith("\\"):
            if section is not None and section != "data":
                _close_section(section, section_seen, counts)
            try:
                order = int(line[1:].split("-")[0])
            except ValueError:
                raise FormatError(f"bad section header {line!r}", lineno)
            if order not in counts:
                raise FormatError(
                    f"section {order}-grams not declared in \\data\\", lineno)
            section = order
            section_seen = 0
            if table is None:
                table = NgramTable(order=max(counts))
            continue
        if section == "data":
            if not line.startswith("ngram"):
                raise FormatError(f"expected 'ngram N=count', got {line!r}",
                                  lineno)
            spec = line[len("ngram"):].strip()
            try:
                order_s, count_s = spec.split("=")
                counts[int(order_s)] = int(count_s)
            except ValueError:
                raise FormatError(f"bad ngram count line {line!r}", lineno)
            continue
        if isinstance(section, int):
            parts = line.split()
            has_backoff = len(parts) == section + 2
            if not (has_backoff or len(parts) == section + 1):
                raise FormatError(
                    f"expected {section + 1} or {section + 2} columns",
                    lineno)
            try:
                logp = float(parts[0]) * LN10
            except ValueError:
                raise FormatError(f"non-numeric score {parts[0]!r}", lineno)
            tokens = tuple(parts[1:section + 1])
            if tokens in table.probs:
                raise FormatError(f"duplicate entry {' '.join(tokens)!r}",
                                  lineno)
            table.probs[tokens] = logp
            if has_backoff:
                try:
                    bow = float(parts[-1]) * LN10
                except ValueError:
                    raise FormatError(f"non-numeric backoff {parts[-1]!r}",
                                      lineno)
                if bow != 0.0:
                    table.backoffs[tokens] = bow
            section_seen += 1
            continue
        raise FormatError(f"unexpected line {line!r}", lineno)

    if section != "end":
        raise FormatError("missing \\end\\")
    if table is None:
        raise FormatError("no n-gram sections")
    for order, declared in counts.items():
        found = sum(1 for key in table.probs if len(key) == order)
        if found != declared:
            raise FormatError(
                f"{order}-gram count mismatch: header says {declared}, "
                f"found {found}")
    problems = table.validate()
    if problems:
        raise FormatError("inconsistent backoff table: " + problems[0])
    return table


def _close_section(order, seen, counts):
    if counts.get(order) != seen:
        raise FormatError(
            f"{order}-gram count mismatch: header says {counts.get(order)}, "
            f"found {seen}")


def _fmt6(value):
    # never emit "-0.000000": it parses back to a zero that would then
    # print positively, breaking bit-exact round trips
    text = f"{value:.6f}"
    return "0.000000" if text == "-0.000000" else text


def write_arpa(table):
    """Serialize canonically (log10 on disk) as bytes."""
    lines = ["\\data\\"]
    orders = range(1, table.order + 1)
    for order in orders:
        n = sum(1 for key in table.probs if len(key) == order)
        lines.append(f"ngram {order}={n}")
    for order in orders:
        lines.append("")
        lines.append(f"\\{order}-grams:")
        keys = sorted(k for k in table.probs if len(k) == order)
        for key in keys:
            row = f"{_fmt6(table.probs[key] / LN10)}\t{' '.join(key)}"
            if order < table.order:
                row += f"\t{_fmt6(table.backoffs.get(key, 0.0) / LN10)}"
            lines.append(row)
    lines.append("")
    lines.append("\\end\\")
    return ("\n".join(lines) + "\n").encode("utf-8")
