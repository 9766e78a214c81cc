"""Word error rate and friends.

Unit edit costs throughout; alignment ties prefer a substitution over an
insertion+deletion pair.  Internal values stay exact; percentages are a
display concern (one decimal, like standard ASR reporting).
"""

from dataclasses import dataclass

from .errors import ToolkitError


@dataclass
class WerCounts:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    reference_length: int = 0

    @property
    def errors(self):
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self):
        return self.errors / self.reference_length

    @property
    def percent(self):
        return 100.0 * self.wer

    def __add__(self, other):
        return WerCounts(self.substitutions + other.substitutions,
                         self.deletions + other.deletions,
                         self.insertions + other.insertions,
                         self.reference_length + other.reference_length)


def wer(reference, hypothesis):
    """Minimal-edit alignment counts of hypothesis against reference."""
    ref = list(reference)
    hyp = list(hypothesis)
    if not ref:
        raise ToolkitError("empty reference")
    rows = len(ref) + 1
    cols = len(hyp) + 1
    cost = [[0] * cols for _ in range(rows)]
    for i in range(1, rows):
        cost[i][0] = i
    for j in range(1, cols):
        cost[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            diag = cost[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1])
            cost[i][j] = min(diag, cost[i - 1][j] + 1, cost[i][j - 1] + 1)

    subs = dels = ins = 0
    i, j = len(ref), len(hyp)
    while i > 0 or j > 0:
        if i > 0 and j > 0 and \
                cost[i][j] == cost[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            if ref[i - 1] != hyp[j - 1]:
                subs += 1
            i -= 1
            j -= 1
        elif i > 0 and cost[i][j] == cost[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return WerCounts(subs, dels, ins, len(ref))


def corpus_wer(pairs):
    """Sum alignment counts over (reference, hypothesis) pairs."""
    total = WerCounts()
    for reference, hypothesis in pairs:
        total = total + wer(reference, hypothesis)
    return total


def relative_reduction(baseline_wer, new_wer):
    """Relative WER reduction in percent, 100 * (baseline - new) / baseline."""
    if not baseline_wer > 0:
        raise ToolkitError("baseline WER must be positive")
    return 100.0 * (baseline_wer - new_wer) / baseline_wer


def oracle_wer(candidates, reference):
    """Counts of the lowest-WER candidate; ties keep the earliest one."""
    if not candidates:
        raise ToolkitError("no candidates")
    best = None
    for candidate in candidates:
        counts = wer(reference, candidate)
        if best is None or counts.errors < best.errors:
            best = counts
    return best


REPORT_COLUMNS = ("iteration", "method", "search_setting", "context",
                  "dev_wer", "eval_wer")


def format_report_tsv(rows, comments=()):
    """Render report rows as TSV text (WERs as percent, one decimal)."""
    lines = [f"# {c}" for c in comments]
    lines.append("\t".join(REPORT_COLUMNS))
    for row in rows:
        cells = []
        for col in REPORT_COLUMNS:
            value = row.get(col)
            if value is None:
                cells.append("-")
            elif col.endswith("_wer"):
                cells.append(f"{100.0 * value:.1f}")
            else:
                cells.append(str(value))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"
