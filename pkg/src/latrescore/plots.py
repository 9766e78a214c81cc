"""Figure rendering for report outputs.

Every report path writes a PNG next to its TSV so runs are inspectable
at a glance without a separate plotting step.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_wer_curves(rows, path, title="WER by iteration"):
    """Line plot of WER-vs-iteration series.

    ``rows`` carry iteration, wer (fraction), and series labels under
    either (method, context) or just method.
    """
    series = {}
    for row in rows:
        label = row.get("method", "wer")
        if row.get("context") not in (None, "-"):
            label = f"{label}, context={row['context']}"
        series.setdefault(label, []).append(
            (row["iteration"], 100.0 * row["wer"]))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label in sorted(series):
        points = sorted(series[label])
        ax.plot([p[0] for p in points], [p[1] for p in points],
                marker="o", label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("WER [%]")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_compare_grid(rows, path, title="Combination methods"):
    """Grouped bar chart of the method x setting x context WER grid."""
    labeled = [(f"{r['method'][:4]}/{r['search_setting']}"
                f"/ctx={r['context']}", r)
               for r in rows if r.get("method") != "baseline"]
    fig, ax = plt.subplots(figsize=(7.2, 4.2))
    xs = range(len(labeled))
    split = "eval_wer" if any(r.get("eval_wer") is not None
                              for _, r in labeled) else "dev_wer"
    values = [100.0 * (r.get(split) or 0.0) for _, r in labeled]
    ax.bar(list(xs), values, color="#4878a8")
    baseline = next((r for r in rows if r.get("method") == "baseline"), None)
    if baseline and baseline.get(split) is not None:
        ax.axhline(100.0 * baseline[split], color="#a84848", ls="--",
                   lw=1, label="baseline 1-best")
        ax.legend(fontsize=8)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([label for label, _ in labeled], rotation=30,
                       ha="right", fontsize=8)
    ax.set_ylabel(f"{split.split('_')[0]} WER [%]")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
