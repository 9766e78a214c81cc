"""Command-line surface.

One JSON config describes scorers, schedule, search params, context, and
IO; flags override config fields.  Outputs are written atomically (temp
file + rename).  The RESCORER_LOG env var sets verbosity.
"""

import argparse
import json
import logging
import os
import sys
import tempfile

from .arpa import parse_arpa
from .context import ContextPolicy, MODE_NONE, MODE_SCHEDULE
from .ensemble import (COMBINATION_WEIGHT_NOTE, IterationSchedule,
                       combine_simultaneous, compare_methods, run_iterative)
from .errors import ToolkitError
from .external import ExternalScorer
from .harness import build_world, curves_tsv, replay_curves, write_sessions
from .nbest import (ITERATIVE, SIMULTANEOUS, extract_nbest, read_nbest,
                    rescore_nbest, rescore_nbest_session, write_nbest)
from .pushforward import RescoreParams, best_path, lattice_best_path
from .scoring import MockScorer, NgramScorer, perplexity, uniform_scorer
from .sessions import load_session
from .slf import write_slf
from .wer import corpus_wer, format_report_tsv, oracle_wer

log = logging.getLogger("latrescore")


def write_atomic(path, data):
    """Write bytes (or str) to path via a temp file in the same directory."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_tokens(path):
    with open(path, "r", encoding="utf-8") as fh:
        return [tuple(line.split()) for line in fh if line.strip()]


class Config:
    """Run configuration: JSON document plus flag overrides."""

    def __init__(self, document, base_dir="."):
        self.document = document
        self.base_dir = base_dir
        self._scorers = {}

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh), os.path.dirname(os.path.abspath(path)))

    def _resolve(self, path):
        if os.path.isabs(path):
            return path
        return os.path.join(self.base_dir, path)

    def scorer(self, name):
        if name in self._scorers:
            return self._scorers[name]
        spec = next((s for s in self.document.get("scorers", [])
                     if s.get("name") == name), None)
        if spec is None:
            raise ToolkitError(f"config names no scorer {name!r}")
        kind = spec.get("kind")
        direction = spec.get("direction", "forward")
        if kind == "arpa":
            with open(self._resolve(spec["path"]), "rb") as fh:
                table = parse_arpa(fh.read())
            scorer = NgramScorer(table, direction, name=name)
        elif kind == "mock":
            vocab = self._vocab(spec)
            scorer = MockScorer(int(spec.get("seed", 0)), vocab,
                                direction, name=name)
        elif kind == "uniform":
            scorer = uniform_scorer(self._vocab(spec), direction, name=name)
        elif kind == "external":
            scorer = ExternalScorer(command=spec["command"])
        else:
            raise ToolkitError(f"scorer {name!r}: unknown kind {kind!r}")
        self._scorers[name] = scorer
        return scorer

    def _vocab(self, spec):
        if "vocab" in spec:
            return list(spec["vocab"])
        if "vocab_file" in spec:
            with open(self._resolve(spec["vocab_file"]), "r",
                      encoding="utf-8") as fh:
                return [line.strip() for line in fh if line.strip()]
        raise ToolkitError("scorer needs 'vocab' or 'vocab_file'")

    def schedule(self, context_on):
        names = self.document.get("schedule") or []
        if not names:
            raise ToolkitError("config has an empty schedule")
        return IterationSchedule.from_scorers(
            [self.scorer(n) for n in names], context=context_on, names=names)

    def params(self, args):
        block = dict(self.document.get("params", {}))
        for key in ("alpha", "beta", "ngram_approx", "beam_k"):
            value = getattr(args, key, None)
            if value is not None:
                block[key] = value
        if "alpha" not in block:
            raise ToolkitError(
                "alpha is required (config params.alpha or --alpha); "
                "no default is assumed")
        return RescoreParams(
            alpha=block["alpha"], beta=block.get("beta", 0.5),
            ngram_approx=block.get("ngram_approx", 5),
            beam_k=block.get("beam_k", 10))

    def policy(self, args):
        block = dict(self.document.get("context", {}))
        if getattr(args, "context", None) is not None:
            block["mode"] = args.context
        if getattr(args, "window_j", None) is not None:
            block["window_j"] = args.window_j
        mode = block.get("mode", "none")
        if mode == "auto":
            mode = MODE_SCHEDULE
        window = block.get("window_j", 1)
        return ContextPolicy(mode, None if window in (None, "none") \
                             else int(window))

    def manifest(self, args):
        path = getattr(args, "manifest", None) \
            or self.document.get("io", {}).get("manifest")
        if not path:
            raise ToolkitError("no manifest given (io.manifest or --manifest)")
        if not os.path.isabs(path) and not os.path.exists(path):
            candidate = self._resolve(path)
            if os.path.exists(candidate):
                return candidate
        return path

    def out_dir(self, args):
        return getattr(args, "out", None) \
            or self.document.get("io", {}).get("output_dir") or "out"


def _report_rows_from_trace(session, trace, setting, context_label):
    rows = []
    for record in trace.records:
        rows.append({
            "iteration": record.iteration,
            "method": f"iterative:{record.step_name}",
            "search_setting": setting,
            "context": context_label,
            "dev_wer": None,
            "eval_wer": record.wer.wer if record.wer else None,
        })
    return rows


def _setting_name(params):
    if params.ngram_approx == 0 and params.beam_k == 1:
        return "fast"
    if params.ngram_approx == 5 and params.beam_k == 10:
        return "rich"
    return f"n={params.ngram_approx},k={params.beam_k}"


def _write_transcripts(path, entries, transcripts):
    lines = [f"{e.utterance_id} {' '.join(t)}"
             for e, t in zip(entries, transcripts)]
    write_atomic(path, "\n".join(lines) + "\n")


def cmd_rescore(args):
    config = Config.load(args.config)
    session = load_session(config.manifest(args))
    params = config.params(args)
    policy = config.policy(args)
    schedule = config.schedule(policy.mode != MODE_NONE)
    trace = run_iterative(session, schedule, params, policy)
    out = config.out_dir(args)
    for entry, rescored in zip(session.entries, trace.final.rescored):
        write_atomic(os.path.join(out, f"{entry.utterance_id}.slf"),
                     write_slf(rescored.lattice))
    _write_transcripts(os.path.join(out, "transcripts.txt"),
                       session.entries, trace.final.transcripts)
    context_label = "no" if policy.mode == MODE_NONE else "yes"
    rows = _report_rows_from_trace(session, trace, _setting_name(params),
                                   context_label)
    write_atomic(os.path.join(out, "report.tsv"), format_report_tsv(rows))
    if not args.no_figures and any(r["eval_wer"] is not None for r in rows):
        from .plots import save_wer_curves
        curve_rows = [{"iteration": r["iteration"], "method": "lattice",
                       "context": context_label, "wer": r["eval_wer"]}
                      for r in rows if r["eval_wer"] is not None]
        save_wer_curves(curve_rows, os.path.join(out, "report.png"))
    log.info("wrote %s", out)
    return 0


def cmd_combine(args):
    config = Config.load(args.config)
    session = load_session(config.manifest(args))
    params = config.params(args)
    policy = config.policy(args)
    schedule = config.schedule(policy.mode != MODE_NONE)
    scorers = [step.scorer for step in schedule.steps]
    combined = combine_simultaneous(session, scorers, params, policy)
    out = config.out_dir(args)
    transcripts = [best_path(r, params.alpha).words for r in combined]
    for entry, rescored in zip(session.entries, combined):
        write_atomic(os.path.join(out, f"{entry.utterance_id}.slf"),
                     write_slf(rescored.lattice))
    _write_transcripts(os.path.join(out, "transcripts.txt"),
                       session.entries, transcripts)
    rows = []
    if all(e.reference for e in session.entries):
        counts = corpus_wer([(e.reference, t)
                             for e, t in zip(session.entries, transcripts)])
        rows.append({"iteration": len(scorers), "method": "simultaneous",
                     "search_setting": _setting_name(params),
                     "context": "no" if policy.mode == MODE_NONE else "yes",
                     "dev_wer": None, "eval_wer": counts.wer})
    write_atomic(os.path.join(out, "report.tsv"),
                 format_report_tsv(rows, comments=(COMBINATION_WEIGHT_NOTE,)))
    log.info("wrote %s", out)
    return 0


def cmd_compare(args):
    config = Config.load(args.config)
    session = load_session(config.manifest(args))
    dev_session = load_session(args.dev_manifest) if args.dev_manifest \
        else None
    params = config.params(args)
    policy = config.policy(args)
    schedule = config.schedule(True)
    rows = compare_methods(session, schedule, params, policy,
                           dev_session=dev_session)
    out = config.out_dir(args)
    write_atomic(os.path.join(out, "compare.tsv"),
                 format_report_tsv(rows, comments=(COMBINATION_WEIGHT_NOTE,)))
    if not args.no_figures:
        from .plots import save_compare_grid
        save_compare_grid(rows, os.path.join(out, "compare.png"))
    sys.stdout.write(format_report_tsv(rows))
    return 0


def cmd_nbest_extract(args):
    config = Config.load(args.config) if args.config else Config({})
    manifest = config.manifest(args)
    session = load_session(manifest)
    alpha = args.alpha if args.alpha is not None \
        else config.document.get("params", {}).get("alpha")
    if alpha is None:
        raise ToolkitError("alpha is required")
    lists = [extract_nbest(e.lattice, args.n, alpha)
             for e in session.entries]
    write_atomic(args.out, write_nbest(lists))
    return 0


def cmd_nbest_rescore(args):
    config = Config.load(args.config)
    with open(args.nbest, "rb") as fh:
        lists = read_nbest(fh.read())
    params = config.params(args)
    policy = config.policy(args)
    schedule = config.schedule(policy.mode != MODE_NONE)
    steps = [(step.scorer, step.mode) for step in schedule.steps]
    if args.mode == SIMULTANEOUS:
        rescored = [rescore_nbest(nb, [s for s, _ in steps], params.alpha,
                                  mode=SIMULTANEOUS) for nb in lists]
    else:
        rescored = rescore_nbest_session(lists, steps, params.alpha,
                                         policy)[-1]
    write_atomic(args.out, write_nbest(rescored))
    return 0


def cmd_wer(args):
    refs = _read_tokens(args.ref)
    hyps = _read_tokens(args.hyp)
    if len(refs) != len(hyps):
        raise ToolkitError(
            f"{len(refs)} references but {len(hyps)} hypotheses")
    counts = corpus_wer(list(zip(refs, hyps)))
    print(f"{counts.percent:.1f}")
    if args.counts:
        print(f"S={counts.substitutions} D={counts.deletions} "
              f"I={counts.insertions} N={counts.reference_length}",
              file=sys.stderr)
    return 0


def cmd_oracle_wer(args):
    refs = _read_tokens(args.ref)
    with open(args.nbest, "rb") as fh:
        lists = read_nbest(fh.read())
    if len(refs) != len(lists):
        raise ToolkitError(
            f"{len(refs)} references but {len(lists)} n-best lists")
    total = None
    for ref, nb in zip(refs, lists):
        counts = oracle_wer([e.words for e in nb.entries], ref)
        total = counts if total is None else total + counts
    print(f"{total.percent:.1f}")
    return 0


def cmd_perplexity(args):
    with open(args.arpa, "rb") as fh:
        table = parse_arpa(fh.read())
    scorer = NgramScorer(table)
    corpus = _read_tokens(args.text)
    value = perplexity(scorer, corpus, score_eos=args.score_eos)
    print(f"{value:.4f}")
    return 0


def cmd_gen_lattices(args):
    world, sessions = build_world(
        args.seed, ensemble_size=max(2, args.ensemble_size),
        vocab_size=args.vocab_size, utterances_per_session=args.utterances,
        sessions=args.sessions, words_per_utterance=args.length,
        noise=args.noise)
    manifests = write_sessions(sessions, args.out)
    vocab_path = os.path.join(args.out, "vocab.txt")
    write_atomic(vocab_path, "\n".join(world.vocab) + "\n")
    for manifest in manifests:
        print(manifest)
    return 0


def cmd_curves(args):
    world, sessions = build_world(
        args.seed, ensemble_size=args.ensemble_size,
        vocab_size=args.vocab_size, utterances_per_session=args.utterances,
        sessions=args.sessions, words_per_utterance=args.length,
        noise=args.noise)
    rows = replay_curves(world, sessions, args.iterations,
                         n_best=args.n_best)
    out = args.out
    write_atomic(os.path.join(out, "curves.tsv"), curves_tsv(rows))
    if not args.no_figures:
        from .plots import save_wer_curves
        save_wer_curves(rows, os.path.join(out, "curves.png"),
                        title="Synthetic-world rescoring")
    sys.stdout.write(curves_tsv(rows))
    return 0


def cmd_baseline_wer(args):
    config = Config.load(args.config) if args.config else Config({})
    session = load_session(config.manifest(args))
    alpha = args.alpha if args.alpha is not None \
        else config.document.get("params", {}).get("alpha")
    if alpha is None:
        raise ToolkitError("alpha is required")
    transcripts = [lattice_best_path(e.lattice, alpha).words
                   for e in session.entries]
    counts = corpus_wer([(e.reference, t)
                         for e, t in zip(session.entries, transcripts)])
    print(f"{counts.percent:.1f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="latrescore",
        description="Lattice rescoring with ensembles of sequence scorers")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="JSON run configuration")
        p.add_argument("--manifest", help="session manifest (JSON lines)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--ngram-approx", dest="ngram_approx", type=int)
        p.add_argument("--beam-k", dest="beam_k", type=int)
        p.add_argument("--context", choices=("none", "auto", "forward",
                                             "backward"))
        p.add_argument("--window-j", dest="window_j", type=int)
        p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("rescore", help="iterative ensemble lattice rescoring")
    add_common(p)
    p.set_defaults(func=cmd_rescore)

    p = sub.add_parser("combine", help="simultaneous lattice combination")
    add_common(p)
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("compare",
                       help="iterative vs simultaneous, rich vs fast grid")
    add_common(p)
    p.add_argument("--dev-manifest")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("nbest-extract", help="extract n-best lists")
    p.add_argument("--config")
    p.add_argument("--manifest")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_nbest_extract)

    p = sub.add_parser("nbest-rescore", help="rescore n-best lists")
    add_common(p)
    p.add_argument("--nbest", required=True)
    p.add_argument("--mode", choices=(ITERATIVE, SIMULTANEOUS),
                   default=ITERATIVE)
    p.set_defaults(func=cmd_nbest_rescore)

    p = sub.add_parser("wer", help="corpus WER of hypothesis vs reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--counts", action="store_true",
                   help="print S/D/I counts to stderr")
    p.set_defaults(func=cmd_wer)

    p = sub.add_parser("oracle-wer", help="oracle WER over n-best lists")
    p.add_argument("--ref", required=True)
    p.add_argument("--nbest", required=True)
    p.set_defaults(func=cmd_oracle_wer)

    p = sub.add_parser("perplexity", help="ARPA model perplexity on text")
    p.add_argument("--arpa", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--score-eos", action="store_true",
                   help="apply the <s>/</s> sentence-boundary convention")
    p.set_defaults(func=cmd_perplexity)

    p = sub.add_parser("gen-lattices",
                       help="generate a synthetic lattice corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sessions", type=int, default=1)
    p.add_argument("--utterances", type=int, default=4)
    p.add_argument("--length", type=int, default=6)
    p.add_argument("--vocab-size", dest="vocab_size", type=int, default=12)
    p.add_argument("--noise", type=float, default=0.7)
    p.add_argument("--ensemble-size", dest="ensemble_size", type=int,
                   default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_lattices)

    p = sub.add_parser("curves",
                       help="synthetic WER-vs-iteration curves (TSV + PNG)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sessions", type=int, default=2)
    p.add_argument("--utterances", type=int, default=4)
    p.add_argument("--length", type=int, default=6)
    p.add_argument("--vocab-size", dest="vocab_size", type=int, default=12)
    p.add_argument("--noise", type=float, default=0.7)
    p.add_argument("--ensemble-size", dest="ensemble_size", type=int,
                   default=8)
    p.add_argument("--iterations", type=int, default=8)
    p.add_argument("--n-best", dest="n_best", type=int, default=100)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("baseline-wer",
                       help="1-best WER of the original lattices")
    p.add_argument("--config")
    p.add_argument("--manifest")
    p.add_argument("--alpha", type=float)
    p.set_defaults(func=cmd_baseline_wer)

    return parser


def main(argv=None):
    level = os.environ.get("RESCORER_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
