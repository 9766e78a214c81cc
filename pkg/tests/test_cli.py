import json
import os

import pytest

from latrescore import cli
from latrescore.context import ContextPolicy
from latrescore.ensemble import IterationSchedule, run_iterative
from latrescore.pushforward import RescoreParams
from latrescore.scoring import MockScorer
from latrescore.sessions import load_session
from latrescore.slf import write_slf
from latrescore.wer import format_report_tsv


@pytest.fixture
def toy_run(tmp_path):
    """Deterministic toy corpus plus a config of mock scorers."""
    data = tmp_path / "data"
    assert cli.main(["gen-lattices", "--seed", "5", "--sessions", "1",
                     "--utterances", "3", "--out", str(data)]) == 0
    manifest = data / "session-005-00.jsonl"
    vocab_file = data / "vocab.txt"
    config = {
        "scorers": [
            {"name": "mf", "kind": "mock", "seed": 1,
             "vocab_file": "data/vocab.txt", "direction": "forward"},
            {"name": "mb", "kind": "mock", "seed": 2,
             "vocab_file": "data/vocab.txt", "direction": "backward"},
        ],
        "schedule": ["mf", "mb"],
        "params": {"alpha": 1.0, "ngram_approx": 5, "beam_k": 10},
        "context": {"mode": "auto", "window_j": 1},
        "io": {"manifest": str(manifest), "output_dir": str(tmp_path / "out")},
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    assert vocab_file.exists()
    return config_path, manifest, tmp_path


def read_vocab(path):
    return [w for w in path.read_text().split() if w]


class TestRescore:
    def test_writes_expected_artifacts(self, toy_run):
        config_path, manifest, tmp_path = toy_run
        assert cli.main(["rescore", "--config", str(config_path)]) == 0
        out = tmp_path / "out"
        assert (out / "report.tsv").exists()
        assert (out / "transcripts.txt").exists()
        assert (out / "report.png").exists()
        slfs = sorted(p.name for p in out.glob("*.slf"))
        assert len(slfs) == 3

    def test_report_matches_library_pipeline(self, toy_run):
        config_path, manifest, tmp_path = toy_run
        assert cli.main(["rescore", "--config", str(config_path)]) == 0
        report = (tmp_path / "out" / "report.tsv").read_bytes()

        vocab = read_vocab(tmp_path / "data" / "vocab.txt")
        session = load_session(manifest)
        scorers = [MockScorer(1, vocab, direction="forward", name="mf"),
                   MockScorer(2, vocab, direction="backward", name="mb")]
        schedule = IterationSchedule.from_scorers(scorers, context=True,
                                                  names=["mf", "mb"])
        params = RescoreParams(alpha=1.0, ngram_approx=5, beam_k=10)
        trace = run_iterative(session, schedule, params,
                              ContextPolicy("schedule", 1))
        rows = [{"iteration": r.iteration,
                 "method": f"iterative:{r.step_name}",
                 "search_setting": "rich", "context": "yes",
                 "dev_wer": None,
                 "eval_wer": r.wer.wer if r.wer else None}
                for r in trace.records]
        assert report == format_report_tsv(rows).encode("utf-8")
        final = (tmp_path / "out" /
                 f"{session.entries[0].utterance_id}.slf").read_bytes()
        assert final == write_slf(trace.final.rescored[0].lattice)

    def test_bit_identical_across_runs(self, toy_run):
        config_path, _, tmp_path = toy_run
        blobs = []
        for run in ("a", "b"):
            out = tmp_path / f"out-{run}"
            assert cli.main(["rescore", "--config", str(config_path),
                             "--out", str(out)]) == 0
            blobs.append(b"".join(
                p.read_bytes() for p in sorted(out.glob("*.slf"))
                ) + (out / "report.tsv").read_bytes())
        assert blobs[0] == blobs[1]

    def test_flag_overrides_config(self, toy_run):
        config_path, _, tmp_path = toy_run
        out = tmp_path / "fast"
        assert cli.main(["rescore", "--config", str(config_path),
                         "--out", str(out), "--ngram-approx", "0",
                         "--beam-k", "1", "--context", "none"]) == 0
        report = (out / "report.tsv").read_text()
        assert "fast" in report
        assert "\tno\t" in report


class TestCombineAndCompare:
    def test_combine_writes_report(self, toy_run):
        config_path, _, tmp_path = toy_run
        out = tmp_path / "comb"
        assert cli.main(["combine", "--config", str(config_path),
                         "--out", str(out)]) == 0
        assert (out / "report.tsv").exists()
        assert len(list(out.glob("*.slf"))) == 3

    def test_compare_grid(self, toy_run, capsys):
        config_path, _, tmp_path = toy_run
        out = tmp_path / "cmp"
        assert cli.main(["compare", "--config", str(config_path),
                         "--out", str(out)]) == 0
        text = (out / "compare.tsv").read_text()
        assert text.count("\titerative\t") == 4
        assert text.count("\tsimultaneous\t") == 4
        assert (out / "compare.png").exists()
        assert "iterative" in capsys.readouterr().out


class TestNBestCommands:
    def test_extract_then_rescore(self, toy_run):
        config_path, manifest, tmp_path = toy_run
        nbest_path = tmp_path / "nbest.txt"
        assert cli.main(["nbest-extract", "--config", str(config_path),
                         "--n", "10", "--out", str(nbest_path)]) == 0
        assert nbest_path.exists()
        rescored_path = tmp_path / "nbest-rescored.txt"
        assert cli.main(["nbest-rescore", "--config", str(config_path),
                         "--nbest", str(nbest_path),
                         "--out", str(rescored_path)]) == 0
        text = rescored_path.read_text()
        assert text.strip()
        # iterative and simultaneous agree without context
        sim_path = tmp_path / "nbest-sim.txt"
        assert cli.main(["nbest-rescore", "--config", str(config_path),
                         "--nbest", str(nbest_path), "--mode",
                         "simultaneous", "--context", "none",
                         "--out", str(sim_path)]) == 0
        it_path = tmp_path / "nbest-it.txt"
        assert cli.main(["nbest-rescore", "--config", str(config_path),
                         "--nbest", str(nbest_path), "--mode", "iterative",
                         "--context", "none",
                         "--out", str(it_path)]) == 0
        sim_first = [l.split()[:2] for l in sim_path.read_text().splitlines()]
        it_first = [l.split()[:2] for l in it_path.read_text().splitlines()]
        assert sim_first == it_first


class TestSmallCommands:
    def test_wer_identical_files_prints_zero(self, tmp_path, capsys):
        ref = tmp_path / "refs.txt"
        ref.write_text("a b c\nx y\n")
        hyp = tmp_path / "hyps.txt"
        hyp.write_text("a b c\nx y\n")
        assert cli.main(["wer", "--ref", str(ref), "--hyp", str(hyp)]) == 0
        assert capsys.readouterr().out.strip() == "0.0"

    def test_wer_mismatched_line_counts_exit_one(self, tmp_path, capsys):
        ref = tmp_path / "refs.txt"
        ref.write_text("a b\n")
        hyp = tmp_path / "hyps.txt"
        hyp.write_text("a b\nc\n")
        assert cli.main(["wer", "--ref", str(ref), "--hyp", str(hyp)]) == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_subcommand_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["frobnicate"])
        assert exc.value.code == 2

    def test_oracle_wer_command(self, toy_run, tmp_path, capsys):
        config_path, manifest, base = toy_run
        nbest_path = base / "oracle-nbest.txt"
        assert cli.main(["nbest-extract", "--config", str(config_path),
                         "--n", "50", "--out", str(nbest_path)]) == 0
        session = load_session(manifest)
        refs = base / "refs.txt"
        refs.write_text("\n".join(" ".join(e.reference)
                                  for e in session.entries) + "\n")
        assert cli.main(["oracle-wer", "--ref", str(refs),
                         "--nbest", str(nbest_path)]) == 0
        value = float(capsys.readouterr().out.strip())
        assert 0.0 <= value <= 100.0

    def test_perplexity_command(self, tmp_path, capsys):
        from oracles import WittenBellModel, synthetic_corpus
        corpus = synthetic_corpus(3, sentences=100, vocab_size=6)
        arpa = tmp_path / "lm.arpa"
        arpa.write_text(WittenBellModel(corpus, order=2).to_arpa())
        text = tmp_path / "text.txt"
        text.write_text("\n".join(" ".join(s) for s in corpus[:10]) + "\n")
        assert cli.main(["perplexity", "--arpa", str(arpa),
                         "--text", str(text)]) == 0
        assert float(capsys.readouterr().out.strip()) > 1.0

    def test_curves_command(self, tmp_path, capsys):
        out = tmp_path / "curves"
        assert cli.main(["curves", "--seed", "1", "--sessions", "1",
                         "--utterances", "2", "--length", "4",
                         "--ensemble-size", "2", "--iterations", "2",
                         "--n-best", "10", "--out", str(out)]) == 0
        assert (out / "curves.tsv").exists()
        assert (out / "curves.png").exists()

    def test_gen_lattices_deterministic(self, tmp_path):
        outs = []
        for run in ("a", "b"):
            out = tmp_path / run
            assert cli.main(["gen-lattices", "--seed", "9", "--out",
                             str(out)]) == 0
            outs.append(b"".join(p.read_bytes()
                                 for p in sorted(out.rglob("*.slf"))))
        assert outs[0] == outs[1]

    def test_baseline_wer_command(self, toy_run, capsys):
        config_path, _, _ = toy_run
        assert cli.main(["baseline-wer", "--config",
                         str(config_path)]) == 0
        float(capsys.readouterr().out.strip())
