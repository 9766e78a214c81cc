import logging

import pytest

from latrescore.errors import FormatError, LatticeError, SessionError
from latrescore.lattice import Arc, make_lattice, synth_lattice
from latrescore.sessions import load_session, write_manifest
from latrescore.slf import parse_slf, write_slf

MINIMAL = b"""VERSION=1.0
UTTERANCE=mini
N=2 L=1
I=0
I=1
J=0 S=0 E=1 W=a a=-1.000000 l=-0.500000
"""

VOCAB = ["a", "b", "c", "d", "e"]


def test_parse_minimal(minimal_lattice):
    lat = parse_slf(MINIMAL)
    assert lat.utterance_id == "mini"
    assert len(lat.nodes) == 2
    assert lat.arcs[0].word == "a"
    assert lat.arcs[0].acoustic == -1.0
    assert lat.arcs[0].lm == -0.5


def test_write_minimal_is_reference_bytes(minimal_lattice):
    assert write_slf(minimal_lattice) == MINIMAL


def test_node_count_mismatch():
    bad = MINIMAL.replace(b"N=2", b"N=3")
    with pytest.raises(FormatError, match="node count mismatch"):
        parse_slf(bad)


def test_arc_count_mismatch():
    bad = MINIMAL.replace(b"L=1", b"L=2")
    with pytest.raises(FormatError, match="arc count mismatch"):
        parse_slf(bad)


def test_malformed_line_reports_line_number():
    bad = MINIMAL + b"J=1 S=0 E=1 W=b a=xyz l=0\n"
    with pytest.raises(FormatError, match="line 7"):
        parse_slf(bad)


def test_missing_arc_field():
    bad = MINIMAL.replace(b" l=-0.500000", b"")
    with pytest.raises(FormatError, match="missing field l="):
        parse_slf(bad)


def test_unknown_field_warns_but_parses(caplog):
    text = MINIMAL.replace(b"J=0 S=0 E=1 W=a",
                           b"J=0 S=0 E=1 W=a v=3.0")
    with caplog.at_level(logging.WARNING):
        lat = parse_slf(text)
    assert lat.arcs[0].word == "a"
    assert any("unknown field v" in r.message for r in caplog.records)


def test_times_round_trip():
    lat = make_lattice("t", {0: 0.0, 1: 0.25}, [Arc(0, 0, 1, "a", -1.0, -0.5)])
    data = write_slf(lat)
    assert b"I=0 t=0.00" in data
    again = parse_slf(data)
    assert again.nodes[1] == 0.25


def test_multiple_initial_nodes_normalized():
    text = b"""VERSION=1.0
UTTERANCE=multi
N=3 L=2
I=0
I=1
I=2
J=0 S=0 E=2 W=a a=-1.000000 l=-0.500000
J=1 S=1 E=2 W=b a=-1.000000 l=-0.500000
"""
    lat = parse_slf(text)
    assert len(lat.nodes) == 4  # super-begin added
    eps = [a for a in lat.arcs if a.word == "!NULL"]
    assert len(eps) == 2
    assert all(a.lm == 0.0 for a in eps)


def test_cyclic_slf_rejected():
    text = b"""VERSION=1.0
UTTERANCE=loop
N=3 L=3
I=0
I=1
I=2
J=0 S=0 E=1 W=a a=-1.0 l=-0.5
J=1 S=1 E=1 W=b a=-1.0 l=-0.5
J=2 S=1 E=2 W=c a=-1.0 l=-0.5
"""
    with pytest.raises(LatticeError, match="cycle"):
        parse_slf(text)


def test_round_trip_on_synthetic_corpus():
    # 50 lattices; write -> parse -> write must be bit-exact
    for seed in range(50):
        lat = synth_lattice(seed, 4 + seed % 9, seed % 4, VOCAB,
                            epsilon_rate=0.2)
        data = write_slf(lat)
        assert write_slf(parse_slf(data)) == data


def test_write_is_deterministic():
    a = write_slf(synth_lattice(9, 10, 3, VOCAB))
    b = write_slf(synth_lattice(9, 10, 3, VOCAB))
    assert a == b


class TestSessions:
    def _write_session(self, tmp_path, count=3):
        entries = []
        for i in range(count):
            lat = synth_lattice(i, 5, 2, VOCAB)
            name = f"utt{i}.slf"
            (tmp_path / name).write_bytes(write_slf(lat))
            entries.append((f"utt{i}", name, ("a", "b")))
        manifest = tmp_path / "session.jsonl"
        write_manifest(manifest, entries)
        return manifest

    def test_loads_in_order(self, tmp_path):
        manifest = self._write_session(tmp_path)
        session = load_session(manifest)
        assert [e.utterance_id for e in session.entries] == \
            ["utt0", "utt1", "utt2"]
        assert session.entries[0].reference == ("a", "b")

    def test_missing_file_names_entry(self, tmp_path):
        manifest = self._write_session(tmp_path)
        (tmp_path / "utt1.slf").unlink()
        with pytest.raises(SessionError, match="entry 2: file not found"):
            load_session(manifest)

    def test_empty_manifest_rejected(self, tmp_path):
        manifest = tmp_path / "empty.jsonl"
        manifest.write_text("")
        with pytest.raises(SessionError, match="empty session"):
            load_session(manifest)

    def test_invalid_lattice_names_entry(self, tmp_path):
        manifest = self._write_session(tmp_path)
        (tmp_path / "utt2.slf").write_bytes(b"VERSION=1.0\nN=1 L=0\nI=0\n")
        with pytest.raises(SessionError, match="entry 3"):
            load_session(manifest)
