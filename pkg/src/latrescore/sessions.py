"""Session manifests: the ordered lattice sequence of one long speech.

A manifest is JSON Lines, one utterance per line::

    {"id": "utt1", "lattice": "utt1.slf", "ref": "w1 w2 w3"}

File order is utterance order; context carry-over follows it.  Lattice
paths are resolved relative to the manifest's directory.
"""

import json
import os
from dataclasses import dataclass

from .errors import FormatError, SessionError
from .slf import parse_slf


@dataclass
class SessionEntry:
    utterance_id: str
    lattice: object
    reference: tuple


@dataclass
class LatticeSession:
    session_id: str
    entries: list

    def __len__(self):
        return len(self.entries)

    @property
    def lattices(self):
        return [e.lattice for e in self.entries]

    @property
    def references(self):
        return [e.reference for e in self.entries]


def load_session(manifest_path):
    """Load every lattice named by a manifest, in manifest order."""
    if not os.path.exists(manifest_path):
        raise SessionError(f"manifest not found: {manifest_path}")
    base = os.path.dirname(os.path.abspath(manifest_path))
    entries = []
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            ordinal = len(entries) + 1
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad manifest JSON: {exc}", lineno)
            for key in ("id", "lattice"):
                if key not in record:
                    raise SessionError(f"entry {ordinal}: missing '{key}'")
            lattice_path = os.path.join(base, record["lattice"])
            if not os.path.exists(lattice_path):
                raise SessionError(
                    f"entry {ordinal}: file not found: {record['lattice']}")
            try:
                with open(lattice_path, "rb") as lf:
                    lattice = parse_slf(lf.read())
            except Exception as exc:
                raise SessionError(f"entry {ordinal}: {exc}")
            reference = tuple(str(record.get("ref", "")).split())
            entries.append(SessionEntry(record["id"], lattice, reference))
    if not entries:
        raise SessionError("empty session")
    session_id = os.path.splitext(os.path.basename(manifest_path))[0]
    return LatticeSession(session_id, entries)


def write_manifest(path, entries):
    """Write manifest lines for (utterance_id, lattice_relpath, ref_words)."""
    lines = []
    for utt_id, rel, ref in entries:
        lines.append(json.dumps(
            {"id": utt_id, "lattice": rel, "ref": " ".join(ref)},
            ensure_ascii=False))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
