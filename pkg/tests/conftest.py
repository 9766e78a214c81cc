import pytest

from latrescore.lattice import Arc, make_lattice


@pytest.fixture
def minimal_lattice():
    return make_lattice("mini", [0, 1], [Arc(0, 0, 1, "a", -1.0, -0.5)])


@pytest.fixture
def diamond_lattice():
    """Two-way branch: begin -> {a|b} -> joint -> c -> end."""
    arcs = [
        Arc(0, 0, 1, "a", -1.0, -0.4),
        Arc(1, 0, 2, "b", -1.5, -0.2),
        Arc(2, 1, 3, "c", -0.7, -0.3),
        Arc(3, 2, 3, "c", -0.9, -0.3),
    ]
    return make_lattice("diamond", [0, 1, 2, 3], arcs)


def chain_lattice(words, utt_id="chain", acoustic=-1.0, lm=-0.5):
    arcs = [Arc(i, i, i + 1, w, acoustic, lm) for i, w in enumerate(words)]
    return make_lattice(utt_id, range(len(words) + 1), arcs)


@pytest.fixture
def chain_factory():
    return chain_lattice
