from __future__ import annotations

import random
from pathlib import Path

import pytest

from dsirup.model import LabelledGraph, parse

FIXTURES = Path(__file__).parent / "fixtures"


def load(name: str) -> LabelledGraph:
    return parse((FIXTURES / name).read_text())


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240517)


def random_ditree(
    rng: random.Random,
    max_nodes: int = 7,
    labels=("T", "F", None, None),
    preds=("R", "S"),
) -> LabelledGraph:
    n = rng.randint(1, max_nodes)
    names = [f"v{i}" for i in range(n)]
    edges = []
    for i in range(1, n):
        parent = names[rng.randrange(i)]
        edges.append((parent, names[i], rng.choice(preds)))
    unary = {}
    for name in names:
        lab = rng.choice(labels)
        if lab == "FT":
            unary[name] = {"F", "T"}
        elif lab:
            unary[name] = {lab}
    return LabelledGraph.build(nodes=names, unary=unary, edges=edges)


def random_graph(
    rng: random.Random,
    max_nodes: int = 8,
    edge_prob: float = 0.3,
    labels=("T", "F", "A", None),
    preds=("R", "S"),
) -> LabelledGraph:
    n = rng.randint(1, max_nodes)
    names = [f"w{i}" for i in range(n)]
    edges = []
    for a in names:
        for b in names:
            if a != b and rng.random() < edge_prob:
                edges.append((a, b, rng.choice(preds)))
    unary = {}
    for name in names:
        lab = rng.choice(labels)
        if lab:
            unary[name] = {lab}
    return LabelledGraph.build(nodes=names, unary=unary, edges=edges)
