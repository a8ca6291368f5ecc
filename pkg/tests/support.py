"""Shared oracles and random-instance builders for the test suite.

The oracles are deliberately independent of the library: plain deque BFS
over adjacency dicts, exhaustive simple-path enumeration, brute-force
subset search, naive set comparison. Library results are checked against
these, never against themselves.
"""

from __future__ import annotations

import itertools
import random
from collections import deque

from hypothesis import strategies as st

from lightkg.aggregation import add_triple
from lightkg.graph import (
    ContextMap,
    ContextTriple,
    Edge,
    Extractor,
    KnowledgeGraph,
    Node,
    Provenance,
    empty_graph,
)

PROV = Provenance("fixture", 0, Extractor.PATTERN)


def triple(s: str, p: str, o: str, ctx: dict | None = None, prov: Provenance = PROV) -> ContextTriple:
    return ContextTriple(s, p, o, context=ContextMap(ctx or {}), provenance=prov)


def graph_of(*spo) -> KnowledgeGraph:
    """Fold (s, p, o[, context dict]) tuples into a graph; labels should
    already be canonical."""
    g = empty_graph()
    for item in spo:
        s, p, o = item[:3]
        ctx = item[3] if len(item) > 3 else None
        g = add_triple(g, triple(s, p, o, ctx))
    return g


# --- independent graph oracles -------------------------------------------------


def edge_pairs(g: KnowledgeGraph) -> list[tuple[str, str]]:
    return [(e.source, e.target) for e in g.edges.values()]


def oracle_shortest_len(
    pairs: list[tuple[str, str]],
    source: str,
    target: str,
    undirected: bool,
) -> int | None:
    """Unidirectional BFS shortest distance; None when disconnected."""
    adjacency: dict[str, set[str]] = {}
    for u, v in pairs:
        adjacency.setdefault(u, set()).add(v)
        if undirected:
            adjacency.setdefault(v, set()).add(u)
    queue = deque([(source, 0)])
    seen = {source}
    while queue:
        node, dist = queue.popleft()
        if node == target:
            return dist
        for neighbor in adjacency.get(node, ()):
            if neighbor not in seen:
                seen.add(neighbor)
                queue.append((neighbor, dist + 1))
    return None


def enumerate_simple_paths(
    pairs: list[tuple[str, str]],
    source: str,
    target: str,
    max_len: int,
    undirected: bool,
) -> list[tuple[str, ...]]:
    """Every simple node path from source to target with <= max_len hops."""
    adjacency: dict[str, set[str]] = {}
    for u, v in pairs:
        adjacency.setdefault(u, set()).add(v)
        if undirected:
            adjacency.setdefault(v, set()).add(u)
    found: list[tuple[str, ...]] = []

    def walk(path: list[str]) -> None:
        if path[-1] == target:
            found.append(tuple(path))
            return
        if len(path) > max_len:
            return
        for neighbor in sorted(adjacency.get(path[-1], ())):
            if neighbor not in path:
                walk(path + [neighbor])

    walk([source])
    return found


def path_edge_sets(
    g: KnowledgeGraph, node_path: tuple[str, ...], undirected: bool
) -> set[frozenset[str]]:
    """All ways to realize a node path as a set of edge ids (parallel edges
    give several realizations)."""
    options: list[list[str]] = []
    for u, v in zip(node_path, node_path[1:]):
        ids = [
            e.edge_id
            for e in g.edges.values()
            if (e.source, e.target) == (u, v)
            or (undirected and (e.source, e.target) == (v, u))
        ]
        options.append(ids)
    realizations = set()
    for combo in itertools.product(*options):
        if len(set(combo)) == len(combo):
            realizations.add(frozenset(combo))
    return realizations


def max_edge_disjoint_count(edge_sets: list[frozenset[str]]) -> int:
    """Brute-force size of the largest pairwise edge-disjoint subset."""
    best = 0
    for size in range(len(edge_sets), 0, -1):
        for combo in itertools.combinations(edge_sets, size):
            union = set()
            total = 0
            for es in combo:
                union |= es
                total += len(es)
            if len(union) == total:
                return size
    return best


def naive_f1(predicted: set, gold: set) -> tuple[float, float, float]:
    """Set-comparison precision/recall/F1 with zero conventions."""
    matched = len(predicted & gold)
    precision = matched / len(predicted) if predicted else 0.0
    recall = matched / len(gold) if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


# --- seeded random builders (used by the acceptance suite) ----------------------

WORDS = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
    "iota", "kappa", "lam", "mu", "nu", "xi", "omicron", "pi",
]
PREDICATES = ["links", "cites", "part_of", "near", "mentor", "colleague", "is_a"]


def random_label(rng: random.Random) -> str:
    return rng.choice(WORDS) + rng.choice(["", " one", " two", ""])


def random_context(rng: random.Random) -> ContextMap:
    entries = {}
    for _ in range(rng.randrange(3)):
        key = rng.choice(["year", "place", "role"])
        entries.setdefault(key, []).append(rng.choice(["1898", "paris", "x=y;z", "a|b"]))
    return ContextMap(entries)


def random_graph(
    rng: random.Random,
    max_nodes: int = 8,
    max_edges: int = 12,
    predicates: list[str] = PREDICATES,
) -> KnowledgeGraph:
    """Directly constructed random graph with varied attributes, contexts,
    confidences and provenance lists."""
    node_ids = sorted({random_label(rng) for _ in range(rng.randint(1, max_nodes))})
    nodes = {}
    for node_id in node_ids:
        attrs = random_context(rng) if rng.random() < 0.3 else ContextMap()
        nodes[node_id] = Node(node_id, attrs)
    edges: dict[str, Edge] = {}
    edge_target = rng.randrange(max_edges + 1)
    for _ in range(edge_target):
        source = rng.choice(node_ids)
        target = rng.choice(node_ids)
        predicate = rng.choice(predicates)
        provenance = tuple(
            Provenance(rng.choice(["a", "b"]), rng.randrange(3), Extractor.PATTERN)
            for _ in range(rng.randrange(3))
        )
        edge = Edge(
            source=source,
            target=target,
            predicate=predicate,
            context=random_context(rng),
            confidence=round(rng.random(), 3),
            provenance=provenance,
            inferred=False,
        )
        edges[edge.edge_id] = edge
    return KnowledgeGraph(nodes, edges)


def random_triples(rng: random.Random, count: int) -> list[ContextTriple]:
    return [
        triple(
            rng.choice(WORDS),
            rng.choice(PREDICATES),
            rng.choice(WORDS),
            prov=Provenance(rng.choice(["d1", "d2", "d3"]), rng.randrange(3), Extractor.PATTERN),
        )
        for _ in range(count)
    ]


# --- hypothesis strategies -------------------------------------------------------

_word = st.text(alphabet="abcdefgh", min_size=1, max_size=6)

# Canonical labels: lowercase words joined by single spaces (normalization
# fixed points by construction).
labels = st.builds(" ".join, st.lists(_word, min_size=1, max_size=2))

# Values stress the GraphML flattening escapes but stay XML-representable.
values = (
    st.text(alphabet="abcxyz09 =;|\\", min_size=1, max_size=8)
    .map(str.strip)
    .filter(bool)
)

context_maps = st.dictionaries(
    labels, st.sets(values, min_size=1, max_size=3), max_size=3
).map(ContextMap)

provenances = st.builds(
    Provenance,
    source_id=_word,
    chunk_index=st.integers(0, 3),
    extractor=st.sampled_from([Extractor.MODEL, Extractor.PATTERN]),
)

context_triples = st.builds(
    ContextTriple,
    subject=labels,
    predicate=labels,
    object=labels,
    context=context_maps,
    provenance=provenances,
)


@st.composite
def graphs(draw, max_nodes: int = 6, max_edges: int = 10):
    node_ids = draw(st.lists(labels, min_size=1, max_size=max_nodes, unique=True))
    nodes = {}
    for node_id in node_ids:
        nodes[node_id] = Node(node_id, draw(context_maps))
    edges: dict[str, Edge] = {}
    for _ in range(draw(st.integers(0, max_edges))):
        edge = Edge(
            source=draw(st.sampled_from(node_ids)),
            target=draw(st.sampled_from(node_ids)),
            predicate=draw(labels),
            context=draw(context_maps),
            confidence=draw(st.floats(0.0, 1.0, allow_nan=False)),
            provenance=tuple(draw(st.lists(provenances, max_size=2))),
            inferred=draw(st.booleans()),
        )
        edges[edge.edge_id] = edge
    return KnowledgeGraph(nodes, edges)
