"""Precision/recall/F1 of a predicted graph against gold triples.

Entities match on exact canonical labels. Relations match either strictly
(exact subject/predicate/object) or with a relaxed predicate rule where the
endpoints must match and one predicate may be a substring of the other.
Each gold item is matched at most once; empty denominators score 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from .aggregation import DEFAULT_POLICY, NormalizationPolicy, normalize_label
from .graph import KnowledgeGraph
from .serialize import deserialize_graph, format_for_path

RELATION_POLICIES = ("strict", "predicate_relaxed")

Triple = tuple[str, str, str]


class GoldFormatError(ValueError):
    """A gold JSONL line could not be parsed."""


@dataclass(frozen=True)
class GoldSet:
    """Reference entities and triples, already in canonical form."""

    entities: frozenset[str]
    triples: frozenset[Triple]

    def __post_init__(self) -> None:
        for subject, _, obj in self.triples:
            if subject not in self.entities or obj not in self.entities:
                raise ValueError(
                    f"gold triple endpoints {subject!r}/{obj!r} missing from entities"
                )


@dataclass(frozen=True)
class MatchResult:
    precision: float
    recall: float
    f1: float
    matched: tuple
    missing: tuple
    spurious: tuple


def _f1(precision: float, recall: float) -> float:
    if precision + recall <= 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _match_result(matched: set, missing: set, spurious: set) -> MatchResult:
    predicted_total = len(matched) + len(spurious)
    gold_total = len(matched) + len(missing)
    precision = len(matched) / predicted_total if predicted_total else 0.0
    recall = len(matched) / gold_total if gold_total else 0.0
    return MatchResult(
        precision,
        recall,
        _f1(precision, recall),
        tuple(sorted(matched)),
        tuple(sorted(missing)),
        tuple(sorted(spurious)),
    )


def entity_f1(g: KnowledgeGraph, gold: GoldSet) -> MatchResult:
    """Exact-label entity scores: P over predicted nodes, R over gold."""
    predicted = set(g.nodes)
    matched = predicted & gold.entities
    return _match_result(matched, gold.entities - predicted, predicted - matched)


def _predicates_match(a: str, b: str) -> bool:
    return a == b or a in b or b in a


def relation_f1(
    g: KnowledgeGraph,
    gold: GoldSet,
    policy: str = "strict",
    include_inferred: bool = False,
) -> MatchResult:
    """Relation scores under the chosen matching policy.

    ``strict`` requires exact (s, p, o) equality; ``predicate_relaxed``
    requires exact endpoints and substring-compatible predicates. Inferred
    edges are excluded unless ``include_inferred``.
    """
    if policy not in RELATION_POLICIES:
        raise ValueError(f"policy must be one of {RELATION_POLICIES}, got {policy!r}")
    predicted = {
        (e.source, e.predicate, e.target)
        for e in g.edges.values()
        if include_inferred or not e.inferred
    }
    if policy == "strict":
        matched = predicted & gold.triples
        return _match_result(matched, gold.triples - matched, predicted - matched)
    matched_predicted: set[Triple] = set()
    matched_gold: set[Triple] = set()
    gold_sorted = sorted(gold.triples)
    for p_triple in sorted(predicted):
        for g_triple in gold_sorted:
            if g_triple in matched_gold:
                continue
            if (
                p_triple[0] == g_triple[0]
                and p_triple[2] == g_triple[2]
                and _predicates_match(p_triple[1], g_triple[1])
            ):
                matched_predicted.add(p_triple)
                matched_gold.add(g_triple)
                break
    return _match_result(
        matched_predicted,
        gold.triples - matched_gold,
        predicted - matched_predicted,
    )


@dataclass(frozen=True)
class EvalReport:
    entity: MatchResult
    relation: MatchResult

    def to_dict(self) -> dict[str, Any]:
        def entity_items(labels) -> list[dict[str, Any]]:
            return [{"type": "entity", "label": label} for label in labels]

        def relation_items(triples) -> list[dict[str, Any]]:
            return [{"type": "relation", "triple": list(t)} for t in triples]

        return {
            "entity": {
                "p": self.entity.precision,
                "r": self.entity.recall,
                "f1": self.entity.f1,
            },
            "relation": {
                "p": self.relation.precision,
                "r": self.relation.recall,
                "f1": self.relation.f1,
            },
            "matched": entity_items(self.entity.matched)
            + relation_items(self.relation.matched),
            "missing": entity_items(self.entity.missing)
            + relation_items(self.relation.missing),
            "spurious": entity_items(self.entity.spurious)
            + relation_items(self.relation.spurious),
        }

    def render_table(self) -> str:
        rows = [
            ("entity", self.entity),
            ("relation", self.relation),
        ]
        lines = [f"{'':10} {'P':>8} {'R':>8} {'F1':>8}"]
        for name, result in rows:
            lines.append(
                f"{name:10} {result.precision:8.4f} {result.recall:8.4f} {result.f1:8.4f}"
            )
        lines.append(
            f"matched={len(self.entity.matched)}e/{len(self.relation.matched)}r "
            f"missing={len(self.entity.missing)}e/{len(self.relation.missing)}r "
            f"spurious={len(self.entity.spurious)}e/{len(self.relation.spurious)}r"
        )
        return "\n".join(lines)


def gold_from_graph(g: KnowledgeGraph, include_inferred: bool = False) -> GoldSet:
    """Gold set equal to a graph's own content (self-consistency checks)."""
    triples = {
        (e.source, e.predicate, e.target)
        for e in g.edges.values()
        if include_inferred or not e.inferred
    }
    return GoldSet(frozenset(g.nodes), frozenset(triples))


def load_gold(path, policy: NormalizationPolicy = DEFAULT_POLICY) -> GoldSet:
    """Load gold JSONL: triple objects ``{"subject","predicate","object"}``
    plus optional ``{"entity": ...}`` lines, normalized like aggregation."""
    entities: set[str] = set()
    triples: set[Triple] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise GoldFormatError(f"{path}:{lineno}: invalid json: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise GoldFormatError(f"{path}:{lineno}: expected a json object")
            try:
                if "entity" in record:
                    entities.add(normalize_label(str(record["entity"]), policy))
                elif {"subject", "predicate", "object"} <= record.keys():
                    triple = (
                        normalize_label(str(record["subject"]), policy),
                        normalize_label(str(record["predicate"]), policy),
                        normalize_label(str(record["object"]), policy),
                    )
                    triples.add(triple)
                    entities.add(triple[0])
                    entities.add(triple[2])
                else:
                    raise GoldFormatError(
                        f"{path}:{lineno}: expected 'entity' or subject/predicate/object"
                    )
            except ValueError as exc:
                if isinstance(exc, GoldFormatError):
                    raise
                raise GoldFormatError(f"{path}:{lineno}: {exc}") from exc
    return GoldSet(frozenset(entities), frozenset(triples))


def evaluate_run(
    predicted_graph_path,
    gold_path,
    policy: str = "strict",
    include_inferred: bool = False,
    normalization: NormalizationPolicy = DEFAULT_POLICY,
) -> EvalReport:
    """Load a serialized graph and a gold file, compute both metrics."""
    with open(predicted_graph_path, "rb") as handle:
        graph = deserialize_graph(handle.read(), format_for_path(predicted_graph_path))
    gold = load_gold(gold_path, normalization)
    return EvalReport(
        entity=entity_f1(graph, gold),
        relation=relation_f1(graph, gold, policy, include_inferred),
    )
