"""Deterministic serialization of knowledge graphs (JSON and GraphML) and
of extracted triples (JSONL).

Output is byte-identical across runs for equal graphs: nodes and edges are
emitted in sorted-key order and all collections are sorted before writing.
Both formats round-trip losslessly.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from typing import Any, Iterable

from .graph import (
    ContextMap,
    ContextTriple,
    Edge,
    GraphIntegrityError,
    KnowledgeGraph,
    Node,
    Provenance,
    edge_key,
)

FORMATS = ("json", "graphml")

_GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"

# key id -> (domain, attribute name, graphml type)
_GRAPHML_KEYS = {
    "d0": ("node", "attributes", "string"),
    "d1": ("edge", "predicate", "string"),
    "d2": ("edge", "context", "string"),
    "d3": ("edge", "confidence", "double"),
    "d4": ("edge", "inferred", "boolean"),
    "d5": ("edge", "provenance", "string"),
}


class GraphParseError(ValueError):
    """Input bytes could not be parsed into a graph; carries position and
    reason in the message."""


def _provenance_to_dict(p: Provenance) -> dict[str, Any]:
    return {
        "source_id": p.source_id,
        "chunk_index": p.chunk_index,
        "extractor": p.extractor.value,
    }


def _provenance_from_dict(d: dict[str, Any]) -> Provenance:
    try:
        return Provenance(
            source_id=str(d["source_id"]),
            chunk_index=int(d["chunk_index"]),
            extractor=d.get("extractor", "model"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphParseError(f"invalid provenance record {d!r}: {exc}") from exc


def _node_to_dict(node: Node) -> dict[str, Any]:
    return {"id": node.id, "attributes": node.attributes.to_dict()}


def _edge_to_dict(edge: Edge) -> dict[str, Any]:
    return {
        "id": edge.edge_id,
        "source": edge.source,
        "target": edge.target,
        "predicate": edge.predicate,
        "context": edge.context.to_dict(),
        "confidence": edge.confidence,
        "inferred": edge.inferred,
        "provenance": [_provenance_to_dict(p) for p in edge.provenance],
    }


def graph_to_dict(g: KnowledgeGraph) -> dict[str, Any]:
    """JSON-ready dict with nodes sorted by id and edges by edge id."""
    return {
        "nodes": [_node_to_dict(g.nodes[nid]) for nid in sorted(g.nodes)],
        "edges": [_edge_to_dict(g.edges[eid]) for eid in sorted(g.edges)],
    }


def graph_from_dict(payload: Any) -> KnowledgeGraph:
    if not isinstance(payload, dict):
        raise GraphParseError(f"expected top-level object, got {type(payload).__name__}")
    nodes: dict[str, Node] = {}
    for entry in payload.get("nodes", []):
        if not isinstance(entry, dict) or "id" not in entry:
            raise GraphParseError(f"node record must be an object with 'id': {entry!r}")
        node_id = str(entry["id"])
        if node_id in nodes:
            raise GraphParseError(f"duplicate node id {node_id!r}")
        try:
            attributes = ContextMap.from_dict(entry.get("attributes") or {})
        except ValueError as exc:
            raise GraphParseError(f"node {node_id!r}: {exc}") from exc
        nodes[node_id] = Node(node_id, attributes)
    edges: dict[str, Edge] = {}
    for entry in payload.get("edges", []):
        if not isinstance(entry, dict):
            raise GraphParseError(f"edge record must be an object: {entry!r}")
        try:
            source = str(entry["source"])
            target = str(entry["target"])
            predicate = str(entry["predicate"])
        except KeyError as exc:
            raise GraphParseError(f"edge record missing field {exc}") from exc
        expected = edge_key(source, predicate, target)
        stored = str(entry.get("id") or expected)
        if stored != expected:
            raise GraphParseError(
                f"edge id {stored!r} does not match content hash of "
                f"({source!r}, {predicate!r}, {target!r})"
            )
        if stored in edges:
            raise GraphParseError(f"duplicate edge id {stored!r}")
        for endpoint in (source, target):
            if endpoint not in nodes:
                raise GraphIntegrityError(
                    f"edge {stored!r} references missing node {endpoint!r}"
                )
        try:
            context = ContextMap.from_dict(entry.get("context") or {})
            confidence = float(entry.get("confidence", 0.5))
            provenance = tuple(
                _provenance_from_dict(p) for p in entry.get("provenance", [])
            )
            edge = Edge(
                source=source,
                target=target,
                predicate=predicate,
                context=context,
                confidence=confidence,
                provenance=provenance,
                inferred=bool(entry.get("inferred", False)),
            )
        except GraphParseError:
            raise
        except (TypeError, ValueError) as exc:
            raise GraphParseError(f"edge {stored!r}: {exc}") from exc
        edges[stored] = edge
    return KnowledgeGraph(nodes, edges)


# --- context flattening for GraphML -----------------------------------------
# Data elements hold "key=value;value|key=value" with backslash escapes so
# values containing the separators survive the round trip.

_FLAT_SPECIALS = "\\|;="


def _escape_flat(text: str) -> str:
    out = []
    for ch in text:
        if ch in _FLAT_SPECIALS:
            out.append("\\")
        out.append(ch)
    return "".join(out)


def _split_unescaped(text: str, sep: str) -> list[str]:
    parts: list[str] = []
    current: list[str] = []
    escaped = False
    for ch in text:
        if escaped:
            current.append("\\")
            current.append(ch)
            escaped = False
        elif ch == "\\":
            escaped = True
        elif ch == sep:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    if escaped:
        current.append("\\")
    parts.append("".join(current))
    return parts


def _unescape_flat(text: str) -> str:
    out = []
    escaped = False
    for ch in text:
        if escaped:
            out.append(ch)
            escaped = False
        elif ch == "\\":
            escaped = True
        else:
            out.append(ch)
    return "".join(out)


def flatten_context(cm: ContextMap) -> str:
    groups = []
    for key, values in cm.items():
        joined = ";".join(_escape_flat(v) for v in sorted(values))
        groups.append(f"{_escape_flat(key)}={joined}")
    return "|".join(groups)


def unflatten_context(text: str) -> ContextMap:
    if not text:
        return ContextMap()
    entries: dict[str, list[str]] = {}
    for group in _split_unescaped(text, "|"):
        if not group:
            continue
        key_part, *value_parts = _split_unescaped(group, "=")
        if not value_parts:
            raise GraphParseError(f"flattened context group {group!r} has no '='")
        value_text = "=".join(value_parts)
        key = _unescape_flat(key_part)
        values = [_unescape_flat(v) for v in _split_unescaped(value_text, ";")]
        entries.setdefault(key, []).extend(v for v in values if v)
    try:
        return ContextMap(entries)
    except ValueError as exc:
        raise GraphParseError(str(exc)) from exc


# --- GraphML -----------------------------------------------------------------


def _graph_to_graphml(g: KnowledgeGraph) -> bytes:
    root = ET.Element("graphml", {"xmlns": _GRAPHML_NS})
    for key_id, (domain, name, gtype) in _GRAPHML_KEYS.items():
        ET.SubElement(
            root,
            "key",
            {"id": key_id, "for": domain, "attr.name": name, "attr.type": gtype},
        )
    graph_el = ET.SubElement(root, "graph", {"id": "G", "edgedefault": "directed"})
    for node_id in sorted(g.nodes):
        node = g.nodes[node_id]
        node_el = ET.SubElement(graph_el, "node", {"id": node.id})
        if node.attributes:
            data = ET.SubElement(node_el, "data", {"key": "d0"})
            data.text = flatten_context(node.attributes)
    for eid in sorted(g.edges):
        edge = g.edges[eid]
        edge_el = ET.SubElement(
            graph_el,
            "edge",
            {"id": edge.edge_id, "source": edge.source, "target": edge.target},
        )
        ET.SubElement(edge_el, "data", {"key": "d1"}).text = edge.predicate
        if edge.context:
            ET.SubElement(edge_el, "data", {"key": "d2"}).text = flatten_context(
                edge.context
            )
        ET.SubElement(edge_el, "data", {"key": "d3"}).text = repr(edge.confidence)
        ET.SubElement(edge_el, "data", {"key": "d4"}).text = (
            "true" if edge.inferred else "false"
        )
        ET.SubElement(edge_el, "data", {"key": "d5"}).text = json.dumps(
            [_provenance_to_dict(p) for p in edge.provenance],
            ensure_ascii=False,
            separators=(",", ":"),
        )
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def _local_name(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _graph_from_graphml(data: bytes) -> KnowledgeGraph:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise GraphParseError(f"invalid graphml at {exc.position}: {exc.msg}") from exc
    if _local_name(root.tag) != "graphml":
        raise GraphParseError(f"expected <graphml> root, got <{_local_name(root.tag)}>")
    key_names = {}
    graph_el = None
    for child in root:
        tag = _local_name(child.tag)
        if tag == "key":
            key_names[child.get("id", "")] = child.get("attr.name", "")
        elif tag == "graph" and graph_el is None:
            graph_el = child
    if graph_el is None:
        raise GraphParseError("graphml document has no <graph> element")

    def data_fields(element: ET.Element) -> dict[str, str]:
        fields = {}
        for data_el in element:
            if _local_name(data_el.tag) != "data":
                continue
            name = key_names.get(data_el.get("key", ""), data_el.get("key", ""))
            fields[name] = data_el.text or ""
        return fields

    payload: dict[str, list[dict[str, Any]]] = {"nodes": [], "edges": []}
    for element in graph_el:
        tag = _local_name(element.tag)
        fields = data_fields(element)
        if tag == "node":
            node_id = element.get("id")
            if node_id is None:
                raise GraphParseError("graphml node without id attribute")
            payload["nodes"].append(
                {
                    "id": node_id,
                    "attributes": unflatten_context(fields.get("attributes", "")).to_dict(),
                }
            )
        elif tag == "edge":
            source = element.get("source")
            target = element.get("target")
            if source is None or target is None:
                raise GraphParseError("graphml edge missing source/target attribute")
            if "predicate" not in fields:
                raise GraphParseError(
                    f"graphml edge {element.get('id')!r} has no predicate data element"
                )
            try:
                provenance = json.loads(fields.get("provenance", "[]"))
            except json.JSONDecodeError as exc:
                raise GraphParseError(f"invalid provenance payload: {exc.msg}") from exc
            payload["edges"].append(
                {
                    "id": element.get("id"),
                    "source": source,
                    "target": target,
                    "predicate": fields["predicate"],
                    "context": unflatten_context(fields.get("context", "")).to_dict(),
                    "confidence": fields.get("confidence", "0.5"),
                    "inferred": fields.get("inferred", "false") == "true",
                    "provenance": provenance,
                }
            )
    return graph_from_dict(payload)


# --- public entry points ------------------------------------------------------


def serialize_graph(g: KnowledgeGraph, fmt: str = "json") -> bytes:
    """Serialize ``g``; deterministic byte output for equal graphs."""
    if fmt == "json":
        return json.dumps(
            graph_to_dict(g), ensure_ascii=False, separators=(",", ":")
        ).encode("utf-8")
    if fmt == "graphml":
        return _graph_to_graphml(g)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def deserialize_graph(data: bytes | str, fmt: str = "json") -> KnowledgeGraph:
    """Parse bytes produced by :func:`serialize_graph` (or conforming to the
    documented schema) back into a graph.

    Raises :class:`GraphParseError` on malformed input and
    :class:`GraphIntegrityError` when an edge references a missing node.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    if fmt == "json":
        try:
            payload = json.loads(data.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise GraphParseError(f"input is not valid UTF-8: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise GraphParseError(
                f"invalid json at offset {exc.pos}: {exc.msg}"
            ) from exc
        return graph_from_dict(payload)
    if fmt == "graphml":
        return _graph_from_graphml(data)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def format_for_path(path: str) -> str:
    return "graphml" if str(path).endswith(".graphml") else "json"


# --- triples JSONL ------------------------------------------------------------


def triple_to_dict(t: ContextTriple) -> dict[str, Any]:
    return {
        "subject": t.subject,
        "predicate": t.predicate,
        "object": t.object,
        "context": t.context.to_dict(),
        "provenance": _provenance_to_dict(t.provenance),
    }


def triple_from_dict(d: dict[str, Any]) -> ContextTriple:
    try:
        return ContextTriple(
            subject=str(d["subject"]),
            predicate=str(d["predicate"]),
            object=str(d["object"]),
            context=ContextMap.from_dict(d.get("context") or {}),
            provenance=_provenance_from_dict(d.get("provenance") or {}),
        )
    except KeyError as exc:
        raise GraphParseError(f"triple record missing field {exc}") from exc
    except ValueError as exc:
        raise GraphParseError(f"invalid triple record: {exc}") from exc


def triples_to_jsonl(triples: Iterable[ContextTriple]) -> bytes:
    lines = [
        json.dumps(triple_to_dict(t), ensure_ascii=False, separators=(",", ":"))
        for t in triples
    ]
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


def triples_from_jsonl(data: bytes | str) -> list[ContextTriple]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    triples = []
    for lineno, line in enumerate(data.splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise GraphParseError(f"line {lineno}: invalid json: {exc.msg}") from exc
        triples.append(triple_from_dict(record))
    return triples
