"""Turns text chunks into context-annotated triples.

Two extractors share one output type: a model-backed extractor that prompts
a chat endpoint and parses its line-oriented output (with one repair pass
for malformed responses), and a fixed-rule pattern extractor that works
offline and anchors deterministic end-to-end runs.

Output grammar, one triple per line::

    (subject | predicate | object) {key=value; key=value}

The context braces are optional; '|', '{' and '}' are forbidden inside
fields. Lines that fail to parse are recorded and skipped, never fatal.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace

from .client import ChatClient, ChatMessage, CompletionParams
from .graph import ContextMap, ContextTriple, Extractor, Provenance

DEFAULT_MAX_CHUNK_CHARS = 2000

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")
_LIST_MARKER = re.compile(r"^(?:[-*•]+|\d+[.)])\s+")


class CorpusFormatError(ValueError):
    """A corpus JSONL line could not be parsed."""


@dataclass(frozen=True)
class TextChunk:
    source_id: str
    chunk_index: int
    text: str

    def __post_init__(self) -> None:
        if self.chunk_index < 0:
            raise ValueError("chunk_index must be >= 0")
        if not self.text.strip():
            raise ValueError("chunk text must be non-empty")


@dataclass
class ExtractionResult:
    triples: list[ContextTriple] = field(default_factory=list)
    raw_response: str = ""
    repaired: bool = False
    rejected_lines: list[tuple[str, str]] = field(default_factory=list)


@dataclass(frozen=True)
class CorpusDocument:
    doc_id: str
    text: str


def read_corpus(path) -> list[CorpusDocument]:
    """Load a JSONL corpus of ``{"id": ..., "text": ...}`` objects."""
    documents = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid json: {exc.msg}") from exc
            if not isinstance(record, dict) or "id" not in record or "text" not in record:
                raise CorpusFormatError(
                    f"{path}:{lineno}: expected object with 'id' and 'text'"
                )
            documents.append(CorpusDocument(str(record["id"]), str(record["text"])))
    return documents


def split_sentences(text: str) -> list[str]:
    pieces = _SENTENCE_SPLIT.split(text.strip())
    return [p.strip() for p in pieces if p.strip()]


def chunk_document(
    source_id: str, text: str, max_chunk_chars: int = DEFAULT_MAX_CHUNK_CHARS
) -> list[TextChunk]:
    """Split a document into chunks at sentence boundaries where possible.

    Sentences longer than the budget are hard-split. Chunk texts concatenate
    back to the input modulo boundary whitespace; indexes count up from 0.
    """
    if max_chunk_chars < 1:
        raise ValueError("max_chunk_chars must be >= 1")
    body = text.strip()
    if not body:
        return []
    pieces: list[str] = []
    for sentence in split_sentences(body):
        if len(sentence) <= max_chunk_chars:
            pieces.append(sentence)
        else:
            for start in range(0, len(sentence), max_chunk_chars):
                slice_ = sentence[start : start + max_chunk_chars].strip()
                if slice_:
                    pieces.append(slice_)
    chunks: list[str] = []
    current: list[str] = []
    current_len = 0
    for piece in pieces:
        candidate = current_len + len(piece) + (1 if current else 0)
        if current and candidate > max_chunk_chars:
            chunks.append(" ".join(current))
            current, current_len = [piece], len(piece)
        else:
            current.append(piece)
            current_len = candidate
    if current:
        chunks.append(" ".join(current))
    return [TextChunk(source_id, index, chunk) for index, chunk in enumerate(chunks)]


# --- prompting ----------------------------------------------------------------

_FORMAT_WITH_CONTEXT = """\
You are an information extraction engine. Read the user's text and emit the
facts it states, one per line, in exactly this format:

(subject | predicate | object) {key=value; key=value}

Rules:
- One fact per line. No numbering, no commentary, no extra text.
- The characters '|', '{' and '}' must never appear inside a field.
- Keep subject, predicate and object as short surface forms from the text.
- Put contextual attributes of the fact (time, place, qualifiers) inside the
  braces, e.g. a date becomes {year=1898}. Omit the braces when the text
  gives no context for the fact.

Example:
Text: Marie Curie discovered radium in 1898.
Output: (marie curie | discovered | radium) {year=1898}"""

_FORMAT_NO_CONTEXT = """\
You are an information extraction engine. Read the user's text and emit the
facts it states, one per line, in exactly this format:

(subject | predicate | object)

Rules:
- One fact per line. No numbering, no commentary, no extra text.
- The character '|' must never appear inside a field.
- Keep subject, predicate and object as short surface forms from the text.

Example:
Text: Marie Curie discovered radium in 1898.
Output: (marie curie | discovered | radium)"""


def build_extraction_prompt(
    chunk: TextChunk, include_context: bool = True
) -> list[ChatMessage]:
    """Deterministic prompt demanding the line grammar above; the context
    clause is dropped from the requested schema when ``include_context`` is
    false."""
    system = _FORMAT_WITH_CONTEXT if include_context else _FORMAT_NO_CONTEXT
    return [
        ChatMessage("system", system),
        ChatMessage("user", f"Text:\n{chunk.text}"),
    ]


def build_repair_prompt(
    chunk: TextChunk, malformed_output: str, include_context: bool = True
) -> list[ChatMessage]:
    system = _FORMAT_WITH_CONTEXT if include_context else _FORMAT_NO_CONTEXT
    user = (
        "Your previous output could not be parsed:\n"
        f"{malformed_output}\n\n"
        "Re-emit the facts from the original text, using exactly the required "
        "line format and nothing else.\n"
        f"Text:\n{chunk.text}"
    )
    return [ChatMessage("system", system), ChatMessage("user", user)]


# --- response parsing ----------------------------------------------------------


class _LineRejected(ValueError):
    pass


def _parse_context_body(body: str) -> ContextMap:
    entries: dict[str, list[str]] = {}
    for pair in body.split(";"):
        pair = pair.strip()
        if not pair:
            continue
        key, sep, value = pair.partition("=")
        if not sep:
            raise _LineRejected(f"context entry {pair!r} is missing '='")
        key = key.strip().lower()
        value = value.strip()
        if not key:
            raise _LineRejected("empty context key")
        if not value:
            raise _LineRejected(f"context key {key!r} has an empty value")
        entries.setdefault(key, []).append(value)
    return ContextMap(entries)


def _parse_line(line: str, provenance: Provenance) -> ContextTriple:
    if not line.startswith("("):
        raise _LineRejected("line does not start with '('")
    brace = line.find("{")
    close = line.rfind(")", 0, brace if brace != -1 else len(line))
    if close == -1:
        raise _LineRejected("missing closing parenthesis")
    fields = line[1:close].split("|")
    if len(fields) != 3:
        raise _LineRejected(f"expected 3 '|' separated fields, got {len(fields)}")
    subject, predicate, obj = (f.strip() for f in fields)
    if not subject:
        raise _LineRejected("empty subject")
    if not predicate:
        raise _LineRejected("empty predicate")
    if not obj:
        raise _LineRejected("empty object")
    rest = line[close + 1 :].strip()
    context = ContextMap()
    if rest:
        if not (rest.startswith("{") and rest.endswith("}")):
            raise _LineRejected(f"unexpected trailing text {rest!r}")
        context = _parse_context_body(rest[1:-1])
    return ContextTriple(subject, predicate, obj, context=context, provenance=provenance)


def parse_extraction_response(raw: str, provenance: Provenance) -> ExtractionResult:
    """Parse a model response into triples; total over arbitrary input.

    Every non-blank line is either accepted as one triple or recorded in
    ``rejected_lines`` with a reason. Surface strings are trimmed but not
    canonicalized (that is aggregation's job); context keys are lowercased.
    """
    result = ExtractionResult(raw_response=raw)
    for line in raw.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        stripped = _LIST_MARKER.sub("", stripped)
        try:
            result.triples.append(_parse_line(stripped, provenance))
        except _LineRejected as exc:
            result.rejected_lines.append((line.strip(), str(exc)))
    return result


def extract_chunk(
    chunk: TextChunk,
    client: ChatClient,
    params: CompletionParams,
    include_context: bool = True,
) -> ExtractionResult:
    """Prompt the model for one chunk and parse the reply.

    If nothing parses and the reply was non-empty, re-prompts once with the
    malformed output and the grammar (``repaired`` flags this). An empty
    triple list is not an error. With ``include_context`` false every
    emitted triple carries an empty context, whatever the model returned.
    """
    provenance = Provenance(chunk.source_id, chunk.chunk_index, Extractor.MODEL)
    raw = client.complete(build_extraction_prompt(chunk, include_context), params)
    result = parse_extraction_response(raw, provenance)
    if not result.triples and raw.strip():
        repair_raw = client.complete(
            build_repair_prompt(chunk, raw, include_context), params
        )
        result = parse_extraction_response(repair_raw, provenance)
        result.repaired = True
    if not include_context:
        result.triples = [replace(t, context=ContextMap()) for t in result.triples]
    return result


# --- pattern extractor ----------------------------------------------------------

_SUCH_AS = re.compile(r"([^,.;:]+),\s+such\s+as\s+([^,.;:]+)", re.IGNORECASE)

# Verb slot: a regular past-tense form, or one of a few common irregulars.
_IRREGULAR_VERBS = (
    "wrote", "won", "built", "made", "met", "led", "ran", "held",
    "taught", "sold", "bought", "began", "became", "left",
)
_VERB_YEAR = re.compile(
    r"(.+?)\s+((?:[A-Za-z]+ed)|" + "|".join(_IRREGULAR_VERBS) + r")\s+(.+?)\s+in\s+(\d{4})\b"
)
_IS_A = re.compile(r"(.+?)\s+(?:is|was|are|were)\s+(?:a|an|the)\s+(.+)", re.IGNORECASE)
_CONJUNCTION_SPLIT = re.compile(r"\s+(?:and|or)\s+", re.IGNORECASE)


def _split_conjunction(text: str) -> list[str]:
    parts = []
    for piece in text.split(","):
        for sub in _CONJUNCTION_SPLIT.split(piece):
            sub = sub.strip()
            if sub:
                parts.append(sub)
    return parts


def pattern_extract(chunk: TextChunk) -> ExtractionResult:
    """Deterministic rule-based extractor for offline runs and fixtures.

    Per sentence, in order:

    a. ``X, such as Y[, Z and W]`` emits ``(Y, is_a, X)`` per listed item.
    b. ``X <verb> Y in <4-digit year>`` emits ``(X, verb, Y)`` with a
       ``year`` context; the verb slot is a crude heuristic (an ``-ed``
       form or a short irregular list).
    c. ``X is a Y`` emits ``(X, is_a, Y)``; skipped when rule b fired.
    """
    provenance = Provenance(chunk.source_id, chunk.chunk_index, Extractor.PATTERN)
    triples: list[ContextTriple] = []
    for sentence in split_sentences(chunk.text):
        body = sentence.strip().rstrip(".!?").strip()
        if not body:
            continue
        for match in _SUCH_AS.finditer(body):
            hypernym = match.group(1).strip()
            for hyponym in _split_conjunction(match.group(2)):
                triples.append(
                    ContextTriple(hyponym, "is_a", hypernym, provenance=provenance)
                )
        verb_match = _VERB_YEAR.search(body)
        if verb_match:
            subject, verb, obj, year = (part.strip() for part in verb_match.groups())
            triples.append(
                ContextTriple(
                    subject,
                    verb,
                    obj,
                    context=ContextMap({"year": [year]}),
                    provenance=provenance,
                )
            )
            continue
        is_a_match = _IS_A.match(body)
        if is_a_match:
            triples.append(
                ContextTriple(
                    is_a_match.group(1).strip(),
                    "is_a",
                    is_a_match.group(2).strip(),
                    provenance=provenance,
                )
            )
    return ExtractionResult(triples=triples)
