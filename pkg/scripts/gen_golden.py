#!/usr/bin/env python3
"""Regenerate the committed demo fixtures and golden graph files.

Run from the repository root after an intentional behavior change, then
review the diff before committing:

    python scripts/gen_golden.py
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

from lightkg.client import prompt_fingerprint
from lightkg.extraction import build_extraction_prompt, chunk_document, read_corpus
from lightkg.pipeline import PipelineConfig, run_pipeline

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

# Model-style responses for each demo document (the fixture extractor replays
# these through the full prompt/parse path).
RESPONSES = {
    "doc-physics": (
        "(Marie Curie | discovered | radium) {year=1898}\n"
        "(Radium | is_a | metal)\n"
        "(Marie Curie | mentored | Lise Meitner) {year=1907}"
    ),
    "doc-lineage": (
        "(Lise Meitner | advised | Otto Frisch) {year=1934}\n"
        "(radium | is_a | Heavy metals)\n"
        "(polonium | is_a | Heavy metals)"
    ),
}


def build_fixtures() -> dict[str, str]:
    fixtures: dict[str, str] = {}
    for document in read_corpus(DATA / "demo_corpus.jsonl"):
        for chunk in chunk_document(document.doc_id, document.text):
            prompt = build_extraction_prompt(chunk, include_context=True)
            fixtures[prompt_fingerprint(prompt)] = RESPONSES[document.doc_id]
    return fixtures


def main() -> int:
    fixtures = build_fixtures()
    fixtures_path = DATA / "demo_fixtures.json"
    fixtures_path.write_text(
        json.dumps(fixtures, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {fixtures_path} ({len(fixtures)} fixtures)")

    golden = DATA / "golden"
    golden.mkdir(exist_ok=True)
    for name in ("pattern", "fixture"):
        config = PipelineConfig.load(DATA / f"demo_config_{name}.json")
        with tempfile.TemporaryDirectory() as out_dir:
            summary = run_pipeline(config, DATA / "demo_corpus.jsonl", out_dir)
            graph_bytes = Path(summary["outputs"]["graph"]).read_bytes()
        target = golden / f"{name}_graph.json"
        target.write_bytes(graph_bytes)
        counts = summary["counts"]
        print(
            f"wrote {target} ({counts['nodes']} nodes, {counts['edges']} edges, "
            f"{counts['inferred_edges']} inferred)"
        )
        if summary["evaluation"]:
            entity = summary["evaluation"]["entity"]["f1"]
            relation = summary["evaluation"]["relation"]["f1"]
            print(f"  eval: entity f1={entity:.3f} relation f1={relation:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
