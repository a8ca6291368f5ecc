"""lightkg: knowledge-graph extraction with small completion models.

Text goes in as JSONL documents; out comes a property graph whose nodes and
edges carry coexisting contextual attributes, confidence scores derived from
graph structure, and rule-inferred implicit relations, plus an F1 harness to
score the result against gold triples.
"""

from .aggregation import (
    AggregationResult,
    EmptyLabelError,
    NormalizationPolicy,
    add_triple,
    aggregate,
    aggregate_triples,
    merge_attribute,
    merge_graphs,
    normalize_label,
)
from .client import (
    ChatClient,
    ChatMessage,
    CompletionParams,
    HttpChatClient,
    MockChatClient,
    ModelClientError,
    prompt_fingerprint,
)
from .evaluation import (
    EvalReport,
    GoldSet,
    MatchResult,
    entity_f1,
    evaluate_run,
    gold_from_graph,
    load_gold,
    relation_f1,
)
from .extraction import (
    ExtractionResult,
    TextChunk,
    build_extraction_prompt,
    chunk_document,
    extract_chunk,
    parse_extraction_response,
    pattern_extract,
    read_corpus,
)
from .graph import (
    ContextMap,
    ContextTriple,
    Edge,
    Extractor,
    GraphIntegrityError,
    KnowledgeGraph,
    Node,
    Provenance,
    UnknownNodeError,
    content_equal,
    edge_key,
    empty_graph,
)
from .pipeline import ConfigError, PipelineConfig, StageError, run_pipeline
from .serialize import GraphParseError, deserialize_graph, serialize_graph
from .topology import (
    InferenceRule,
    PathEvidence,
    SenseSignature,
    TopologyConfig,
    bidirectional_bfs,
    degree_centrality,
    disambiguate_entity,
    discover,
    edge_disjoint_paths,
    infer_implicit_relations,
    reinforce_confidence,
)

__version__ = "0.1.0"
