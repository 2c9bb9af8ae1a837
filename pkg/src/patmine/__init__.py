"""patmine: mines quantum-computing concepts from framework source trees,
maps them to a pattern catalog, and semantically detects them in notebook
corpora, emitting match CSVs and a prevalence/gap report."""

from .embedding import (
    EmbeddingCache,
    EmbeddingProvider,
    cosine_similarity,
    embed_text,
    embed_texts,
    get_provider,
    matches_above,
)
from .knowledge_base import (
    Catalog,
    Concept,
    Kind,
    KnowledgeBase,
    KnowledgeBaseEntry,
    Origin,
    Pattern,
    load_catalog,
    load_kb,
    save_kb,
    seed_catalog,
    validate_kb,
)
from .semantic_matcher import Match, MatcherConfig, match_corpus, match_file

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "Concept",
    "EmbeddingCache",
    "EmbeddingProvider",
    "Kind",
    "KnowledgeBase",
    "KnowledgeBaseEntry",
    "Match",
    "MatcherConfig",
    "Origin",
    "Pattern",
    "cosine_similarity",
    "embed_text",
    "embed_texts",
    "get_provider",
    "load_catalog",
    "load_kb",
    "match_corpus",
    "match_file",
    "matches_above",
    "save_kb",
    "seed_catalog",
    "validate_kb",
    "__version__",
]
