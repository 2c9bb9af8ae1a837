"""Dual-channel semantic matching of scripts against the knowledge base.

Each script is searched through two channels:

* name     — every distinct call name in the script (terminal attribute
             segment for method calls) is embedded and compared against the
             index of concept terminal names; matches need a similarity
             strictly above the name threshold (default 0.95).
* summary  — all full-line comments are consolidated into one block, embedded
             once, and compared against the index of concept docstrings;
             matches need a similarity strictly above the summary threshold
             (default 0.7).

Every match carries the file path, the concept, its pattern, the channel, the
triggering text, and the similarity score. Identical (file, concept, channel,
text) tuples collapse to one row.
"""

from __future__ import annotations

import ast
import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path, PurePosixPath
from typing import Sequence

import numpy as np

from .embedding import (
    EmbeddingCache,
    EmbeddingProvider,
    canonicalize_text,
    embed_text,
    embed_texts,
    matches_above,
)
from .errors import ContractViolation, ScriptParseError
from .knowledge_base import KnowledgeBase

logger = logging.getLogger(__name__)

MATCH_CSV_NAME = "quantum_concept_matches_with_patterns.csv"
SKIPPED_CSV_NAME = "skipped_files.csv"
MATCH_HEADER = ["file_path", "concept_path", "pattern_name", "match_type", "matched_text", "score"]

DEFAULT_NAME_THRESHOLD = 0.95
DEFAULT_SUMMARY_THRESHOLD = 0.7

MATCHED_TEXT_LIMIT = 500
TRUNCATION_MARK = "…"


@dataclass(frozen=True)
class Match:
    file_path: str
    concept_path: str
    pattern_name: str
    match_type: str  # "name" | "summary"
    matched_text: str
    score: float


@dataclass(frozen=True)
class MatcherConfig:
    name_threshold: float = DEFAULT_NAME_THRESHOLD
    summary_threshold: float = DEFAULT_SUMMARY_THRESHOLD
    backend_id: str = "test"

    def __post_init__(self):
        for label, value in (("name", self.name_threshold), ("summary", self.summary_threshold)):
            if not 0 < value <= 1:
                raise ContractViolation(f"{label} threshold must be in (0, 1], got {value}")


class _CallCollector(ast.NodeVisitor):
    def __init__(self):
        self.names: list[str] = []

    def visit_Call(self, node: ast.Call):
        func = node.func
        if isinstance(func, ast.Name):
            self.names.append(func.id)
        elif isinstance(func, ast.Attribute):
            self.names.append(func.attr)
        self.generic_visit(node)


def extract_call_names(script: str) -> list[str]:
    """Terminal name of every call expression, in source order, duplicates kept."""
    try:
        tree = ast.parse(script)
    except SyntaxError as exc:
        raise ScriptParseError(f"line {exc.lineno}: {exc.msg}") from exc
    collector = _CallCollector()
    collector.visit(tree)
    return collector.names


def extract_comment_block(script: str) -> str:
    """All full-line comments, leading ``#`` (and one space) stripped, newline-joined.

    Purely lexical by line, so it works even when the script does not parse.
    """
    contents = []
    for line in script.splitlines():
        stripped = line.lstrip()
        if stripped.startswith("#"):
            content = stripped[1:]
            if content.startswith(" "):
                content = content[1:]
            contents.append(content)
    return "\n".join(contents)


@dataclass(frozen=True)
class ConceptIndex:
    """Prebuilt embedding indexes over the knowledge base, shared across files."""

    name_index: tuple[tuple[str, np.ndarray], ...]
    summary_index: tuple[tuple[str, np.ndarray], ...]
    pattern_of: dict[str, str]

    @classmethod
    def build(
        cls,
        kb: KnowledgeBase,
        provider: EmbeddingProvider,
        cache: EmbeddingCache | None = None,
    ) -> "ConceptIndex":
        concepts = kb.concepts()
        name_vectors = embed_texts(provider, [c.terminal_name for c in concepts], cache)
        summary_vectors = embed_texts(provider, [c.summary for c in concepts], cache)
        return cls(
            name_index=tuple((c.qualified_path, v) for c, v in zip(concepts, name_vectors)),
            summary_index=tuple((c.qualified_path, v) for c, v in zip(concepts, summary_vectors)),
            pattern_of={e.concept.qualified_path: e.pattern_name for e in kb.entries},
        )


def _truncate(text: str) -> str:
    if len(text) > MATCHED_TEXT_LIMIT:
        return text[:MATCHED_TEXT_LIMIT] + TRUNCATION_MARK
    return text


def match_file(
    script_path: str | Path,
    kb: KnowledgeBase,
    provider: EmbeddingProvider,
    cfg: MatcherConfig,
    cache: EmbeddingCache | None = None,
    index: ConceptIndex | None = None,
    rel_path: str | None = None,
) -> list[Match]:
    """Run both match channels over one script.

    ``rel_path`` overrides the file path recorded in the matches (corpus runs
    record paths relative to the corpus root). Scripts that fail to parse
    raise :class:`ScriptParseError`; unreadable files raise ``OSError``.
    """
    script_path = Path(script_path)
    script = script_path.read_text(encoding="utf-8")
    if index is None:
        index = ConceptIndex.build(kb, provider, cache)
    file_path = rel_path if rel_path is not None else str(script_path)

    matches: list[Match] = []
    # Name channel: distinct call names, first-occurrence order.
    for name in dict.fromkeys(extract_call_names(script)):
        query = embed_text(provider, name, cache)
        for concept_path, score in matches_above(query, index.name_index, cfg.name_threshold):
            matches.append(Match(file_path, concept_path, index.pattern_of[concept_path], "name", name, score))

    # Summary channel: one consolidated comment block per file.
    block = extract_comment_block(script)
    if canonicalize_text(block):
        query = embed_text(provider, block, cache)
        text = _truncate(block)
        for concept_path, score in matches_above(query, index.summary_index, cfg.summary_threshold):
            matches.append(Match(file_path, concept_path, index.pattern_of[concept_path], "summary", text, score))

    deduped: dict[tuple[str, str, str, str], Match] = {}
    for match in matches:
        deduped.setdefault((match.file_path, match.concept_path, match.match_type, match.matched_text), match)
    return list(deduped.values())


def discover_scripts(converted_root: str | Path) -> list[PurePosixPath]:
    """All ``.py`` paths under the converted corpus, relative, sorted."""
    converted_root = Path(converted_root)
    if not converted_root.is_dir():
        raise FileNotFoundError(f"converted corpus root {converted_root} does not exist")
    rels = [PurePosixPath(p.relative_to(converted_root).as_posix()) for p in converted_root.rglob("*.py")]
    rels.sort(key=str)
    return rels


def match_corpus(
    converted_root: str | Path,
    kb: KnowledgeBase,
    provider: EmbeddingProvider,
    cfg: MatcherConfig,
    out_dir: str | Path,
    cache: EmbeddingCache | None = None,
) -> tuple[list[Match], list[tuple[str, str]]]:
    """Match every script under the corpus root and write the match CSV.

    Scripts are processed in lexicographic relative-path order and rows appended
    in that order, so output bytes are deterministic. Per-file failures land in
    ``skipped_files.csv`` and the run continues.
    """
    converted_root = Path(converted_root)
    out_dir = Path(out_dir)
    index = ConceptIndex.build(kb, provider, cache)
    matches: list[Match] = []
    skipped: list[tuple[str, str]] = []
    for rel in discover_scripts(converted_root):
        try:
            matches.extend(
                match_file(converted_root / Path(rel), kb, provider, cfg, cache, index, rel_path=str(rel))
            )
        except ScriptParseError as exc:
            logger.warning("skipping unparseable script %s: %s", rel, exc)
            skipped.append((str(rel), f"ScriptParseError: {exc}"))
        except (OSError, UnicodeDecodeError) as exc:
            logger.warning("skipping unreadable script %s: %s", rel, exc)
            skipped.append((str(rel), f"{type(exc).__name__}: script unreadable"))

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / MATCH_CSV_NAME).write_bytes(matches_to_csv(matches))
    (out_dir / SKIPPED_CSV_NAME).write_bytes(skipped_to_csv(skipped))
    return matches, skipped


def matches_to_csv(matches: Sequence[Match]) -> bytes:
    """Match CSV bytes: header plus one row per match, scores to 4 decimals."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(MATCH_HEADER)
    for m in matches:
        writer.writerow([m.file_path, m.concept_path, m.pattern_name, m.match_type, m.matched_text, f"{m.score:.4f}"])
    return buffer.getvalue().encode("utf-8")


def skipped_to_csv(skipped: Sequence[tuple[str, str]]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["path", "reason"])
    writer.writerows(skipped)
    return buffer.getvalue().encode("utf-8")


def read_matches_csv(source: str | Path | bytes) -> list[Match]:
    """Parse a match CSV back into Match records."""
    data = Path(source).read_bytes() if isinstance(source, (str, Path)) else source
    reader = csv.reader(io.StringIO(data.decode("utf-8"), newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise ContractViolation("match CSV is empty; expected header " + ",".join(MATCH_HEADER)) from None
    if header != MATCH_HEADER:
        raise ContractViolation(f"bad match CSV header {header!r}")
    matches = []
    for row in reader:
        if len(row) != 6:
            raise ContractViolation(f"line {reader.line_num}: expected 6 fields, got {len(row)}")
        matches.append(Match(row[0], row[1], row[2], row[3], row[4], float(row[5])))
    return matches
