"""Extracts documented public components from framework source trees.

Extraction is purely static: files are parsed into syntax trees and only
definition headers plus their first docstring literal are consumed — nothing
is imported or executed. Public-API export lists are read from the package
initializer's ``__all__`` assignment for the same reason.

Three inclusion policies cover the supported frameworks:

* ``public_api_list`` — resolve each name exported by the root package's
  ``__all__`` to its definition and docstring (the Classiq layout).
* ``documented_type_definitions`` — every documented class under the root
  (the PennyLane templates layout).
* ``documented_public_definitions`` — every documented class or standalone
  function, minus underscore-prefixed names and excluded subdirectories
  (the Qiskit circuit-library layout).
"""

from __future__ import annotations

import ast
import csv
import io
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path, PurePosixPath
from typing import Sequence

import numpy as np

from .embedding import EmbeddingCache, EmbeddingProvider, embed_texts
from .errors import ContractViolation, TransportError
from .knowledge_base import Concept, Kind

logger = logging.getLogger(__name__)

DEFAULT_CLUSTER_THRESHOLD = 0.95


class Inclusion(Enum):
    PUBLIC_API_LIST = "public_api_list"
    DOCUMENTED_TYPE_DEFINITIONS = "documented_type_definitions"
    DOCUMENTED_PUBLIC_DEFINITIONS = "documented_public_definitions"


@dataclass(frozen=True)
class ExtractionRule:
    framework: str
    root_relative_path: PurePosixPath
    inclusion: Inclusion
    excluded_subdirs: tuple[PurePosixPath, ...] = ()
    exclude_underscore_prefixed: bool = False
    dedup: bool = False


@dataclass(frozen=True)
class RawConcept:
    """Concept as extracted, before knowledge-base curation."""

    framework: str
    qualified_path: str
    summary: str
    kind: Kind
    deprecated: bool = False
    origin_file: str = ""

    @property
    def terminal_name(self) -> str:
        return self.qualified_path.rsplit(".", 1)[-1]

    def to_concept(self) -> Concept:
        return Concept(self.framework, self.qualified_path, self.summary, self.kind)


BUILTIN_RULES: dict[str, ExtractionRule] = {
    "classiq": ExtractionRule(
        framework="classiq",
        root_relative_path=PurePosixPath("classiq/open_library/functions"),
        inclusion=Inclusion.PUBLIC_API_LIST,
    ),
    "pennylane": ExtractionRule(
        framework="pennylane",
        root_relative_path=PurePosixPath("pennylane/templates"),
        inclusion=Inclusion.DOCUMENTED_TYPE_DEFINITIONS,
    ),
    "qiskit": ExtractionRule(
        framework="qiskit",
        root_relative_path=PurePosixPath("qiskit/circuit/library"),
        inclusion=Inclusion.DOCUMENTED_PUBLIC_DEFINITIONS,
        excluded_subdirs=(PurePosixPath("standard_gates"), PurePosixPath("templates")),
        exclude_underscore_prefixed=True,
        dedup=True,
    ),
}


def _iter_py_files(root: Path, excluded: Sequence[PurePosixPath]) -> list[Path]:
    """All .py files under root in lexicographic relative-path order."""
    files = []
    for path in root.rglob("*.py"):
        rel = PurePosixPath(path.relative_to(root).as_posix())
        if any(rel.is_relative_to(ex) for ex in excluded):
            continue
        files.append(path)
    files.sort(key=lambda p: p.relative_to(root).as_posix())
    return files


def _module_dotted_path(source_root: Path, file_path: Path) -> str:
    rel = file_path.relative_to(source_root).as_posix()
    parts = rel[: -len(".py")].split("/")
    if parts[-1] == "__init__":
        parts = parts[:-1]
    return ".".join(parts)


def _parse_file(path: Path) -> ast.Module | None:
    try:
        return ast.parse(path.read_text(encoding="utf-8"), filename=str(path))
    except (SyntaxError, UnicodeDecodeError, ValueError) as exc:
        logger.warning("skipping unparseable source file %s: %s", path, exc)
        return None


_DEF_NODES = (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)


def _docstring(node: ast.AST) -> str | None:
    # Verbatim first string literal of the body; no indentation cleanup.
    return ast.get_docstring(node, clean=False)


def _is_deprecated(node: ast.AST, docstring: str) -> bool:
    if "deprecated" in docstring.casefold():
        return True
    for decorator in getattr(node, "decorator_list", []):
        if "deprecated" in ast.unparse(decorator).casefold():
            return True
    return False


def _kind_of(node: ast.AST) -> Kind:
    return Kind.TYPE_DEFINITION if isinstance(node, ast.ClassDef) else Kind.CALLABLE


def _concept_from_node(rule: ExtractionRule, module: str, node, origin: Path) -> RawConcept | None:
    doc = _docstring(node)
    if not doc:
        return None
    return RawConcept(
        framework=rule.framework,
        qualified_path=f"{module}.{node.name}",
        summary=doc,
        kind=_kind_of(node),
        deprecated=_is_deprecated(node, doc),
        origin_file=str(origin),
    )


def _read_all_list(tree: ast.Module) -> list[str]:
    """Names from ``__all__`` assignments (plain assigns and += extensions)."""
    names: list[str] = []
    for node in tree.body:
        target = None
        if isinstance(node, ast.Assign) and len(node.targets) == 1:
            target = node.targets[0]
        elif isinstance(node, ast.AugAssign):
            target = node.target
        if not (isinstance(target, ast.Name) and target.id == "__all__"):
            continue
        value = node.value
        if isinstance(value, (ast.List, ast.Tuple)):
            if isinstance(node, ast.Assign):
                names = []
            for element in value.elts:
                if isinstance(element, ast.Constant) and isinstance(element.value, str):
                    names.append(element.value)
    return names


def extract_concepts(rule: ExtractionRule, source_root: str | Path) -> list[RawConcept]:
    """Run one framework rule over a source tree.

    Deterministic: files are visited in lexicographic relative-path order, and
    export-list extraction follows the ``__all__`` order. Unparseable files are
    skipped with a warning; a missing root raises :class:`FileNotFoundError`.
    """
    source_root = Path(source_root)
    root = source_root / Path(rule.root_relative_path)
    if not root.is_dir():
        raise FileNotFoundError(f"extraction root {root} does not exist")

    if rule.inclusion is Inclusion.PUBLIC_API_LIST:
        return _extract_public_api_list(rule, source_root, root)

    concepts: list[RawConcept] = []
    for path in _iter_py_files(root, rule.excluded_subdirs):
        tree = _parse_file(path)
        if tree is None:
            continue
        module = _module_dotted_path(source_root, path)
        for node in tree.body:
            if not isinstance(node, _DEF_NODES):
                continue
            if rule.inclusion is Inclusion.DOCUMENTED_TYPE_DEFINITIONS and not isinstance(node, ast.ClassDef):
                continue
            if rule.exclude_underscore_prefixed and node.name.startswith("_"):
                continue
            concept = _concept_from_node(rule, module, node, path)
            if concept is not None:
                concepts.append(concept)
    return concepts


def _extract_public_api_list(rule: ExtractionRule, source_root: Path, root: Path) -> list[RawConcept]:
    init_path = root / "__init__.py"
    if not init_path.is_file():
        raise FileNotFoundError(f"package initializer {init_path} does not exist")
    init_tree = _parse_file(init_path)
    exported = _read_all_list(init_tree) if init_tree is not None else []
    if not exported:
        logger.warning("no __all__ export list found in %s", init_path)

    # Index top-level definitions across the package; first file in
    # lexicographic order wins when a name is defined twice.
    definitions: dict[str, tuple[str, ast.AST, Path]] = {}
    for path in _iter_py_files(root, rule.excluded_subdirs):
        tree = _parse_file(path)
        if tree is None:
            continue
        module = _module_dotted_path(source_root, path)
        for node in tree.body:
            if isinstance(node, _DEF_NODES) and node.name not in definitions:
                definitions[node.name] = (module, node, path)

    concepts: list[RawConcept] = []
    for name in exported:
        found = definitions.get(name)
        if found is None:
            logger.debug("exported name %s has no definition under %s", name, root)
            continue
        module, node, path = found
        concept = _concept_from_node(rule, module, node, path)
        if concept is not None:
            concepts.append(concept)
    return concepts


_KIND_RANK = {Kind.TYPE_DEFINITION: 0, Kind.CALLABLE: 1, Kind.METHOD: 2}


def _canonical_rank(concept: RawConcept) -> tuple:
    # Non-deprecated first, then type definitions over callables, then the
    # lexicographically smallest path.
    return (concept.deprecated, _KIND_RANK[concept.kind], concept.qualified_path)


def _normalized_terminal(concept: RawConcept) -> str:
    return concept.terminal_name.casefold().replace("_", "")


def dedup_exact(concepts: Sequence[RawConcept]) -> list[RawConcept]:
    """Collapse entries with byte-identical summaries and equivalent names.

    Two entries are redundant when their summaries match exactly and their
    terminal names are equal after case-folding and underscore removal. One
    canonical entry survives per group; input order is preserved.
    """
    groups: dict[tuple[str, str], list[int]] = {}
    for i, concept in enumerate(concepts):
        groups.setdefault((concept.summary, _normalized_terminal(concept)), []).append(i)
    survivors = set()
    for indices in groups.values():
        best = min(indices, key=lambda i: (_canonical_rank(concepts[i]), i))
        survivors.add(best)
    return [c for i, c in enumerate(concepts) if i in survivors]


def dedup_semantic(
    concepts: Sequence[RawConcept],
    provider: EmbeddingProvider,
    cluster_threshold: float = DEFAULT_CLUSTER_THRESHOLD,
    cache: EmbeddingCache | None = None,
) -> list[RawConcept]:
    """Collapse clusters of concepts whose summaries embed almost identically.

    Single-linkage clustering over cosine similarity of summary embeddings:
    any pair at or above ``cluster_threshold`` links its members into one
    cluster, and the canonical member survives (non-deprecated beats
    deprecated, type definitions beat callables, then smallest path).
    Idempotent, and never synthesizes new entries.
    """
    if not 0 < cluster_threshold <= 1:
        raise ContractViolation(f"cluster threshold must be in (0, 1], got {cluster_threshold}")
    n = len(concepts)
    if n <= 1:
        return list(concepts)

    vectors = []
    for concept in concepts:
        try:
            vectors.append(embed_texts(provider, [concept.summary], cache)[0])
        except TransportError as exc:
            raise TransportError(f"{exc} (while embedding summary {concept.summary[:80]!r})") from exc
    matrix = np.vstack(vectors)
    similarity = matrix @ matrix.T

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if similarity[i, j] >= cluster_threshold:
                parent[find(i)] = find(j)

    clusters: dict[int, list[int]] = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)
    survivors = set()
    for indices in clusters.values():
        best = min(indices, key=lambda i: (_canonical_rank(concepts[i]), i))
        survivors.add(best)
    return [c for i, c in enumerate(concepts) if i in survivors]


CONCEPTS_HEADER = ["framework", "concept_path", "summary", "kind", "deprecated"]


def concepts_to_csv(concepts: Sequence[RawConcept]) -> bytes:
    """Per-framework extraction artifact (UTF-8, LF newlines)."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CONCEPTS_HEADER)
    for c in concepts:
        writer.writerow([c.framework, c.qualified_path, c.summary, c.kind.value, str(c.deprecated).lower()])
    return buffer.getvalue().encode("utf-8")


def run_extraction_pipeline(
    rule: ExtractionRule,
    source_root: str | Path,
    provider: EmbeddingProvider | None = None,
    cluster_threshold: float = DEFAULT_CLUSTER_THRESHOLD,
    cache: EmbeddingCache | None = None,
) -> list[RawConcept]:
    """Extract plus, for rules that request it, both de-duplication stages."""
    concepts = extract_concepts(rule, source_root)
    if rule.dedup:
        concepts = dedup_exact(concepts)
        if provider is None:
            raise ContractViolation(f"rule {rule.framework!r} needs an embedding provider for semantic dedup")
        concepts = dedup_semantic(concepts, provider, cluster_threshold, cache)
    return concepts
