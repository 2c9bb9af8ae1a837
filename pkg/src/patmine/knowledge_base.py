"""Concept-to-pattern knowledge base: catalog, CSV loading, validation.

The knowledge base is a CSV-backed mapping from framework concepts (one
documented function or class per row) to named catalog patterns. CSV dialect
is RFC 4180 with UTF-8 text and LF newlines on output. Pattern-name matching
is exact and case-sensitive; case-folded near-collisions are surfaced as
warnings, not errors.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import CsvParseError, ValidationError

KB_HEADER = ["framework", "concept_path", "summary", "pattern"]
CATALOG_HEADER = ["name", "description", "origin"]

KNOWN_FRAMEWORKS = ("classiq", "pennylane", "qiskit")


class Origin(Enum):
    ATLAS = "atlas"
    UNIFIED = "unified"
    NEW = "new"


class Kind(Enum):
    CALLABLE = "callable"
    TYPE_DEFINITION = "type_definition"
    METHOD = "method"


@dataclass(frozen=True)
class Pattern:
    """One catalog entry."""

    name: str
    description: str
    origin: Origin


@dataclass(frozen=True)
class Concept:
    """One reusable framework component."""

    framework: str
    qualified_path: str
    summary: str
    kind: Kind = Kind.CALLABLE

    @property
    def terminal_name(self) -> str:
        """Segment after the last dot; the name used at call sites."""
        return self.qualified_path.rsplit(".", 1)[-1]


@dataclass(frozen=True)
class KnowledgeBaseEntry:
    concept: Concept
    pattern_name: str


class Catalog:
    """Ordered, name-addressable set of patterns."""

    def __init__(self, patterns: Iterable[Pattern]):
        self.patterns: tuple[Pattern, ...] = tuple(patterns)
        self._by_name = {p.name: p for p in self.patterns}

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __iter__(self) -> Iterator[Pattern]:
        return iter(self.patterns)

    def __len__(self) -> int:
        return len(self.patterns)

    def get(self, name: str) -> Pattern | None:
        return self._by_name.get(name)

    def names(self) -> list[str]:
        return [p.name for p in self.patterns]


@dataclass(frozen=True)
class KnowledgeBase:
    """Immutable concept-to-pattern mapping validated against a catalog."""

    catalog: Catalog
    entries: tuple[KnowledgeBaseEntry, ...]

    def pattern_for(self, qualified_path: str) -> str | None:
        for entry in self.entries:
            if entry.concept.qualified_path == qualified_path:
                return entry.pattern_name
        return None

    def concepts(self) -> list[Concept]:
        return [entry.concept for entry in self.entries]

    def entry_patterns(self) -> set[str]:
        """Pattern names actually used by entries (the gap-analysis universe)."""
        return {entry.pattern_name for entry in self.entries}


# Built-in catalog. The unified and new entries are fixed; the remaining
# entries cover the atlas patterns this toolchain references out of the box.
# A complete catalog is expected to be supplied as a data file (see
# load_catalog), since the atlas keeps growing.
_SEED: list[tuple[str, str, Origin]] = [
    ("Basis Change", "Transforms a register between computational bases, covering Fourier, Hadamard, cosine, and sine transforms.", Origin.UNIFIED),
    ("Data Encoding", "Maps classical information onto a quantum state; generalizes angle, amplitude, basis, matrix, and QRAM encodings.", Origin.UNIFIED),
    ("Quantum Amplitude Estimation (QAE)", "Estimates the probability amplitude of a marked outcome in a prepared state.", Origin.NEW),
    ("Linear Combination of Unitaries (LCU)", "Builds an operator as a weighted sum of simpler unitaries selected through an ancilla register.", Origin.NEW),
    ("Quantum Arithmetic", "Performs classical arithmetic such as addition and multiplication on values held in quantum registers.", Origin.NEW),
    ("Quantum Logical Operators", "Applies Boolean logic such as AND, OR, and XOR to quantum registers, typically as oracle building blocks.", Origin.NEW),
    ("Circuit Construction Utility", "Routines that build or rearrange circuits, such as swapping qubits or broadcasting a gate across wires.", Origin.NEW),
    ("Domain Specific Application", "Composite routine orchestrating several quantum algorithms into an end-to-end solution for one problem domain.", Origin.NEW),
    ("Hamiltonian Simulation", "Implements time evolution of a quantum system, typically via product-formula approximations.", Origin.NEW),
    ("Initialization", "Prepares a quantum register in a required starting state.", Origin.ATLAS),
    ("Uniform Superposition", "Creates an equal superposition over all basis states of a register.", Origin.ATLAS),
    ("Oracle", "Black-box operation that marks solution states for a search or decision routine.", Origin.ATLAS),
    ("Amplitude Amplification", "Boosts the measurement probability of desired states by repeated reflection.", Origin.ATLAS),
    ("Creating Entanglement", "Entangles qubits so their measurement outcomes become correlated.", Origin.ATLAS),
    ("Function Table", "Realizes a classical lookup table as a reversible quantum operation.", Origin.ATLAS),
    ("Schmidt Decomposition", "Factorizes a bipartite state to expose its entanglement structure.", Origin.ATLAS),
    ("Error Correction", "Detects and corrects computation errors using redundant encoding.", Origin.ATLAS),
    ("Readout Error Mitigation", "Reduces errors introduced during final measurement.", Origin.ATLAS),
    ("Gate Error Mitigation", "Mitigates errors from noisy or imperfect gate execution.", Origin.ATLAS),
    ("Quantum Module", "Encapsulates a quantum algorithm as a reusable component.", Origin.ATLAS),
    ("Quantum Module Template", "Parameterized skeleton from which concrete quantum modules are instantiated.", Origin.ATLAS),
    ("Hybrid Module", "Packages quantum and classical parts into one integrated unit.", Origin.ATLAS),
    ("Quantum Circuit Translation", "Translates circuits between representations for interoperability.", Origin.ATLAS),
    ("Quantum-Classical Split", "Divides responsibilities between classical control code and quantum execution.", Origin.ATLAS),
    ("Quantum Middleware Layer", "Mediates interaction between quantum and classical resources in larger systems.", Origin.ATLAS),
    ("Circuit Cutting", "Splits a computation into smaller circuits executable on fewer qubits.", Origin.ATLAS),
    ("Gate Cut", "Decomposes a multi-qubit gate so a circuit can be partitioned.", Origin.ATLAS),
    ("Wire Cut", "Interrupts a wire between gates so a circuit can be partitioned.", Origin.ATLAS),
    ("Standalone Circuit Execution", "Runs a single circuit directly on a device or simulator.", Origin.ATLAS),
    ("Orchestrated Execution", "Coordinates hybrid application runs through managed workflows.", Origin.ATLAS),
    ("Uncompute", "Reverses ancilla computations to disentangle scratch registers.", Origin.ATLAS),
    ("Quantum Hardware Selection", "Chooses an execution device fitting a circuit's requirements.", Origin.ATLAS),
    ("Quantum Phase Estimation (QPE)", "Estimates the eigenphase of a unitary operator via controlled powers and an inverse Fourier transform.", Origin.ATLAS),
    ("Grover", "Searches an unstructured space by iterating oracle and diffusion steps.", Origin.ATLAS),
    ("Variational Quantum Eigensolver (VQE)", "Hybrid loop minimizing the expected energy of a parameterized ansatz.", Origin.ATLAS),
    ("Variational Quantum Algorithm (VQA)", "General hybrid optimization of a parameterized circuit against a cost function.", Origin.ATLAS),
    ("Quantum Neural Network (QNN)", "Parameterized circuit trained as a machine-learning model.", Origin.ATLAS),
    ("QAOA", "Alternating-operator ansatz for approximate combinatorial optimization.", Origin.ATLAS),
    ("QSVT", "Polynomial transformation of a block-encoded operator's singular values.", Origin.ATLAS),
    ("Quantum Application Testing", "Structured test suites validating quantum software at multiple levels.", Origin.ATLAS),
    ("Classical-Quantum Interface", "Simplified facade hiding quantum execution details from classical callers.", Origin.ATLAS),
    ("Quantum Clustering", "Groups data points using quantum similarity estimation.", Origin.ATLAS),
    ("Quantum Classification", "Assigns labels to data using a quantum model.", Origin.ATLAS),
    ("Quantum Kernel Estimation (QKE)", "Evaluates kernel functions between data points with quantum circuits.", Origin.ATLAS),
]


def seed_catalog() -> Catalog:
    """Built-in pattern catalog; deterministic across runs."""
    return Catalog(Pattern(name, desc, origin) for name, desc, origin in _SEED)


def _open_rows(source: str | Path | bytes | IO[bytes]) -> Iterator[list[str]]:
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()
    # utf-8-sig: spreadsheet exports of the hand-curated mapping often carry a BOM.
    text = data.decode("utf-8-sig")
    return csv.reader(io.StringIO(text, newline=""))


def load_catalog(source: str | Path | bytes | IO[bytes]) -> Catalog:
    """Load a pattern catalog from CSV with columns ``name,description,origin``."""
    reader = _open_rows(source)
    try:
        header = next(reader)
    except StopIteration:
        raise CsvParseError("catalog is empty; expected header " + ",".join(CATALOG_HEADER), line=1)
    if header != CATALOG_HEADER:
        raise CsvParseError(f"bad catalog header {header!r}", line=1)
    patterns: list[Pattern] = []
    seen: set[str] = set()
    for row in reader:
        line = reader.line_num
        if len(row) != 3:
            raise CsvParseError(f"expected 3 fields, got {len(row)}", line=line)
        name, description, origin_text = row
        if not name:
            raise CsvParseError("pattern name is empty", line=line)
        try:
            origin = Origin(origin_text)
        except ValueError:
            raise CsvParseError(f"unknown origin {origin_text!r}", line=line) from None
        if name in seen:
            raise ValidationError(f"line {line}: duplicate pattern name {name!r}")
        seen.add(name)
        patterns.append(Pattern(name, description, origin))
    return Catalog(patterns)


def save_catalog(catalog: Catalog) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CATALOG_HEADER)
    for pattern in catalog:
        writer.writerow([pattern.name, pattern.description, pattern.origin.value])
    return buffer.getvalue().encode("utf-8")


def _read_kb_rows(source) -> list[tuple[KnowledgeBaseEntry, int]]:
    """Parse the KB CSV into (entry, line-number) pairs, checking shape only."""
    reader = _open_rows(source)
    try:
        header = next(reader)
    except StopIteration:
        raise CsvParseError("knowledge base is empty; expected header " + ",".join(KB_HEADER), line=1)
    if header != KB_HEADER:
        raise CsvParseError(f"bad knowledge-base header {header!r}", line=1)
    rows: list[tuple[KnowledgeBaseEntry, int]] = []
    for row in reader:
        line = reader.line_num
        if len(row) != 4:
            raise CsvParseError(f"expected 4 fields, got {len(row)}", line=line)
        framework, concept_path, summary, pattern = row
        concept = Concept(framework=framework, qualified_path=concept_path, summary=summary)
        rows.append((KnowledgeBaseEntry(concept, pattern), line))
    return rows


@dataclass(frozen=True)
class Violation:
    """One invariant breach (severity ``error``) or advisory (``warning``)."""

    rule: str
    index: int | None
    message: str
    severity: str = "error"


def validate_kb(kb: KnowledgeBase) -> list[Violation]:
    """Scan a knowledge base against its invariants.

    Error-severity violations are empty exactly when every invariant holds:
    entry patterns resolve in the catalog, concept paths are unique and
    well-formed, summaries and frameworks are non-empty. Case-folded
    pattern-name near-collisions are reported with severity ``warning``.
    """
    violations: list[Violation] = []
    catalog_folded: dict[str, str] = {}
    for pattern in kb.catalog:
        folded = pattern.name.casefold()
        if folded in catalog_folded and catalog_folded[folded] != pattern.name:
            violations.append(Violation(
                "casefold_pattern_collision", None,
                f"catalog names {catalog_folded[folded]!r} and {pattern.name!r} collide after case-folding",
                severity="warning",
            ))
        else:
            catalog_folded[folded] = pattern.name

    seen_paths: dict[str, int] = {}
    for i, entry in enumerate(kb.entries):
        concept = entry.concept
        if not concept.framework:
            violations.append(Violation("empty_framework", i, f"entry {i}: framework is empty"))
        if not concept.qualified_path or not concept.terminal_name:
            violations.append(Violation("empty_path", i, f"entry {i}: concept path {concept.qualified_path!r} has no terminal segment"))
        if not concept.summary:
            violations.append(Violation("empty_summary", i, f"entry {i}: summary is empty"))
        if entry.pattern_name not in kb.catalog:
            violations.append(Violation("unknown_pattern", i, f"entry {i}: pattern {entry.pattern_name!r} is not in the catalog"))
            near = catalog_folded.get(entry.pattern_name.casefold())
            if near is not None:
                violations.append(Violation(
                    "casefold_pattern_collision", i,
                    f"entry {i}: pattern {entry.pattern_name!r} matches catalog name {near!r} only after case-folding",
                    severity="warning",
                ))
        if concept.qualified_path in seen_paths:
            violations.append(Violation(
                "duplicate_path", i,
                f"entry {i}: concept path {concept.qualified_path!r} already used by entry {seen_paths[concept.qualified_path]}",
            ))
        else:
            seen_paths[concept.qualified_path] = i
    return violations


def load_kb(source: str | Path | bytes | IO[bytes], catalog: Catalog) -> KnowledgeBase:
    """Load and validate the knowledge-base CSV (``framework,concept_path,summary,pattern``).

    Row order is preserved. Malformed rows raise :class:`CsvParseError` with
    the offending line number; invariant breaches raise
    :class:`ValidationError` citing the line.
    """
    rows = _read_kb_rows(source)
    kb = KnowledgeBase(catalog=catalog, entries=tuple(entry for entry, _ in rows))
    errors = [v for v in validate_kb(kb) if v.severity == "error"]
    if errors:
        first = errors[0]
        line = rows[first.index][1] if first.index is not None else None
        prefix = f"line {line}: " if line is not None else ""
        raise ValidationError(f"{prefix}{first.rule}: {first.message}")
    return kb


def load_kb_lenient(
    source: str | Path | bytes | IO[bytes],
    catalog: Catalog,
) -> tuple[KnowledgeBase, list[Violation]]:
    """Load without raising on invariant breaches; returns the violation report.

    Structurally malformed CSVs still raise :class:`CsvParseError`.
    """
    rows = _read_kb_rows(source)
    kb = KnowledgeBase(catalog=catalog, entries=tuple(entry for entry, _ in rows))
    return kb, validate_kb(kb)


def save_kb(kb: KnowledgeBase) -> bytes:
    """Serialize to canonical CSV: RFC 4180 minimal quoting, UTF-8, LF newlines."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(KB_HEADER)
    for entry in kb.entries:
        c = entry.concept
        writer.writerow([c.framework, c.qualified_path, c.summary, entry.pattern_name])
    return buffer.getvalue().encode("utf-8")


def save_kb_to(kb: KnowledgeBase, path: str | Path) -> Path:
    path = Path(path)
    path.write_bytes(save_kb(kb))
    return path
