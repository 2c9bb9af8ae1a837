"""Knowledge base: seed catalog, CSV loading, validation, round-trips."""

from pathlib import Path

import pytest

from patmine.errors import CsvParseError, ValidationError
from patmine.knowledge_base import (
    Catalog,
    Concept,
    KnowledgeBase,
    KnowledgeBaseEntry,
    Origin,
    Pattern,
    load_catalog,
    load_kb,
    load_kb_lenient,
    save_catalog,
    save_kb,
    seed_catalog,
    validate_kb,
)

NEW_AND_UNIFIED = {
    "Basis Change",
    "Circuit Construction Utility",
    "Data Encoding",
    "Domain Specific Application",
    "Hamiltonian Simulation",
    "Linear Combination of Unitaries (LCU)",
    "Quantum Amplitude Estimation (QAE)",
    "Quantum Arithmetic",
    "Quantum Logical Operators",
}


class TestSeedCatalog:
    def test_exactly_nine_new_or_unified(self):
        catalog = seed_catalog()
        found = {p.name for p in catalog if p.origin in (Origin.NEW, Origin.UNIFIED)}
        assert found == NEW_AND_UNIFIED

    def test_unified_subset(self):
        catalog = seed_catalog()
        unified = {p.name for p in catalog if p.origin is Origin.UNIFIED}
        assert unified == {"Basis Change", "Data Encoding"}

    def test_contains_never_matched_atlas_patterns(self):
        catalog = seed_catalog()
        assert "Function Table" in catalog
        assert "Schmidt Decomposition" in catalog

    def test_names_distinct_after_casefold(self):
        names = seed_catalog().names()
        assert len({n.casefold() for n in names}) == len(names)

    def test_deterministic(self):
        assert list(seed_catalog()) == list(seed_catalog())

    def test_all_names_nonempty(self):
        assert all(p.name for p in seed_catalog())


class TestLoadKb:
    def test_three_row_sample_preserves_order(self, fixtures_dir):
        kb = load_kb(fixtures_dir / "kb" / "sample_three_rows.csv", seed_catalog())
        assert len(kb.entries) == 3
        assert [e.concept.framework for e in kb.entries] == ["classiq", "pennylane", "qiskit"]
        assert kb.entries[0].concept.terminal_name == "qft"
        assert kb.entries[2].pattern_name == "Quantum Logical Operators"

    def test_header_only_gives_empty_kb(self):
        kb = load_kb(b"framework,concept_path,summary,pattern\n", seed_catalog())
        assert kb.entries == ()

    def test_unknown_pattern_cites_line_two(self):
        source = (
            b"framework,concept_path,summary,pattern\n"
            b"qiskit,qiskit.circuit.library.foo.Bar,Does something.,NoSuchPattern\n"
        )
        with pytest.raises(ValidationError, match=r"line 2.*unknown_pattern"):
            load_kb(source, seed_catalog())

    def test_duplicate_concept_path_rejected(self):
        source = (
            b"framework,concept_path,summary,pattern\n"
            b"qiskit,qiskit.a.Same,First.,Oracle\n"
            b"qiskit,qiskit.a.Same,Second.,Oracle\n"
        )
        with pytest.raises(ValidationError, match=r"line 3.*duplicate_path"):
            load_kb(source, seed_catalog())

    def test_malformed_row_cites_line(self):
        source = b"framework,concept_path,summary,pattern\nqiskit,only,three\n"
        with pytest.raises(CsvParseError, match="line 2"):
            load_kb(source, seed_catalog())

    def test_bad_header_rejected(self):
        with pytest.raises(CsvParseError, match="line 1"):
            load_kb(b"a,b,c,d\n", seed_catalog())

    def test_fixture_kb_loads_clean(self, fixture_kb):
        assert len(fixture_kb.entries) == 36
        assert [v for v in validate_kb(fixture_kb) if v.severity == "error"] == []

    def test_spreadsheet_bom_tolerated(self):
        source = b"\xef\xbb\xbfframework,concept_path,summary,pattern\nqiskit,qiskit.a.B,Doc.,Oracle\n"
        kb = load_kb(source, seed_catalog())
        assert len(kb.entries) == 1


class TestRoundTrip:
    def test_save_load_byte_identical_on_canonical_csv(self, kb_csv):
        original = Path(kb_csv).read_bytes()
        kb = load_kb(kb_csv, seed_catalog())
        assert save_kb(kb) == original

    def test_serialization_idempotent(self, kb_csv):
        catalog = seed_catalog()
        once = save_kb(load_kb(kb_csv, catalog))
        twice = save_kb(load_kb(once, catalog))
        assert once == twice

    def test_quoted_fields_survive(self):
        kb = KnowledgeBase(
            catalog=seed_catalog(),
            entries=(
                KnowledgeBaseEntry(
                    Concept("qiskit", "qiskit.x.Y", 'Summary with, comma and "quote".\nSecond line.'),
                    "Oracle",
                ),
            ),
        )
        reloaded = load_kb(save_kb(kb), seed_catalog())
        assert reloaded.entries == kb.entries


class TestValidateKb:
    def _kb(self, *entries):
        return KnowledgeBase(catalog=seed_catalog(), entries=tuple(entries))

    def test_clean_kb_has_no_errors(self, fixture_kb):
        assert [v for v in validate_kb(fixture_kb) if v.severity == "error"] == []

    def test_duplicate_path_single_violation(self):
        entry = KnowledgeBaseEntry(Concept("qiskit", "qiskit.a.B", "Doc."), "Oracle")
        report = validate_kb(self._kb(entry, entry))
        duplicates = [v for v in report if v.rule == "duplicate_path"]
        assert len(duplicates) == 1
        assert duplicates[0].index == 1

    def test_empty_summary_violation(self):
        entry = KnowledgeBaseEntry(Concept("qiskit", "qiskit.a.B", ""), "Oracle")
        report = validate_kb(self._kb(entry))
        assert [v.rule for v in report if v.severity == "error"] == ["empty_summary"]

    def test_trailing_dot_path_violation(self):
        entry = KnowledgeBaseEntry(Concept("qiskit", "qiskit.a.", "Doc."), "Oracle")
        assert any(v.rule == "empty_path" for v in validate_kb(self._kb(entry)))

    def test_casefold_near_duplicate_is_warning_not_error(self):
        entry = KnowledgeBaseEntry(Concept("qiskit", "qiskit.a.B", "Doc."), "oracle")
        report = validate_kb(self._kb(entry))
        assert any(v.rule == "unknown_pattern" and v.severity == "error" for v in report)
        warnings = [v for v in report if v.severity == "warning"]
        assert [w.rule for w in warnings] == ["casefold_pattern_collision"]

    def test_lenient_load_reports_instead_of_raising(self):
        source = (
            b"framework,concept_path,summary,pattern\n"
            b"qiskit,qiskit.a.B,Doc.,NoSuchPattern\n"
        )
        kb, report = load_kb_lenient(source, seed_catalog())
        assert len(kb.entries) == 1
        assert any(v.rule == "unknown_pattern" for v in report)


class TestCatalogFile:
    def test_load_catalog_roundtrip(self, tmp_path):
        catalog = seed_catalog()
        path = tmp_path / "catalog.csv"
        path.write_bytes(save_catalog(catalog))
        loaded = load_catalog(path)
        assert list(loaded) == list(catalog)

    def test_catalog_extensible_to_sixty_one(self, tmp_path):
        base = list(seed_catalog())
        extra_needed = 61 - len(base)
        extras = [Pattern(f"Extension Pattern {i:02d}", "Locally curated atlas entry.", Origin.ATLAS)
                  for i in range(extra_needed)]
        path = tmp_path / "catalog61.csv"
        path.write_bytes(save_catalog(Catalog(base + extras)))
        assert len(load_catalog(path)) == 61

    def test_unknown_origin_rejected(self):
        source = b"name,description,origin\nThing,Does a thing.,bogus\n"
        with pytest.raises(CsvParseError, match="line 2"):
            load_catalog(source)

    def test_duplicate_name_rejected(self):
        source = b"name,description,origin\nThing,One.,atlas\nThing,Two.,atlas\n"
        with pytest.raises(ValidationError, match="duplicate pattern name"):
            load_catalog(source)
