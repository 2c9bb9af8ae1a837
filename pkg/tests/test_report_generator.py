"""Aggregation arithmetic and deterministic report rendering."""

import pytest

from patmine.errors import AggregationError
from patmine.knowledge_base import Concept, KnowledgeBase, KnowledgeBaseEntry, seed_catalog
from patmine.report_generator import (
    ReportStats,
    aggregate,
    project_of_path,
    render_csv_tables,
    render_report,
)
from patmine.semantic_matcher import Match


def _kb(*rows):
    entries = tuple(
        KnowledgeBaseEntry(Concept(framework, path, f"Doc for {path}."), pattern)
        for framework, path, pattern in rows
    )
    return KnowledgeBase(catalog=seed_catalog(), entries=entries)


TWO_PATTERN_KB = _kb(
    ("classiq", "classiq.lib.alpha", "Oracle"),
    ("qiskit", "qiskit.lib.beta", "Grover"),
)


def _match(file_path, concept, pattern, match_type="name", text="alpha", score=1.0):
    return Match(file_path, concept, pattern, match_type, text, score)


class TestAggregate:
    def test_gap_is_set_difference_of_entry_patterns(self):
        matches = [_match("p1/a.py", "classiq.lib.alpha", "Oracle")]
        stats = aggregate(matches, TWO_PATTERN_KB)
        assert stats.unmatched_patterns == {"Grover"}

    def test_channel_split_seven_three(self):
        kb = TWO_PATTERN_KB
        matches = [
            _match(f"p{i % 2}/f{i}.py", "classiq.lib.alpha", "Oracle") for i in range(7)
        ] + [
            _match(f"p{i}/g{i}.py", "qiskit.lib.beta", "Grover", "summary", "notes", 0.8)
            for i in range(3)
        ]
        stats = aggregate(matches, kb)
        assert stats.total_matches == 10
        assert stats.per_channel["name"][0] == 7
        assert stats.per_channel["summary"][0] == 3
        assert stats.per_channel["summary"][1] == pytest.approx(0.8)
        assert stats.per_framework == {"classiq": 7, "qiskit": 3}

    def test_pattern_counts_sum_to_total(self):
        matches = [
            _match("p/a.py", "classiq.lib.alpha", "Oracle"),
            _match("p/b.py", "qiskit.lib.beta", "Grover"),
            _match("q/c.py", "qiskit.lib.beta", "Grover", "summary", "t", 0.75),
        ]
        stats = aggregate(matches, TWO_PATTERN_KB)
        assert sum(stats.per_pattern.values()) == stats.total_matches
        assert sum(count for count, _ in stats.per_channel.values()) == stats.total_matches

    def test_unknown_concept_names_row(self):
        matches = [
            _match("p/a.py", "classiq.lib.alpha", "Oracle"),
            _match("p/b.py", "classiq.lib.ghost", "Oracle"),
        ]
        with pytest.raises(AggregationError, match="row 2"):
            aggregate(matches, TWO_PATTERN_KB)

    def test_unknown_channel_rejected(self):
        matches = [_match("p/a.py", "classiq.lib.alpha", "Oracle", match_type="psychic")]
        with pytest.raises(AggregationError, match="row 1"):
            aggregate(matches, TWO_PATTERN_KB)

    def test_project_from_first_path_segment(self):
        assert project_of_path("alpha-shor/notebooks/nb01.py") == "alpha-shor"
        matches = [
            _match("alpha/a.py", "classiq.lib.alpha", "Oracle"),
            _match("alpha/b/c.py", "classiq.lib.alpha", "Oracle"),
            _match("beta/a.py", "classiq.lib.alpha", "Oracle"),
        ]
        stats = aggregate(matches, TWO_PATTERN_KB)
        assert stats.unique_projects == 2
        assert stats.per_project == {"alpha": 2, "beta": 1}

    def test_projects_scanned_passthrough(self):
        stats = aggregate([], TWO_PATTERN_KB, projects_scanned=9)
        assert stats.projects_scanned == 9
        assert stats.unique_projects == 0

    def test_empty_matches(self):
        stats = aggregate([], TWO_PATTERN_KB)
        assert stats.total_matches == 0
        assert stats.unmatched_patterns == {"Oracle", "Grover"}
        assert stats.per_channel == {"name": (0, None), "summary": (0, None)}


class TestRenderReport:
    def test_all_sections_present_when_empty(self):
        report = render_report(aggregate([], TWO_PATTERN_KB))
        for section in (
            "--- Overall Summary ---",
            "--- Source & Adoption ---",
            "--- Pattern Prevalence ---",
            "--- Gap Analysis ---",
            "--- Top Matched Concepts (top 20) ---",
        ):
            assert section in report
        assert "Name matches:     0 (mean score n/a)" in report

    def test_prevalence_leading_rows(self):
        stats = ReportStats(
            total_matches=281,
            per_pattern={
                "Basis Change": 161,
                "Quantum Phase Estimation (QPE)": 57,
                "Domain Specific Application": 53,
                "Quantum Arithmetic": 10,
            },
            per_channel={"name": (281, 0.99), "summary": (0, None)},
        )
        report = render_report(stats)
        section = report.split("--- Pattern Prevalence ---")[1].split("---")[0]
        rows = [line.strip() for line in section.strip().splitlines()]
        assert rows[:3] == [
            "Basis Change: 161",
            "Quantum Phase Estimation (QPE): 57",
            "Domain Specific Application: 53",
        ]

    def test_ties_alphabetical(self):
        stats = ReportStats(
            total_matches=4,
            per_pattern={"Oracle": 2, "Grover": 2},
            per_channel={"name": (4, 1.0), "summary": (0, None)},
        )
        report = render_report(stats)
        section = report.split("--- Pattern Prevalence ---")[1].split("---")[0]
        rows = [line.strip() for line in section.strip().splitlines()]
        assert rows == ["Grover: 2", "Oracle: 2"]

    def test_mean_rendered_two_decimals(self):
        matches = [
            _match("p/a.py", "classiq.lib.alpha", "Oracle", "summary", "t", 0.705),
            _match("p/b.py", "classiq.lib.alpha", "Oracle", "summary", "t", 0.695),
        ]
        report = render_report(aggregate(matches, TWO_PATTERN_KB))
        assert "Summary matches:  2 (mean score 0.70)" in report

    def test_render_deterministic(self):
        matches = [
            _match("p/a.py", "classiq.lib.alpha", "Oracle"),
            _match("q/b.py", "qiskit.lib.beta", "Grover", "summary", "t", 0.8),
        ]
        first = render_report(aggregate(matches, TWO_PATTERN_KB))
        second = render_report(aggregate(list(matches), TWO_PATTERN_KB))
        assert first == second

    def test_top_concepts_capped_at_twenty(self):
        kb = _kb(*[("qiskit", f"qiskit.lib.c{i:02d}", "Oracle") for i in range(25)])
        matches = [_match(f"p/f{i}.py", f"qiskit.lib.c{i:02d}", "Oracle") for i in range(25)]
        stats = aggregate(matches, kb)
        assert len(stats.top_concepts) == 25
        report = render_report(stats)
        section = report.split("--- Top Matched Concepts (top 20) ---")[1]
        assert len([l for l in section.strip().splitlines() if l.strip()]) == 20


class TestCsvTables:
    def test_tables_cover_sections(self):
        matches = [
            _match("p/a.py", "classiq.lib.alpha", "Oracle"),
            _match("q/b.py", "qiskit.lib.beta", "Grover", "summary", "t", 0.8),
        ]
        tables = render_csv_tables(aggregate(matches, TWO_PATTERN_KB))
        assert set(tables) == {
            "overall_summary.csv",
            "source_frameworks.csv",
            "project_adoption.csv",
            "pattern_prevalence.csv",
            "gap_analysis.csv",
            "top_concepts.csv",
        }
        assert tables["pattern_prevalence.csv"].decode().splitlines()[0] == "pattern,matches"
        assert b"Grover,1" in tables["pattern_prevalence.csv"]
