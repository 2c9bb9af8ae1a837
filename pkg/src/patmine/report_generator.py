"""Aggregates the match CSV into summary, adoption, prevalence, and gap analyses."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from pathlib import PurePosixPath
from typing import Callable, Sequence

from .errors import AggregationError
from .knowledge_base import KnowledgeBase
from .semantic_matcher import Match

REPORT_NAME = "final_pattern_report.txt"

CHANNELS = ("name", "summary")

TOP_CONCEPTS_LIMIT = 20


def project_of_path(file_path: str) -> str:
    """Project key of a corpus-relative path: its first directory component."""
    return PurePosixPath(file_path).parts[0]


@dataclass
class ReportStats:
    total_matches: int = 0
    unique_files: int = 0
    unique_projects: int = 0
    unique_concepts: int = 0
    per_channel: dict[str, tuple[int, float | None]] = field(default_factory=dict)
    per_framework: dict[str, int] = field(default_factory=dict)
    per_project: dict[str, int] = field(default_factory=dict)
    per_pattern: dict[str, int] = field(default_factory=dict)
    unmatched_patterns: set[str] = field(default_factory=set)
    top_concepts: list[tuple[str, int]] = field(default_factory=list)
    framework_of: dict[str, str] = field(default_factory=dict)
    # Projects in the scanned corpus regardless of matches; None when the
    # corpus root was not available to the aggregation.
    projects_scanned: int | None = None


def aggregate(
    matches: Sequence[Match],
    kb: KnowledgeBase,
    project_of: Callable[[str], str] = project_of_path,
    projects_scanned: int | None = None,
) -> ReportStats:
    """Compute every report statistic from match rows.

    A row whose concept is missing from the knowledge base raises
    :class:`AggregationError` naming the 1-based row. Mean scores are kept raw
    and rendered to two decimals.
    """
    known = {entry.concept.qualified_path: entry.concept.framework for entry in kb.entries}
    files: set[str] = set()
    projects: set[str] = set()
    concepts: Counter[str] = Counter()
    frameworks: Counter[str] = Counter()
    per_project: Counter[str] = Counter()
    patterns: Counter[str] = Counter()
    channel_scores: dict[str, list[float]] = {channel: [] for channel in CHANNELS}

    for i, match in enumerate(matches, start=1):
        if match.concept_path not in known:
            raise AggregationError(f"row {i}: unknown concept {match.concept_path!r}")
        if match.match_type not in channel_scores:
            raise AggregationError(f"row {i}: unknown match type {match.match_type!r}")
        files.add(match.file_path)
        project = project_of(match.file_path)
        projects.add(project)
        per_project[project] += 1
        concepts[match.concept_path] += 1
        frameworks[known[match.concept_path]] += 1
        patterns[match.pattern_name] += 1
        channel_scores[match.match_type].append(match.score)

    per_channel = {
        channel: (len(scores), (sum(scores) / len(scores)) if scores else None)
        for channel, scores in channel_scores.items()
    }
    ranked_concepts = sorted(concepts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ReportStats(
        total_matches=len(matches),
        unique_files=len(files),
        unique_projects=len(projects),
        unique_concepts=len(concepts),
        per_channel=per_channel,
        per_framework=dict(frameworks),
        per_project=dict(per_project),
        per_pattern=dict(patterns),
        unmatched_patterns=kb.entry_patterns() - set(patterns),
        top_concepts=ranked_concepts,
        framework_of=known,
        projects_scanned=projects_scanned,
    )


def _by_count_then_name(counts: dict[str, int]) -> list[tuple[str, int]]:
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def _channel_line(stats: ReportStats, channel: str) -> str:
    count, mean = stats.per_channel.get(channel, (0, None))
    mean_text = f"{mean:.2f}" if mean is not None else "n/a"
    return f"{count} (mean score {mean_text})"


def render_report(stats: ReportStats) -> str:
    """Deterministic plain-text report; same stats always render the same bytes."""
    lines: list[str] = []
    rule = "=" * 72
    lines += [rule, "QUANTUM CONCEPT PATTERN REPORT", rule, ""]

    lines.append("--- Overall Summary ---")
    lines.append(f"Total matches:    {stats.total_matches}")
    lines.append(f"Unique files:     {stats.unique_files}")
    lines.append(f"Unique projects:  {stats.unique_projects}")
    if stats.projects_scanned is not None:
        lines.append(f"Projects scanned: {stats.projects_scanned}")
    lines.append(f"Unique concepts:  {stats.unique_concepts}")
    lines.append(f"Name matches:     {_channel_line(stats, 'name')}")
    lines.append(f"Summary matches:  {_channel_line(stats, 'summary')}")
    lines.append("")

    lines.append("--- Source & Adoption ---")
    lines.append("Matches by source framework:")
    for framework, count in _by_count_then_name(stats.per_framework):
        lines.append(f"  {framework}: {count}")
    lines.append("Matches by project:")
    for project, count in _by_count_then_name(stats.per_project):
        lines.append(f"  {project}: {count}")
    lines.append("")

    lines.append("--- Pattern Prevalence ---")
    for pattern, count in _by_count_then_name(stats.per_pattern):
        lines.append(f"  {pattern}: {count}")
    lines.append("")

    lines.append("--- Gap Analysis ---")
    lines.append("Knowledge-base patterns never matched in the corpus:")
    if stats.unmatched_patterns:
        for pattern in sorted(stats.unmatched_patterns):
            lines.append(f"  {pattern}")
    else:
        lines.append("  (none)")
    lines.append("")

    lines.append(f"--- Top Matched Concepts (top {TOP_CONCEPTS_LIMIT}) ---")
    for concept_path, count in stats.top_concepts[:TOP_CONCEPTS_LIMIT]:
        framework = stats.framework_of.get(concept_path, "?")
        lines.append(f"  {framework}  {concept_path}: {count}")
    lines.append("")

    return "\n".join(lines)


def _csv_bytes(header: list[str], rows: list[list]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue().encode("utf-8")


def render_csv_tables(stats: ReportStats) -> dict[str, bytes]:
    """Each report section as its own CSV (for the ``--csv-tables`` flag)."""
    overview_rows = [
        ["total_matches", stats.total_matches],
        ["unique_files", stats.unique_files],
        ["unique_projects", stats.unique_projects],
    ]
    if stats.projects_scanned is not None:
        overview_rows.append(["projects_scanned", stats.projects_scanned])
    overview_rows.append(["unique_concepts", stats.unique_concepts])
    for channel in CHANNELS:
        count, mean = stats.per_channel.get(channel, (0, None))
        overview_rows.append([f"{channel}_matches", count])
        overview_rows.append([f"{channel}_mean_score", f"{mean:.2f}" if mean is not None else "n/a"])
    return {
        "overall_summary.csv": _csv_bytes(["metric", "value"], overview_rows),
        "source_frameworks.csv": _csv_bytes(
            ["framework", "matches"], [list(kv) for kv in _by_count_then_name(stats.per_framework)]
        ),
        "project_adoption.csv": _csv_bytes(
            ["project", "matches"], [list(kv) for kv in _by_count_then_name(stats.per_project)]
        ),
        "pattern_prevalence.csv": _csv_bytes(
            ["pattern", "matches"], [list(kv) for kv in _by_count_then_name(stats.per_pattern)]
        ),
        "gap_analysis.csv": _csv_bytes(["pattern"], [[p] for p in sorted(stats.unmatched_patterns)]),
        "top_concepts.csv": _csv_bytes(
            ["framework", "concept_path", "matches"],
            [
                [stats.framework_of.get(path, "?"), path, count]
                for path, count in stats.top_concepts[:TOP_CONCEPTS_LIMIT]
            ],
        ),
    }
