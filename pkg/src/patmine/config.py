"""Pipeline configuration: one TOML file with a fixed, documented key set.

Relative paths are resolved against the config file's directory, so a config
travels with the workspace it describes. Unknown sections or keys are usage
errors — the key set is a contract, not a suggestion.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigError
from .repo_harvester import DEFAULT_QUERIES

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_KNOWN_KEYS = {
    "paths": {
        "kb", "catalog", "frameworks_root", "snapshots_root",
        "converted_root", "output_root", "cache_dir",
    },
    "matcher": {"backend", "name_threshold", "summary_threshold"},
    "convert": {"markdown_as_comments"},
    "harvest": {
        "queries", "min_stars", "min_contributors", "max_inactivity_days",
        "exclusion_list", "reinstatement_list", "reference_date",
    },
    "report": {"csv_tables"},
}


@dataclass
class PipelineConfig:
    output_root: Path
    kb_csv: Path | None = None
    catalog_csv: Path | None = None
    frameworks_root: Path | None = None
    snapshots_root: Path | None = None
    converted_root: Path | None = None
    cache_dir: Path | None = None
    backend: str = "test"
    name_threshold: float = 0.95
    summary_threshold: float = 0.7
    markdown_as_comments: bool = True
    queries: tuple[str, ...] = DEFAULT_QUERIES
    min_stars: int = 30
    min_contributors: int = 10
    max_inactivity_days: int = 365
    exclusion_list: tuple[str, ...] = ()
    reinstatement_list: tuple[str, ...] = ()
    reference_date: datetime | None = None
    csv_tables: bool = False

    def with_overrides(self, **overrides) -> "PipelineConfig":
        supplied = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **supplied)


def _parse_reference_date(raw) -> datetime:
    if isinstance(raw, datetime):
        moment = raw
    elif isinstance(raw, str):
        try:
            moment = datetime.fromisoformat(raw.replace("Z", "+00:00"))
        except ValueError as exc:
            raise ConfigError(f"harvest.reference_date is not an ISO 8601 timestamp: {raw!r}") from exc
    else:
        raise ConfigError(f"harvest.reference_date must be a timestamp, got {type(raw).__name__}")
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return moment.astimezone(timezone.utc)


def load_config(path: str | Path) -> PipelineConfig:
    """Parse and validate the TOML config. Any malformation is a :class:`ConfigError`."""
    path = Path(path)
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} does not exist") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc

    for section, table in raw.items():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(table, dict):
            raise ConfigError(f"config section [{section}] must be a table")
        unknown = set(table) - _KNOWN_KEYS[section]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")

    base = path.parent

    def _path(section: str, key: str) -> Path | None:
        value = raw.get(section, {}).get(key)
        if value is None:
            return None
        if not isinstance(value, str):
            raise ConfigError(f"{section}.{key} must be a path string")
        p = Path(value)
        return p if p.is_absolute() else base / p

    paths = raw.get("paths", {})
    matcher = raw.get("matcher", {})
    convert = raw.get("convert", {})
    harvest = raw.get("harvest", {})
    report = raw.get("report", {})

    output_root = _path("paths", "output_root")
    if output_root is None:
        raise ConfigError("paths.output_root is required")

    config = PipelineConfig(
        output_root=output_root,
        kb_csv=_path("paths", "kb"),
        catalog_csv=_path("paths", "catalog"),
        frameworks_root=_path("paths", "frameworks_root"),
        snapshots_root=_path("paths", "snapshots_root"),
        converted_root=_path("paths", "converted_root"),
        cache_dir=_path("paths", "cache_dir"),
        backend=matcher.get("backend", "test"),
        name_threshold=float(matcher.get("name_threshold", 0.95)),
        summary_threshold=float(matcher.get("summary_threshold", 0.7)),
        markdown_as_comments=bool(convert.get("markdown_as_comments", True)),
        queries=tuple(harvest.get("queries", DEFAULT_QUERIES)),
        min_stars=int(harvest.get("min_stars", 30)),
        min_contributors=int(harvest.get("min_contributors", 10)),
        max_inactivity_days=int(harvest.get("max_inactivity_days", 365)),
        exclusion_list=tuple(harvest.get("exclusion_list", ())),
        reinstatement_list=tuple(harvest.get("reinstatement_list", ())),
        reference_date=(
            _parse_reference_date(harvest["reference_date"]) if "reference_date" in harvest else None
        ),
        csv_tables=bool(report.get("csv_tables", False)),
    )
    for label, value in (("name", config.name_threshold), ("summary", config.summary_threshold)):
        if not 0 < value <= 1:
            raise ConfigError(f"matcher.{label}_threshold must be in (0, 1], got {value}")
    if config.backend not in ("test", "reference", "remote"):
        raise ConfigError(f"matcher.backend must be test, reference, or remote, got {config.backend!r}")
    return config
