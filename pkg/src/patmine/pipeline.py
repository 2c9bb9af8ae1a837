"""Stage orchestration: runs requested stages in pipeline order with a manifest.

Each stage consumes only declared artifacts of earlier stages and writes its
outputs to configured paths. A run manifest recording per-stage input/output
hashes and durations lands in ``output_root/run_manifest.json``; hashes are the
re-run comparison point, since artifact bytes are deterministic for unchanged
inputs.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from .concept_extractor import BUILTIN_RULES, concepts_to_csv, run_extraction_pipeline
from .config import PipelineConfig
from .embedding import EmbeddingCache, EmbeddingProvider, get_provider
from .errors import ConfigError, PatmineError, PreconditionError
from .knowledge_base import (
    Catalog,
    KnowledgeBase,
    load_catalog,
    load_kb,
    load_kb_lenient,
    seed_catalog,
)
from .notebook_converter import convert_corpus
from .repo_harvester import (
    GitHubClient,
    HostingClient,
    SelectionCriteria,
    filter_repositories,
    projects_manifest_csv,
    search_repositories,
    snapshot_repository,
)
from .report_generator import REPORT_NAME, aggregate, render_csv_tables, render_report
from .semantic_matcher import MATCH_CSV_NAME, MatcherConfig, match_corpus, read_matches_csv

logger = logging.getLogger(__name__)

STAGE_ORDER = ("extract", "kb-validate", "harvest", "convert", "match", "report")

MANIFEST_NAME = "run_manifest.json"


@dataclass(frozen=True)
class StageResult:
    stage: str
    inputs: dict[str, str]
    outputs: dict[str, str]
    duration_s: float


def _hash_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _hash_file(path: Path) -> str:
    return _hash_bytes(path.read_bytes())


def _hash_tree(root: Path) -> str:
    digest = hashlib.sha256()
    for path in sorted(root.rglob("*"), key=lambda p: p.relative_to(root).as_posix()):
        if path.is_file():
            digest.update(path.relative_to(root).as_posix().encode("utf-8"))
            digest.update(b"\0")
            digest.update(_hash_file(path).encode("ascii"))
            digest.update(b"\n")
    return digest.hexdigest()


def _hash_path(path: Path) -> str:
    return _hash_tree(path) if path.is_dir() else _hash_file(path)


def _load_catalog(config: PipelineConfig) -> Catalog:
    if config.catalog_csv is not None:
        return load_catalog(config.catalog_csv)
    return seed_catalog()


def _require(stage: str, path: Path | None, what: str) -> Path:
    if path is None:
        raise PreconditionError(f"stage {stage} requires {what}, but no path is configured")
    if not path.exists():
        raise PreconditionError(f"stage {stage} requires {what} at {path}, which does not exist")
    return path


def _load_kb_for(stage: str, config: PipelineConfig) -> KnowledgeBase:
    kb_path = _require(stage, config.kb_csv, "the knowledge-base CSV")
    return load_kb(kb_path, _load_catalog(config))


def _make_cache(config: PipelineConfig) -> EmbeddingCache | None:
    return EmbeddingCache(config.cache_dir) if config.cache_dir is not None else None


class Pipeline:
    """Binds a config to stage implementations; providers/clients are injectable."""

    def __init__(
        self,
        config: PipelineConfig,
        provider: EmbeddingProvider | None = None,
        client: HostingClient | None = None,
    ):
        self.config = config
        self._provider = provider
        self._client = client

    @property
    def provider(self) -> EmbeddingProvider:
        if self._provider is None:
            self._provider = get_provider(self.config.backend)
        return self._provider

    @property
    def client(self) -> HostingClient:
        if self._client is None:
            self._client = GitHubClient()
        return self._client

    # Each stage returns (inputs, outputs) as {label: path} for the manifest.

    def stage_extract(self) -> tuple[dict[str, Path], dict[str, Path]]:
        cfg = self.config
        root = _require("extract", cfg.frameworks_root, "a frameworks source root")
        cache = _make_cache(cfg)
        outputs: dict[str, Path] = {}
        found = False
        for framework, rule in sorted(BUILTIN_RULES.items()):
            if not (root / Path(rule.root_relative_path)).is_dir():
                logger.info("extract: no %s tree under %s, skipping", framework, root)
                continue
            found = True
            provider = self.provider if rule.dedup else None
            concepts = run_extraction_pipeline(rule, root, provider=provider, cache=cache)
            out_path = cfg.output_root / f"concepts_{framework}.csv"
            out_path.parent.mkdir(parents=True, exist_ok=True)
            out_path.write_bytes(concepts_to_csv(concepts))
            outputs[f"concepts_{framework}"] = out_path
            logger.info("extract: %s -> %d concepts", framework, len(concepts))
        if not found:
            raise PreconditionError(f"stage extract found no known framework tree under {root}")
        return {"frameworks_root": root}, outputs

    def stage_kb_validate(self) -> tuple[dict[str, Path], dict[str, Path]]:
        cfg = self.config
        kb_path = _require("kb-validate", cfg.kb_csv, "the knowledge-base CSV")
        _, violations = load_kb_lenient(kb_path, _load_catalog(cfg))
        for violation in violations:
            level = logging.ERROR if violation.severity == "error" else logging.WARNING
            logger.log(level, "kb-validate: %s: %s", violation.rule, violation.message)
        errors = [v for v in violations if v.severity == "error"]
        if errors:
            raise PatmineError(f"knowledge base has {len(errors)} invariant violation(s)")
        inputs = {"kb": kb_path}
        if cfg.catalog_csv is not None:
            inputs["catalog"] = cfg.catalog_csv
        return inputs, {}

    def stage_harvest(self) -> tuple[dict[str, Path], dict[str, Path]]:
        cfg = self.config
        if cfg.reference_date is None:
            raise ConfigError("stage harvest requires harvest.reference_date in the config")
        if cfg.snapshots_root is None:
            raise PreconditionError("stage harvest requires paths.snapshots_root to be configured")
        criteria = SelectionCriteria(
            reference_date=cfg.reference_date,
            min_stars=cfg.min_stars,
            min_contributors=cfg.min_contributors,
            max_inactivity_days=cfg.max_inactivity_days,
            exclusion_list=cfg.exclusion_list,
            reinstatement_list=cfg.reinstatement_list,
        )
        records = search_repositories(cfg.queries, self.client)
        accepted, rejected = filter_repositories(records, criteria)
        logger.info("harvest: %d accepted, %d rejected", len(accepted), len(rejected))
        commits: dict[str, str] = {}
        for record in accepted:
            manifest = snapshot_repository(
                record, cfg.snapshots_root, clone_url=self.client.clone_url(record.full_name)
            )
            commits[record.full_name] = manifest.commit
        cfg.output_root.mkdir(parents=True, exist_ok=True)
        manifest_path = cfg.output_root / "projects_manifest.csv"
        manifest_path.write_bytes(projects_manifest_csv(accepted, rejected, commits))
        return {}, {"projects_manifest": manifest_path, "snapshots_root": cfg.snapshots_root}

    def stage_convert(self) -> tuple[dict[str, Path], dict[str, Path]]:
        cfg = self.config
        snapshots = _require("convert", cfg.snapshots_root, "a snapshots root")
        if cfg.converted_root is None:
            raise PreconditionError("stage convert requires paths.converted_root to be configured")
        converted, skipped = convert_corpus(
            snapshots, cfg.converted_root, markdown_as_comments=cfg.markdown_as_comments
        )
        logger.info("convert: %d notebooks converted, %d skipped", len(converted), len(skipped))
        return {"snapshots_root": snapshots}, {"converted_root": cfg.converted_root}

    def stage_match(self) -> tuple[dict[str, Path], dict[str, Path]]:
        cfg = self.config
        converted = _require("match", cfg.converted_root, "a converted corpus")
        kb = _load_kb_for("match", cfg)
        matcher_cfg = MatcherConfig(
            name_threshold=cfg.name_threshold,
            summary_threshold=cfg.summary_threshold,
            backend_id=cfg.backend,
        )
        matches, skipped = match_corpus(
            converted, kb, self.provider, matcher_cfg, cfg.output_root, cache=_make_cache(cfg)
        )
        logger.info("match: %d matches, %d files skipped", len(matches), len(skipped))
        inputs = {"converted_root": converted, "kb": cfg.kb_csv, "catalog": cfg.catalog_csv}
        return (
            inputs,
            {
                "matches": cfg.output_root / MATCH_CSV_NAME,
                "skipped": cfg.output_root / "skipped_files.csv",
            },
        )

    def stage_report(self) -> tuple[dict[str, Path], dict[str, Path]]:
        cfg = self.config
        matches_path = cfg.output_root / MATCH_CSV_NAME
        if not matches_path.exists():
            raise PreconditionError(f"stage report requires the match CSV at {matches_path}")
        kb = _load_kb_for("report", cfg)
        matches = read_matches_csv(matches_path)
        projects_scanned = None
        if cfg.converted_root is not None and cfg.converted_root.is_dir():
            projects_scanned = sum(1 for p in cfg.converted_root.iterdir() if p.is_dir())
        stats = aggregate(matches, kb, projects_scanned=projects_scanned)
        report_path = cfg.output_root / REPORT_NAME
        report_path.write_bytes(render_report(stats).encode("utf-8"))
        outputs = {"report": report_path}
        if cfg.csv_tables:
            tables_dir = cfg.output_root / "report_tables"
            tables_dir.mkdir(parents=True, exist_ok=True)
            for name, data in render_csv_tables(stats).items():
                (tables_dir / name).write_bytes(data)
            outputs["report_tables"] = tables_dir
        return {"matches": matches_path, "kb": cfg.kb_csv, "catalog": cfg.catalog_csv}, outputs


def run_pipeline(
    config: PipelineConfig,
    stages: Sequence[str],
    provider: EmbeddingProvider | None = None,
    client: HostingClient | None = None,
) -> list[StageResult]:
    """Run the requested stages in pipeline order and write the run manifest.

    Raises on the first failing stage; an empty stage set is a no-op that
    writes no artifacts.
    """
    unknown = set(stages) - set(STAGE_ORDER)
    if unknown:
        raise ConfigError(f"unknown stage(s): {', '.join(sorted(unknown))}")
    ordered = [s for s in STAGE_ORDER if s in set(stages)]
    if not ordered:
        return []

    pipeline = Pipeline(config, provider=provider, client=client)
    implementations = {
        "extract": pipeline.stage_extract,
        "kb-validate": pipeline.stage_kb_validate,
        "harvest": pipeline.stage_harvest,
        "convert": pipeline.stage_convert,
        "match": pipeline.stage_match,
        "report": pipeline.stage_report,
    }

    config.output_root.mkdir(parents=True, exist_ok=True)
    results: list[StageResult] = []
    for stage in ordered:
        started = time.perf_counter()
        inputs, outputs = implementations[stage]()
        results.append(
            StageResult(
                stage=stage,
                inputs={label: _hash_path(p) for label, p in inputs.items() if p is not None},
                outputs={label: _hash_path(p) for label, p in outputs.items()},
                duration_s=round(time.perf_counter() - started, 6),
            )
        )
    manifest = {"stages": [asdict(result) for result in results]}
    (config.output_root / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return results
