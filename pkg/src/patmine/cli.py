"""Command-line entry point: one subcommand per pipeline stage, plus ``run``.

Exit codes: 0 success, 1 stage error, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import PipelineConfig, load_config
from .errors import ConfigError, PatmineError
from .knowledge_base import load_catalog, load_kb_lenient, seed_catalog
from .pipeline import STAGE_ORDER, run_pipeline

logger = logging.getLogger(__name__)


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, required=True, help="pipeline config file (TOML)")


def _add_matcher_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=["test", "reference", "remote"], help="embedding backend")
    parser.add_argument("--name-threshold", type=float, help="call-name match threshold (default 0.95)")
    parser.add_argument("--summary-threshold", type=float, help="comment-block match threshold (default 0.7)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patmine",
        description="Mine quantum-computing concepts and patterns from framework sources and notebook corpora.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    extract = commands.add_parser("extract", help="extract framework concepts to per-framework CSVs")
    _add_config_arg(extract)
    extract.add_argument("--backend", choices=["test", "reference", "remote"], help="embedding backend for semantic dedup")
    extract.set_defaults(handler=_cmd_stage, stage="extract")

    kb = commands.add_parser("kb", help="knowledge-base utilities")
    kb_commands = kb.add_subparsers(dest="kb_command", required=True)
    kb_validate = kb_commands.add_parser("validate", help="validate the knowledge-base CSV against the catalog")
    kb_validate.add_argument("--config", type=Path, help="pipeline config file (TOML)")
    kb_validate.add_argument("--kb", type=Path, help="knowledge-base CSV (overrides config)")
    kb_validate.add_argument("--catalog", type=Path, help="catalog CSV (defaults to the built-in catalog)")
    kb_validate.set_defaults(handler=_cmd_kb_validate)

    harvest = commands.add_parser("harvest", help="search, filter, and snapshot candidate repositories")
    _add_config_arg(harvest)
    harvest.set_defaults(handler=_cmd_stage, stage="harvest")

    convert = commands.add_parser("convert", help="convert corpus notebooks to scripts")
    _add_config_arg(convert)
    convert.add_argument("--converted-root", type=Path, help="output root for converted scripts")
    convert.add_argument(
        "--markdown-as-comments", choices=["on", "off"],
        help="emit markdown cells as comment lines (default on)",
    )
    convert.set_defaults(handler=_cmd_stage, stage="convert")

    match = commands.add_parser("match", help="run both match channels over the converted corpus")
    _add_config_arg(match)
    _add_matcher_args(match)
    match.add_argument("--converted-root", type=Path, help="converted corpus root")
    match.set_defaults(handler=_cmd_stage, stage="match")

    report = commands.add_parser("report", help="aggregate the match CSV into the final report")
    _add_config_arg(report)
    report.add_argument("--csv-tables", action="store_true", default=None, help="also emit each section as CSV")
    report.set_defaults(handler=_cmd_stage, stage="report")

    run = commands.add_parser("run", help="run several stages in pipeline order")
    _add_config_arg(run)
    _add_matcher_args(run)
    run.add_argument(
        "--stages",
        default=",".join(STAGE_ORDER),
        help=f"comma-separated subset of: {', '.join(STAGE_ORDER)} (default: all)",
    )
    run.add_argument("--output-root", type=Path, help="artifact root (overrides config)")
    run.add_argument("--csv-tables", action="store_true", default=None, help="also emit report sections as CSV")
    run.set_defaults(handler=_cmd_run)

    return parser


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    config = load_config(args.config)
    overrides = {}
    for attr, key in (
        ("backend", "backend"),
        ("name_threshold", "name_threshold"),
        ("summary_threshold", "summary_threshold"),
        ("converted_root", "converted_root"),
        ("output_root", "output_root"),
        ("csv_tables", "csv_tables"),
    ):
        if getattr(args, attr, None) is not None:
            overrides[key] = getattr(args, attr)
    markdown = getattr(args, "markdown_as_comments", None)
    if markdown is not None:
        overrides["markdown_as_comments"] = markdown == "on"
    return config.with_overrides(**overrides)


def _cmd_stage(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    run_pipeline(config, [args.stage])
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    stages = [s for s in (part.strip() for part in args.stages.split(",")) if s]
    run_pipeline(config, stages)
    return 0


def _cmd_kb_validate(args: argparse.Namespace) -> int:
    kb_path = args.kb
    catalog_path = args.catalog
    if args.config is not None:
        config = load_config(args.config)
        kb_path = kb_path or config.kb_csv
        catalog_path = catalog_path or config.catalog_csv
    if kb_path is None:
        raise ConfigError("kb validate needs --kb or a config with paths.kb")
    catalog = load_catalog(catalog_path) if catalog_path is not None else seed_catalog()
    kb, violations = load_kb_lenient(kb_path, catalog)
    for violation in violations:
        print(f"{violation.severity}: {violation.rule}: {violation.message}")
    errors = [v for v in violations if v.severity == "error"]
    print(f"{len(kb.entries)} entries, {len(errors)} violation(s), {len(violations) - len(errors)} warning(s)")
    return 1 if errors else 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (PatmineError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
