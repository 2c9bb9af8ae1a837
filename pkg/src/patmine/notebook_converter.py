"""Notebook discovery and conversion to plain scripts.

Code cells are emitted verbatim (trailing newlines fold into the single blank
line separating cells); markdown cells become ``# ``-prefixed comment lines so
notebook prose participates in comment-based matching; raw cells are dropped.
Converted scripts mirror the notebook's relative path under a separate output
root, with a ``.py`` extension.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path, PurePosixPath

from .errors import ConversionError

logger = logging.getLogger(__name__)

CELL_KINDS = ("code", "markdown", "raw")


@dataclass(frozen=True)
class NotebookDocument:
    path: str
    cells: tuple[tuple[str, str], ...]  # (cell kind, source text) in on-disk order


def parse_notebook(path: str | Path) -> NotebookDocument:
    """Parse a v4 notebook JSON file; malformed input raises :class:`ConversionError`."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConversionError(f"unreadable notebook JSON: {exc}", path=str(path)) from exc
    cells_raw = data.get("cells")
    if not isinstance(cells_raw, list):
        raise ConversionError("notebook JSON has no cell list", path=str(path))
    cells = []
    for cell in cells_raw:
        if not isinstance(cell, dict) or "cell_type" not in cell:
            raise ConversionError("malformed cell entry", path=str(path))
        kind = cell["cell_type"]
        source = cell.get("source", "")
        if isinstance(source, list):
            source = "".join(source)
        if not isinstance(source, str):
            raise ConversionError("cell source is neither text nor a line list", path=str(path))
        cells.append((kind, source))
    return NotebookDocument(path=str(path), cells=tuple(cells))


def discover_notebooks(root: str | Path) -> list[PurePosixPath]:
    """All ``.ipynb`` paths under root, relative, in lexicographic order."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus root {root} does not exist")

    def _on_error(error: OSError) -> None:
        logger.warning("skipping unreadable directory %s: %s", error.filename, error)

    found = []
    for dirpath, dirnames, filenames in os.walk(root, onerror=_on_error):
        dirnames.sort()
        for name in filenames:
            if name.endswith(".ipynb"):
                rel = Path(dirpath, name).relative_to(root)
                found.append(PurePosixPath(rel.as_posix()))
    found.sort(key=str)
    return found


def convert_notebook(nb: NotebookDocument, markdown_as_comments: bool = True) -> str:
    """Render a notebook as script text.

    Cells that render to nothing (raw cells, whitespace-only cells) are
    dropped; the rest are joined by exactly one blank line.
    """
    blocks = []
    for kind, source in nb.cells:
        if kind == "code":
            block = source.rstrip("\n")
        elif kind == "markdown" and markdown_as_comments:
            text = source.rstrip("\n")
            block = "\n".join("# " + line for line in text.split("\n")) if text else ""
        else:
            block = ""
        if block:
            blocks.append(block)
    return "\n\n".join(blocks)


def converted_rel_path(notebook_rel: PurePosixPath) -> PurePosixPath:
    return notebook_rel.with_suffix(".py")


def convert_corpus(
    snapshots_root: str | Path,
    converted_root: str | Path,
    markdown_as_comments: bool = True,
) -> tuple[list[PurePosixPath], list[tuple[str, str]]]:
    """Convert every notebook under ``snapshots_root`` into ``converted_root``.

    Folder structure is preserved. Malformed notebooks are skipped with a
    logged warning and reported in the returned ``(path, reason)`` list.
    Re-running over an unchanged corpus rewrites identical bytes.
    """
    snapshots_root = Path(snapshots_root)
    converted_root = Path(converted_root)
    converted: list[PurePosixPath] = []
    skipped: list[tuple[str, str]] = []
    for rel in discover_notebooks(snapshots_root):
        try:
            nb = parse_notebook(snapshots_root / Path(rel))
        except ConversionError as exc:
            logger.warning("skipping notebook %s: %s", rel, exc)
            skipped.append((str(rel), str(exc)))
            continue
        script = convert_notebook(nb, markdown_as_comments=markdown_as_comments)
        out_rel = converted_rel_path(rel)
        out_path = converted_root / Path(out_rel)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_bytes(script.encode("utf-8"))
        converted.append(out_rel)
    return converted, skipped
