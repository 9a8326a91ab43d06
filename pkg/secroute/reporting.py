"""CSV emission, JSON sidecars and text reports."""

from __future__ import annotations

import csv
import hashlib
import io
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

import orjson
from jinja2 import Environment, PackageLoader, StrictUndefined, select_autoescape

from secroute import __about__

LOGGER = logging.getLogger(__name__)

CSV_SCHEMA = "secroute-csv v1"


def render(template_name: str, data: dict[str, Any]) -> str:
    env = Environment(
        loader=PackageLoader("secroute", "templates"),
        autoescape=select_autoescape(),
        undefined=StrictUndefined,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    env.filters["prob"] = lambda v: "-" if v is None else f"{v:.6f}"
    tmpl = env.get_template(template_name)
    return tmpl.render(data)


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return value


def config_hash(config: dict[str, Any]) -> str:
    """sha256 of the canonical (sorted-key) JSON encoding of a resolved config."""
    return hashlib.sha256(orjson.dumps(_plain(config), option=orjson.OPT_SORT_KEYS)).hexdigest()


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "-".join(str(v) for v in value)
    return str(value)


def _sort_key(row: Sequence[Any]) -> tuple:
    return tuple((0, v, "") if isinstance(v, (int, float)) and not isinstance(v, bool) else (1, 0.0, _cell(v)) for v in row)


@dataclass
class CsvTable:
    """Rows of one command's output; rows are written in canonical sorted order."""

    command: str
    columns: tuple[str, ...]
    rows: list[tuple[Any, ...]] = field(default_factory=list)

    def add(self, *row: Any) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(self.columns)}")
        self.rows.append(tuple(row))

    def records(self) -> list[dict[str, Any]]:
        return [dict(zip(self.columns, row)) for row in sorted(self.rows, key=_sort_key)]

    def format(self, *, seed: int, digest: str) -> str:
        buffer = io.StringIO()
        buffer.write(f"# {CSV_SCHEMA}\n")
        buffer.write(f"# tool_version={__about__.__version__}\n")
        buffer.write(f"# command={self.command}\n")
        buffer.write(f"# seed={seed}\n")
        buffer.write(f"# config_hash={digest}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in sorted(self.rows, key=_sort_key):
            writer.writerow([_cell(v) for v in row])
        return buffer.getvalue()


def write_text(path: Path, text: str, *, dry_run: bool = False) -> None:
    if dry_run:
        LOGGER.info("DRY-RUN: would write %s", path)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    LOGGER.info("Wrote %s", path)


def write_sidecar(path: Path, payload: dict[str, Any], *, dry_run: bool = False) -> None:
    """JSON companion file; the one place wall times are recorded."""
    data = orjson.dumps(_plain(payload), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY)
    write_text(path, data.decode("utf-8") + "\n", dry_run=dry_run)
