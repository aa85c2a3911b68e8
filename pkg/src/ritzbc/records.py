"""Run records and their CSV form.

Files start with a ``# schema: ...`` comment line followed by a header row.
Floats are written with ``repr`` so they round-trip exactly; missing values
are empty cells.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, fields
from pathlib import Path

__all__ = ["SCHEMA", "RunRecord", "write_records", "read_records", "format_records", "parse_records",
           "COMPARE_FIELDS"]

SCHEMA = "ritzbc-records v1"


@dataclass(frozen=True)
class RunRecord:
    run_index: int
    problem: str
    strategy: str
    lam: float | None
    lam_p: float | None
    distance: str | None
    seed: int
    rel_l2_dirichlet: float | None
    rel_h1_dirichlet: float | None
    rel_l2_robin: float | None
    rel_h1_robin: float | None
    final_loss: float | None
    failed: bool
    failed_at: int | None
    iterations: int
    wall_time: float
    preset: str
    config_hash: str

    @property
    def setting(self):
        """λ for penalty strategies, the distance id for exact BCs."""
        return self.distance if self.strategy == "exactbc" else self.lam


FIELDS = tuple(f.name for f in fields(RunRecord))
COMPARE_FIELDS = tuple(f for f in FIELDS if f != "wall_time")
_INT = {"run_index", "seed", "failed_at", "iterations"}
_STR = {"problem", "strategy", "distance", "preset", "config_hash"}


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


def _parse(name, text):
    if name == "failed":
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean {text!r} in column failed")
        return text == "true"
    if text == "":
        return None
    if name in _INT:
        return int(text)
    if name in _STR:
        return text
    return float(text)


def format_records(records) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in records:
        w.writerow([_cell(v) for v in astuple(r)])
    return buf.getvalue()


def parse_records(text: str) -> list[RunRecord]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# schema:"):
        raise ValueError("missing schema line")
    schema = lines[0].split(":", 1)[1].strip()
    if schema != SCHEMA:
        raise ValueError(f"unsupported schema {schema!r}")
    rows = list(csv.reader(lines[1:]))
    if not rows or tuple(rows[0]) != FIELDS:
        raise ValueError("unexpected header")
    out = []
    for row in rows[1:]:
        if len(row) != len(FIELDS):
            raise ValueError(f"row has {len(row)} cells, expected {len(FIELDS)}")
        out.append(RunRecord(*(_parse(n, c) for n, c in zip(FIELDS, row))))
    return out


def write_records(path, records) -> None:
    Path(path).write_text(format_records(records))


def read_records(path) -> list[RunRecord]:
    return parse_records(Path(path).read_text())
