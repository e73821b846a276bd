"""Deterministic line-oriented reports.

Every record renders as ``check.field = value`` lines.  Floats use 17
significant digits so that values round-trip exactly; no wall-clock data is
written, which keeps two runs with the same inputs byte-identical.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

STATUSES = ("pass", "fail", "measured")
PROVENANCE = ("closed_form", "monte_carlo", "quadrature", "optimizer")


def format_value(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if v == 0:
            return "0"  # avoids a signed zero in the output
        return format(v, ".17g")
    if isinstance(v, (complex, np.complexfloating)):
        return f"({format_value(v.real)}, {format_value(v.imag)})"
    if isinstance(v, np.ndarray):
        return format_value(v.tolist())
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    if v is None:
        return "none"
    return str(v).replace("\n", " ")


@dataclass
class Record:
    name: str
    status: str
    provenance: str
    tolerance: Any = None
    fields: dict = field(default_factory=dict)
    table: list = field(default_factory=list)  # optional CSV rows (first row = header)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"bad status {self.status!r}")
        if self.provenance not in PROVENANCE:
            raise ValueError(f"bad provenance {self.provenance!r}")

    def lines(self) -> list[str]:
        out = [f"{self.name}.status = {self.status}",
               f"{self.name}.provenance = {self.provenance}",
               f"{self.name}.tolerance = {format_value(self.tolerance)}"]
        out += [f"{self.name}.{k} = {format_value(v)}" for k, v in self.fields.items()]
        return out


@dataclass
class Report:
    metadata: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def add(self, record: Record) -> Record:
        self.records.append(record)
        return record

    @property
    def failed(self) -> list:
        return [r for r in self.records if r.status == "fail"]

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0

    def render(self) -> str:
        lines = ["# curvlab report"]
        lines += [f"run.{k} = {format_value(v)}" for k, v in self.metadata.items()]
        counts = {s: sum(r.status == s for r in self.records) for s in STATUSES}
        lines += [f"run.{s} = {c}" for s, c in counts.items()]
        lines.append(f"run.status = {'fail' if self.failed else 'pass'}")
        for r in self.records:
            lines.append("")
            lines += r.lines()
        return "\n".join(lines) + "\n"

    def write_tables(self, directory) -> list[Path]:
        """One CSV per record that carries a table; returns the written paths."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for r in self.records:
            if not r.table:
                continue
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            for row in r.table:
                writer.writerow([format_value(x) if not isinstance(x, str) else x for x in row])
            path = directory / f"{r.name}.csv"
            path.write_text(buf.getvalue())
            paths.append(path)
        return paths


def parse_report(text: str) -> dict:
    """``{key: value-string}`` for every ``key = value`` line (for tests and tooling)."""
    out = {}
    for line in text.splitlines():
        if " = " in line and not line.startswith("#"):
            k, v = line.split(" = ", 1)
            out[k] = v
    return out
