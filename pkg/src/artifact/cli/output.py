"""Machine-readable outputs: run manifests, result tables, CSV and plot columns.

JSON is the canonical form and CSV a projection of it. CSV follows RFC 4180
(CRLF line ends, minimal quoting) and writes floats with 17 significant
digits so every double survives the round trip.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from .. import __version__
from ..errors import ParameterError, SchemaError

PHASE_SCAN, LLN_CONVERGENCE, INTERSECTION_HIST = "phase_scan", "lln_convergence", "intersection_hist"
PLOT_KINDS = {
    PHASE_SCAN: ("mu", "lambda", "M", "r", "estimate", "se"),
    LLN_CONVERGENCE: ("N", "mean", "limit"),
    INTERSECTION_HIST: ("value", "count", "frequency"),
}
# paired intersection tables carry (m, n) in place of a single value
_PAIRED_HIST = ("m", "n", "count", "frequency", "exact")


@dataclass
class RunManifest:
    command: list[str]
    seed: int
    params: dict
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    substreams: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        try:
            return cls(**data)
        except TypeError as exc:
            raise SchemaError(f"malformed manifest: {exc}") from None


@dataclass(frozen=True)
class Column:
    name: str
    type: str  # "int", "float" or "str"
    unit: str = ""


@dataclass
class ResultTable:
    columns: list[Column]
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @classmethod
    def from_records(cls, records: list[dict], types: dict[str, str], units: dict | None = None,
                     summary: dict | None = None) -> "ResultTable":
        units = units or {}
        cols = [Column(n, t, units.get(n, "")) for n, t in types.items()]
        return cls(cols, [{n: jsonable(r[n]) for n in types} for r in records], summary or {})

    def to_dict(self) -> dict:
        return {"columns": [asdict(c) for c in self.columns], "rows": self.rows,
                "summary": self.summary}

    @classmethod
    def from_dict(cls, data: dict) -> "ResultTable":
        try:
            return cls([Column(**c) for c in data["columns"]], list(data["rows"]),
                       dict(data.get("summary", {})))
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed result table: {exc}") from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, ResultTable):
            return NotImplemented
        return json.dumps(self.to_dict(), sort_keys=True) == json.dumps(other.to_dict(), sort_keys=True)

    def to_csv(self, names=None) -> str:
        names = list(names or self.names)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(names)
        for row in self.rows:
            w.writerow([format_cell(row.get(n)) for n in names])
        return buf.getvalue()


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.17g}"
    return str(value)


def jsonable(value):
    """Plain Python value for JSON: numpy scalars and arrays become int, float or list."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    return value


def dumps(doc) -> str:
    """Canonical JSON; floats use the shortest exact repr, NaN becomes null."""
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, list):
            return [clean(x) for x in v]
        return v
    return json.dumps(clean(jsonable(doc)), indent=2, sort_keys=False, allow_nan=False)


def emit_plot_data(table: ResultTable, kind: str, out=None) -> str:
    """Project ``table`` onto the plot columns of ``kind`` and return the CSV text.

    With ``out`` (a path or a text file) the CSV is also written there.
    """
    if kind not in PLOT_KINDS:
        raise ParameterError(f"unknown plot kind {kind!r}; choose from {sorted(PLOT_KINDS)}")
    want = PLOT_KINDS[kind]
    have = set(table.names)
    if kind == INTERSECTION_HIST and "m" in have:
        want = _PAIRED_HIST
    missing = [n for n in want if n not in have]
    if missing:
        raise ParameterError(f"table lacks the {kind} column(s) {missing}")
    text = table.to_csv(want)
    if out is not None:
        if hasattr(out, "write"):
            out.write(text)
        else:
            with open(out, "w", newline="") as fh:
                fh.write(text)
    return text
