"""Persisted run reports and table rendering."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from solarbench.attack import AttackOutcome
from solarbench.errors import ConfigError
from solarbench.sweep import SweepResult

KINDS = ("attack", "sweep")


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


@dataclass
class RunReport:
    kind: str
    tool_version: str
    timestamp: str
    model: dict
    preprocess: dict | None
    manifest: dict
    config: dict
    clean: dict
    robust: dict | None = None
    sweep: SweepResult | None = None
    outcomes: list[AttackOutcome] | None = None
    errors: list[dict] = field(default_factory=list)
    external_scores: dict | None = None
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown report kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
            "model": self.model,
            "preprocess": self.preprocess,
            "manifest": self.manifest,
            "config": self.config,
            "clean": self.clean,
            "robust": self.robust,
            "sweep": None if self.sweep is None else self.sweep.to_dict(),
            "outcomes": None if self.outcomes is None else [o.to_dict() for o in self.outcomes],
            "errors": self.errors,
            "external_scores": self.external_scores,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        d = dict(d)
        sweep = d.pop("sweep", None)
        outcomes = d.pop("outcomes", None)
        try:
            return cls(
                sweep=None if sweep is None else SweepResult.from_dict(sweep),
                outcomes=None if outcomes is None else [AttackOutcome.from_dict(o) for o in outcomes],
                **d,
            )
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"not a valid run report: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "RunReport":
        try:
            text = Path(path).read_text(encoding="utf-8")
            d = json.loads(text)
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: cannot read report: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: report must be a JSON object")
        try:
            return cls.from_dict(d)
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    def save(self, path):
        """Write to a new file; existing reports are never overwritten."""
        path = Path(path)
        try:
            with open(path, "x", encoding="utf-8") as fh:
                fh.write(self.to_json())
        except FileExistsError:
            raise ConfigError(f"{path}: refusing to overwrite an existing report") from None


# --------------------------------------------------------------------------
# tables


def _pct(v) -> str:
    return "-" if v is None else f"{100.0 * v:.2f}"


def _row(report: RunReport, external_cols: list[str]) -> dict:
    attack = report.config.get("attack")
    sweep = report.sweep
    row = {
        "Model": Path(report.model["identity"]).name,
        "Run": attack["name"] if attack else f"sweep step={report.config['sweep']['step']}",
        "Clean Top1": _pct(report.clean.get("top1")),
        "Clean Top5": _pct(report.clean.get("top5")),
        "R.S. Top1": _pct(report.robust["top1"]) if report.robust else "-",
        "R.S. Top5": _pct(report.robust["top5"]) if report.robust else "-",
        "Sweep Min Top1": _pct(sweep.global_min_accuracy) if sweep else "-",
        "Argmin Alpha": f"{sweep.global_min_alpha:.2f}" if sweep else "-",
    }
    ext = report.external_scores or {}
    for col in external_cols:
        v = ext.get(col)
        row[col] = "-" if v is None else (f"{v:.2f}" if isinstance(v, (int, float)) else str(v))
    return row


def table_rows(reports: list[RunReport]) -> list[dict]:
    external_cols = []
    for r in reports:
        for col in r.external_scores or {}:
            if col not in external_cols:
                external_cols.append(col)
    return [_row(r, external_cols) for r in reports]


def render_table(reports: list[RunReport]) -> str:
    """Aligned plain-text table, one row per report, accuracies in percent."""
    rows = table_rows(reports)
    cols = list(rows[0])
    widths = {c: max(len(c), *(len(r[c]) for r in rows)) for c in cols}

    def fmt(values):
        cells = [values[c].ljust(widths[c]) if c in ("Model", "Run") else values[c].rjust(widths[c]) for c in cols]
        return " | ".join(cells).rstrip()

    lines = [fmt({c: c for c in cols}), "-+-".join("-" * widths[c] for c in cols)]
    lines += [fmt(r) for r in rows]
    return "\n".join(lines) + "\n"


def table_csv(reports: list[RunReport]) -> str:
    rows = table_rows(reports)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
