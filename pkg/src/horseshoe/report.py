"""Report documents: JSON with outward-rounded decimal enclosures, optional CSV."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from .errors import Status
from .interval import Box, Interval, fmt_hi, fmt_lo

EXIT_OK = 0
EXIT_FALSIFIED = 2
EXIT_INCONCLUSIVE = 3
EXIT_USAGE = 4


def jsonable(obj: Any) -> Any:
    """Convert library objects into plain JSON values.

    Intervals become [lo, hi] decimal strings rounded outward, so a parsed
    report still encloses the computed sets.
    """
    if isinstance(obj, Interval):
        return [fmt_lo(obj.lo), fmt_hi(obj.hi)]
    if isinstance(obj, Box):
        return [jsonable(c) for c in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return jsonable({f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)})
    if isinstance(obj, float) and obj != obj:
        return "nan"
    return obj


def file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class Check:
    name: str
    kind: str
    status: Status
    detail: Any = None
    enclosures: list[tuple[str, Box]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "status": self.status.value, "detail": jsonable(self.detail)}


def overall(checks: list[Check]) -> tuple[Status, int]:
    statuses = [c.status for c in checks]
    if Status.FALSIFIED in statuses:
        return Status.FALSIFIED, EXIT_FALSIFIED
    if Status.INCONCLUSIVE in statuses or not statuses:
        return Status.INCONCLUSIVE, EXIT_INCONCLUSIVE
    return Status.CERTIFIED, EXIT_OK


@dataclass
class Report:
    tool: str
    version: str
    command: str
    config_hash: str
    job: dict
    options: dict
    checks: list[Check]
    timing: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        status, code = overall(self.checks)
        return {
            "tool": self.tool,
            "version": self.version,
            "command": self.command,
            "config_hash": self.config_hash,
            "job": jsonable(self.job),
            "options": jsonable(self.options),
            "checks": [c.to_dict() for c in self.checks],
            "status": status.value,
            "exit_code": code,
            "timing": self.timing,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=str) + "\n"

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "label", "axis", "lo", "hi"])
        for c in self.checks:
            for label, box in c.enclosures:
                for axis, comp in enumerate(box):
                    w.writerow([c.name, label, axis, fmt_lo(comp.lo), fmt_hi(comp.hi)])
        return buf.getvalue()
