"""Benchmark dataset loading and chronological splitting.

The normalized format is line-delimited JSON, one bug per line. An ingestion
adapter converts the published benchmark's tab-separated layout.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .ioutil import atomic_write_text
from .metrics import DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BugReport:
    bug_id: str
    summary: str
    description: str
    version_id: str  # pre-fix repository version
    ground_truth: tuple[str, ...] = ()  # evaluation only
    report_time: float | None = None  # epoch seconds


def _parse_time(value) -> float | None:
    if value is None or value == "":
        return None
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    try:
        return float(text)
    except ValueError:
        pass
    for fmt in ("%Y-%m-%d %H:%M:%S", "%Y-%m-%d"):
        try:
            return datetime.strptime(text, fmt).replace(tzinfo=timezone.utc).timestamp()
        except ValueError:
            continue
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError:
        raise DataError(f"unparseable report_time: {value!r}") from None
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.timestamp()


def bug_from_dict(raw: dict) -> BugReport:
    try:
        return BugReport(
            bug_id=str(raw["bug_id"]),
            summary=raw.get("summary", "") or "",
            description=raw.get("description", "") or "",
            version_id=str(raw.get("version_id", "")),
            ground_truth=tuple(sorted(raw.get("ground_truth", []) or [])),
            report_time=_parse_time(raw.get("report_time")),
        )
    except KeyError as exc:
        raise DataError(f"bug record missing field {exc}") from None


def load_bug_reports(path: str | Path) -> list[BugReport]:
    bugs: list[BugReport] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{line_no}: invalid JSON: {exc}") from None
            bug = bug_from_dict(raw)
            if bug.bug_id in seen:
                raise DataError(f"{path}:{line_no}: duplicate bug_id {bug.bug_id}")
            seen.add(bug.bug_id)
            bugs.append(bug)
    return bugs


def save_bug_reports(bugs: list[BugReport], path: str | Path) -> None:
    lines = [
        json.dumps(
            {
                "bug_id": bug.bug_id,
                "summary": bug.summary,
                "description": bug.description,
                "version_id": bug.version_id,
                "ground_truth": list(bug.ground_truth),
                "report_time": bug.report_time,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        for bug in bugs
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")


def ingest_benchmark_tsv(path: str | Path) -> list[BugReport]:
    """Convert the published benchmark's tab-separated layout.

    Expected columns include bug_id, summary, description, report_timestamp
    (or report_time), commit (used as version_id), and files (whitespace or
    newline separated fixed-file paths).
    """
    bugs: list[BugReport] = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle, delimiter="\t")
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty dataset file")
        for row in reader:
            files = tuple(sorted((row.get("files") or "").split()))
            bugs.append(
                BugReport(
                    bug_id=str(row.get("bug_id") or row.get("id") or "").strip(),
                    summary=(row.get("summary") or "").strip(),
                    description=(row.get("description") or "").strip(),
                    version_id=(row.get("commit") or "").strip(),
                    ground_truth=files,
                    report_time=_parse_time(
                        row.get("report_timestamp") or row.get("report_time")
                    ),
                )
            )
    return bugs


def split_chronological(
    bugs: list[BugReport], train_fraction: float = 0.6
) -> tuple[list[BugReport], list[BugReport]]:
    """Oldest train_fraction of bugs become historical data; the most recent
    remainder is the evaluation set. Ties break by bug_id."""
    if not 0.0 <= train_fraction <= 1.0:
        raise ValueError("train_fraction must be in [0, 1]")
    for bug in bugs:
        if bug.report_time is None:
            raise DataError(f"bug {bug.bug_id} has no report_time; cannot split")
    ordered = sorted(bugs, key=lambda b: (b.report_time, b.bug_id))
    # ceil, with float noise rounded away first so exact fractions stay exact
    n_hist = math.ceil(round(len(ordered) * train_fraction, 9))
    return ordered[:n_hist], ordered[n_hist:]
