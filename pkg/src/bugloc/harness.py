"""Drives localization per bug at the right repository version and aggregates
repeated runs into evaluation reports.

Repository layout: either a versions root whose subdirectories are named by
version_id, or a single source tree used for every version. Indexes are
cached per version and later versions are built incrementally from the most
recently built one.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .code_index import CodeIndex, build_index, diff_source_trees, load_code_index, save_code_index, update_index
from .embedders import EmbeddingProvider
from .embedding import (
    EmbeddingIndex,
    EmbeddingUpdateError,
    build_embedding_index,
    load_embedding_index,
    save_embedding_index,
    update_embeddings,
)
from .dataset import BugReport
from .ioutil import SCHEMA_VERSION, atomic_write_json, atomic_write_text
from .localizers import BaseLocalizer, LocalizationFailure
from .metrics import DataError, EvalReport, LocalizationResult, aggregate_runs, build_report

logger = logging.getLogger(__name__)


class VersionStore:
    """Builds, caches, and persists (CodeIndex, EmbeddingIndex) per version."""

    def __init__(
        self,
        repo_root: str | Path,
        grammar: str = "java",
        embedding_provider: EmbeddingProvider | None = None,
        cache_dir: str | Path | None = None,
        chunk_limit: int = 300,
    ):
        self.repo_root = Path(repo_root)
        self.grammar = grammar
        self.embedding_provider = embedding_provider
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.chunk_limit = chunk_limit
        self._built: dict[str, tuple[CodeIndex, EmbeddingIndex | None]] = {}
        self._last_version: str | None = None
        self._warned_flat = False

    def resolve_tree(self, version_id: str) -> Path:
        candidate = self.repo_root / version_id
        if version_id and candidate.is_dir():
            return candidate
        if not self._warned_flat:
            logger.info(
                "no per-version subdirectory for %r; using %s for every version",
                version_id,
                self.repo_root,
            )
            self._warned_flat = True
        return self.repo_root

    def _archive_paths(self, version_id: str) -> tuple[Path, Path] | None:
        if self.cache_dir is None:
            return None
        safe = version_id.replace("/", "_") or "_"
        return self.cache_dir / f"{safe}.code.jsonl", self.cache_dir / f"{safe}.embed.jsonl"

    def get(self, version_id: str) -> tuple[CodeIndex, EmbeddingIndex | None]:
        if version_id in self._built:
            return self._built[version_id]
        archives = self._archive_paths(version_id)
        if archives and archives[0].exists():
            code = load_code_index(archives[0])
            embed = None
            if self.embedding_provider is not None and archives[1].exists():
                embed = load_embedding_index(archives[1])
            if embed is not None or self.embedding_provider is None:
                self._built[version_id] = (code, embed)
                self._last_version = version_id
                return code, embed

        tree = self.resolve_tree(version_id)
        previous = self._built.get(self._last_version) if self._last_version else None
        if previous is not None:
            prev_tree = self.resolve_tree(self._last_version)
            if prev_tree == tree:
                # Same tree on disk: relabel rather than rebuild.
                code = CodeIndex(
                    version_id=version_id,
                    files=previous[0].files,
                    method_locator=previous[0].method_locator,
                )
                self._store(version_id, code, previous[1], archives)
                return code, previous[1]
            changeset = diff_source_trees(prev_tree, tree)
            code = update_index(previous[0], changeset, tree, version_id, self.grammar)
            embed = None
            if self.embedding_provider is not None:
                if previous[1] is not None:
                    try:
                        embed = update_embeddings(
                            previous[1], changeset, code, self.embedding_provider, self.chunk_limit
                        )
                    except EmbeddingUpdateError as exc:
                        logger.error("partial embedding update for %s: %s", version_id, exc)
                        embed = exc.partial_index
                else:
                    embed = build_embedding_index(code, self.embedding_provider, self.chunk_limit)
            self._store(version_id, code, embed, archives)
            return code, embed

        code = build_index(tree, self.grammar, version_id)
        embed = None
        if self.embedding_provider is not None:
            embed = build_embedding_index(code, self.embedding_provider, self.chunk_limit)
        self._store(version_id, code, embed, archives)
        return code, embed

    def _store(self, version_id, code, embed, archives) -> None:
        self._built[version_id] = (code, embed)
        self._last_version = version_id
        if archives:
            save_code_index(code, archives[0], self.grammar)
            if embed is not None:
                save_embedding_index(embed, archives[1])


@dataclass
class RunOutcome:
    report: EvalReport
    run_reports: list[EvalReport]
    failures: list[dict] = field(default_factory=list)  # bug_id, run_id, reason
    transcripts: list = field(default_factory=list)


def evaluate_technique(
    bugs: list[BugReport],
    make_localizer,
    store: VersionStore,
    technique: str,
    runs: int = 3,
    workers: int = 1,
) -> RunOutcome:
    """Localize every bug `runs` times and aggregate.

    `make_localizer` is a zero-argument factory; one instance is fitted per
    repository version and reused across that version's bugs. A per-bug
    failure is recorded as an empty ranked list (a miss), never a crash.
    """
    if not bugs:
        raise DataError("no bugs to evaluate")
    for bug in bugs:
        if not bug.ground_truth:
            raise DataError(f"bug {bug.bug_id} has no ground truth; cannot evaluate")
    ground_truths = {bug.bug_id: set(bug.ground_truth) for bug in bugs}

    fitted: dict[str, BaseLocalizer] = {}

    def localizer_for(version_id: str) -> BaseLocalizer:
        if version_id not in fitted:
            code, embed = store.get(version_id)
            fitted[version_id] = make_localizer().fit(code, embed)
        return fitted[version_id]

    # Fit sequentially so incremental index builds stay ordered.
    for bug in bugs:
        localizer_for(bug.version_id)

    failures: list[dict] = []
    transcripts: list = []
    run_reports: list[EvalReport] = []
    for run_id in range(1, runs + 1):

        def localize(bug: BugReport) -> LocalizationResult:
            localizer = localizer_for(bug.version_id)
            try:
                paths = localizer.predict(bug)
            except LocalizationFailure as exc:
                failures.append({"bug_id": bug.bug_id, "run_id": run_id, "reason": str(exc)})
                paths = []
            except Exception as exc:
                logger.exception("bug %s failed in run %d", bug.bug_id, run_id)
                failures.append({"bug_id": bug.bug_id, "run_id": run_id, "reason": str(exc)})
                paths = []
            return LocalizationResult.from_ranking(
                bug.bug_id, technique, run_id, paths, ground_truths[bug.bug_id]
            )

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(localize, bugs))
        else:
            results = [localize(bug) for bug in bugs]
        run_reports.append(build_report(results, ground_truths, technique))

    for localizer in fitted.values():
        transcripts.extend(getattr(localizer, "transcripts_", []))
    report = aggregate_runs(run_reports)
    return RunOutcome(report=report, run_reports=run_reports, failures=failures, transcripts=transcripts)


def report_to_dict(report: EvalReport, failures: list[dict] | None = None) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "technique": report.technique,
        "accuracy_at": {str(k): v for k, v in sorted(report.accuracy_at.items())},
        "mrr_at_10": report.mrr_at_10,
        "map_at_10": report.map_at_10,
        "per_bug": [
            {
                "bug_id": r.bug_id,
                "technique": r.technique,
                "run_id": r.run_id,
                "ranked_paths": list(r.ranked_paths),
                "first_hit_rank": r.first_hit_rank,
            }
            for r in report.per_bug
        ],
    }
    if failures is not None:
        out["failures"] = failures
        attempts = len(report.per_bug)
        out["coverage"] = 1.0 if attempts == 0 else (attempts - len(failures)) / attempts
    return out


def report_from_dict(raw: dict) -> EvalReport:
    return EvalReport(
        technique=raw["technique"],
        accuracy_at={int(k): v for k, v in raw["accuracy_at"].items()},
        mrr_at_10=raw["mrr_at_10"],
        map_at_10=raw["map_at_10"],
        per_bug=[
            LocalizationResult(
                bug_id=r["bug_id"],
                technique=r["technique"],
                run_id=r["run_id"],
                ranked_paths=tuple(r["ranked_paths"]),
                first_hit_rank=r["first_hit_rank"],
            )
            for r in raw.get("per_bug", [])
        ],
    )


def format_report_table(reports: list[EvalReport]) -> str:
    """Human-readable table: Technique | Accuracy@1/@5/@10 (%) | MAP@10 | MRR@10."""
    header = f"{'Technique':<16} {'Acc@1':>8} {'Acc@5':>8} {'Acc@10':>8} {'MAP@10':>8} {'MRR@10':>8}"
    lines = [header, "-" * len(header)]
    for report in reports:
        lines.append(
            f"{report.technique:<16} "
            f"{100 * report.accuracy_at.get(1, 0.0):>7.2f}% "
            f"{100 * report.accuracy_at.get(5, 0.0):>7.2f}% "
            f"{100 * report.accuracy_at.get(10, 0.0):>7.2f}% "
            f"{report.map_at_10:>8.4f} "
            f"{report.mrr_at_10:>8.4f}"
        )
    return "\n".join(lines)


def write_report_files(
    report: EvalReport, out_dir: str | Path, failures: list[dict] | None = None
) -> tuple[Path, Path]:
    out = Path(out_dir)
    json_path = out / f"report-{report.technique}.json"
    table_path = out / f"report-{report.technique}.txt"
    atomic_write_json(json_path, report_to_dict(report, failures))
    atomic_write_text(table_path, format_report_table([report]) + "\n")
    return json_path, table_path
