"""The five code-exploration functions the agent may invoke.

Tools are pure reads over an immutable (CodeIndex, Shortlist) pair. Every
call returns a ToolResult; nothing raises past the dispatcher, and whenever a
payload was produced through a fallback (case-insensitive match, substring
match, fuzzy recovery) the result's note says so.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

from .code_index import CodeIndex, SourceFileRecord
from .embedding import Shortlist
from .fuzzy import damerau_levenshtein, default_distance_cap, fuzzy_method_candidates

logger = logging.getLogger(__name__)

SEARCH_FILE = "search_file"
SEARCH_METHOD = "search_method"
GET_CANDIDATE_FILENAMES = "get_candidate_filenames"
GET_METHOD_SIGNATURES = "get_method_signatures_of_a_file"
GET_METHOD_BODY = "get_method_body"

TOOL_NAMES = frozenset(
    {SEARCH_FILE, SEARCH_METHOD, GET_CANDIDATE_FILENAMES, GET_METHOD_SIGNATURES, GET_METHOD_BODY}
)


@dataclass(frozen=True)
class ToolResult:
    ok: bool
    payload: str
    note: str | None = None

    def render(self) -> str:
        if self.note:
            return f"{self.payload}\n(note: {self.note})"
        return self.payload


class ToolRegistry:
    """Name -> callable bindings plus the argument schemas shown to the model.

    Only the five exploration tools are registrable; the candidate-filenames
    tool is simply absent when embeddings are disabled.
    """

    def __init__(self):
        self._bindings: dict[str, Callable[..., ToolResult]] = {}
        self._schemas: dict[str, dict] = {}

    def register(self, name: str, fn: Callable[..., ToolResult], schema: dict) -> None:
        if name not in TOOL_NAMES:
            raise ValueError(f"unknown tool name {name!r}")
        self._bindings[name] = fn
        self._schemas[name] = schema

    def names(self) -> list[str]:
        return sorted(self._bindings)

    def __contains__(self, name: str) -> bool:
        return name in self._bindings

    def schemas(self) -> list[dict]:
        return [self._schemas[name] for name in self.names()]

    def dispatch(self, name: str, arguments: dict) -> ToolResult:
        fn = self._bindings.get(name)
        if fn is None:
            return ToolResult(ok=False, payload=f"Tool '{name}' is not available in this run.")
        try:
            return fn(**arguments)
        except TypeError as exc:
            return ToolResult(ok=False, payload=f"Invalid arguments for '{name}': {exc}")
        except Exception as exc:  # tools must never raise past the dispatcher
            logger.exception("tool %s failed", name)
            return ToolResult(ok=False, payload=f"Tool '{name}' failed: {exc}")


def _match_files(index: CodeIndex, name: str) -> tuple[list[str], str | None]:
    """search_file cascade: exact basename, then case-insensitive basename,
    then substring of the full path. Returns (paths, fallback note)."""
    exact = sorted(p for p, r in index.files.items() if r.basename == name)
    if exact:
        return exact, None
    lowered = name.lower()
    ci = sorted(p for p, r in index.files.items() if r.basename.lower() == lowered)
    if ci:
        return ci, f"matched basename case-insensitively for '{name}'"
    sub = sorted(p for p in index.files if lowered in p.lower())
    if sub:
        return sub, f"matched '{name}' as a path substring"
    return [], None


def _overload_blocks(record: SourceFileRecord, method_name: str) -> list[str]:
    blocks = []
    for method in record.methods:
        if method.name == method_name:
            body = method.body if method.body else "<abstract method: no body>"
            blocks.append(f"{method.signature} in {record.fq_path}:\n{body}")
    return blocks


def make_tool_registry(
    index: CodeIndex,
    shortlist: Shortlist | None = None,
    include_candidate_tool: bool = True,
    fuzzy_n: int = 5,
    fuzzy_cap: int | None = None,
) -> ToolRegistry:
    registry = ToolRegistry()

    def search_file(name: str) -> ToolResult:
        paths, note = _match_files(index, name)
        if not paths:
            return ToolResult(ok=True, payload=f"No file matching '{name}' was found.")
        return ToolResult(ok=True, payload="\n".join(paths), note=note)

    def search_method(name: str) -> ToolResult:
        paths = index.method_locator.get(name)
        if paths:
            return ToolResult(ok=True, payload="\n".join(paths))
        candidates = fuzzy_method_candidates(name, index, n=fuzzy_n, cap=fuzzy_cap)
        if not candidates:
            return ToolResult(
                ok=True, payload=f"No method named '{name}' was found in the code base."
            )
        lines = [f"No exact definition of '{name}'. Closest method names:"]
        lines += [f"{cand} - {path}" for cand, path in candidates]
        return ToolResult(
            ok=True,
            payload="\n".join(lines),
            note=f"fuzzy-matched from '{name}'",
        )

    def get_candidate_filenames() -> ToolResult:
        if shortlist is None:
            return ToolResult(ok=False, payload="Candidate filenames are not available in this run.")
        paths = shortlist.paths()
        if not paths:
            return ToolResult(ok=True, payload="The candidate shortlist is empty.")
        return ToolResult(ok=True, payload="\n".join(paths))

    def resolve_file(fq_path: str) -> tuple[SourceFileRecord | None, str | None, list[str]]:
        record = index.files.get(fq_path)
        if record is not None:
            return record, None, []
        basename = fq_path.rsplit("/", 1)[-1]
        paths, note = _match_files(index, basename)
        if len(paths) == 1:
            return (
                index.files[paths[0]],
                f"'{fq_path}' not found; using basename match {paths[0]}",
                paths,
            )
        return None, note, paths

    def get_method_signatures_of_a_file(fq_path: str) -> ToolResult:
        record, note, near = resolve_file(fq_path)
        if record is None:
            if near:
                return ToolResult(
                    ok=True,
                    payload="Multiple files match that name:\n" + "\n".join(near),
                    note=f"'{fq_path}' not found; listing basename matches",
                )
            return ToolResult(ok=True, payload=f"No file matching '{fq_path}' was found.")
        if not record.parse_ok:
            return ToolResult(
                ok=True, payload=f"{record.fq_path} could not be parsed; no signatures available.",
                note=note,
            )
        if not record.methods:
            return ToolResult(ok=True, payload=f"{record.fq_path} defines no methods.", note=note)
        return ToolResult(
            ok=True, payload="\n".join(m.signature for m in record.methods), note=note
        )

    def body_from_file(record: SourceFileRecord, method: str, note: str | None) -> ToolResult:
        blocks = _overload_blocks(record, method)
        if blocks:
            return ToolResult(ok=True, payload="\n\n".join(blocks), note=note)
        names = sorted({m.name for m in record.methods})
        cap = fuzzy_cap if fuzzy_cap is not None else default_distance_cap(method)
        scored = sorted(
            (damerau_levenshtein(method, name), name) for name in names
        )
        near = [name for distance, name in scored if distance <= cap]
        if near:
            best = near[0]
            merged = f"fuzzy-matched '{method}' to '{best}'"
            if note:
                merged = f"{note}; {merged}"
            return ToolResult(
                ok=True, payload="\n\n".join(_overload_blocks(record, best)), note=merged
            )
        available = "\n".join(m.signature for m in record.methods) or "<none>"
        return ToolResult(
            ok=True,
            payload=(
                f"No method close to '{method}' in {record.fq_path}. "
                f"Available signatures:\n{available}"
            ),
            note=note,
        )

    def get_method_body(method: str, fq_path: str | None = None) -> ToolResult:
        if fq_path:
            record, note, near = resolve_file(fq_path)
            if record is None:
                if near:
                    return ToolResult(
                        ok=True,
                        payload="Multiple files match that name:\n" + "\n".join(near),
                        note=f"'{fq_path}' not found; listing basename matches",
                    )
                return ToolResult(ok=True, payload=f"No file matching '{fq_path}' was found.")
            return body_from_file(record, method, note)
        # Global lookup by method name.
        paths = index.method_locator.get(method)
        if paths:
            blocks = []
            for path in paths:
                blocks.extend(_overload_blocks(index.files[path], method))
            return ToolResult(ok=True, payload="\n\n".join(blocks))
        candidates = fuzzy_method_candidates(method, index, n=fuzzy_n, cap=fuzzy_cap)
        if not candidates:
            return ToolResult(
                ok=True, payload=f"No method named '{method}' was found in the code base."
            )
        best_name = candidates[0][0]
        blocks = []
        for _, path in [c for c in candidates if c[0] == best_name]:
            blocks.extend(_overload_blocks(index.files[path], best_name))
        return ToolResult(
            ok=True,
            payload="\n\n".join(blocks),
            note=f"fuzzy-matched '{method}' to '{best_name}'",
        )

    registry.register(
        SEARCH_FILE,
        search_file,
        {
            "name": SEARCH_FILE,
            "description": "Check whether a file exists in the code base and list the fully "
            "qualified paths of matches.",
            "parameters": {"name": {"type": "string", "description": "File name to look up."}},
            "required": ["name"],
        },
    )
    registry.register(
        SEARCH_METHOD,
        search_method,
        {
            "name": SEARCH_METHOD,
            "description": "Find which files define a method with the given name.",
            "parameters": {"name": {"type": "string", "description": "Method name to look up."}},
            "required": ["name"],
        },
    )
    if include_candidate_tool:
        registry.register(
            GET_CANDIDATE_FILENAMES,
            get_candidate_filenames,
            {
                "name": GET_CANDIDATE_FILENAMES,
                "description": "Retrieve the filenames most semantically similar to the bug "
                "report, as an initial candidate pool.",
                "parameters": {},
                "required": [],
            },
        )
    registry.register(
        GET_METHOD_SIGNATURES,
        get_method_signatures_of_a_file,
        {
            "name": GET_METHOD_SIGNATURES,
            "description": "List all method signatures defined in a file, in source order.",
            "parameters": {
                "fq_path": {"type": "string", "description": "Fully qualified file path."}
            },
            "required": ["fq_path"],
        },
    )
    registry.register(
        GET_METHOD_BODY,
        get_method_body,
        {
            "name": GET_METHOD_BODY,
            "description": "Retrieve the body of a method, optionally scoped to one file.",
            "parameters": {
                "method": {"type": "string", "description": "Method name."},
                "fq_path": {
                    "type": "string",
                    "description": "Optional fully qualified file path to search in.",
                },
            },
            "required": ["method"],
        },
    )
    return registry
