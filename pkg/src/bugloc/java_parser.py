"""Grammar-based extraction of method declarations from source files.

Grammars are pluggable per language; the built-in one covers Java. It is a
single-pass lexer plus a brace-context scanner rather than a full parser:
file-level bug localization only needs method names, canonical signatures,
and verbatim bodies, attributed to the file they appear in (including
methods of nested and anonymous classes).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

logger = logging.getLogger(__name__)

_TYPE_KEYWORDS = {"class", "interface", "enum", "record"}

# Identifiers that can precede "(" without being a method name.
_NON_METHOD_NAMES = {
    "if", "while", "for", "switch", "catch", "synchronized", "do", "else",
    "try", "finally", "return", "new", "throw", "assert", "case", "break",
    "continue", "this", "super", "instanceof", "yield",
}

_WORD = "word"
_PUNCT = "punct"
_STR = "str"


class LexError(ValueError):
    """Source text cannot be tokenized (unterminated literal or comment)."""


@dataclass(frozen=True)
class ParsedMethod:
    name: str
    signature: str
    body: str
    abstract: bool = False


@dataclass
class ParseResult:
    methods: list[ParsedMethod]
    ok: bool


class Grammar:
    """Language front-end: which files to index and how to extract methods."""

    name: str = ""
    extensions: tuple[str, ...] = ()

    def parse(self, text: str) -> ParseResult:
        raise NotImplementedError


def _lex(text: str) -> list[tuple[str, str, int, int]]:
    """Tokenize to (kind, value, start, end); comments are dropped, string and
    char literals become single opaque tokens so braces inside them are inert."""
    toks: list[tuple[str, str, int, int]] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if c == "/" and i + 1 < n and text[i + 1] == "*":
            j = text.find("*/", i + 2)
            if j < 0:
                raise LexError("unterminated block comment")
            i = j + 2
            continue
        if c == '"':
            if text.startswith('"""', i):
                j = text.find('"""', i + 3)
                if j < 0:
                    raise LexError("unterminated text block")
                toks.append((_STR, text[i : j + 3], i, j + 3))
                i = j + 3
                continue
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == '"':
                    break
                if text[j] == "\n":
                    raise LexError("unterminated string literal")
                j += 1
            if j >= n:
                raise LexError("unterminated string literal")
            toks.append((_STR, text[i : j + 1], i, j + 1))
            i = j + 1
            continue
        if c == "'":
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == "'":
                    break
                if text[j] == "\n":
                    raise LexError("unterminated char literal")
                j += 1
            if j >= n:
                raise LexError("unterminated char literal")
            toks.append((_STR, text[i : j + 1], i, j + 1))
            i = j + 1
            continue
        if c.isalnum() or c == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append((_WORD, text[i:j], i, j))
            i = j
            continue
        toks.append((_PUNCT, c, i, i + 1))
        i += 1
    return toks


def _strip_annotations(seg: list[tuple[str, str, int, int]]) -> list[tuple[str, str, int, int]]:
    """Drop @Name and @Name(...) groups; keep '@interface' (a type keyword)."""
    out: list[tuple[str, str, int, int]] = []
    i = 0
    while i < len(seg):
        kind, val, _, _ = seg[i]
        if kind == _PUNCT and val == "@":
            if i + 1 < len(seg) and seg[i + 1][1] == "interface":
                out.append(seg[i])
                i += 1
                continue
            i += 1
            if i < len(seg) and seg[i][0] == _WORD:
                i += 1
                while i + 1 < len(seg) and seg[i][1] == "." and seg[i + 1][0] == _WORD:
                    i += 2
            if i < len(seg) and seg[i][1] == "(":
                depth = 1
                i += 1
                while i < len(seg) and depth:
                    if seg[i][1] == "(":
                        depth += 1
                    elif seg[i][1] == ")":
                        depth -= 1
                    i += 1
            continue
        out.append(seg[i])
        i += 1
    return out


def _has_type_keyword(seg: list[tuple[str, str, int, int]]) -> bool:
    # Depth is clamped at zero: a segment may begin mid-expression with
    # unmatched ")" tokens (e.g. after an annotation whose array argument
    # opened a brace context), and those must not hide a type keyword.
    depth = 0
    for kind, val, _, _ in seg:
        if kind == _PUNCT:
            if val == "(":
                depth += 1
            elif val == ")":
                depth = max(0, depth - 1)
        elif kind == _WORD and depth == 0 and val in _TYPE_KEYWORDS:
            return True
    return False


def _is_anonymous_class_header(seg: list[tuple[str, str, int, int]]) -> bool:
    """True for segments ending ``new Name ( ... )`` right before a '{'."""
    if not seg or seg[-1][1] != ")":
        return False
    depth = 0
    i = len(seg) - 1
    while i >= 0:
        val = seg[i][1]
        if val == ")":
            depth += 1
        elif val == "(":
            depth -= 1
            if depth == 0:
                break
        i -= 1
    if i <= 0:
        return False
    # Walk back over the (possibly dotted, possibly generic) type name.
    for j in range(i - 1, -1, -1):
        kind, val = seg[j][0], seg[j][1]
        if kind == _WORD:
            if val == "new":
                return True
        elif val not in (".", "<", ">", ","):
            return False
    return False


@dataclass
class _MethodHeader:
    name: str
    param_toks: list[tuple[str, str, int, int]]
    name_pos: int


def _match_method_header(
    seg: list[tuple[str, str, int, int]], terminator: str
) -> _MethodHeader | None:
    """Match ``[modifiers/type] name ( params ) [throws .../default ...]``.

    ``terminator`` is '{' for concrete methods and ';' for abstract ones.
    Field declarations are rejected via the depth-0 '=' guard.
    """
    seg = _strip_annotations(seg)
    if not seg:
        return None
    depth = 0
    for kind, val, _, _ in seg:
        if kind == _PUNCT:
            if val in "([":
                depth += 1
            elif val in ")]":
                depth = max(0, depth - 1)
            elif val == "=" and depth == 0:
                return None
    # Find the last top-level ")" and validate what follows it.
    close = None
    depth = 0
    for idx in range(len(seg) - 1, -1, -1):
        val = seg[idx][1]
        if val == ")":
            if depth == 0 and close is None:
                close = idx
            depth += 1
        elif val == "(":
            depth -= 1
    if close is None:
        return None
    suffix = seg[close + 1 :]
    if suffix:
        head = suffix[0][1]
        if head == "throws":
            if any(t[0] == _PUNCT and t[1] not in (",", ".") for t in suffix[1:]):
                return None
        elif head == "default" and terminator == ";":
            pass  # annotation member default value; anything may follow
        else:
            return None
    # Match close back to its "(".
    depth = 0
    open_idx = None
    for idx in range(close, -1, -1):
        val = seg[idx][1]
        if val == ")":
            depth += 1
        elif val == "(":
            depth -= 1
            if depth == 0:
                open_idx = idx
                break
    if open_idx is None or open_idx == 0:
        return None
    kind, name, start, _ = seg[open_idx - 1]
    if kind != _WORD or name in _NON_METHOD_NAMES or name in _TYPE_KEYWORDS:
        return None
    if name[0].isdigit():
        return None
    return _MethodHeader(name=name, param_toks=seg[open_idx + 1 : close], name_pos=start)


def _canonical_signature(name: str, param_toks: list[tuple[str, str, int, int]]) -> str:
    """``name(paramType1,paramType2,...)`` — type names only, whitespace collapsed."""
    params: list[list[tuple[str, str]]] = [[]]
    depth = 0
    for kind, val, _, _ in param_toks:
        if kind == _PUNCT:
            if val in "(<[":
                depth += 1
            elif val in ")>]":
                depth -= 1
            elif val == "," and depth == 0:
                params.append([])
                continue
        params[-1].append((kind, val))
    types: list[str] = []
    for toks in params:
        toks = [(k, v) for k, v in toks if not (k == _WORD and v == "final")]
        if not toks:
            continue
        # The parameter name is the last word token; anything after it
        # (trailing array brackets) belongs to the type.
        name_idx = None
        for idx in range(len(toks) - 1, -1, -1):
            if toks[idx][0] == _WORD:
                name_idx = idx
                break
        if name_idx is not None and name_idx > 0:
            toks = toks[:name_idx] + toks[name_idx + 1 :]
        rendered = ""
        prev_word = False
        for k, v in toks:
            is_word = k == _WORD
            if is_word and prev_word:
                rendered += " "
            rendered += v
            prev_word = is_word
        if rendered:
            types.append(rendered)
    return f"{name}({','.join(types)})"


@dataclass
class _Ctx:
    kind: str  # "type" | "method" | "block"
    enum_constants: bool = False
    header: _MethodHeader | None = None
    decl_start: int = -1  # offset of the declaration's first token


class JavaGrammar(Grammar):
    """Extracts Java method declarations (constructors included, initializers
    and field declarations excluded; nested/anonymous class methods attributed
    to the enclosing file)."""

    name = "java"

    def __init__(self, extensions: tuple[str, ...] = (".java",)):
        self.extensions = extensions

    def parse(self, text: str) -> ParseResult:
        try:
            toks = _lex(text)
        except LexError as exc:
            logger.debug("lex failure: %s", exc)
            return ParseResult([], ok=False)

        collected: list[tuple[int, ParsedMethod]] = []
        # The file root behaves like a type body so bare top-level methods
        # (common in fixtures and snippets) are still recognized.
        stack: list[_Ctx] = [_Ctx("type")]
        seg_start = 0
        paren_depth = 0

        for i, (kind, val, s, e) in enumerate(toks):
            if kind != _PUNCT:
                continue
            if val == "(":
                paren_depth += 1
                continue
            if val == ")":
                paren_depth -= 1
                if paren_depth < 0:
                    return ParseResult([], ok=False)
                continue
            if val not in "{};":
                continue
            seg = toks[seg_start:i]
            if val == "{":
                stack.append(self._classify(seg, stack[-1]))
            elif val == "}":
                if len(stack) == 1:
                    return ParseResult([], ok=False)
                ctx = stack.pop()
                if ctx.kind == "method" and ctx.header is not None:
                    body = text[ctx.decl_start : e]
                    sig = _canonical_signature(ctx.header.name, ctx.header.param_toks)
                    collected.append(
                        (ctx.decl_start, ParsedMethod(ctx.header.name, sig, body))
                    )
            else:  # ";"
                top = stack[-1]
                if top.kind == "type":
                    if top.enum_constants:
                        top.enum_constants = False
                    else:
                        header = _match_method_header(seg, terminator=";")
                        if header is not None:
                            sig = _canonical_signature(header.name, header.param_toks)
                            collected.append(
                                (
                                    header.name_pos,
                                    ParsedMethod(header.name, sig, "", abstract=True),
                                )
                            )
            seg_start = i + 1

        if len(stack) != 1 or paren_depth != 0:
            return ParseResult([], ok=False)
        collected.sort(key=lambda item: item[0])
        return ParseResult([m for _, m in collected], ok=True)

    def _classify(self, seg: list[tuple[str, str, int, int]], parent: _Ctx) -> _Ctx:
        if _has_type_keyword(seg):
            is_enum = any(k == _WORD and v == "enum" for k, v, _, _ in seg)
            return _Ctx("type", enum_constants=is_enum)
        if _is_anonymous_class_header(seg):
            return _Ctx("type")
        if parent.kind == "type":
            if parent.enum_constants:
                return _Ctx("type")  # enum constant body
            header = _match_method_header(seg, terminator="{")
            if header is not None:
                # Skip stray ")" left over from an annotation whose array
                # argument opened its own brace context.
                start_idx = 0
                while start_idx < len(seg) and seg[start_idx][1] == ")":
                    start_idx += 1
                return _Ctx("method", header=header, decl_start=seg[start_idx][2])
        return _Ctx("block")


_GRAMMARS: dict[str, Grammar] = {JavaGrammar.name: JavaGrammar()}


def get_grammar(name: str) -> Grammar:
    try:
        return _GRAMMARS[name]
    except KeyError:
        raise ValueError(
            f"unsupported grammar {name!r}; available: {sorted(_GRAMMARS)}"
        ) from None


def register_grammar(grammar: Grammar) -> None:
    _GRAMMARS[grammar.name] = grammar
