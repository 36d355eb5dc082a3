"""Deterministic text tokenization shared by chunking, retrieval, and the VSM baseline.

The token rule is provider-independent so that chunk boundaries and term
statistics never depend on a remote embedding model's subword scheme.
"""

from __future__ import annotations

import re

# Maximal runs of ASCII alphanumerics/underscore are one token; any other
# non-whitespace character is a token by itself; whitespace is discarded.
_TOKEN_RE = re.compile(r"[A-Za-z0-9_]+|[^\sA-Za-z0-9_]")

# camelCase / PascalCase / ACRONYMWord / digit-run boundaries.
_CAMEL_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")


def tokenize(text: str) -> list[str]:
    """Split text into word and single-character punctuation tokens."""
    return _TOKEN_RE.findall(text)


def token_spans(text: str) -> list[tuple[int, int]]:
    """Return (start, end) character offsets of each token, in order.

    Offsets align with :func:`tokenize`; slicing the text at a boundary
    between two spans never cuts through a token.
    """
    return [m.span() for m in _TOKEN_RE.finditer(text)]


def camel_split(word: str) -> list[str]:
    """Break a word at case and digit boundaries: ``HTMLPageLM`` -> HTML, Page, LM.

    Underscores and other non-alphanumerics inside the word are dropped.
    """
    return _CAMEL_RE.findall(word)
