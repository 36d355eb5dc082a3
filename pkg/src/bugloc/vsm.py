"""TF-IDF vector space model baseline.

Term weights are raw term frequency times ln(N/df); documents and the query
are compared by cosine similarity. Preprocessing is lowercase, the shared
tokenizer, and camelCase splitting - no stemming, no stop words.
"""

from __future__ import annotations

import logging
import math
from collections import Counter

from .tokens import camel_split, tokenize
from .validation import require_bug_text

logger = logging.getLogger(__name__)


def vsm_terms(text: str) -> list[str]:
    """Lowercased terms: word tokens split at camelCase boundaries,
    punctuation tokens kept as-is."""
    terms: list[str] = []
    for token in tokenize(text):
        if token[0].isalnum() or token[0] == "_":
            terms.extend(part.lower() for part in camel_split(token))
        else:
            terms.append(token)
    return terms


class VsmModel:
    """Precomputed TF-IDF corpus; queries score against it repeatedly."""

    def __init__(self, corpus: dict[str, str]):
        if not corpus:
            raise ValueError("VSM corpus must be non-empty")
        self.paths = sorted(corpus)
        n_docs = len(self.paths)
        doc_counts = {path: Counter(vsm_terms(corpus[path])) for path in self.paths}
        df = Counter()
        for counts in doc_counts.values():
            df.update(counts.keys())
        self.idf = {term: math.log(n_docs / count) for term, count in df.items()}
        self._doc_vectors: dict[str, dict[str, float]] = {}
        self._doc_norms: dict[str, float] = {}
        for path, counts in doc_counts.items():
            vec = {term: tf * self.idf[term] for term, tf in counts.items()}
            self._doc_vectors[path] = vec
            self._doc_norms[path] = math.sqrt(sum(w * w for w in vec.values()))

    def score(self, query_text: str) -> list[tuple[str, float]]:
        """All corpus files scored against the query, descending, ties broken
        by ascending path. An all-zero query vector yields all-zero scores."""
        query_counts = Counter(vsm_terms(query_text))
        query_vec = {
            term: tf * self.idf[term] for term, tf in query_counts.items() if term in self.idf
        }
        query_norm = math.sqrt(sum(w * w for w in query_vec.values()))
        if query_norm == 0.0:
            logger.warning(
                "query shares no weighted terms with the corpus; ranking is path order"
            )
            return [(path, 0.0) for path in self.paths]
        scores: list[tuple[str, float]] = []
        for path in self.paths:
            doc_vec = self._doc_vectors[path]
            doc_norm = self._doc_norms[path]
            if doc_norm == 0.0:
                scores.append((path, 0.0))
                continue
            dot = sum(weight * doc_vec.get(term, 0.0) for term, weight in query_vec.items())
            scores.append((path, dot / (query_norm * doc_norm)))
        scores.sort(key=lambda item: (-item[1], item[0]))
        return scores


def vsm_rank(bug, corpus: dict[str, str]) -> list[str]:
    """Rank every corpus file against the bug text."""
    text = require_bug_text(bug)
    return [path for path, _ in VsmModel(corpus).score(text)]
