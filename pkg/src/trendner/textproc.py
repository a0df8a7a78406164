"""Tokenization, normalization, stop-word filtering, and n-gram extraction.

Everything here is a pure function of its inputs, so the same token forms
are seen by trend counting, feature extraction, and the corpus readers.
"""

from __future__ import annotations

import re
import string
import unicodedata
from collections import Counter
from importlib import resources
from pathlib import Path
from typing import Container, Iterable, Iterator, Sequence

Ngram = tuple[str, ...]

URL_TOKEN = "<URL>"

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_OR_HASHTAG_RE = re.compile(r"[@#]\w")
_ASCII_PUNCT = frozenset(string.punctuation)


def _is_punct(ch: str) -> bool:
    return ch in _ASCII_PUNCT or unicodedata.category(ch).startswith("P")


def _split_chunk(chunk: str) -> Iterator[str]:
    # Peel punctuation off both ends, keeping @mentions/#hashtags and the
    # URL placeholder whole; each peeled character is its own token.
    if chunk == URL_TOKEN:
        yield URL_TOKEN
        return
    lead: list[str] = []
    trail: list[str] = []
    while chunk and _is_punct(chunk[0]) and not _MENTION_OR_HASHTAG_RE.match(chunk):
        lead.append(chunk[0])
        chunk = chunk[1:]
    while chunk and _is_punct(chunk[-1]):
        trail.append(chunk[-1])
        chunk = chunk[:-1]
    yield from lead
    if chunk:
        yield chunk.lower()
    yield from reversed(trail)


def tokenize(text: str) -> list[str]:
    """Split raw text into normalized tokens.

    Lowercases, splits on whitespace, separates leading/trailing punctuation
    into their own tokens, collapses URL-shaped substrings to ``<URL>``, and
    keeps ``@mention`` / ``#hashtag`` forms as single tokens. Idempotent
    under whitespace re-joining and fully deterministic.
    """
    tokens: list[str] = []
    for chunk in _URL_RE.sub(f" {URL_TOKEN} ", text).split():
        tokens.extend(_split_chunk(chunk))
    return tokens


def normalize_token(token: str) -> str:
    """Normalize one already-tokenized unit without splitting it.

    Used for pre-tokenized corpora where token counts must be preserved.
    """
    if token == URL_TOKEN:
        return token
    if _URL_RE.fullmatch(token):
        return URL_TOKEN
    return token.lower()


class StopwordSet:
    """Stop-word membership with case-insensitive lookup."""

    def __init__(self, words: Iterable[str]):
        self._words = frozenset(w.lower() for w in words)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self._words

    def __len__(self) -> int:
        return len(self._words)

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._words))

    def __repr__(self) -> str:
        return f"StopwordSet({len(self._words)} words)"

    @classmethod
    def from_file(cls, path: str | Path) -> "StopwordSet":
        """Read one word per line; ``#``-prefixed lines and blanks are ignored."""
        words = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                words.append(line)
        return cls(words)

    @classmethod
    def default(cls) -> "StopwordSet":
        """The bundled English stop-word list."""
        text = resources.files("trendner").joinpath("data/stopwords.txt").read_text("utf-8")
        words = [w.strip() for w in text.splitlines() if w.strip() and not w.startswith("#")]
        return cls(words)


_EMPTY_STOPWORDS = StopwordSet(())


def extract_ngrams(
    tokens: Sequence[str],
    n: int,
    stopwords: Container[str] = _EMPTY_STOPWORDS,
) -> Counter[Ngram]:
    """All contiguous length-``n`` windows, with multiplicity.

    Windows containing at least one stop word are dropped entirely rather
    than having the stop word deleted first, so no artificial n-grams are
    manufactured across removed words.
    """
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    grams: Counter[Ngram] = Counter()
    for i in range(len(tokens) - n + 1):
        window = tuple(tokens[i : i + n])
        if any(tok in stopwords for tok in window):
            continue
        grams[window] += 1
    return grams
