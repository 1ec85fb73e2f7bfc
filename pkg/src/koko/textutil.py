"""Regex-subset compilation and token-level string helpers.

All regular expressions accepted by the query language pass through
``compile_pattern`` so the same conservative dialect applies everywhere:
literals, ``.``, character classes, ``()`` groups, ``|`` alternation,
``* + ?`` and ``{m,n}`` quantifiers, ``^ $`` anchors and plain escapes.
Backreferences, lookaround and named groups are rejected.
"""

from __future__ import annotations

import re
from functools import lru_cache

from .errors import KokoQueryError

_ALLOWED_ESCAPES = set("dDwWsSbB\\.^$*+?()[]{}|/'\"- tnr0123456789")
_FORBIDDEN = re.compile(r"\(\?|\\[1-9]")


def _check_dialect(pattern: str) -> None:
    if _FORBIDDEN.search(pattern):
        raise KokoQueryError(
            f"regex {pattern!r} uses a construct outside the supported dialect"
        )
    i = 0
    while i < len(pattern):
        ch = pattern[i]
        if ch == "\\":
            if i + 1 >= len(pattern) or pattern[i + 1] not in _ALLOWED_ESCAPES:
                raise KokoQueryError(f"regex {pattern!r} has an unsupported escape at {i}")
            i += 2
        else:
            i += 1


@lru_cache(maxsize=4096)
def compile_pattern(pattern: str) -> re.Pattern[str]:
    _check_dialect(pattern)
    try:
        return re.compile(pattern)
    except re.error as exc:
        raise KokoQueryError(f"invalid regex {pattern!r}: {exc}") from None


def full_match(pattern: str, text: str) -> bool:
    return compile_pattern(pattern).fullmatch(text) is not None


_PUNCT = set(",.!?;:()[]{}\"'")


def tokenize_literal(text: str) -> list[str]:
    """Split a query literal the way the corpus tokenizer would have.

    Whitespace separates tokens; leading and trailing punctuation
    characters become their own tokens, so ", a cafe" aligns with corpus
    token sequences like [,][a][cafe].
    """
    out: list[str] = []
    for chunk in text.split():
        start = 0
        end = len(chunk)
        lead: list[str] = []
        while start < end and chunk[start] in _PUNCT:
            lead.append(chunk[start])
            start += 1
        trail: list[str] = []
        while end > start and chunk[end - 1] in _PUNCT:
            trail.append(chunk[end - 1])
            end -= 1
        out.extend(lead)
        if end > start:
            out.append(chunk[start:end])
        out.extend(reversed(trail))
    return out


def find_token_seq(haystack: list[str], needle: list[str], *, fold_case: bool = False) -> list[int]:
    """Start offsets of every contiguous occurrence of needle in haystack."""
    if not needle:
        return []
    if fold_case:
        haystack = [w.lower() for w in haystack]
        needle = [w.lower() for w in needle]
    n, m = len(haystack), len(needle)
    return [i for i in range(n - m + 1) if haystack[i : i + m] == needle]


def subsequence_positions(
    words: list[str], phrase: list[str], *, fold_case: bool = True
) -> list[int] | None:
    """Leftmost in-order match of phrase within words, gaps allowed.

    Returns the matched indices or None. Matching is case-insensitive by
    default, which is how descriptor phrases are compared.
    """
    if not phrase:
        return None
    if fold_case:
        words = [w.lower() for w in words]
        phrase = [w.lower() for w in phrase]
    out: list[int] = []
    i = 0
    for target in phrase:
        while i < len(words) and words[i] != target:
            i += 1
        if i == len(words):
            return None
        out.append(i)
        i += 1
    return out
