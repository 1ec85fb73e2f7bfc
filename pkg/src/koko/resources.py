"""Pluggable providers: descriptor expansion, dictionaries, decomposition.

Expansion turns a descriptor phrase into a scored set of alternates, the
original phrase always first at score 1.0. Three providers exist: the
identity (no alternates), a static TSV table, and a word-embedding
provider that swaps content words for their nearest neighbours and scores
each composed phrase as the product of the replaced words' similarities.

Sentence decomposition yields scored clauses with token alignment; the
built-ins are the identity decomposer and a heuristic splitter that cuts
at coordinating conjunctions, semicolons, and commas preceding relative
pronouns. A precomputed clause file (JSON) can stand in for either.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .corpus import Sentence
from .errors import KokoResourceError
from .vocab import STOPWORDS

MAX_EXPANSIONS = 10  # fixed number of expanded terms kept per descriptor


@dataclass(frozen=True)
class Expansion:
    words: tuple[str, ...]
    score: float


@dataclass(frozen=True)
class Clause:
    token_ids: tuple[int, ...]
    score: float


class DictionaryStore:
    def __init__(self) -> None:
        self._dicts: dict[str, set[str]] = {}

    def load(self, name: str, path: str) -> None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                entries = {line.rstrip("\n") for line in f if line.strip()}
        except OSError as exc:
            raise KokoResourceError(f"cannot read dictionary {name!r}: {exc}") from None
        self._dicts[name] = entries

    def add(self, name: str, entries: set[str]) -> None:
        self._dicts[name] = set(entries)

    def contains(self, name: str, value: str) -> bool:
        if name not in self._dicts:
            raise KokoResourceError(f"unknown dictionary {name!r}")
        return value in self._dicts[name]


class WordVectors:
    """Plain-text vectors, one ``word v1 v2 ...`` per line, unit-normalized."""

    def __init__(self, path: str):
        self.vectors: dict[str, list[float]] = {}
        try:
            f = open(path, "r", encoding="utf-8")
        except OSError as exc:
            raise KokoResourceError(f"cannot read vectors file: {exc}") from None
        with f:
            for line in f:
                parts = line.split()
                if len(parts) < 2:
                    continue
                vec = [float(x) for x in parts[1:]]
                norm = math.sqrt(sum(x * x for x in vec))
                if norm > 0:
                    vec = [x / norm for x in vec]
                self.vectors[parts[0]] = vec

    def cosine(self, a: str, b: str) -> float | None:
        va = self.vectors.get(a)
        vb = self.vectors.get(b)
        if va is None or vb is None:
            return None
        return sum(x * y for x, y in zip(va, vb))

    def neighbors(self, word: str, k: int) -> list[tuple[str, float]]:
        base = self.vectors.get(word)
        if base is None or k <= 0:
            return []
        scored = []
        for other, vec in self.vectors.items():
            if other == word:
                continue
            scored.append((other, sum(x * y for x, y in zip(base, vec))))
        scored.sort(key=lambda item: (-item[1], item[0]))
        return scored[:k]

    def phrase_vector(self, words: list[str]) -> list[float] | None:
        vecs = [self.vectors[w] for w in words if w in self.vectors]
        if not vecs:
            return None
        dim = len(vecs[0])
        mean = [sum(v[i] for v in vecs) / len(vecs) for i in range(dim)]
        norm = math.sqrt(sum(x * x for x in mean))
        if norm == 0:
            return None
        return [x / norm for x in mean]


def load_expansion_table(path: str) -> dict[str, list[Expansion]]:
    """TSV rows ``descriptor <tab> expansion <tab> score``."""
    table: dict[str, list[Expansion]] = {}
    try:
        f = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise KokoResourceError(f"cannot read expansion table: {exc}") from None
    with f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise KokoResourceError(
                    f"{path}:{lineno}: expected 3 tab-separated columns, got {len(cols)}"
                )
            score = float(cols[2])
            if not 0.0 < score <= 1.0:
                raise KokoResourceError(f"{path}:{lineno}: expansion score must be in (0, 1]")
            table.setdefault(cols[0], []).append(
                Expansion(tuple(cols[1].split()), score)
            )
    return table


@dataclass
class Resources:
    expansion_table: dict[str, list[Expansion]] | None = None
    vectors: WordVectors | None = None
    topk: int = 3
    max_expansions: int = MAX_EXPANSIONS
    dictionaries: DictionaryStore = field(default_factory=DictionaryStore)
    decomposer: str = "identity"  # identity | clauses | file
    clause_file: dict[int, list[Clause]] | None = None
    stopwords: frozenset[str] = STOPWORDS
    # How per-word similarities compose into a phrase score.
    combine: str = "product"  # product | min
    # How per-sentence proximity confidences aggregate per document.
    near_mode: str = "max"  # max | sum (sum is clamped to 1)
    _expand_cache: dict[str, list[Expansion]] = field(default_factory=dict)
    _decompose_cache: dict[int, list[Clause]] = field(default_factory=dict)

    # -- descriptor expansion ------------------------------------------------

    def expand(self, phrase: str) -> list[Expansion]:
        cached = self._expand_cache.get(phrase)
        if cached is None:
            cached = self._expand(phrase)
            self._expand_cache[phrase] = cached
        return cached

    def _expand(self, phrase: str) -> list[Expansion]:
        words = tuple(phrase.split())
        identity = Expansion(words, 1.0)
        if self.expansion_table is not None:
            rows = list(self.expansion_table.get(phrase, []))
            rows.sort(key=lambda e: (-e.score, e.words))
            out = [identity] + [e for e in rows if e.words != words]
            return out[: self.max_expansions + 1]
        if self.vectors is not None:
            return self._expand_embeddings(words, identity)
        return [identity]

    def _expand_embeddings(self, words: tuple[str, ...], identity: Expansion) -> list[Expansion]:
        options: list[list[tuple[str, float]]] = []
        for w in words:
            if w.lower() in self.stopwords or w not in self.vectors.vectors:
                options.append([(w, 1.0)])
            else:
                options.append([(w, 1.0)] + self.vectors.neighbors(w, self.topk))
        combos: list[Expansion] = []
        use_min = self.combine == "min"

        def walk(i: int, acc: list[str], score: float) -> None:
            if i == len(options):
                composed = tuple(acc)
                if composed != words:
                    combos.append(Expansion(composed, score))
                return
            for word, sim in options[i]:
                sim = max(0.0, min(1.0, sim))
                walk(i + 1, acc + [word], min(score, sim) if use_min else score * sim)

        walk(0, [], 1.0)
        combos = [c for c in combos if c.score > 0.0]
        combos.sort(key=lambda e: (-e.score, e.words))
        return [identity] + combos[: self.max_expansions]

    # -- phrase similarity -----------------------------------------------------

    def similarity(self, value: str, phrase: str) -> float:
        """How close a candidate string is to a query phrase, in [0, 1]."""
        if self.vectors is not None:
            va = self.vectors.phrase_vector(value.split())
            vb = self.vectors.phrase_vector(phrase.split())
            if va is None or vb is None:
                return 1.0 if value.lower() == phrase.lower() else 0.0
            return max(0.0, min(1.0, sum(x * y for x, y in zip(va, vb))))
        target = tuple(w.lower() for w in value.split())
        best = 1.0 if target == tuple(w.lower() for w in phrase.split()) else 0.0
        for e in self.expand(phrase):
            if tuple(w.lower() for w in e.words) == target:
                best = max(best, e.score)
        return best

    # -- dictionaries ------------------------------------------------------------

    def dict_contains(self, name: str, value: str) -> bool:
        return self.dictionaries.contains(name, value)

    # -- sentence decomposition ----------------------------------------------------

    def decompose(self, sentence: Sentence) -> list[Clause]:
        cached = self._decompose_cache.get(sentence.sid)
        if cached is None:
            cached = self._decompose(sentence)
            self._decompose_cache[sentence.sid] = cached
        return cached

    def _decompose(self, sentence: Sentence) -> list[Clause]:
        if self.decomposer == "file":
            if self.clause_file is None:
                raise KokoResourceError("decomposer 'file' needs a clause file")
            return self.clause_file.get(sentence.sid, [Clause(tuple(range(len(sentence))), 1.0)])
        if self.decomposer == "clauses":
            return _split_clauses(sentence)
        return [Clause(tuple(range(len(sentence))), 1.0)]


_COORDINATORS = {"and", "but", "or", "nor", "so", "yet"}
_RELATIVE_PRONOUNS = {"who", "whom", "whose", "which", "that", "where", "when"}


def _split_clauses(sentence: Sentence) -> list[Clause]:
    words = [t.text for t in sentence.tokens]
    boundaries: set[int] = set()
    for i, w in enumerate(words):
        lw = w.lower()
        if lw in _COORDINATORS or w == ";":
            boundaries.add(i)
        elif w == "," and i + 1 < len(words) and words[i + 1].lower() in _RELATIVE_PRONOUNS:
            boundaries.add(i)
    clauses: list[Clause] = []
    current: list[int] = []
    for i in range(len(words)):
        if i in boundaries:
            if current:
                clauses.append(Clause(tuple(current), 1.0))
                current = []
        else:
            current.append(i)
    if current:
        clauses.append(Clause(tuple(current), 1.0))
    return clauses or [Clause(tuple(range(len(sentence))), 1.0)]


def load_clause_file(path: str) -> dict[int, list[Clause]]:
    """JSON Lines: {"sid": n, "clauses": [{"tokens": [...], "score": s}]}"""
    out: dict[int, list[Clause]] = {}
    try:
        f = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise KokoResourceError(f"cannot read clause file: {exc}") from None
    with f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                out[int(row["sid"])] = [
                    Clause(tuple(int(t) for t in c["tokens"]), float(c.get("score", 1.0)))
                    for c in row["clauses"]
                ]
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise KokoResourceError(f"{path}:{lineno}: bad clause record: {exc}") from None
    return out
