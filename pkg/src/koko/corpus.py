"""Annotated-corpus data model and the TSV reader/writer.

The corpus is a sequence of documents, each a sequence of sentences whose
tokens carry a POS tag, a dependency parse label, a head link and an
optional IOB2 entity tag. Sentence ids are global across the corpus.

File format (UTF-8, one token per line, tab separated)::

    SID  TID  TEXT  POS  LABEL  HEAD  ETYPE

HEAD is the parent token id or -1 for the root. ETYPE is ``O`` or
``B-<Type>`` / ``I-<Type>``. A blank line ends a sentence and a line of the
form ``# doc_id = <id>`` opens a new document. Other ``#`` lines are
comments and are dropped on read.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import KokoInputError


class PostingEntry(NamedTuple):
    """Index unit: sentence id, token id, subtree extent and tree depth."""

    sid: int
    tid: int
    left: int
    right: int
    depth: int

    def pretty(self) -> str:
        return f"({self.sid},{self.tid},{self.left}-{self.right},{self.depth})"


class Span(NamedTuple):
    """Contiguous token run, inclusive on both ends; end < start is empty."""

    sid: int
    start: int
    end: int

    def __len__(self) -> int:
        return max(0, self.end - self.start + 1)

    def contains(self, other: "Span") -> bool:
        return self.sid == other.sid and self.start <= other.start and self.end >= other.end


@dataclass(frozen=True, slots=True)
class Token:
    sid: int
    tid: int
    text: str
    pos: str
    label: str
    head: int | None
    etype: str | None = None
    # IOB2 marker ("B" or "I") kept so adjacent same-typed entities stay
    # distinguishable; None whenever etype is None.
    iob: str | None = None


@dataclass(frozen=True, slots=True)
class EntitySpan:
    sid: int
    start: int
    end: int
    etype: str
    surface: str

    @property
    def span(self) -> Span:
        return Span(self.sid, self.start, self.end)


@dataclass(slots=True)
class TreeMeta:
    """Per-token subtree extents and depths; root depth is 0."""

    left: list[int]
    right: list[int]
    depth: list[int]


@dataclass(slots=True)
class Sentence:
    sid: int
    tokens: list[Token]
    root_tid: int = -1
    # Derived, filled by finalize(): adjacency, extents, depths, entities.
    children: list[list[int]] = field(default_factory=list)
    meta: TreeMeta | None = None
    entities: list[EntitySpan] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.text for t in self.tokens]

    def posting(self, tid: int) -> PostingEntry:
        m = self.meta
        return PostingEntry(self.sid, tid, m.left[tid], m.right[tid], m.depth[tid])

    def text(self, start: int = 0, end: int | None = None) -> str:
        """Detokenized surface text of tokens start..end inclusive."""
        if end is None:
            end = len(self.tokens) - 1
        return detokenize(t.text for t in self.tokens[start : end + 1])

    def ancestors(self, tid: int) -> Iterable[int]:
        """Proper ancestors of tid, nearest first."""
        head = self.tokens[tid].head
        while head is not None:
            yield head
            head = self.tokens[head].head

    def finalize(self) -> None:
        self.children = [[] for _ in self.tokens]
        for t in self.tokens:
            if t.head is not None:
                self.children[t.head].append(t.tid)
        self.meta = compute_tree_meta(self)
        self.entities = entity_spans(self)


@dataclass(slots=True)
class AnnotatedDocument:
    doc_id: str
    sentences: list[Sentence] = field(default_factory=list)


class Corpus:
    """Loaded documents plus flat, sid-addressable sentence access."""

    def __init__(self, documents: list[AnnotatedDocument]):
        self.documents = documents
        self.sentences: list[Sentence] = []
        self._doc_index: list[int] = []
        for i, doc in enumerate(documents):
            for s in doc.sentences:
                if s.sid != len(self.sentences):
                    raise KokoInputError(
                        f"sentence ids must be contiguous from 0; found sid {s.sid} "
                        f"at position {len(self.sentences)} (doc {doc.doc_id})"
                    )
                self.sentences.append(s)
                self._doc_index.append(i)

    def __len__(self) -> int:
        return len(self.sentences)

    def sentence(self, sid: int) -> Sentence:
        return self.sentences[sid]

    def document_of(self, sid: int) -> AnnotatedDocument:
        return self.documents[self._doc_index[sid]]

    def doc_index_of(self, sid: int) -> int:
        return self._doc_index[sid]

    def doc_sids(self, doc: AnnotatedDocument) -> list[int]:
        return [s.sid for s in doc.sentences]

    @property
    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)


# Punctuation that attaches to the previous token when spans are rendered
# back to plain text.
_NO_SPACE_BEFORE = {",", ".", "!", "?", ";", ":", ")", "]", "}", "%", "'s", "n't", "''"}
_NO_SPACE_AFTER = {"(", "[", "{", "``", "$"}


def detokenize(tokens: Iterable[str]) -> str:
    out: list[str] = []
    for tok in tokens:
        if out and tok not in _NO_SPACE_BEFORE and out[-1] not in _NO_SPACE_AFTER:
            out.append(" ")
        out.append(tok)
    return "".join(out)


def compute_tree_meta(sentence: Sentence) -> TreeMeta:
    """Subtree extents (min/max tid over the subtree) and root distances.

    Extents are min/max over subtree token ids even for non-projective
    sentences, where the containment tests they feed become
    over-approximate; exact answers are restored by the validation stage,
    which walks real head links.
    """
    n = len(sentence.tokens)
    children: list[list[int]] = [[] for _ in range(n)]
    root = -1
    for t in sentence.tokens:
        if t.head is None:
            root = t.tid
        else:
            children[t.head].append(t.tid)
    left = list(range(n))
    right = list(range(n))
    depth = [0] * n
    # Iterative DFS; post-order pass folds child extents into parents.
    order: list[int] = []
    stack = [root]
    while stack:
        tid = stack.pop()
        order.append(tid)
        for c in children[tid]:
            depth[c] = depth[tid] + 1
            stack.append(c)
    for tid in reversed(order):
        head = sentence.tokens[tid].head
        if head is not None:
            if left[tid] < left[head]:
                left[head] = left[tid]
            if right[tid] > right[head]:
                right[head] = right[tid]
    return TreeMeta(left=left, right=right, depth=depth)


def is_parent(p: PostingEntry, c: PostingEntry) -> bool:
    """Extent-based parent test; exact on projective trees only."""
    return (
        p.sid == c.sid
        and p.left <= c.left
        and p.right >= c.right
        and p.depth == c.depth - 1
    )


def entity_spans(sentence: Sentence) -> list[EntitySpan]:
    """Maximal contiguous IOB2 runs with their types and surface text."""
    spans: list[EntitySpan] = []
    start = None
    etype = None
    for t in sentence.tokens:
        if t.etype is None:
            if start is not None:
                spans.append(_close_entity(sentence, start, t.tid - 1, etype))
                start, etype = None, None
        elif t.iob == "B" or start is None or t.etype != etype:
            if start is not None:
                spans.append(_close_entity(sentence, start, t.tid - 1, etype))
            start, etype = t.tid, t.etype
    if start is not None:
        spans.append(_close_entity(sentence, start, len(sentence.tokens) - 1, etype))
    return spans


def _close_entity(sentence: Sentence, start: int, end: int, etype: str) -> EntitySpan:
    surface = detokenize(t.text for t in sentence.tokens[start : end + 1])
    return EntitySpan(sentence.sid, start, end, etype, surface)


_DOC_LINE = re.compile(r"#\s*doc_id\s*=\s*(.+?)\s*$")


def parse_corpus(text: str, origin: str = "<string>") -> list[AnnotatedDocument]:
    docs: list[AnnotatedDocument] = []
    current_doc: AnnotatedDocument | None = None
    rows: list[tuple[int, list[str]]] = []

    def ensure_doc() -> AnnotatedDocument:
        nonlocal current_doc
        if current_doc is None:
            current_doc = AnnotatedDocument(doc_id="doc0")
            docs.append(current_doc)
        return current_doc

    def flush(lineno: int) -> None:
        nonlocal rows
        if rows:
            ensure_doc().sentences.append(_build_sentence(rows, origin))
            rows = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line:
            flush(lineno)
            continue
        if line.startswith("#"):
            m = _DOC_LINE.match(line)
            if m:
                flush(lineno)
                current_doc = AnnotatedDocument(doc_id=m.group(1))
                docs.append(current_doc)
            continue
        cols = line.split("\t")
        if len(cols) != 7:
            raise KokoInputError(
                f"{origin}:{lineno}: expected 7 tab-separated columns, got {len(cols)}"
            )
        rows.append((lineno, cols))
    flush(-1)
    # Validate global sid contiguity through Corpus construction.
    Corpus(docs)
    return docs


def _build_sentence(rows: list[tuple[int, list[str]]], origin: str) -> Sentence:
    first_line = rows[0][0]
    sid = None
    tokens: list[Token] = []
    n = len(rows)
    roots = 0
    prev_etype: str | None = None
    for pos_in_sentence, (lineno, cols) in enumerate(rows):
        where = f"{origin}:{lineno}"
        try:
            row_sid = int(cols[0])
            tid = int(cols[1])
            head_raw = int(cols[5])
        except ValueError as exc:
            raise KokoInputError(f"{where}: non-integer id field: {exc}") from None
        if sid is None:
            sid = row_sid
        elif row_sid != sid:
            raise KokoInputError(f"{where}: sid changed mid-sentence ({sid} -> {row_sid})")
        if tid != pos_in_sentence:
            raise KokoInputError(f"{where}: token ids must be contiguous from 0, got {tid}")
        head: int | None
        if head_raw == -1:
            head = None
            roots += 1
            if cols[4] != "root":
                raise KokoInputError(f"{where}: head -1 requires label 'root', got {cols[4]!r}")
        else:
            if not 0 <= head_raw < n:
                raise KokoInputError(f"{where}: head {head_raw} out of range for sid {sid}")
            if head_raw == tid:
                raise KokoInputError(f"{where}: token cannot head itself")
            head = head_raw
        etag = cols[6]
        iob: str | None
        if etag == "O":
            etype, iob = None, None
        elif etag.startswith(("B-", "I-")):
            iob, etype = etag[0], etag[2:]
            if iob == "I" and prev_etype != etype:
                raise KokoInputError(
                    f"{where}: I-{etype} tag without a preceding B-/I-{etype} (sid {sid})"
                )
        else:
            raise KokoInputError(f"{where}: entity column must be O, B-<T> or I-<T>, got {etag!r}")
        prev_etype = etype
        tokens.append(
            Token(
                sid=sid, tid=tid, text=cols[2], pos=cols[3], label=cols[4],
                head=head, etype=etype, iob=iob,
            )
        )
    where = f"{origin}:{first_line}"
    if roots != 1:
        raise KokoInputError(f"{where}: sentence {sid} has {roots} roots, expected exactly 1")
    root_tid = next(t.tid for t in tokens if t.head is None)
    # Cycle/connectivity check: every token must reach the root.
    for t in tokens:
        seen = set()
        cur = t.tid
        while cur != root_tid:
            if cur in seen:
                raise KokoInputError(f"{where}: cyclic head relation at sid {sid}, tid {t.tid}")
            seen.add(cur)
            cur = tokens[cur].head
    sentence = Sentence(sid=sid, tokens=tokens, root_tid=root_tid)
    sentence.finalize()
    return sentence


def load_corpus(path: str, format: str = "tsv") -> list[AnnotatedDocument]:
    if format != "tsv":
        raise KokoInputError(f"unknown corpus format {format!r}; only 'tsv' is supported")
    try:
        with io.open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise KokoInputError(f"cannot read corpus: {exc}") from None
    return parse_corpus(text, origin=path)


def serialize_corpus(docs: list[AnnotatedDocument]) -> str:
    """Inverse of parse_corpus up to comments and trailing whitespace."""
    out: list[str] = []
    for doc in docs:
        out.append(f"# doc_id = {doc.doc_id}")
        for s in doc.sentences:
            for t in s.tokens:
                head = -1 if t.head is None else t.head
                etag = "O" if t.etype is None else f"{t.iob}-{t.etype}"
                out.append(
                    "\t".join((str(t.sid), str(t.tid), t.text, t.pos, t.label, str(head), etag))
                )
            out.append("")
    return "\n".join(out) + ("\n" if out else "")
