"""The four corpus indices and their on-disk form.

* word index: surface string -> posting list of (sid, tid, left-right, depth)
* entity index: entity surface -> (sid, start-end, type) records
* PL hierarchy index: dependency trees merged on parse labels
* POS hierarchy index: dependency trees merged on POS tags

Hierarchy indices merge same-labelled children recursively, so every node
is addressed by the unique label path from the root, and each token lands
in exactly one node's posting list per index. Both hierarchies hang off a
synthetic super-root (labelled with TOP for the POS index, where sentence
roots carry arbitrary tags); the super-root is not counted as a node.

Persisted layout (directory): ``manifest.json`` plus ``word.idx``,
``entity.idx``, ``pl.idx``, ``pos.idx``. Every ``.idx`` file starts with
the magic bytes ``KOKO`` and a little-endian u32 format version, followed
by length-prefixed records as written below.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import struct
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .corpus import AnnotatedDocument, PostingEntry, serialize_corpus
from .errors import KokoInputError

MAGIC = b"KOKO"
FORMAT_VERSION = 1

TOP = "⊤"  # dummy label above every sentence root in the POS index


class EntityRecord(NamedTuple):
    sid: int
    left: int
    right: int
    etype: str
    surface: str


class WordIndex:
    def __init__(self) -> None:
        self.postings: dict[str, list[PostingEntry]] = {}

    def add(self, word: str, entry: PostingEntry) -> None:
        self.postings.setdefault(word, []).append(entry)

    def lookup(self, word: str) -> list[PostingEntry]:
        return self.postings.get(word, [])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, WordIndex) and self.postings == other.postings


class EntityIndex:
    def __init__(self) -> None:
        self.records: list[EntityRecord] = []
        self.by_surface: dict[str, list[EntityRecord]] = {}
        self.by_type: dict[str, list[EntityRecord]] = {}
        self.by_sid: dict[int, list[EntityRecord]] = {}

    def add(self, record: EntityRecord) -> None:
        self.records.append(record)
        self.by_surface.setdefault(record.surface, []).append(record)
        self.by_type.setdefault(record.etype, []).append(record)
        self.by_sid.setdefault(record.sid, []).append(record)

    def lookup(self, etype: str | None = None) -> list[EntityRecord]:
        if etype is None:
            return list(self.records)
        return list(self.by_type.get(etype, []))

    def lookup_surface(self, surface: str) -> list[EntityRecord]:
        return list(self.by_surface.get(surface, []))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, EntityIndex) and self.records == other.records


@dataclass
class HierarchyNode:
    node_id: int
    label: str
    parent: int  # -1 for the super-root
    children: dict[str, int] = field(default_factory=dict)
    postings: list[PostingEntry] = field(default_factory=list)


class HierarchyIndex:
    def __init__(self, root_label: str) -> None:
        self.nodes: list[HierarchyNode] = [HierarchyNode(0, root_label, -1)]

    @property
    def super_root(self) -> HierarchyNode:
        return self.nodes[0]

    @property
    def node_count(self) -> int:
        """Number of merged nodes, super-root excluded."""
        return len(self.nodes) - 1

    def child(self, node_id: int, label: str) -> int:
        """Child with the given label, created on demand."""
        node = self.nodes[node_id]
        nxt = node.children.get(label)
        if nxt is None:
            nxt = len(self.nodes)
            node.children[label] = nxt
            self.nodes.append(HierarchyNode(nxt, label, node_id))
        return nxt

    def path_of(self, node_id: int) -> str:
        parts: list[str] = []
        while node_id != 0:
            node = self.nodes[node_id]
            parts.append(node.label)
            node_id = node.parent
        return "/" + "/".join(reversed(parts))

    def lookup(self, steps: list[tuple[str, str]]) -> list[PostingEntry]:
        """Union of posting lists over nodes whose root path matches.

        ``steps`` are (axis, label) pairs where label may be ``*``. ``/``
        consumes exactly one edge, ``//`` one or more; both start from the
        super-root, so a leading ``//`` reaches the depth-0 tokens too.
        """
        matched = self.match_nodes(steps)
        out: list[PostingEntry] = []
        for node_id in sorted(matched):
            out.extend(self.nodes[node_id].postings)
        out.sort()
        return out

    def match_nodes(self, steps: list[tuple[str, str]]) -> set[int]:
        positions = {0}
        for axis, label in steps:
            nxt: set[int] = set()
            for node_id in positions:
                if axis == "/":
                    node = self.nodes[node_id]
                    if label == "*":
                        nxt.update(node.children.values())
                    elif label in node.children:
                        nxt.add(node.children[label])
                else:
                    self._descendants(node_id, label, nxt)
            positions = nxt
            if not positions:
                break
        return positions

    def _descendants(self, node_id: int, label: str, out: set[int]) -> None:
        stack = list(self.nodes[node_id].children.values())
        while stack:
            nid = stack.pop()
            if label == "*" or self.nodes[nid].label == label:
                out.add(nid)
            stack.extend(self.nodes[nid].children.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HierarchyIndex) or len(self.nodes) != len(other.nodes):
            return False
        for a, b in zip(self.nodes, other.nodes):
            if (a.label, a.parent, a.children, a.postings) != (
                b.label, b.parent, b.children, b.postings,
            ):
                return False
        return True


@dataclass
class IndexBundle:
    word: WordIndex
    entity: EntityIndex
    pl: HierarchyIndex
    pos: HierarchyIndex
    fingerprint: str
    sentence_count: int
    token_count: int

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, IndexBundle)
            and self.word == other.word
            and self.entity == other.entity
            and self.pl == other.pl
            and self.pos == other.pos
            and self.fingerprint == other.fingerprint
            and self.sentence_count == other.sentence_count
            and self.token_count == other.token_count
        )

    def counts(self) -> dict[str, int]:
        return {
            "sentences": self.sentence_count,
            "tokens": self.token_count,
            "words": len(self.word.postings),
            "entities": len(self.entity.records),
            "pl_nodes": self.pl.node_count,
            "pos_nodes": self.pos.node_count,
        }


def corpus_fingerprint(docs: list[AnnotatedDocument]) -> str:
    return hashlib.sha256(serialize_corpus(docs).encode("utf-8")).hexdigest()


def build_indexes(docs: list[AnnotatedDocument]) -> IndexBundle:
    word = WordIndex()
    entity = EntityIndex()
    pl = HierarchyIndex(root_label="")
    pos = HierarchyIndex(root_label=TOP)
    sentence_count = 0
    token_count = 0
    for doc in docs:
        for s in doc.sentences:
            sentence_count += 1
            token_count += len(s.tokens)
            pl_node = _assign_nodes(pl, s, key="label")
            pos_node = _assign_nodes(pos, s, key="pos")
            meta = s.meta
            for t in s.tokens:
                entry = PostingEntry(s.sid, t.tid, meta.left[t.tid], meta.right[t.tid], meta.depth[t.tid])
                word.add(t.text, entry)
                pl.nodes[pl_node[t.tid]].postings.append(entry)
                pos.nodes[pos_node[t.tid]].postings.append(entry)
            for e in s.entities:
                entity.add(EntityRecord(e.sid, e.start, e.end, e.etype, e.surface))
    for plist in word.postings.values():
        plist.sort()
    return IndexBundle(
        word=word,
        entity=entity,
        pl=pl,
        pos=pos,
        fingerprint=corpus_fingerprint(docs),
        sentence_count=sentence_count,
        token_count=token_count,
    )


def _assign_nodes(index: HierarchyIndex, sentence, key: str) -> list[int]:
    """Hierarchy node id for every token of the sentence, by tid."""
    node_of = [0] * len(sentence.tokens)
    stack = [(sentence.root_tid, 0)]
    while stack:
        tid, parent_node = stack.pop()
        token = sentence.tokens[tid]
        node = index.child(parent_node, getattr(token, key))
        node_of[tid] = node
        for c in sentence.children[tid]:
            stack.append((c, node))
    return node_of


# ---------------------------------------------------------------------------
# Persistence


def _w_u32(f: io.BufferedWriter, value: int) -> None:
    f.write(struct.pack("<I", value))


def _w_str(f: io.BufferedWriter, value: str) -> None:
    raw = value.encode("utf-8")
    f.write(struct.pack("<I", len(raw)))
    f.write(raw)


def _w_postings(f: io.BufferedWriter, postings: list[PostingEntry]) -> None:
    f.write(struct.pack("<I", len(postings)))
    for p in postings:
        f.write(struct.pack("<5I", *p))


class _Reader:
    def __init__(self, path: str):
        self.path = path
        with open(path, "rb") as f:
            self.buf = f.read()
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise KokoInputError(f"{self.path}: truncated index file")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        raw = self.take(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise KokoInputError(f"{self.path}: corrupt string record") from None

    def postings(self) -> list[PostingEntry]:
        n = self.u32()
        raw = self.take(20 * n)
        return [
            PostingEntry(*struct.unpack_from("<5I", raw, 20 * i)) for i in range(n)
        ]

    def header(self) -> None:
        if self.take(4) != MAGIC:
            raise KokoInputError(f"{self.path}: not an index file (bad magic)")
        version = self.u32()
        if version != FORMAT_VERSION:
            raise KokoInputError(
                f"{self.path}: format version {version} does not match "
                f"supported version {FORMAT_VERSION}"
            )


def _open_out(path: str) -> io.BufferedWriter:
    f = open(path, "wb")
    f.write(MAGIC)
    f.write(struct.pack("<I", FORMAT_VERSION))
    return f


def save_bundle(bundle: IndexBundle, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    with _open_out(os.path.join(directory, "word.idx")) as f:
        _w_u32(f, len(bundle.word.postings))
        for wordtext in sorted(bundle.word.postings):
            _w_str(f, wordtext)
            _w_postings(f, bundle.word.postings[wordtext])
    with _open_out(os.path.join(directory, "entity.idx")) as f:
        _w_u32(f, len(bundle.entity.records))
        for r in bundle.entity.records:
            _w_str(f, r.surface)
            _w_str(f, r.etype)
            f.write(struct.pack("<3I", r.sid, r.left, r.right))
    for name, index in (("pl.idx", bundle.pl), ("pos.idx", bundle.pos)):
        with _open_out(os.path.join(directory, name)) as f:
            _w_u32(f, len(index.nodes))
            for node in index.nodes:
                _w_u32(f, node.node_id)
                f.write(struct.pack("<i", node.parent))
                _w_str(f, node.label)
                _w_postings(f, node.postings)
    manifest = {
        "format_version": FORMAT_VERSION,
        "fingerprint": bundle.fingerprint,
        "counts": bundle.counts(),
    }
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def load_bundle(directory: str, expected_fingerprint: str | None = None) -> IndexBundle:
    manifest_path = os.path.join(directory, "manifest.json")
    try:
        with open(manifest_path, "r", encoding="utf-8") as f:
            manifest = json.load(f)
    except FileNotFoundError:
        raise KokoInputError(f"{directory}: no manifest.json; not an index directory") from None
    except json.JSONDecodeError as exc:
        raise KokoInputError(f"{manifest_path}: invalid JSON: {exc}") from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise KokoInputError(
            f"{manifest_path}: format version {manifest.get('format_version')} "
            f"does not match supported version {FORMAT_VERSION}"
        )
    fingerprint = manifest.get("fingerprint", "")
    if expected_fingerprint is not None and fingerprint != expected_fingerprint:
        raise KokoInputError(
            f"{directory}: index fingerprint {fingerprint[:12]}... does not match "
            f"the supplied corpus ({expected_fingerprint[:12]}...); rebuild the index"
        )

    r = _Reader(os.path.join(directory, "word.idx"))
    r.header()
    word = WordIndex()
    for _ in range(r.u32()):
        wordtext = r.string()
        word.postings[wordtext] = r.postings()

    r = _Reader(os.path.join(directory, "entity.idx"))
    r.header()
    entity = EntityIndex()
    for _ in range(r.u32()):
        surface = r.string()
        etype = r.string()
        sid, left, right = struct.unpack("<3I", r.take(12))
        entity.add(EntityRecord(sid, left, right, etype, surface))

    hierarchies: list[HierarchyIndex] = []
    for name in ("pl.idx", "pos.idx"):
        r = _Reader(os.path.join(directory, name))
        r.header()
        n_nodes = r.u32()
        index = HierarchyIndex(root_label="")
        index.nodes = []
        for _ in range(n_nodes):
            node_id = r.u32()
            (parent,) = struct.unpack("<i", r.take(4))
            label = r.string()
            postings = r.postings()
            index.nodes.append(HierarchyNode(node_id, label, parent, {}, postings))
        for node in index.nodes:
            if node.parent >= 0:
                index.nodes[node.parent].children[node.label] = node.node_id
        hierarchies.append(index)

    counts = manifest.get("counts", {})
    return IndexBundle(
        word=word,
        entity=entity,
        pl=hierarchies[0],
        pos=hierarchies[1],
        fingerprint=fingerprint,
        sentence_count=int(counts.get("sentences", 0)),
        token_count=int(counts.get("tokens", 0)),
    )


def lookup_word(bundle: IndexBundle, word: str) -> list[PostingEntry]:
    return bundle.word.lookup(word)


def lookup_entities(bundle: IndexBundle, etype: str | None = None) -> list[EntityRecord]:
    return bundle.entity.lookup(etype)


def lookup_hierarchy(
    bundle: IndexBundle, which: str, steps: Iterable[tuple[str, str]]
) -> list[PostingEntry]:
    index = bundle.pl if which == "pl" else bundle.pos
    return index.lookup(list(steps))
