from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from koko.corpus import (
    Corpus,
    PostingEntry,
    Sentence,
    Token,
    detokenize,
    entity_spans,
    is_parent,
    load_corpus,
    parse_corpus,
    serialize_corpus,
)
from koko.errors import KokoInputError

from .conftest import data_path


def test_load_ex31_shape(ex31_corpus):
    assert len(ex31_corpus) == 2
    s0, s1 = ex31_corpus.sentences
    assert len(s0) == 17 and s0.root_tid == 1
    assert len(s1) == 13 and s1.root_tid == 1
    assert s0.tokens[5].text == "cream" and s0.tokens[5].label == "dobj"
    assert [t.text for t in s0.tokens[3:6]] == ["chocolate", "ice", "cream"]
    assert all(t.etype == "Entity" for t in s0.tokens[3:6])


def test_tree_meta_pinned_values(ex31_corpus):
    s0, s1 = ex31_corpus.sentences
    assert s1.posting(1) == PostingEntry(1, 1, 0, 12, 0)
    assert s0.posting(9) == PostingEntry(0, 9, 9, 9, 3)
    assert s0.posting(1) == PostingEntry(0, 1, 0, 16, 0)
    assert s0.posting(5) == PostingEntry(0, 5, 2, 9, 1)


def test_tree_meta_single_token():
    docs = parse_corpus("0\t0\thi\tintj\troot\t-1\tO\n")
    s = docs[0].sentences[0]
    assert s.posting(0) == PostingEntry(0, 0, 0, 0, 0)


def _brute_extents(s: Sentence, tid: int) -> tuple[int, int, int]:
    members = [t.tid for t in s.tokens if tid in (list(s.ancestors(t.tid)) + [t.tid])]
    depth = len(list(s.ancestors(tid)))
    return min(members), max(members), depth


def test_tree_meta_matches_brute_force(ex31_corpus):
    for s in ex31_corpus.sentences:
        for t in s.tokens:
            left, right, depth = _brute_extents(s, t.tid)
            assert (s.meta.left[t.tid], s.meta.right[t.tid], s.meta.depth[t.tid]) == (
                left, right, depth,
            )


def _random_sentence(rng: random.Random, n: int, sid: int = 0) -> Sentence:
    # Random (possibly non-projective) tree: each non-root token heads to
    # any other token, rejected until acyclic.
    while True:
        root = rng.randrange(n)
        heads = [rng.randrange(n) for _ in range(n)]
        heads[root] = -1
        ok = True
        for i in range(n):
            seen = set()
            cur = i
            while cur != root:
                if cur in seen or heads[cur] == cur:
                    ok = False
                    break
                seen.add(cur)
                cur = heads[cur]
            if not ok:
                break
        if ok:
            break
    tokens = [
        Token(sid, i, f"w{i}", "noun", "root" if i == root else "dep",
              None if i == root else heads[i])
        for i in range(n)
    ]
    s = Sentence(sid=sid, tokens=tokens, root_tid=root)
    s.finalize()
    return s


@given(st.integers(min_value=1, max_value=14), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=60, deadline=None)
def test_tree_meta_property(n, seed):
    s = _random_sentence(random.Random(seed), n)
    for t in s.tokens:
        left, right, depth = _brute_extents(s, t.tid)
        assert (s.meta.left[t.tid], s.meta.right[t.tid], s.meta.depth[t.tid]) == (
            left, right, depth,
        )


def test_is_parent_examples(ex31_corpus):
    s0, s1 = ex31_corpus.sentences
    assert is_parent(s0.posting(1), s0.posting(5))  # ate -> cream
    assert not is_parent(s1.posting(1), s1.posting(3))  # depth gap 2
    assert not is_parent(s0.posting(5), s0.posting(5))  # self


def test_is_parent_follows_head_links_on_projective_trees(ex31_corpus):
    for s in ex31_corpus.sentences:
        for t in s.tokens:
            if t.head is not None:
                assert is_parent(s.posting(t.head), s.posting(t.tid))


def test_entity_spans(ex31_corpus):
    s0, s1 = ex31_corpus.sentences
    assert [(e.etype, e.start, e.end, e.surface) for e in entity_spans(s0)] == [
        ("Entity", 3, 5, "chocolate ice cream"),
    ]
    assert [(e.start, e.end, e.surface) for e in entity_spans(s1)] == [
        (4, 4, "cheesecake"),
        (10, 11, "grocery store"),
    ]


def test_entity_spans_adjacent_b_tags():
    text = (
        "0\t0\tBob\tpropn\tnsubj\t2\tB-Person\n"
        "0\t1\tAnn\tpropn\tnsubj\t2\tB-Person\n"
        "0\t2\tran\tverb\troot\t-1\tO\n"
    )
    s = parse_corpus(text)[0].sentences[0]
    assert [(e.start, e.end) for e in entity_spans(s)] == [(0, 0), (1, 1)]


def test_empty_file_gives_empty_corpus(tmp_path):
    path = tmp_path / "empty.tsv"
    path.write_text("")
    assert load_corpus(str(path)) == []


def test_detokenize():
    assert detokenize(["a", "cream", ",", "which", "was", "good", "."]) == (
        "a cream, which was good."
    )


def test_round_trip(ex31_docs):
    text = serialize_corpus(ex31_docs)
    again = parse_corpus(text)
    assert serialize_corpus(again) == text
    original = open(data_path("corpus", "ex31.tsv"), encoding="utf-8").read()
    stripped = "\n".join(
        line for line in original.splitlines() if not line.startswith("#")
    ).strip()
    roundtripped = "\n".join(
        line for line in text.splitlines() if not line.startswith("#")
    ).strip()
    assert roundtripped == stripped


@pytest.mark.parametrize(
    "line, message",
    [
        ("0\t0\thello\tnoun\troot\t-1", "7 tab-separated columns"),
        ("0\t0\thello\tnoun\troot\t5\tO", "out of range"),
        ("0\t0\thello\tnoun\tdep\t0\tO", "cannot head itself"),
        ("0\t0\thello\tnoun\tdep\t-1\tO", "label 'root'"),
        ("0\t0\thello\tnoun\troot\t-1\tI-Person", "I-Person tag without"),
        ("0\t0\thello\tnoun\troot\t-1\tPerson", "must be O, B-<T> or I-<T>"),
    ],
)
def test_malformed_lines(line, message):
    with pytest.raises(KokoInputError, match=message):
        parse_corpus(line + "\n")


def test_two_roots_rejected():
    text = (
        "0\t0\ta\tnoun\troot\t-1\tO\n"
        "0\t1\tb\tnoun\troot\t-1\tO\n"
    )
    with pytest.raises(KokoInputError, match="2 roots"):
        parse_corpus(text)


def test_cycle_rejected():
    text = (
        "0\t0\ta\tnoun\tdep\t1\tO\n"
        "0\t1\tb\tnoun\tdep\t0\tO\n"
        "0\t2\tc\tnoun\troot\t-1\tO\n"
    )
    with pytest.raises(KokoInputError, match="cyclic"):
        parse_corpus(text)


def test_non_contiguous_sids_rejected():
    text = "5\t0\thello\tnoun\troot\t-1\tO\n"
    with pytest.raises(KokoInputError, match="contiguous"):
        parse_corpus(text)


def test_unknown_format_rejected(tmp_path):
    path = tmp_path / "c.tsv"
    path.write_text("")
    with pytest.raises(KokoInputError, match="format"):
        load_corpus(str(path), format="conllu")


def test_doc_boundaries():
    text = (
        "# doc_id = one\n"
        "0\t0\ta\tnoun\troot\t-1\tO\n"
        "\n"
        "# doc_id = two\n"
        "1\t0\tb\tnoun\troot\t-1\tO\n"
    )
    docs = parse_corpus(text)
    assert [d.doc_id for d in docs] == ["one", "two"]
    corpus = Corpus(docs)
    assert corpus.doc_index_of(0) == 0 and corpus.doc_index_of(1) == 1


def test_entity_spans_empty_without_tags():
    s = parse_corpus("0\t0\thello\tnoun\troot\t-1\tO\n")[0].sentences[0]
    assert entity_spans(s) == []
