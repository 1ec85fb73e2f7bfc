from __future__ import annotations

from koko.corpus import Corpus
from koko.normalize import normalize
from koko.oracle import match_path_tokens, oracle_evaluate
from koko.parser import parse_query

from .conftest import load_fixture_query


def test_ex21_single_pair_on_figure1(figure1_corpus):
    rows = oracle_evaluate(load_fixture_query("ex21"), figure1_corpus)
    assert [(r.sid, r.values["e"], r.values["d"]) for r in rows] == [
        (0, "chocolate ice cream", "a chocolate ice cream, which was delicious"),
    ]


def test_empty_corpus_empty_bag():
    assert oracle_evaluate(load_fixture_query("ex21"), Corpus([])) == []


def test_top_down_matcher_axis_semantics(ex31_corpus):
    s0 = ex31_corpus.sentence(0)
    q = parse_query('extract v:Str from "x" if (/ROOT:{ v = //verb })')
    steps = normalize(q).var("v").path.steps
    assert match_path_tokens(s0, steps) == [1, 8, 13]  # root included under //
    q2 = parse_query('extract v:Str from "x" if (/ROOT:{ v = /verb })')
    steps2 = normalize(q2).var("v").path.steps
    assert match_path_tokens(s0, steps2) == [1]  # leading / pins the root
    q3 = parse_query('extract v:Str from "x" if (/ROOT:{ v = /root//nsubj })')
    steps3 = normalize(q3).var("v").path.steps
    assert match_path_tokens(s0, steps3) == [0, 7]


def test_oracle_respects_conditions(ex31_corpus):
    q = parse_query('extract v:Str from "x" if (/ROOT:{ v = //*[@etype="Entity", @pos="noun"] })')
    rows = oracle_evaluate(q, ex31_corpus)
    values = sorted(r.values["v"] for r in rows)
    assert values == ["cheesecake", "chocolate", "cream", "grocery", "ice", "store"]
