from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from koko.errors import KokoQueryError, KokoSyntaxError
from koko.parser import parse_query
from koko.syntax import (
    ElasticAtom,
    NodeCondition,
    PathAtom,
    PathExpr,
    Query,
    SatCondition,
    SatisfyingClause,
    Step,
    SubtreeAtom,
    TokensAtom,
    VarAtom,
    VarDef,
    WeightedCondition,
    pretty_print,
)

from .conftest import QUERY_FIXTURES, fixture_query_text


@pytest.mark.parametrize("name", QUERY_FIXTURES)
def test_fixture_queries_parse_and_round_trip(name):
    q = parse_query(fixture_query_text(name))
    assert parse_query(pretty_print(q)) == q


def test_ex21_shape():
    q = parse_query(fixture_query_text("ex21"))
    assert q.outputs == (("e", "Entity"), ("d", "Str"))
    assert [d.name for d in q.defs] == ["a", "b", "c", "d"]
    a, b, c, d = q.defs
    assert isinstance(a.atoms[0], PathAtom) and a.atoms[0].path.base is None
    assert b.atoms[0].path.base == "a"
    assert c.atoms[0].path.steps[0].kind == "word"
    assert isinstance(d.atoms[0], SubtreeAtom) and d.atoms[0].var == "b"
    assert len(q.constraints) == 1
    con = q.constraints[0]
    assert con.op == "in" and con.left == (VarAtom("b"),) and con.right == "e"


def test_ex23_shape():
    q = parse_query(fixture_query_text("ex23"))
    assert not q.defs and not q.constraints
    clause = q.satisfying[0]
    assert clause.var == "x" and clause.threshold == 0.8
    kinds = [wc.condition.kind for wc in clause.conditions]
    assert kinds == ["contains", "contains", "followed_by", "desc_right", "desc_right"]
    assert [wc.weight for wc in clause.conditions] == [1.0, 1.0, 1.0, 0.5, 0.5]
    assert q.excluding == (SatCondition("matches", "x", "[Ll]a Marzocco"),)


def test_fig9_condition_counts():
    q = parse_query(fixture_query_text("fig9_cafes"))
    assert len(q.satisfying[0].conditions) == 17
    assert len(q.excluding) == 18
    assert sum(1 for c in q.excluding if c.kind == "in_dict") == 1
    assert q.source == "<InputFile>"


def test_similar_to_spellings():
    base = 'extract a:GPE from "x" if () satisfying a ({}) with threshold 0'
    variants = [
        'a similarTo "city" {1.0}',
        'a SimilarTo "city" {1.0}',
        'a ~ "city" {1.0}',
        'str(a) ~ "city" {1.0}',
        'str(a) similarTo "city" {1.0}',
    ]
    parsed = [parse_query(base.format(v)) for v in variants]
    conds = {q.satisfying[0].conditions[0].condition for q in parsed}
    assert conds == {SatCondition("similar_to", "a", "city")}


def test_elastic_conditions_round_trip():
    q = parse_query(
        'extract v:Str from "x" if (/ROOT:{ v = "a" + ^[@min=1, @max=3] + "b" })'
    )
    elastic = q.defs[0].atoms[1]
    assert elastic == ElasticAtom(min_tokens=1, max_tokens=3)
    assert parse_query(pretty_print(q)) == q


def test_entity_typed_elastic():
    q = parse_query('extract v:Str from "x" if (/ROOT:{ v = //verb + ^[@etype="Entity"] })')
    assert q.defs[0].atoms[1] == ElasticAtom(etype="Entity")


def test_conditions_accept_missing_at_prefix():
    q1 = parse_query('extract v:Str from "x" if (/ROOT:{ v = //*[etype="Person"] })')
    q2 = parse_query('extract v:Str from "x" if (/ROOT:{ v = //*[@etype="Person"] })')
    assert q1 == q2


def test_comment_lines_ignored():
    q = parse_query('# heading\nextract v:Str from "x" if (/ROOT:{ v = //verb })\n# tail\n')
    assert q.defs[0].name == "v"


@pytest.mark.parametrize(
    "text, message",
    [
        ('extract v:Str from "x" if (/ROOT:{ v = //verb )', "expected"),
        ('extract v:Str from "x" if () satisfying w (str(w) contains "a" {1}) with threshold 0',
         "undeclared"),
        ('extract v:Str from "x" if (/ROOT:{ v = //verb }) satisfying v (str(v) contains "a" {2})'
         ' with threshold 0', "weight"),
        ('extract v:Str from "x" if (/ROOT:{ v = //verb }) satisfying v (str(v) contains "a" {1})',
         "threshold"),
        ('extract v:Str from "x" if (/ROOT:{ v = w/dobj })', "before it is defined"),
        ('extract v:Str from "x" if (/ROOT:{ v = //verb, v = //noun })', "defined twice"),
        ('extract v:Str from "x" if (/ROOT:{ v = //"ate"[@text="ate"] })', "@text"),
        ('extract v:Str from "x" if $()', "unexpected character"),
        ('extract e:Entity from "x" if (/ROOT:{ e = //verb })', "entity-typed output"),
        ('extract v:Str from "x" if (/ROOT:{ v = ^[@min=3, @max=1] })', "@min cannot exceed"),
        ('extract v:Str from "x" if () excluding (str(v) contains "a" {1})', "no weight"),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(KokoSyntaxError, match=message):
        parse_query(text)


def test_syntax_errors_carry_position():
    try:
        parse_query('extract v:Str from "x" if (/ROOT:{ v = //verb )')
    except KokoSyntaxError as exc:
        assert exc.line >= 1 and exc.col >= 1
    else:
        pytest.fail("expected a syntax error")


def test_regex_dialect_rejected_constructs():
    with pytest.raises(KokoQueryError, match="dialect"):
        parse_query(
            'extract v:Str from "x" if () satisfying v (str(v) matches "(?=x)") with threshold 0'
        )


def test_multiple_satisfying_clauses_one_per_variable():
    text = (
        'extract a:Entity, b:Entity from "x" if ()\n'
        'satisfying a (str(a) contains "q" {1}) with threshold 0.5\n'
        'satisfying b (str(b) contains "r" {1}) with threshold 0.5\n'
    )
    q = parse_query(text)
    assert [c.var for c in q.satisfying] == ["a", "b"]
    dup = text + 'satisfying a (str(a) contains "z" {1}) with threshold 0.1\n'
    with pytest.raises(KokoSyntaxError, match="more than one satisfying"):
        parse_query(dup)


def test_unquoted_and_placeholder_sources_round_trip():
    for src in ("wiki.article", "<InputFile>", '"input.txt"'):
        q = parse_query(f"extract v:Str from {src} if (/ROOT:{{ v = //verb }})")
        assert q.source == src
        assert parse_query(pretty_print(q)) == q


# Generator-based round-trip: random but well-formed queries survive
# parse -> print -> parse unchanged, including string escaping.

_labels = st.sampled_from(["nsubj", "dobj", "amod", "det", "prep"])
_postags = st.sampled_from(["verb", "noun", "adj"])
_words = st.sampled_from(["ate", "cream", "a b", 'say "hi"', "back\\slash", "café"])
_etypes = st.sampled_from(["Entity", "Person", "GPE"])


@st.composite
def _step(draw):
    axis = draw(st.sampled_from(["/", "//"]))
    kind = draw(st.sampled_from(["name", "pos", "word", "wild"]))
    conds = []
    if kind == "name":
        label, k = draw(_labels), "name"
    elif kind == "pos":
        label, k = draw(_postags), "name"
    elif kind == "word":
        label, k = draw(_words), "word"
    else:
        label, k = "*", "wild"
        if draw(st.booleans()):
            conds.append(NodeCondition("pos", draw(_postags)))
    if k != "word" and draw(st.booleans()):
        conds.append(NodeCondition("etype", draw(_etypes)))
    return Step(axis=axis, label=label, kind=k, conditions=tuple(conds))


@st.composite
def _query(draw):
    n_nodes = draw(st.integers(min_value=1, max_value=3))
    defs = []
    for i in range(n_nodes):
        steps = tuple(draw(st.lists(_step(), min_size=1, max_size=3)))
        defs.append(VarDef(name=f"n{i}", atoms=(PathAtom(PathExpr(None, steps)),)))
    atoms = [VarAtom("n0")]
    if draw(st.booleans()):
        atoms += [ElasticAtom(min_tokens=draw(st.integers(0, 2))), TokensAtom(draw(_words))]
    defs.append(VarDef(name="spanv", atoms=tuple(atoms)))
    outputs = [("spanv", "Str")]
    satisfying = []
    if draw(st.booleans()):
        cond = SatCondition(
            draw(st.sampled_from(["contains", "mentions", "near", "similar_to", "desc_right"])),
            "spanv",
            draw(_words),
        )
        satisfying.append(SatisfyingClause(
            var="spanv",
            conditions=(WeightedCondition(cond, draw(st.sampled_from([0.25, 0.5, 1.0]))),),
            threshold=draw(st.sampled_from([0.0, 0.5, 1.0])),
        ))
    return Query(
        outputs=tuple(outputs),
        source='"input.txt"',
        defs=tuple(defs),
        satisfying=tuple(satisfying),
    )


@given(_query())
@settings(max_examples=80, deadline=None)
def test_round_trip_property(q):
    assert parse_query(pretty_print(q)) == q
