from __future__ import annotations

import os

import pytest

from koko.corpus import Corpus, load_corpus
from koko.indexes import build_indexes
from koko.parser import parse_query

DATA = os.path.join(os.path.dirname(__file__), "data")

QUERY_FIXTURES = [
    "ex21", "ex22_q1", "ex22_q2", "ex23", "ex41",
    "s63_chocolate", "s63_title", "s63_dateofbirth",
    "fig9_cafes", "fig10_facilities", "fig11_teams",
]


def data_path(*parts: str) -> str:
    return os.path.join(DATA, *parts)


def load_fixture_query(name: str):
    with open(data_path("queries", f"{name}.koko"), "r", encoding="utf-8") as f:
        return parse_query(f.read())


def fixture_query_text(name: str) -> str:
    with open(data_path("queries", f"{name}.koko"), "r", encoding="utf-8") as f:
        return f.read()


@pytest.fixture(scope="session")
def ex31_docs():
    return load_corpus(data_path("corpus", "ex31.tsv"))


@pytest.fixture(scope="session")
def ex31_corpus(ex31_docs):
    return Corpus(ex31_docs)


@pytest.fixture(scope="session")
def ex31_bundle(ex31_docs):
    return build_indexes(ex31_docs)


@pytest.fixture(scope="session")
def figure1_docs():
    # The first of the two worked-example sentences, as its own corpus.
    docs = load_corpus(data_path("corpus", "ex31.tsv"))
    docs[0].sentences = docs[0].sentences[:1]
    return docs


@pytest.fixture(scope="session")
def figure1_corpus(figure1_docs):
    return Corpus(figure1_docs)


@pytest.fixture(scope="session")
def figure1_bundle(figure1_docs):
    return build_indexes(figure1_docs)
