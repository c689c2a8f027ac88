"""Shared fixtures: bundled vocabulary, test lexicon and gazetteer."""
from __future__ import annotations

import pytest

from keyrel.annotate import Gazetteer, Lexicon
from keyrel.bpe import Vocabulary, load_vocabulary
from keyrel.resources import (
    DEFAULT_GAZETTEER,
    DEFAULT_LEXICON,
    DEFAULT_MERGES,
    DEFAULT_VOCAB,
    default_path,
)

# entity table used across the relation and scoring tests
TEST_ENTITIES = {
    "Biden": "PERSON",
    "Obama": "PERSON",
    "Barack Obama": "PERSON",
    "Sally Forrest": "PERSON",
    "Prince Harry": "PERSON",
    "president": "TITLE",
    "United States": "COUNTRY",
    "France": "COUNTRY",
    "England": "COUNTRY",
    "Hawaii": "LOC",
    "March 15": "DATE",
}


@pytest.fixture(scope="session")
def vocab() -> Vocabulary:
    return load_vocabulary(default_path(DEFAULT_VOCAB), default_path(DEFAULT_MERGES))


@pytest.fixture(scope="session")
def lexicon() -> Lexicon:
    return Lexicon.from_file(default_path(DEFAULT_LEXICON))


@pytest.fixture(scope="session")
def gazetteer() -> Gazetteer:
    return Gazetteer(dict(TEST_ENTITIES))


@pytest.fixture(scope="session")
def default_gazetteer() -> Gazetteer:
    return Gazetteer.from_file(default_path(DEFAULT_GAZETTEER))
