import pytest

from dialcheck.corpus import Document, build_index


def make_docs():
    return [
        Document("mccartney", "Paul McCartney", (
            "James Paul McCartney was born in 1942.",
            "He rose to fame with the Beatles.",
        )),
        Document("pope", "Pope Paul I", (
            "Pope Paul I was born in Rome.",
        )),
        Document("simon", "Paul Simon", (
            "Paul Simon sings folk rock songs.",
            "He was born in 1941.",
        )),
    ]


@pytest.fixture
def paul_docs():
    return make_docs()


@pytest.fixture
def paul_index(paul_docs):
    return build_index(paul_docs)
