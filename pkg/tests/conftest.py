from __future__ import annotations

import pytest

from termweave.ingest import AnnotatedDocument, AnnotatedToken, Vocabulary, build_vocabulary

# one line per acceptance criterion, printed after the run (outside capture)
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_doc(doc_id: str, lemmas: list[str], class_label: str | None = None) -> AnnotatedDocument:
    tokens = [
        AnnotatedToken(surface=lemma, lemma=lemma, pos_tag="NOUN", position=i)
        for i, lemma in enumerate(lemmas)
    ]
    return AnnotatedDocument(doc_id=doc_id, tokens=tokens, class_label=class_label)


def make_corpus(token_lists: dict[str, list[str]]) -> tuple[list[AnnotatedDocument], Vocabulary]:
    docs = [make_doc(doc_id, lemmas) for doc_id, lemmas in token_lists.items()]
    return docs, build_vocabulary(docs)


@pytest.fixture
def abc_corpus():
    return make_corpus(
        {
            "d1": ["alpha", "beta", "gamma", "alpha"],
            "d2": ["beta", "delta", "alpha"],
            "d3": ["gamma", "delta", "epsilon", "beta", "gamma"],
        }
    )
