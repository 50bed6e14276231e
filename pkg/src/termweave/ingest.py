"""Corpus loading and rule-based document annotation.

Documents are normalized into sequences of terms: multi-word named
entities from a gazetteer are joined with underscores before
tokenization, tokens are lemmatized through a lexicon, and stop words,
short tokens, digit-dominated tokens, and non-noun/adjective tokens are
removed.  The surviving tokens, with their 0-based positions in the
cleaned sequence, are everything later stages see.

Annotation is deliberately rule-based and lexicon-driven so that results
are deterministic and reproducible; a pre-annotated ingestion path
accepts token streams produced by external NLP tooling and pushes them
through the identical filter rules.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import CorpusFormatError, DataError

KEEP_POS = frozenset({"NOUN", "PROPN", "ADJ"})
POS_TAGS = frozenset({"NOUN", "PROPN", "ADJ", "OTHER"})

# Word characters with internal hyphens binding; apostrophes split.
_TOKEN_RE = re.compile(r"\w+(?:-\w+)*", re.UNICODE)

_GAZETTEER_MIN_WORDS = 2
_GAZETTEER_MAX_WORDS = 4


@dataclass
class RawDocument:
    doc_id: str
    body: str
    title: str | None = None
    class_label: str | None = None


@dataclass(frozen=True)
class AnnotatedToken:
    surface: str
    lemma: str
    pos_tag: str
    position: int
    entity_join: bool = False


@dataclass
class AnnotatedDocument:
    """Filter survivors of one document, in cleaned-sequence order."""

    doc_id: str
    tokens: list[AnnotatedToken]
    class_label: str | None = None

    def __post_init__(self) -> None:
        last = -1
        for tok in self.tokens:
            if tok.position <= last:
                raise DataError(
                    f"{self.doc_id}: token positions must be strictly increasing "
                    f"(got {tok.position} after {last})"
                )
            last = tok.position

    @property
    def first_positions(self) -> dict[str, int]:
        """Term -> position of its first occurrence in the cleaned sequence."""
        pos: dict[str, int] = {}
        for tok in self.tokens:
            pos.setdefault(tok.lemma, tok.position)
        return pos

    @property
    def unique_terms(self) -> set[str]:
        return {tok.lemma for tok in self.tokens}

    @property
    def term_sequence(self) -> list[str]:
        return [tok.lemma for tok in self.tokens]

    def to_json(self) -> str:
        payload = {
            "id": self.doc_id,
            "class": self.class_label,
            "tokens": [
                {
                    "surface": t.surface,
                    "lemma": t.lemma,
                    "pos": t.pos_tag,
                    "position": t.position,
                    "entity": t.entity_join,
                }
                for t in self.tokens
            ],
        }
        return json.dumps(payload, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "AnnotatedDocument":
        rec = json.loads(line)
        tokens = [
            AnnotatedToken(
                surface=t.get("surface", t["lemma"]),
                lemma=t["lemma"],
                pos_tag=t["pos"],
                position=t["position"],
                entity_join=bool(t.get("entity", False)),
            )
            for t in rec["tokens"]
        ]
        return cls(doc_id=rec["id"], tokens=tokens, class_label=rec.get("class"))


class Vocabulary:
    """Bidirectional term <-> dense id map with document frequencies.

    Ids are assigned in first-appearance order over the document stream,
    so the mapping is deterministic given the document order.
    """

    def __init__(self) -> None:
        self._term_to_id: dict[str, int] = {}
        self._id_to_term: list[str] = []
        self._doc_freq: list[int] = []

    def __len__(self) -> int:
        return len(self._id_to_term)

    def __contains__(self, term: str) -> bool:
        return term in self._term_to_id

    def add_document(self, doc: AnnotatedDocument) -> None:
        for term in sorted(doc.unique_terms, key=lambda t: doc.first_positions[t]):
            tid = self._term_to_id.get(term)
            if tid is None:
                tid = len(self._id_to_term)
                self._term_to_id[term] = tid
                self._id_to_term.append(term)
                self._doc_freq.append(0)
            self._doc_freq[tid] += 1

    def id(self, term: str) -> int:
        try:
            return self._term_to_id[term]
        except KeyError:
            raise KeyError(f"term not in vocabulary: {term!r}") from None

    def term(self, term_id: int) -> str:
        return self._id_to_term[term_id]

    def doc_frequency(self, term: str | int) -> int:
        tid = term if isinstance(term, int) else self.id(term)
        return self._doc_freq[tid]

    @property
    def doc_frequencies(self) -> list[int]:
        return list(self._doc_freq)

    def terms(self) -> list[str]:
        return list(self._id_to_term)

    def to_json(self) -> str:
        return json.dumps(
            {"terms": self._id_to_term, "df": self._doc_freq}, ensure_ascii=False
        )

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        rec = json.loads(text)
        vocab = cls()
        vocab._id_to_term = list(rec["terms"])
        vocab._doc_freq = [int(x) for x in rec["df"]]
        vocab._term_to_id = {t: i for i, t in enumerate(vocab._id_to_term)}
        return vocab


def build_vocabulary(docs: Iterable[AnnotatedDocument]) -> Vocabulary:
    vocab = Vocabulary()
    for doc in docs:
        vocab.add_document(doc)
    return vocab


@dataclass
class AnnotationConfig:
    """Stop words, lemma lexicon, and multi-word entity gazetteer.

    Lexicon maps a lowercased surface form to (lemma, pos). Proper-noun
    lemmas keep the casing given in the lexicon; all other tokens are
    lowercased.
    """

    stop_words: frozenset[str] = field(default_factory=frozenset)
    lexicon: dict[str, tuple[str, str]] = field(default_factory=dict)
    gazetteer: tuple[tuple[str, ...], ...] = ()

    @classmethod
    def default(cls) -> "AnnotationConfig":
        return cls(stop_words=_builtin_stopwords())

    @classmethod
    def load(
        cls,
        stopwords_path: str | Path | None = None,
        lexicon_path: str | Path | None = None,
        gazetteer_path: str | Path | None = None,
    ) -> "AnnotationConfig":
        stop = (
            _read_stopword_file(Path(stopwords_path))
            if stopwords_path
            else _builtin_stopwords()
        )
        lexicon = _read_lexicon_file(Path(lexicon_path)) if lexicon_path else {}
        gazetteer = _read_gazetteer_file(Path(gazetteer_path)) if gazetteer_path else ()
        return cls(stop_words=stop, lexicon=lexicon, gazetteer=gazetteer)


def _builtin_stopwords() -> frozenset[str]:
    text = resources.files("termweave.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def _read_stopword_file(path: Path) -> frozenset[str]:
    words = set()
    for line in path.read_text("utf-8").splitlines():
        word = line.strip().lower()
        if word:
            words.add(word)
    return frozenset(words)


def _read_lexicon_file(path: Path) -> dict[str, tuple[str, str]]:
    """One "surface<TAB>lemma<TAB>pos" entry per line."""
    lexicon: dict[str, tuple[str, str]] = {}
    for n, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 3:
            raise CorpusFormatError(f"{path}:{n}: expected surface<TAB>lemma<TAB>pos")
        surface, lemma, pos = parts
        if pos not in POS_TAGS:
            raise CorpusFormatError(f"{path}:{n}: unknown pos tag {pos!r}")
        lexicon[surface.lower()] = (lemma, pos)
    return lexicon


def _read_gazetteer_file(path: Path) -> tuple[tuple[str, ...], ...]:
    phrases = []
    for line in path.read_text("utf-8").splitlines():
        words = tuple(w.lower() for w in _TOKEN_RE.findall(line))
        if _GAZETTEER_MIN_WORDS <= len(words) <= _GAZETTEER_MAX_WORDS:
            phrases.append(words)
    return tuple(phrases)


# ---------------------------------------------------------------------------
# Corpus loading
# ---------------------------------------------------------------------------

def load_corpus(source: str | Path, format: str | None = None) -> list[RawDocument]:
    """Load raw documents from a JSONL file or a directory of .txt files.

    A directory may group files into one level of class subfolders; the
    folder name becomes the document's class label.  Doc ids are taken
    from the record field (jsonl) or the relative file path (txt-dir),
    so they are stable across reloads.
    """
    source = Path(source)
    if not source.exists():
        raise CorpusFormatError(f"corpus source does not exist: {source}")
    if format is None:
        format = "txt-dir" if source.is_dir() else "jsonl"
    if format == "jsonl":
        docs = list(_iter_jsonl(source))
    elif format == "txt-dir":
        docs = list(_iter_txt_dir(source))
    else:
        raise CorpusFormatError(f"unknown corpus format: {format!r}")
    if not docs:
        raise CorpusFormatError(f"empty corpus: {source}")
    seen: set[str] = set()
    for doc in docs:
        if doc.doc_id in seen:
            raise CorpusFormatError(f"duplicate doc_id: {doc.doc_id!r}")
        seen.add(doc.doc_id)
    return docs


def _iter_jsonl(path: Path) -> Iterator[RawDocument]:
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{n}: invalid JSON: {exc}") from exc
            if "id" not in rec or "text" not in rec:
                raise CorpusFormatError(f"{path}:{n}: record needs 'id' and 'text'")
            if not str(rec["text"]):
                raise CorpusFormatError(f"{path}:{n}: empty document body")
            yield RawDocument(
                doc_id=str(rec["id"]),
                body=str(rec["text"]),
                title=rec.get("title"),
                class_label=rec.get("class"),
            )


def _iter_txt_dir(root: Path) -> Iterator[RawDocument]:
    for path in sorted(root.rglob("*.txt")):
        rel = path.relative_to(root)
        class_label = rel.parts[0] if len(rel.parts) > 1 else None
        body = path.read_text("utf-8", errors="replace")
        if not body.strip():
            raise CorpusFormatError(f"empty document body: {path}")
        yield RawDocument(
            doc_id=str(rel.with_suffix("")),
            body=body,
            class_label=class_label,
        )


# ---------------------------------------------------------------------------
# Annotation
# ---------------------------------------------------------------------------

def _join_entities(
    tokens: list[str], gazetteer: tuple[tuple[str, ...], ...]
) -> list[tuple[str, bool]]:
    """Longest-match-first, non-overlapping, case-insensitive joining."""
    if not gazetteer:
        return [(t, False) for t in tokens]
    by_first: dict[str, list[tuple[str, ...]]] = {}
    for phrase in gazetteer:
        by_first.setdefault(phrase[0], []).append(phrase)
    for phrases in by_first.values():
        phrases.sort(key=len, reverse=True)
    lowered = [t.lower() for t in tokens]
    out: list[tuple[str, bool]] = []
    i = 0
    while i < len(tokens):
        match_len = 0
        for phrase in by_first.get(lowered[i], ()):
            n = len(phrase)
            if tuple(lowered[i : i + n]) == phrase:
                match_len = n
                break
        if match_len:
            out.append(("_".join(tokens[i : i + match_len]), True))
            i += match_len
        else:
            out.append((tokens[i], False))
            i += 1
    return out


def _letter_digit_counts(text: str) -> tuple[int, int]:
    letters = sum(1 for ch in text if unicodedata.category(ch).startswith("L"))
    digits = sum(1 for ch in text if ch.isdigit())
    return letters, digits


def passes_filters(lemma: str, surface: str, pos: str, stop_words: frozenset[str]) -> bool:
    """The Procedure-1a style filter rules on a single candidate token."""
    if surface.lower() in stop_words or lemma.lower() in stop_words:
        return False
    if len(lemma) <= 2:
        return False
    letters, digits = _letter_digit_counts(lemma)
    if 2 * digits > len(lemma):
        return False
    if 2 * letters < len(lemma):
        return False
    if pos not in KEEP_POS:
        return False
    return True


def annotate(doc: RawDocument, config: AnnotationConfig) -> AnnotatedDocument:
    """Normalize a raw document into its cleaned term sequence.

    Title text, when present, is prepended to the body so that terms
    appearing in the title get the earliest positions.
    """
    text = f"{doc.title}\n{doc.body}" if doc.title else doc.body
    raw_tokens = _TOKEN_RE.findall(text)
    joined = _join_entities(raw_tokens, config.gazetteer)

    survivors: list[AnnotatedToken] = []
    for surface, is_entity in joined:
        if is_entity or "_" in surface:
            lemma, pos = surface, "PROPN"
            is_entity = True
        else:
            entry = config.lexicon.get(surface.lower())
            if entry is not None:
                lemma, pos = entry
            else:
                lemma, pos = surface.lower(), "NOUN"
        if not passes_filters(lemma, surface, pos, config.stop_words):
            continue
        survivors.append(
            AnnotatedToken(
                surface=surface,
                lemma=lemma,
                pos_tag=pos,
                position=len(survivors),
                entity_join=is_entity,
            )
        )
    return AnnotatedDocument(doc_id=doc.doc_id, tokens=survivors, class_label=doc.class_label)


def annotate_corpus(
    docs: Sequence[RawDocument], config: AnnotationConfig
) -> list[AnnotatedDocument]:
    return [annotate(doc, config) for doc in docs]


def ingest_preannotated(
    stream: str | Path, config: AnnotationConfig | None = None
) -> list[AnnotatedDocument]:
    """Read a token-JSONL stream produced by external annotation tooling.

    Records are taken verbatim (lemma, pos, entity flag) and then pushed
    through the same filter rules as :func:`annotate`.  Provided
    positions must be strictly increasing; survivors are re-indexed on
    the cleaned sequence.
    """
    config = config or AnnotationConfig.default()
    stream = Path(stream)
    docs: list[AnnotatedDocument] = []
    with open(stream, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{stream}:{n}: invalid JSON: {exc}") from exc
            if "id" not in rec or "tokens" not in rec:
                raise CorpusFormatError(f"{stream}:{n}: record needs 'id' and 'tokens'")
            docs.append(_preannotated_document(rec, f"{stream}:{n}", config))
    if not docs:
        raise CorpusFormatError(f"empty pre-annotated stream: {stream}")
    return docs


def _preannotated_document(
    rec: dict, where: str, config: AnnotationConfig
) -> AnnotatedDocument:
    survivors: list[AnnotatedToken] = []
    last_position = None
    for tok in rec["tokens"]:
        if "lemma" not in tok or not tok["lemma"]:
            raise CorpusFormatError(f"{where}: token without lemma")
        lemma = str(tok["lemma"])
        surface = str(tok.get("surface", lemma))
        pos = str(tok.get("pos", "NOUN"))
        if pos not in KEEP_POS:
            pos = "OTHER"
        position = tok.get("position")
        if position is not None:
            if last_position is not None and position <= last_position:
                raise CorpusFormatError(
                    f"{where}: token positions not strictly increasing "
                    f"({position} after {last_position})"
                )
            last_position = position
        if not passes_filters(lemma, surface, pos, config.stop_words):
            continue
        survivors.append(
            AnnotatedToken(
                surface=surface,
                lemma=lemma,
                pos_tag=pos,
                position=len(survivors),
                entity_join=bool(tok.get("entity", "_" in lemma)),
            )
        )
    return AnnotatedDocument(
        doc_id=str(rec["id"]), tokens=survivors, class_label=rec.get("class")
    )
