"""LETOR-format ranking collections as immutable in-memory datasets.

Two kinds of collections are supported:

* standard single-label collections (MSLR-style): one graded relevance
  label per query-document pair, parsed from ``<grade> qid:<id> <fid>:<val> ...``
  lines;
* intent collections: binary relevance judged independently under four
  intents, loaded from a feature file plus four qrels files with
  ``<qid> <doc_key> <grade>`` lines.

Datasets are frozen after load; feature and label arrays are marked
read-only so they can be shared across concurrently simulated clients.
"""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

NUM_INTENTS = 4
MAX_GRADE = 63


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Document:
    """A single query-document pair: identifier plus dense feature vector."""

    doc_key: str
    features: np.ndarray


@dataclass(frozen=True)
class Query:
    """All candidates of one query with their labels.

    features is (n_docs, feature_count); labels is (n_docs,) integer grades.
    intent_labels, when present, is (n_docs, 4) binary grades, one column
    per intent.
    """

    query_id: str
    doc_keys: tuple[str, ...]
    features: np.ndarray
    labels: np.ndarray
    intent_labels: np.ndarray | None = None

    def __post_init__(self):
        _freeze(self.features)
        _freeze(self.labels)
        if self.intent_labels is not None:
            _freeze(self.intent_labels)

    @property
    def num_docs(self) -> int:
        return self.features.shape[0]

    def document(self, i: int) -> Document:
        return Document(self.doc_keys[i], self.features[i])


@dataclass(frozen=True)
class Dataset:
    """An immutable parsed collection.

    relevance_scale is the number of distinct grades (labels live in
    [0, relevance_scale - 1]); role tags which fold this file plays.
    """

    feature_count: int
    relevance_scale: int
    queries: tuple[Query, ...]
    role: str = "train"
    _index: dict[str, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        index = {q.query_id: i for i, q in enumerate(self.queries)}
        if len(index) != len(self.queries):
            raise DataError("duplicate query ids in dataset")
        object.__setattr__(self, "_index", index)

    @property
    def num_queries(self) -> int:
        return len(self.queries)

    def query_by_id(self, query_id: str) -> Query:
        return self.queries[self._index[query_id]]

    @property
    def has_intents(self) -> bool:
        return bool(self.queries) and self.queries[0].intent_labels is not None


def _as_lines(source: str | Iterable[str]) -> Iterable[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def parse_letor(source: str | Iterable[str], feature_count: int, role: str = "train",
                relevance_scale: int | None = None) -> Dataset:
    """Parse LETOR lines ``<grade> qid:<id> <fid>:<val> ... [# doc_key]``.

    ``source`` is raw text or an iterable of lines (an open file works).
    Queries keep first-seen order; docs keep file order within a query.
    Feature ids are 1-based; absent ids default to 0.0. The text after a
    ``#`` becomes the doc_key; without one a ``q<qid>_d<ordinal>`` key is
    synthesized. relevance_scale defaults to max observed grade + 1 (at
    least 2).
    """
    if feature_count < 1:
        raise ValueError("feature_count must be positive")
    order: list[str] = []
    rows: dict[str, list[tuple[int, np.ndarray, str]]] = {}
    max_grade = 0
    for lineno, raw in enumerate(_as_lines(source), start=1):
        line = raw.rstrip("\r\n")
        comment = None
        if "#" in line:
            line, comment = line.split("#", 1)
            comment = comment.strip()
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2 or not parts[1].startswith("qid:"):
            raise DataError(f"line {lineno}: expected '<grade> qid:<id> ...'")
        try:
            grade = int(parts[0])
        except ValueError:
            raise DataError(f"line {lineno}: grade {parts[0]!r} is not an integer") from None
        if not 0 <= grade <= MAX_GRADE:
            raise DataError(f"line {lineno}: grade {grade} outside [0, {MAX_GRADE}]")
        qid = parts[1][len("qid:"):]
        if not qid:
            raise DataError(f"line {lineno}: empty qid")
        feats = np.zeros(feature_count, dtype=np.float64)
        for token in parts[2:]:
            fid_str, _, val_str = token.partition(":")
            try:
                fid = int(fid_str)
                val = float(val_str)
            except ValueError:
                raise DataError(f"line {lineno}: malformed feature token {token!r}") from None
            if fid < 1 or fid > feature_count:
                raise DataError(
                    f"line {lineno}: feature id {fid} outside [1, {feature_count}]")
            if not np.isfinite(val):
                raise DataError(f"line {lineno}: non-finite feature value {val_str!r}")
            feats[fid - 1] = val
        if qid not in rows:
            rows[qid] = []
            order.append(qid)
        doc_key = comment if comment else f"q{qid}_d{len(rows[qid])}"
        rows[qid].append((grade, feats, doc_key))
        max_grade = max(max_grade, grade)

    queries = []
    for qid in order:
        grades, feats, keys = zip(*rows[qid])
        queries.append(Query(
            query_id=qid,
            doc_keys=tuple(keys),
            features=np.vstack(feats),
            labels=np.asarray(grades, dtype=np.int64),
        ))
    scale = relevance_scale if relevance_scale is not None else max(2, max_grade + 1)
    if max_grade >= scale:
        raise DataError(f"observed grade {max_grade} exceeds relevance_scale {scale}")
    return Dataset(feature_count=feature_count, relevance_scale=scale,
                   queries=tuple(queries), role=role)


def load_letor(path, feature_count: int, role: str = "train",
               relevance_scale: int | None = None) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_letor(fh, feature_count, role=role, relevance_scale=relevance_scale)


def serialize_letor(dataset: Dataset) -> str:
    """Dense LETOR text that round-trips through parse_letor unchanged."""
    out = []
    for q in dataset.queries:
        for i in range(q.num_docs):
            feats = " ".join(f"{j + 1}:{v!r}" for j, v in enumerate(q.features[i]))
            out.append(f"{q.labels[i]} qid:{q.query_id} {feats} # {q.doc_keys[i]}")
    return "\n".join(out) + ("\n" if out else "")


def _parse_qrels(source: str | Iterable[str]) -> dict[tuple[str, str], int]:
    judgements: dict[tuple[str, str], int] = {}
    for lineno, raw in enumerate(_as_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DataError(f"qrels line {lineno}: expected '<qid> <doc_key> <grade>'")
        qid, doc_key, grade_str = parts
        try:
            grade = int(grade_str)
        except ValueError:
            raise DataError(f"qrels line {lineno}: grade {grade_str!r} is not an integer") from None
        if grade not in (0, 1):
            raise DataError(f"qrels line {lineno}: intent grades must be 0 or 1")
        judgements[(qid, doc_key)] = grade
    return judgements


def load_intent_collection(features_source: str | Iterable[str],
                           intent_qrels: Sequence[str | Iterable[str]],
                           feature_count: int, role: str = "train") -> Dataset:
    """Build a 4-intent binary collection from features plus four qrels streams.

    A pair absent from a qrels stream defaults to grade 0; a qrels entry
    naming an unknown document is skipped with a warning. The primary
    labels of the resulting dataset are the merged view: relevant iff
    relevant under at least one intent.
    """
    if len(intent_qrels) != NUM_INTENTS:
        raise DataError(f"expected {NUM_INTENTS} intent qrels streams, got {len(intent_qrels)}")
    base = parse_letor(features_source, feature_count, role=role)
    judgements = [_parse_qrels(src) for src in intent_qrels]

    known = {(q.query_id, key) for q in base.queries for key in q.doc_keys}
    for intent, judged in enumerate(judgements):
        unknown = [pair for pair in judged if pair not in known]
        for qid, doc_key in unknown:
            warnings.warn(f"intent {intent} qrels references unknown doc ({qid}, {doc_key}); skipped")
            del judged[(qid, doc_key)]

    queries = []
    for q in base.queries:
        intent_labels = np.zeros((q.num_docs, NUM_INTENTS), dtype=np.int64)
        for intent, judged in enumerate(judgements):
            for i, key in enumerate(q.doc_keys):
                intent_labels[i, intent] = judged.get((q.query_id, key), 0)
        merged = (intent_labels.max(axis=1) > 0).astype(np.int64)
        queries.append(Query(q.query_id, q.doc_keys, q.features, merged, intent_labels))
    return Dataset(feature_count=feature_count, relevance_scale=2,
                   queries=tuple(queries), role=role)


@dataclass(frozen=True)
class DatasetStats:
    grade_counts: dict[int, int]
    candidates_per_query: tuple[int, ...]
    total_pairs: int
    per_intent_relevant: tuple[int, ...] | None = None


def dataset_stats(dataset: Dataset) -> DatasetStats:
    """Per-grade pair counts and per-query candidate counts."""
    counts: dict[int, int] = {}
    sizes = []
    for q in dataset.queries:
        sizes.append(q.num_docs)
        grades, n = np.unique(q.labels, return_counts=True)
        for g, c in zip(grades, n):
            counts[int(g)] = counts.get(int(g), 0) + int(c)
    per_intent = None
    if dataset.has_intents:
        totals = np.zeros(NUM_INTENTS, dtype=np.int64)
        for q in dataset.queries:
            totals += q.intent_labels.sum(axis=0)
        per_intent = tuple(int(t) for t in totals)
    return DatasetStats(grade_counts=counts, candidates_per_query=tuple(sizes),
                        total_pairs=sum(sizes), per_intent_relevant=per_intent)


def minmax_normalize(train: Dataset, *others: Dataset) -> tuple[Dataset, ...]:
    """Min-max scale each feature using the training fold's range.

    The same affine map is applied to every fold; zero-range features map
    to 0. Unnormalized MSLR-style features (query frequencies, raw scores)
    destabilize gradient steps, so runs normally enable this.
    """
    if train.num_queries == 0:
        return (train, *others)
    stacked = np.vstack([q.features for q in train.queries])
    lo = stacked.min(axis=0)
    span = stacked.max(axis=0) - lo
    span[span == 0.0] = 1.0

    def rescale(ds: Dataset) -> Dataset:
        queries = tuple(
            Query(q.query_id, q.doc_keys, (q.features - lo) / span, q.labels, q.intent_labels)
            for q in ds.queries)
        return Dataset(ds.feature_count, ds.relevance_scale, queries, ds.role)

    return tuple(rescale(ds) for ds in (train, *others))
