"""Offline nDCG@k, discounted cumulative online quality, and significance tests.

Gain is 2^grade - 1 and the rank discount is log2(rank + 1), the usual
choices for graded web collections. When a candidate set has no relevant
document at all (ideal DCG of zero) nDCG is defined as 1.0: an all-zero
list cannot be ranked wrongly, and clients whose local view contains a
single grade must score perfectly on their own view.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats


def dcg(ranked_grades: np.ndarray, k: int) -> float:
    """Discounted cumulative gain of the first k entries of a ranking."""
    top = np.asarray(ranked_grades)[:k]
    if top.size == 0:
        return 0.0
    gains = np.exp2(top.astype(np.float64)) - 1.0
    discounts = np.log2(np.arange(2, top.size + 2, dtype=np.float64))
    return float(np.sum(gains / discounts))


def ideal_dcg(all_candidate_grades: np.ndarray, k: int) -> float:
    grades = np.sort(np.asarray(all_candidate_grades))[::-1]
    return dcg(grades, k)


def ndcg_at_k(ranked_grades, all_candidate_grades, k: int = 10) -> float:
    """nDCG@k of a ranking prefix against the full candidate grade set.

    ranked_grades are the grades of the displayed prefix in display order;
    all_candidate_grades are the grades of every candidate (used for the
    ideal). Returns 1.0 when the ideal DCG is zero.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ideal = ideal_dcg(np.asarray(all_candidate_grades), k)
    if ideal == 0.0:
        return 1.0
    return dcg(np.asarray(ranked_grades), k) / ideal


def ranking_by_score(scores: np.ndarray) -> np.ndarray:
    """Deterministic descending order; ties keep original candidate order."""
    return np.argsort(-np.asarray(scores), kind="stable")


def offline_ndcg(ranker, theta: np.ndarray, dataset, k: int = 10) -> float:
    """Mean nDCG@k of the deterministic ranking over a dataset's queries."""
    if dataset.num_queries == 0:
        raise ValueError("offline evaluation needs a non-empty dataset")
    total = 0.0
    for q in dataset.queries:
        order = ranking_by_score(ranker.score_many(theta, q.features))
        total += ndcg_at_k(q.labels[order], q.labels, k)
    return total / dataset.num_queries


def offline_ndcg_intent_average(ranker, theta: np.ndarray, dataset, k: int = 10) -> float:
    """Mean nDCG@k over queries and over the four intent label columns."""
    if not dataset.has_intents:
        raise ValueError("dataset has no intent labels")
    total = 0.0
    count = 0
    for q in dataset.queries:
        order = ranking_by_score(ranker.score_many(theta, q.features))
        for intent in range(q.intent_labels.shape[1]):
            col = q.intent_labels[:, intent]
            total += ndcg_at_k(col[order], col, k)
            count += 1
    return total / count


def online_cumulative(values: Sequence[float], gamma: float) -> float:
    """Discounted sum over an impression stream: sum_t gamma^t * v_t."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return 0.0
    return float(np.sum(np.power(gamma, np.arange(v.size, dtype=np.float64)) * v))


def online_discount_maximum(num_impressions: int, gamma: float) -> float:
    """The value online_cumulative attains when every impression scores 1.0."""
    return online_cumulative(np.ones(num_impressions), gamma)


def ttest_two_sided(sample_a, sample_b) -> float:
    """Two-sided Welch t-test p-value over per-run final metrics."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 values")
    if np.var(a) == 0.0 and np.var(b) == 0.0:
        return 1.0 if np.mean(a) == np.mean(b) else 0.0
    return float(stats.ttest_ind(a, b, equal_var=False).pvalue)


@dataclass(frozen=True)
class RoundRecord:
    """Metrics captured after one global round."""

    round_index: int
    offline_ndcg: float  # nan on rounds skipped by the evaluation stride
    online_cumulative: float
    client_online: tuple[float, ...]  # discounted contribution per client this round


@dataclass
class RunResult:
    """Everything a single federated run produces besides file artifacts."""

    records: list[RoundRecord]
    final_params: np.ndarray
    personal_params: list[np.ndarray] | None
    num_impressions: int
    master_seed: int
    wall_time_sec: float

    @property
    def final_offline(self) -> float:
        for rec in reversed(self.records):
            if not np.isnan(rec.offline_ndcg):
                return rec.offline_ndcg
        return float("nan")

    @property
    def final_online(self) -> float:
        return self.records[-1].online_cumulative if self.records else 0.0
