"""One pairwise-differentiable gradient-descent interaction.

The update pipeline for a single simulated query impression:

1. sample a SERP from the Plackett-Luce distribution over current scores;
2. simulate clicks on it;
3. turn clicks into inferred preference pairs: every clicked document is
   preferred over every unclicked document displayed above it and over the
   first unclicked document displayed below it;
4. weight each pair by the position-debiasing factor
   rho = P(swapped list) / (P(list) + P(swapped list))
   and by the pair factor e^{s_k} e^{s_l} / (e^{s_k} + e^{s_l})^2;
5. accumulate sum_pairs weight * (grad f(d_k) - grad f(d_l)) and step the
   parameters along it.

No clicks means no pairs, a zero gradient, and unchanged parameters.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import dcg
from .rankers import log_list_probability, sample_ranking

_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class PreferencePair:
    """A click-inferred `preferred beats other` judgement on one SERP."""

    preferred_doc: int
    other_doc: int
    preferred_rank: int
    other_rank: int


@dataclass(frozen=True)
class InteractionLog:
    """What one impression produced, for online evaluation and debugging."""

    query_id: str
    ranking: np.ndarray      # displayed candidate indices, top first
    clicks: np.ndarray
    ndcg10: float            # against the local label view
    delta: np.ndarray | None  # parameter change applied, None for a pure gradient call


def infer_preferences(ranking: np.ndarray, clicks: np.ndarray) -> list[PreferencePair]:
    """Preference pairs implied by clicks on a displayed list.

    Pairs are only ever clicked-vs-unclicked: all unclicked documents shown
    above a click, plus the first unclicked document below it.
    """
    clicks = np.asarray(clicks, dtype=bool)
    pairs: list[PreferencePair] = []
    unclicked = np.flatnonzero(~clicks)
    for k in np.flatnonzero(clicks):
        above = unclicked[unclicked < k]
        below = unclicked[unclicked > k]
        partners = list(above) + ([below[0]] if below.size else [])
        for l in partners:
            pairs.append(PreferencePair(int(ranking[k]), int(ranking[l]), int(k), int(l)))
    return pairs


def pair_gradient_scalar(score_k: float, score_l: float) -> float:
    """e^{s_k} e^{s_l} / (e^{s_k} + e^{s_l})^2, i.e. s(1-s) of the score gap."""
    e = np.exp(-abs(score_k - score_l))
    return float(e / (1.0 + e) ** 2)


def debias_weight(scores: np.ndarray, ranking: np.ndarray, rank_k: int, rank_l: int) -> float:
    """rho = P(R*) / (P(R) + P(R*)) with R* the list with ranks k and l swapped."""
    swapped = np.array(ranking)
    swapped[rank_k], swapped[rank_l] = swapped[rank_l], swapped[rank_k]
    log_p = log_list_probability(scores, ranking)
    log_p_star = log_list_probability(scores, swapped)
    # sigmoid of the log-odds, stable for large gaps
    gap = log_p - log_p_star
    if gap >= 0:
        return float(np.exp(-gap) / (1.0 + np.exp(-gap)))
    return float(1.0 / (1.0 + np.exp(gap)))


def _pair_weights(scores: np.ndarray, ranking: np.ndarray,
                  pairs: list[PreferencePair]) -> np.ndarray:
    """rho * pair factor for every pair, sharing one pass over the list.

    Swapping two displayed documents only changes the Plackett-Luce
    denominators at the steps between them, so the log-odds of the original
    versus the swapped list reduce to a short product over that window.
    """
    shifted = scores - scores.max()
    exp = np.exp(shifted)
    placed = np.concatenate(([0.0], np.cumsum(exp[ranking])[:-1]))
    denominators = exp.sum() - placed
    weights = np.empty(len(pairs))
    for i, pair in enumerate(pairs):
        a, b = sorted((pair.preferred_rank, pair.other_rank))
        u, v = ranking[a], ranking[b]
        seg = denominators[a + 1:b + 1]
        # true swapped denominators always contain exp[u], so clamp there
        swapped_seg = np.maximum(seg + exp[u] - exp[v], max(exp[u], _TINY))
        log_odds = float(np.sum(np.log(swapped_seg) - np.log(seg)))
        rho = 1.0 / (1.0 + np.exp(log_odds)) if log_odds >= 0 else \
            np.exp(-log_odds) / (1.0 + np.exp(-log_odds))
        weights[i] = rho * pair_gradient_scalar(scores[pair.preferred_doc],
                                                scores[pair.other_doc])
    return weights


def pdgd_gradient(ranker, theta: np.ndarray, view, click_model,
                  rng: np.random.Generator, cutoff: int = 10):
    """Run one impression; return (gradient or None, InteractionLog).

    `view` is a per-client query view with query_id, features, labels and a
    cached ideal DCG at the cutoff. The gradient is None when no pairs were
    inferred (equivalent to a zero gradient).
    """
    if view.features.shape[0] == 0:
        raise ValueError("query view has no candidates")
    scores = ranker.score_many(theta, view.features)
    ranking = sample_ranking(scores, cutoff, rng)
    displayed_grades = view.labels[ranking]
    realization = click_model.simulate(displayed_grades, rng)
    ndcg10 = 1.0 if view.ideal == 0.0 else dcg(displayed_grades, cutoff) / view.ideal
    log = InteractionLog(query_id=view.query_id, ranking=ranking,
                         clicks=realization.clicks, ndcg10=ndcg10, delta=None)
    pairs = infer_preferences(ranking, realization.clicks)
    if not pairs:
        return None, log
    weights = _pair_weights(scores, ranking, pairs)
    coeffs = np.zeros(ranking.size)
    pref = np.fromiter((p.preferred_rank for p in pairs), dtype=np.intp, count=len(pairs))
    other = np.fromiter((p.other_rank for p in pairs), dtype=np.intp, count=len(pairs))
    np.add.at(coeffs, pref, weights)
    np.subtract.at(coeffs, other, weights)
    gradient = ranker.weighted_gradient(theta, view.features[ranking], coeffs)
    return gradient, log


def pdgd_update(ranker, theta: np.ndarray, view, click_model, learning_rate: float,
                rng: np.random.Generator, cutoff: int = 10):
    """One full interaction: returns (new parameters, InteractionLog)."""
    gradient, log = pdgd_gradient(ranker, theta, view, click_model, rng, cutoff)
    if gradient is None:
        return theta, log
    new_theta = theta + learning_rate * gradient
    return new_theta, InteractionLog(log.query_id, log.ranking, log.clicks,
                                     log.ndcg10, new_theta - theta)
