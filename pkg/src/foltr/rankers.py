"""Differentiable scoring functions and Plackett-Luce list sampling.

Rankers are stateless descriptions of an architecture; all trainable
parameters live in a flat float64 vector so that federation strategies can
average, split, and checkpoint them uniformly. Two architectures exist: a
linear scorer and a one-hidden-layer tanh network with a scalar output.

List sampling draws from the Plackett-Luce distribution over document
scores: sequentially, P(d | remaining) = exp(f(d)) / sum over remaining of
exp(f(.)). Sampling uses the Gumbel-max formulation (score plus Gumbel
noise, sorted), which realizes exactly that distribution while consuming a
fixed number of draws per call regardless of the parameter values.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class LinearRanker:
    feature_count: int

    @property
    def num_params(self) -> int:
        return self.feature_count

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        # Zero init: the first SERPs are uniformly random permutations.
        return np.zeros(self.feature_count, dtype=np.float64)

    def score(self, theta: np.ndarray, features: np.ndarray) -> float:
        self._check(theta, features.shape[-1])
        return float(features @ theta)

    def score_many(self, theta: np.ndarray, features: np.ndarray) -> np.ndarray:
        self._check(theta, features.shape[-1])
        return features @ theta

    def score_gradient(self, theta: np.ndarray, features: np.ndarray) -> np.ndarray:
        self._check(theta, features.shape[-1])
        return np.array(features, dtype=np.float64)

    def weighted_gradient(self, theta: np.ndarray, features: np.ndarray,
                          coeffs: np.ndarray) -> np.ndarray:
        """sum_d coeffs[d] * d f(d)/d theta, vectorized over rows of features."""
        self._check(theta, features.shape[-1])
        return features.T @ coeffs

    def _check(self, theta: np.ndarray, width: int) -> None:
        if theta.shape != (self.feature_count,) or width != self.feature_count:
            raise ValueError("parameter/feature dimension mismatch")

    def architecture(self) -> dict:
        return {"kind": "linear", "feature_count": self.feature_count}


@dataclass(frozen=True)
class NeuralRanker:
    """One hidden tanh layer; flat layout [W1 | b1 | w2 | b2].

    W1 is (feature_count, hidden_width) row-major, followed by the hidden
    biases, the hidden-to-output weights, and the scalar output bias. The
    input layer (W1 and b1) is the shareable base for strategies that keep
    the output layer personal.
    """

    feature_count: int
    hidden_width: int = 64

    @property
    def num_params(self) -> int:
        f, h = self.feature_count, self.hidden_width
        return f * h + h + h + 1

    @property
    def base_size(self) -> int:
        """Parameters up to and including the hidden biases."""
        return self.feature_count * self.hidden_width + self.hidden_width

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        f, h = self.feature_count, self.hidden_width
        theta = np.zeros(self.num_params, dtype=np.float64)
        theta[:f * h] = rng.uniform(-1.0, 1.0, f * h) / np.sqrt(f)
        theta[f * h + h:f * h + 2 * h] = rng.uniform(-1.0, 1.0, h) / np.sqrt(h)
        return theta

    def _unpack(self, theta: np.ndarray):
        f, h = self.feature_count, self.hidden_width
        if theta.shape != (self.num_params,):
            raise ValueError("parameter/feature dimension mismatch")
        w1 = theta[:f * h].reshape(f, h)
        b1 = theta[f * h:f * h + h]
        w2 = theta[f * h + h:f * h + 2 * h]
        b2 = theta[-1]
        return w1, b1, w2, b2

    def score(self, theta: np.ndarray, features: np.ndarray) -> float:
        return float(self.score_many(theta, features[None, :])[0])

    def score_many(self, theta: np.ndarray, features: np.ndarray) -> np.ndarray:
        w1, b1, w2, b2 = self._unpack(theta)
        if features.shape[-1] != self.feature_count:
            raise ValueError("parameter/feature dimension mismatch")
        hidden = np.tanh(features @ w1 + b1)
        return hidden @ w2 + b2

    def score_gradient(self, theta: np.ndarray, features: np.ndarray) -> np.ndarray:
        return self.weighted_gradient(theta, features[None, :], np.ones(1))

    def weighted_gradient(self, theta: np.ndarray, features: np.ndarray,
                          coeffs: np.ndarray) -> np.ndarray:
        w1, b1, w2, b2 = self._unpack(theta)
        if features.shape[-1] != self.feature_count:
            raise ValueError("parameter/feature dimension mismatch")
        hidden = np.tanh(features @ w1 + b1)          # (n, h)
        back = (1.0 - hidden ** 2) * w2               # d score / d preactivation
        weighted_back = back * coeffs[:, None]        # (n, h)
        grad = np.empty(self.num_params, dtype=np.float64)
        f, h = self.feature_count, self.hidden_width
        grad[:f * h] = (features.T @ weighted_back).reshape(-1)
        grad[f * h:f * h + h] = weighted_back.sum(axis=0)
        grad[f * h + h:f * h + 2 * h] = hidden.T @ coeffs
        grad[-1] = coeffs.sum()
        return grad

    def architecture(self) -> dict:
        return {"kind": "neural", "feature_count": self.feature_count,
                "hidden_width": self.hidden_width}


def make_ranker(kind: str, feature_count: int, hidden_width: int = 64):
    if kind == "linear":
        return LinearRanker(feature_count)
    if kind == "neural":
        return NeuralRanker(feature_count, hidden_width)
    raise ValueError(f"unknown ranker kind {kind!r}")


def sample_ranking(scores: np.ndarray, cutoff: int, rng: np.random.Generator) -> np.ndarray:
    """Sample a top-`cutoff` list without replacement from Plackett-Luce.

    Returns candidate indices in display order. Gumbel-max: argsort of
    score + Gumbel noise is distributed exactly as sequential softmax
    sampling without replacement.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("cannot sample from an empty candidate set")
    noisy = scores + rng.gumbel(size=scores.size)
    order = np.argsort(-noisy, kind="stable")
    return order[:min(cutoff, scores.size)]


class ListProbability(NamedTuple):
    probability: float
    log_probability: float


def log_list_probability(scores: np.ndarray, ranking: np.ndarray) -> float:
    """Log Plackett-Luce probability of a displayed prefix.

    `ranking` holds indices into `scores`; the candidate pool at step i is
    everything not yet displayed. Computed with max-shifted exponentials.
    """
    scores = np.asarray(scores, dtype=np.float64)
    ranking = np.asarray(ranking)
    if ranking.size != np.unique(ranking).size:
        raise ValueError("displayed list contains duplicates")
    if ranking.size and (ranking.min() < 0 or ranking.max() >= scores.size):
        raise ValueError("displayed list is not a subset of the candidates")
    shifted = scores - scores.max()
    exp = np.exp(shifted)
    total = exp.sum()
    # Denominator at step i: total mass minus the already-displayed docs.
    placed = np.concatenate(([0.0], np.cumsum(exp[ranking])[:-1]))
    denominators = total - placed
    return float(np.sum(shifted[ranking] - np.log(denominators)))


def list_probability(scores: np.ndarray, ranking: np.ndarray) -> ListProbability:
    log_p = log_list_probability(scores, ranking)
    return ListProbability(probability=float(np.exp(log_p)), log_probability=log_p)


CHECKPOINT_KEYS = ("kind", "feature_count", "hidden_width", "theta")


def save_checkpoint(path, ranker, theta: np.ndarray) -> None:
    """Portable checkpoint: .npz with the architecture tag and flat float64 params."""
    arch = ranker.architecture()
    np.savez(path,
             kind=np.array(arch["kind"]),
             feature_count=np.array(arch["feature_count"], dtype=np.int64),
             hidden_width=np.array(arch.get("hidden_width", 0), dtype=np.int64),
             theta=np.asarray(theta, dtype=np.float64))


def load_checkpoint(path):
    with np.load(path) as data:
        kind = str(data["kind"])
        feature_count = int(data["feature_count"])
        hidden_width = int(data["hidden_width"])
        theta = np.array(data["theta"], dtype=np.float64)
    ranker = make_ranker(kind, feature_count, hidden_width or 64)
    if theta.shape != (ranker.num_params,):
        raise ValueError("checkpoint parameter vector does not match its architecture tag")
    return ranker, theta
