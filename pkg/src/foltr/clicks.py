"""Simulated user clicks on a SERP of at most 10 documents.

Two model families are supported:

* a simplified dynamic Bayesian network (top-down scan; click and stop
  probabilities depend on the document's relevance grade), with the three
  standard instantiations perfect / navigational / informational for both
  5-grade and 2-grade collections;
* a position-based model (click iff examined and attracted, examination
  probability (1/rank)^eta, no stopping).

The position-based model's attraction column reuses the perfect
instantiation's click probabilities for the matching scale, so the eta
parameter is the only behavioral knob; run manifests record this choice.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SERP_CUTOFF = 10

SDBN_INSTANTIATIONS = ("perfect", "navigational", "informational")

# (name, scale) -> (P(click=1 | grade), P(stop=1 | click=1, grade))
_SDBN_TABLE = {
    ("perfect", 5): ([0.0, 0.2, 0.4, 0.8, 1.0], [0.0, 0.0, 0.0, 0.0, 0.0]),
    ("navigational", 5): ([0.05, 0.3, 0.5, 0.7, 0.95], [0.2, 0.3, 0.5, 0.7, 0.9]),
    ("informational", 5): ([0.4, 0.6, 0.7, 0.8, 0.9], [0.1, 0.2, 0.3, 0.4, 0.5]),
    ("perfect", 2): ([0.0, 1.0], [0.0, 0.0]),
    ("navigational", 2): ([0.05, 0.95], [0.2, 0.9]),
    ("informational", 2): ([0.3, 0.7], [0.1, 0.5]),
}

PBM_ETAS = (0.0, 0.5, 1.0, 1.5, 2.0)


@dataclass(frozen=True)
class ClickRealization:
    """Outcome of showing one SERP: per-rank clicks, and where the scan stopped."""

    clicks: np.ndarray            # bool, aligned with the displayed list
    stopped_at: int | None = None  # 0-based rank, None if the user scanned everything


def _check_grades(grades: np.ndarray, scale: int) -> np.ndarray:
    grades = np.asarray(grades, dtype=np.int64)
    if grades.size and (grades.min() < 0 or grades.max() >= scale):
        raise ValueError(f"grade outside [0, {scale - 1}]")
    if grades.size > SERP_CUTOFF:
        raise ValueError(f"SERP longer than {SERP_CUTOFF}")
    return grades


@dataclass(frozen=True)
class SdbnClickModel:
    """Grade-conditioned click/stop probabilities scanned top-down."""

    name: str
    click_prob: np.ndarray
    stop_prob: np.ndarray

    @property
    def scale(self) -> int:
        return len(self.click_prob)

    def simulate(self, displayed_grades, rng: np.random.Generator) -> ClickRealization:
        grades = _check_grades(displayed_grades, self.scale)
        n = grades.size
        # Coins are pre-drawn so rng consumption does not depend on outcomes.
        clicked = rng.random(n) < self.click_prob[grades]
        stopping = rng.random(n) < self.stop_prob[grades]
        halts = np.flatnonzero(clicked & stopping)
        stopped_at = int(halts[0]) if halts.size else None
        if stopped_at is not None:
            clicked[stopped_at + 1:] = False
        return ClickRealization(clicks=clicked, stopped_at=stopped_at)

    def click_probabilities(self, displayed_grades) -> np.ndarray:
        """Analytic per-rank marginal click probability for a fixed SERP."""
        grades = _check_grades(displayed_grades, self.scale)
        c = self.click_prob[grades]
        s = self.stop_prob[grades]
        reach = np.cumprod(np.concatenate(([1.0], 1.0 - c[:-1] * s[:-1])))
        return c * reach


@dataclass(frozen=True)
class PbmClickModel:
    """Rank-discounted examination times grade-conditioned attraction."""

    eta: float
    click_prob: np.ndarray

    @property
    def scale(self) -> int:
        return len(self.click_prob)

    def examination(self, n: int) -> np.ndarray:
        ranks = np.arange(1, n + 1, dtype=np.float64)
        return (1.0 / ranks) ** self.eta

    def simulate(self, displayed_grades, rng: np.random.Generator) -> ClickRealization:
        grades = _check_grades(displayed_grades, self.scale)
        p = self.examination(grades.size) * self.click_prob[grades]
        return ClickRealization(clicks=rng.random(grades.size) < p, stopped_at=None)

    def click_probabilities(self, displayed_grades) -> np.ndarray:
        grades = _check_grades(displayed_grades, self.scale)
        return self.examination(grades.size) * self.click_prob[grades]


@dataclass(frozen=True)
class MixedClickModel:
    """Draws one of its member models uniformly per simulated interaction."""

    models: tuple

    @property
    def scale(self) -> int:
        return self.models[0].scale

    def simulate(self, displayed_grades, rng: np.random.Generator) -> ClickRealization:
        model = self.models[rng.integers(len(self.models))]
        return model.simulate(displayed_grades, rng)

    def click_probabilities(self, displayed_grades) -> np.ndarray:
        per_model = [m.click_probabilities(displayed_grades) for m in self.models]
        return np.mean(per_model, axis=0)


def click_model_table(name: str, scale: int) -> SdbnClickModel:
    """The standard instantiation (perfect / navigational / informational)."""
    try:
        click, stop = _SDBN_TABLE[(name, scale)]
    except KeyError:
        raise ValueError(f"no click model instantiation ({name!r}, scale {scale})") from None
    return SdbnClickModel(name=name,
                          click_prob=np.asarray(click),
                          stop_prob=np.asarray(stop))


def pbm_click_model(eta: float, scale: int) -> PbmClickModel:
    if eta < 0:
        raise ValueError("eta must be non-negative")
    attraction = click_model_table("perfect", scale).click_prob
    return PbmClickModel(eta=float(eta), click_prob=attraction)


def mixed_click_model(family: str, scale: int) -> MixedClickModel:
    """The uniform mixture over a family's standard instantiation set."""
    if family == "sdbn":
        models = tuple(click_model_table(n, scale) for n in SDBN_INSTANTIATIONS)
    elif family == "pbm":
        models = tuple(pbm_click_model(eta, scale) for eta in PBM_ETAS)
    else:
        raise ValueError(f"unknown click family {family!r}")
    return MixedClickModel(models=models)


def make_click_model(family: str, scale: int, instantiation: str | None = None,
                     eta: float | None = None):
    """Build a click model from config-style keys."""
    if family == "sdbn":
        if instantiation == "mixed":
            return mixed_click_model("sdbn", scale)
        if instantiation not in SDBN_INSTANTIATIONS:
            raise ValueError(f"unknown click instantiation {instantiation!r}")
        return click_model_table(instantiation, scale)
    if family == "pbm":
        if instantiation == "mixed":
            return mixed_click_model("pbm", scale)
        if eta is None:
            raise ValueError("pbm click model needs eta")
        return pbm_click_model(eta, scale)
    raise ValueError(f"unknown click family {family!r}")
