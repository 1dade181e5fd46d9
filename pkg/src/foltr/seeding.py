"""Deterministic RNG stream derivation.

Every source of randomness in a run is a `numpy` generator derived from the
run's master seed plus a stream tag, so that reruns are bit-identical and
client rounds can be executed in any order (or concurrently) without
perturbing results.
"""
from __future__ import annotations

import numpy as np

# Stream tags keep independent uses of the master seed from colliding.
STREAM_INIT = 1       # ranker parameter initialization
STREAM_CLIENT = 2     # one stream per (client, round)
STREAM_PLAN = 3       # partition plan construction
STREAM_WARMUP = 4     # centralized warm-up training
STREAM_SHARE = 5      # shared-data subset selection


def derive_rng(*entropy: int) -> np.random.Generator:
    """Generator for an entropy tuple; same tuple, same stream."""
    return np.random.default_rng(np.random.SeedSequence([int(e) for e in entropy]))


def client_rng(master_seed: int, client_id: int, round_index: int) -> np.random.Generator:
    """The per-(client, round) stream used for all of a client's local work.

    Deriving from (client, round) rather than sharing one stream makes the
    round loop schedule-independent: serial and concurrent execution see
    identical draws.
    """
    return derive_rng(master_seed, STREAM_CLIENT, client_id, round_index)
