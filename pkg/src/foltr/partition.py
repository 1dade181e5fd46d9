"""Per-client data views for the non-IID regimes and their IID baselines.

Four kinds of skew are materialized as explicit, immutable plans:

* preference skew: on a 4-intent collection, each of 4 clients judges
  relevance under its own (per-query re-shuffled) intent;
* label skew: each client owns the query-document pairs of a fixed set of
  relevance labels, pairwise disjoint across clients;
* click skew: all clients share the full dataset but click according to
  different click-model instantiations;
* quantity skew: clients issue different numbers of queries per round.

Plans are pure functions of (dataset, parameters, seed): rebuilding with
the same inputs yields the identical plan.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .clicks import PBM_ETAS, SDBN_INSTANTIATIONS
from .datasets import Dataset, Query
from .errors import DataError
from .seeding import STREAM_PLAN, derive_rng


class QueryView(NamedTuple):
    """One entry of a client's sampling pool: a query as this client sees it."""

    query_id: str
    features: np.ndarray
    labels: np.ndarray
    ideal: float  # ideal DCG at the SERP cutoff, cached for per-impression nDCG


@dataclass(frozen=True)
class ClientView:
    """How one client sees the training data.

    label_mode selects the label source: "graded" reads the dataset labels,
    "intent" reads the per-query intent column in intent_assignment.
    doc_subsets, when set, restricts a query to the owned candidate rows;
    queries with no owned rows are absent from query_indices.
    """

    client_id: int
    query_indices: tuple[int, ...]
    label_mode: str = "graded"
    doc_subsets: dict[int, np.ndarray] | None = None
    intent_assignment: np.ndarray | None = None
    click_spec: dict | None = None
    queries_per_round: int | None = None

    def query_labels(self, query_index: int, query: Query) -> np.ndarray:
        if self.label_mode == "intent":
            labels = query.intent_labels[:, self.intent_assignment[query_index]]
        else:
            labels = query.labels
        if self.doc_subsets is not None:
            labels = labels[self.doc_subsets[query_index]]
        return labels

    def query_features(self, query_index: int, query: Query) -> np.ndarray:
        if self.doc_subsets is not None:
            return query.features[self.doc_subsets[query_index]]
        return query.features


@dataclass(frozen=True)
class PartitionPlan:
    scheme: str
    num_clients: int
    seed: int
    clients: tuple[ClientView, ...]


def partition_iid(dataset: Dataset, num_clients: int, seed: int = 0) -> PartitionPlan:
    """Every client samples from the full training set with full labels."""
    if num_clients < 1:
        raise ValueError("num_clients must be positive")
    pool = tuple(range(dataset.num_queries))
    clients = tuple(ClientView(client_id=c, query_indices=pool)
                    for c in range(num_clients))
    return PartitionPlan("iid", num_clients, seed, clients)


def partition_by_intent(dataset: Dataset, num_clients: int = 4, seed: int = 0) -> PartitionPlan:
    """Preference skew: one intent per client, re-shuffled per query.

    For each query the four intent columns are randomly permuted, then
    client c reads permuted column c. The shuffle balances learning
    difficulty across clients while keeping exactly one intent per client
    per query.
    """
    if not dataset.has_intents:
        raise DataError("preference-skew partition needs a 4-intent dataset")
    num_intents = dataset.queries[0].intent_labels.shape[1]
    if num_clients != num_intents:
        raise ValueError(f"preference skew requires exactly {num_intents} clients")
    rng = derive_rng(seed, STREAM_PLAN, 1)
    assignment = np.vstack([rng.permutation(num_intents) for _ in range(dataset.num_queries)])
    assignment.setflags(write=False)
    pool = tuple(range(dataset.num_queries))
    clients = tuple(
        ClientView(client_id=c, query_indices=pool, label_mode="intent",
                   intent_assignment=assignment[:, c])
        for c in range(num_clients))
    return PartitionPlan("intent", num_clients, seed, clients)


def merge_intents_iid(dataset: Dataset) -> Dataset:
    """Single binary label view: relevant iff relevant under any intent."""
    if not dataset.has_intents:
        raise DataError("merge needs a 4-intent dataset")
    queries = tuple(
        Query(q.query_id, q.doc_keys, q.features,
              (q.intent_labels.max(axis=1) > 0).astype(np.int64))
        for q in dataset.queries)
    return Dataset(dataset.feature_count, 2, queries, dataset.role)


def partition_by_label_combinations(dataset: Dataset, labels_per_client: int,
                                    num_clients: int, seed: int = 0) -> PartitionPlan:
    """Label skew: deal label k-combinations to clients, split pairs per label.

    All k-combinations of the grade set are shuffled and dealt round-robin
    to clients; each grade's query-document pairs are then shuffled and
    divided equally (sizes differ by at most one) among the clients owning
    that grade. Client pair sets are pairwise disjoint and cover the
    dataset.
    """
    r = dataset.relevance_scale
    if labels_per_client < 1 or labels_per_client > r:
        raise ValueError(f"labels_per_client must be in [1, {r}]")
    if num_clients < 1:
        raise ValueError("num_clients must be positive")
    combos = list(itertools.combinations(range(r), labels_per_client))
    rng = derive_rng(seed, STREAM_PLAN, 2)
    rng.shuffle(combos)

    client_labels: list[set[int]] = [set() for _ in range(num_clients)]
    for j in range(max(num_clients, len(combos))):
        client_labels[j % num_clients].update(combos[j % len(combos)])
    owners = {g: sorted(c for c in range(num_clients) if g in client_labels[c])
              for g in range(r)}
    if any(not own for own in owners.values()):
        raise DataError("a relevance label ended up with no owning client")

    pairs_by_label: dict[int, list[tuple[int, int]]] = {g: [] for g in range(r)}
    for qi, q in enumerate(dataset.queries):
        for pos, grade in enumerate(q.labels):
            pairs_by_label[int(grade)].append((qi, pos))

    owned: list[dict[int, list[int]]] = [dict() for _ in range(num_clients)]
    for g in range(r):
        pairs = pairs_by_label[g]
        order = rng.permutation(len(pairs))
        for share, client in zip(np.array_split(order, len(owners[g])), owners[g]):
            for idx in share:
                qi, pos = pairs[idx]
                owned[client].setdefault(qi, []).append(pos)

    clients = []
    for c in range(num_clients):
        subsets = {qi: np.array(sorted(poss), dtype=np.intp)
                   for qi, poss in owned[c].items()}
        clients.append(ClientView(
            client_id=c,
            query_indices=tuple(sorted(subsets)),
            doc_subsets=subsets))
    return PartitionPlan("label-skew", num_clients, seed, tuple(clients))


def partition_by_click_preference(dataset: Dataset, family: str, seed: int = 0) -> PartitionPlan:
    """Click skew: shared data, one click-model instantiation per client."""
    if family == "sdbn":
        specs = [{"family": "sdbn", "instantiation": name} for name in SDBN_INSTANTIATIONS]
    elif family == "pbm":
        specs = [{"family": "pbm", "eta": eta} for eta in PBM_ETAS]
    else:
        raise ValueError(f"unknown click family {family!r}")
    pool = tuple(range(dataset.num_queries))
    clients = tuple(
        ClientView(client_id=c, query_indices=pool, click_spec=spec)
        for c, spec in enumerate(specs))
    return PartitionPlan(f"click-skew-{family}", len(specs), seed, clients)


def assign_query_quotas(plan: PartitionPlan, quantities) -> PartitionPlan:
    """Quantity skew overlay: client c issues quantities[c] queries per round."""
    quantities = list(quantities)
    if len(quantities) != plan.num_clients:
        raise ValueError(f"{len(quantities)} quantities for {plan.num_clients} clients")
    if any(q < 1 for q in quantities):
        raise ValueError("every per-round query quota must be >= 1")
    clients = tuple(replace(view, queries_per_round=int(q))
                    for view, q in zip(plan.clients, quantities))
    return PartitionPlan(plan.scheme + "+quantity", plan.num_clients, plan.seed, clients)


def plan_manifest(plan: PartitionPlan, dataset: Dataset) -> dict:
    """JSON-ready description of a plan, for inspection and reuse."""
    clients = []
    for view in plan.clients:
        entry: dict = {
            "client_id": view.client_id,
            "query_ids": [dataset.queries[qi].query_id for qi in view.query_indices],
        }
        if view.doc_subsets is not None:
            entry["pairs"] = {
                dataset.queries[qi].query_id:
                    [dataset.queries[qi].doc_keys[p] for p in view.doc_subsets[qi]]
                for qi in view.query_indices}
        if view.intent_assignment is not None:
            entry["intent_by_query"] = {
                dataset.queries[qi].query_id: int(view.intent_assignment[qi])
                for qi in view.query_indices}
        if view.click_spec is not None:
            entry["click_model"] = view.click_spec
        if view.queries_per_round is not None:
            entry["queries_per_round"] = view.queries_per_round
        clients.append(entry)
    return {"scheme": plan.scheme, "num_clients": plan.num_clients,
            "seed": plan.seed, "clients": clients}
