"""Concentration, coverage, popularity, and accuracy measurements.

All operations are pure. Reductions run in a fixed order over inputs
sorted by the caller, so float results are reproducible bit-for-bit.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInput, UndefinedMetric
from .store import ItemCatalog, ItemId


def gini(counts: Sequence[float]) -> float:
    """Gini index of a count vector, 0 for uniform, -> 1 for concentrated.

    With x sorted ascending and n = len(x):

        G = sum_i (2i - n - 1) * x_i / (n * sum(x)),  i = 1..n

    which equals half the mean absolute difference divided by the mean.
    G lies in [0, 1 - 1/n].
    """
    xs = np.sort(np.asarray(counts, dtype=np.float64))
    if xs.size == 0:
        raise UndefinedMetric("gini of an empty vector")
    if xs[0] < 0:
        raise InvalidInput("gini requires non-negative counts")
    total = float(xs.sum())
    if total == 0:
        raise UndefinedMetric("gini of an all-zero vector")
    n = xs.size
    i = np.arange(1, n + 1, dtype=np.float64)
    return float(((2.0 * i - n - 1.0) * xs).sum() / (n * total))


def coverage(lists: Iterable[Sequence[ItemId]]) -> int:
    """Number of distinct items appearing anywhere in the given lists."""
    seen: set[ItemId] = set()
    for items in lists:
        seen.update(items)
    return len(seen)


def popularity_abs(lists: Sequence[Sequence[ItemId]], catalog: ItemCatalog) -> float:
    """Mean playcount over every recommended slot (duplicates count)."""
    slots = [catalog.playcount[item] for items in lists for item in items]
    if not slots:
        raise UndefinedMetric("popularity of zero recommendation slots")
    return float(np.mean(np.asarray(slots, dtype=np.float64)))


def popularity_rel(
    lists: Sequence[Sequence[ItemId]],
    seeds: Sequence[ItemId],
    catalog: ItemCatalog,
) -> float:
    """popularity_abs minus the mean playcount of the seed tracks."""
    if not seeds:
        raise UndefinedMetric("popularity_rel without seed tracks")
    seed_mean = float(np.mean(np.asarray([catalog.playcount[s] for s in seeds], dtype=np.float64)))
    return popularity_abs(lists, catalog) - seed_mean


def prf_at_k(
    items: Sequence[ItemId],
    relevant: set[ItemId],
    k: int = 10,
) -> tuple[float, float, float]:
    """Precision, recall, and F1 of the top-k prefix against a relevant set.

    Precision divides by k even when the list is shorter; a recommender
    that cannot fill the list is charged for the empty slots.
    """
    if k < 1:
        raise InvalidInput("k must be >= 1")
    if not relevant:
        raise UndefinedMetric("recall against an empty relevant set")
    hits = len(set(items[:k]) & relevant)
    precision = hits / k
    recall = hits / len(relevant)
    return precision, recall, _f1(precision, recall)


def aggregate_prf(pairs: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Mean precision and recall over seeds, F1 of the aggregated means."""
    if not pairs:
        raise UndefinedMetric("no seeds with a non-empty relevant set")
    arr = np.asarray(pairs, dtype=np.float64)
    precision = float(arr[:, 0].mean())
    recall = float(arr[:, 1].mean())
    return precision, recall, _f1(precision, recall)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)
