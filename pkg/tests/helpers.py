"""Shared builders and independent oracles used across the test modules."""

from __future__ import annotations

import math

import numpy as np

from loopsim.store import SessionStore, iter_session_unique_items, recompute_catalog


def make_store(sessions, n_items, artist_of=None, n_artists=None):
    """Store + catalog from (user, items) pairs; artists default to item % n_artists."""
    if artist_of is None:
        n_artists = n_artists or max(1, min(4, n_items))
        artist_of = [i % n_artists for i in range(n_items)]
    store = SessionStore.from_sessions(
        sessions, n_items=n_items, artist_of=artist_of, n_artists=max(artist_of) + 1
    )
    return store, recompute_catalog(store)


def random_store(rng: np.random.Generator, max_sessions: int = 50, n_items: int = 30):
    n_sessions = int(rng.integers(1, max_sessions + 1))
    sessions = []
    for user in range(n_sessions):
        length = int(rng.integers(1, 9))
        items = rng.integers(0, n_items, size=length).tolist()
        sessions.append((user, items))
    n_artists = int(rng.integers(1, 8))
    artist_of = rng.integers(0, n_artists, size=n_items).tolist()
    store = SessionStore.from_sessions(
        sessions, n_items=n_items, artist_of=artist_of, n_artists=n_artists
    )
    return store, recompute_catalog(store)


def sknn_oracle(store, seed_items, n, k_neighbors):
    """Exhaustive session scan mirroring the documented scoring order.

    Scores ALL sessions (no recency sampling), keeps the k most similar
    with ties toward more recent sessions, accumulates similarity votes,
    and ranks by (score desc, item asc).
    """
    seed_set = set(seed_items)
    rows = []
    for sid, items in iter_session_unique_items(store):
        max_ts = max(store.events[p].timestamp for p in store.session_index[sid])
        rows.append((sid, items, max_ts))
    rows.sort(key=lambda t: (-t[2], -t[0]))
    cands = []
    for rank, (sid, items, _) in enumerate(rows):
        inter = len(items & seed_set)
        if inter:
            sim = inter / math.sqrt(len(seed_set)) * (1.0 / math.sqrt(len(items)))
            cands.append((sim, rank, items))
    cands.sort(key=lambda t: (-t[0], t[1]))
    scores: dict[int, float] = {}
    for sim, _, items in cands[:k_neighbors]:
        for item in sorted(items):
            scores[item] = scores.get(item, 0.0) + sim
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(item, score) for item, score in ranked[:n] if score > 0]


def markov_oracle(store, seed_items, n):
    """Direct co-occurrence count: sessions containing both seed and item."""
    seeds = set(seed_items)
    scores: dict[int, float] = {}
    for _, items in iter_session_unique_items(store):
        for s in seeds & items:
            for i in items:
                if i != s:
                    scores[i] = scores.get(i, 0.0) + 1.0
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(item, score) for item, score in ranked[:n] if score > 0]


def gini_mad(xs):
    """Gini via the mean-absolute-difference identity, independent arithmetic."""
    xs = [float(x) for x in xs]
    n = len(xs)
    mean = sum(xs) / n
    mad = sum(abs(a - b) for a in xs for b in xs) / (n * n)
    return mad / (2.0 * mean)
