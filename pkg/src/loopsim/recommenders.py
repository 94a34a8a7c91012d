"""Recommender contract and the concrete algorithms.

Four families share one fit/recommend contract:

* ``sknn``   - session k-nearest-neighbors with binary cosine similarity
* ``cagh``   - greatest hits of artists similar to the seed's artists
* ``markov`` - first-order within-session co-occurrence counts
* ``pop``    - global playcount ranking

Every returned list is deterministic: higher score first, ties broken by
smaller item id. Only positively scored items are returned, so lists may
be shorter than requested. Seed items are deliberately NOT filtered out
of the results; repeated listening is a real behavior and the
personalized re-ranking countermeasure exists to penalize it.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import EmptyDataset, InvalidInput
from .store import (
    ArtistId,
    ItemCatalog,
    ItemId,
    SessionId,
    SessionStore,
    iter_session_unique_items,
)


@dataclass
class RecommendationList:
    """Ranked (item, score) pairs produced for one seed."""

    seed_session: SessionId
    items: list[tuple[ItemId, float]]

    def item_ids(self) -> list[ItemId]:
        return [item for item, _ in self.items]

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class SknnParams:
    k_neighbors: int = 100
    sample_size: int | None = 1000  # None disables recency sampling

    def validate(self) -> None:
        if self.k_neighbors < 1:
            raise InvalidInput("k_neighbors must be >= 1")
        if self.sample_size is not None and self.k_neighbors > self.sample_size:
            raise InvalidInput("k_neighbors must not exceed sample_size")


@dataclass(frozen=True)
class CaghParams:
    k_artists: int = 10
    hits_per_artist: int = 20

    def validate(self) -> None:
        if self.k_artists < 1 or self.hits_per_artist < 1:
            raise InvalidInput("k_artists and hits_per_artist must be >= 1")


def _top_n(scores: dict[ItemId, float], n: int) -> list[tuple[ItemId, float]]:
    # total order: score descending, then item id ascending
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(item, float(score)) for item, score in ranked[:n] if score > 0]


class Recommender:
    """fit/recommend contract; recommend is read-only after fit."""

    name = "base"

    def fit(self, store: SessionStore, catalog: ItemCatalog) -> None:
        raise NotImplementedError

    def recommend(
        self, seed_items: list[ItemId], n: int, seed_session: SessionId = -1
    ) -> RecommendationList:
        raise NotImplementedError


class SknnRecommender(Recommender):
    """Scores items by similarity-weighted votes of sessions like the seed.

    Similarity is binary cosine over unique-item sets:
    |S intersect T| / sqrt(|S| * |T|). Candidate neighbors are the sessions
    containing at least one seed item, restricted to the ``sample_size``
    most recent sessions (recency = max event timestamp, ties to the
    larger session id). The k most similar candidates vote; similarity
    ties go to the more recent session.
    """

    name = "sknn"

    def __init__(self, params: SknnParams | None = None) -> None:
        self.params = params or SknnParams()
        self.params.validate()
        self._fitted = False

    def fit(self, store: SessionStore, catalog: ItemCatalog) -> None:
        if not store.session_index:
            raise EmptyDataset("sknn requires at least one session")
        sids = []
        item_sets = []
        max_ts: list[int] = []
        for sid, items in iter_session_unique_items(store):
            sids.append(sid)
            item_sets.append(items)
            max_ts.append(max(store.events[p].timestamp for p in store.session_index[sid]))
        # recency rank 0 = most recent
        order = sorted(range(len(sids)), key=lambda i: (-max_ts[i], -sids[i]))
        self._items_of_rank = [
            np.fromiter(sorted(item_sets[i]), dtype=np.int64, count=len(item_sets[i]))
            for i in order
        ]
        self._inv_sqrt_size = np.array(
            [1.0 / math.sqrt(len(item_sets[i])) for i in order], dtype=np.float64
        )
        postings: dict[ItemId, list[int]] = {}
        for rank, i in enumerate(order):
            for item in item_sets[i]:
                postings.setdefault(item, []).append(rank)
        # ranks were appended in ascending order already
        self._postings = {
            item: np.asarray(ranks, dtype=np.int64) for item, ranks in postings.items()
        }
        self._fitted = True

    def recommend(
        self, seed_items: list[ItemId], n: int, seed_session: SessionId = -1
    ) -> RecommendationList:
        if not self._fitted:
            raise InvalidInput("recommend before fit")
        if not seed_items:
            raise InvalidInput("seed_items must be non-empty")
        seed_set = sorted(set(seed_items))
        cutoff = self.params.sample_size
        slices = []
        for item in seed_set:
            ranks = self._postings.get(item)
            if ranks is None:
                continue
            if cutoff is not None:
                ranks = ranks[: np.searchsorted(ranks, cutoff)]
            slices.append(ranks)
        if not slices:
            return RecommendationList(seed_session, [])
        concat = np.concatenate(slices)
        if concat.size == 0:
            # seed items exist but only outside the recency sample window
            return RecommendationList(seed_session, [])
        cand_ranks, overlap = np.unique(concat, return_counts=True)
        sims = overlap / math.sqrt(len(seed_set)) * self._inv_sqrt_size[cand_ranks]
        # most similar first; ties toward more recent (smaller rank)
        keep = np.lexsort((cand_ranks, -sims))[: self.params.k_neighbors]
        kept_ranks = cand_ranks[keep]
        kept_sims = sims[keep]
        votes = [self._items_of_rank[r] for r in kept_ranks]
        items = np.concatenate(votes)
        weights = np.repeat(kept_sims, [len(v) for v in votes])
        uniq, inverse = np.unique(items, return_inverse=True)
        scores = np.bincount(inverse, weights=weights, minlength=len(uniq))
        top = np.lexsort((uniq, -scores))[:n]
        return RecommendationList(
            seed_session, [(int(uniq[t]), float(scores[t])) for t in top]
        )


class CaghRecommender(Recommender):
    """Greatest hits of the seed's artists and of artists similar to them.

    Artist similarity is binary cosine over the sets of sessions each
    artist appears in. Candidate artists are the seed artists (weight 1)
    plus the k most similar other artists (weight = max similarity over
    seed artists, ties to the smaller artist id). A candidate item scores
    artist weight times its playcount.
    """

    name = "cagh"

    def __init__(self, params: CaghParams | None = None) -> None:
        self.params = params or CaghParams()
        self.params.validate()
        self._fitted = False

    def fit(self, store: SessionStore, catalog: ItemCatalog) -> None:
        if not store.session_index:
            raise EmptyDataset("cagh requires at least one session")
        if len(catalog.artist_of) != store.n_items:
            raise InvalidInput("catalog artist map must cover every item")
        self._artist_of = catalog.artist_of
        self._artist_sessions: dict[ArtistId, set[SessionId]] = {}
        self._artists_in_session: dict[SessionId, set[ArtistId]] = {}
        for sid, items in iter_session_unique_items(store):
            artists = {catalog.artist_of[i] for i in items}
            self._artists_in_session[sid] = artists
            for a in artists:
                self._artist_sessions.setdefault(a, set()).add(sid)
        hits: dict[ArtistId, list[tuple[ItemId, int]]] = {}
        for item, count in enumerate(catalog.playcount):
            if count > 0:
                hits.setdefault(catalog.artist_of[item], []).append((item, count))
        self._hits = {
            a: sorted(pairs, key=lambda p: (-p[1], p[0]))[: self.params.hits_per_artist]
            for a, pairs in hits.items()
        }
        self._playcount = catalog.playcount
        self._similar_cache: dict[ArtistId, list[tuple[ArtistId, float]]] = {}
        self._fitted = True

    def artist_similarity(self, a: ArtistId, b: ArtistId) -> float:
        """Binary cosine between the session sets of two artists."""
        sa = self._artist_sessions.get(a, set())
        sb = self._artist_sessions.get(b, set())
        if not sa or not sb:
            return 0.0
        inter = len(sa & sb)
        if inter == 0:
            return 0.0
        return inter / math.sqrt(len(sa) * len(sb))

    def _similar_artists(self, a: ArtistId) -> list[tuple[ArtistId, float]]:
        cached = self._similar_cache.get(a)
        if cached is not None:
            return cached
        sa = self._artist_sessions.get(a, set())
        co: Counter[ArtistId] = Counter()
        for sid in sa:
            co.update(self._artists_in_session[sid])
        sims = []
        for b, inter in co.items():
            if b == a:
                continue
            sims.append((b, inter / math.sqrt(len(sa) * len(self._artist_sessions[b]))))
        sims.sort(key=lambda p: (-p[1], p[0]))
        self._similar_cache[a] = sims
        return sims

    def recommend(
        self, seed_items: list[ItemId], n: int, seed_session: SessionId = -1
    ) -> RecommendationList:
        if not self._fitted:
            raise InvalidInput("recommend before fit")
        if not seed_items:
            raise InvalidInput("seed_items must be non-empty")
        seed_artists = {self._artist_of[i] for i in set(seed_items)}
        weight: dict[ArtistId, float] = {a: 1.0 for a in seed_artists}
        best: dict[ArtistId, float] = {}
        for a in sorted(seed_artists):
            for b, sim in self._similar_artists(a):
                if b not in seed_artists and sim > best.get(b, 0.0):
                    best[b] = sim
        ranked = sorted(best.items(), key=lambda p: (-p[1], p[0]))
        for b, sim in ranked[: self.params.k_artists]:
            weight[b] = sim
        scores: dict[ItemId, float] = {}
        for artist, w in weight.items():
            for item, count in self._hits.get(artist, []):
                scores[item] = w * count
        return RecommendationList(seed_session, _top_n(scores, n))


class MarkovRecommender(Recommender):
    """First-order co-occurrence: score = times seen in a session with a seed item."""

    name = "markov"

    def __init__(self) -> None:
        self._fitted = False

    def fit(self, store: SessionStore, catalog: ItemCatalog) -> None:
        if not store.session_index:
            raise EmptyDataset("markov requires at least one session")
        pairs: Counter[tuple[ItemId, ItemId]] = Counter()
        for _, items in iter_session_unique_items(store):
            pairs.update(combinations(sorted(items), 2))
        self._co: dict[ItemId, Counter[ItemId]] = {}
        for (a, b), count in pairs.items():
            self._co.setdefault(a, Counter())[b] = count
            self._co.setdefault(b, Counter())[a] = count
        self._fitted = True

    def recommend(
        self, seed_items: list[ItemId], n: int, seed_session: SessionId = -1
    ) -> RecommendationList:
        if not self._fitted:
            raise InvalidInput("recommend before fit")
        if not seed_items:
            raise InvalidInput("seed_items must be non-empty")
        scores: Counter[ItemId] = Counter()
        for item in set(seed_items):
            scores.update(self._co.get(item, {}))
        return RecommendationList(
            seed_session, _top_n({i: float(c) for i, c in scores.items()}, n)
        )


class PopRecommender(Recommender):
    """Global popularity: most-played items first, regardless of seed."""

    name = "pop"

    def __init__(self) -> None:
        self._fitted = False

    def fit(self, store: SessionStore, catalog: ItemCatalog) -> None:
        if not store.session_index:
            raise EmptyDataset("pop requires at least one session")
        played = {i: float(c) for i, c in enumerate(catalog.playcount) if c > 0}
        self._ranked = _top_n(played, len(played))
        self._fitted = True

    def recommend(
        self, seed_items: list[ItemId], n: int, seed_session: SessionId = -1
    ) -> RecommendationList:
        if not self._fitted:
            raise InvalidInput("recommend before fit")
        if not seed_items:
            raise InvalidInput("seed_items must be non-empty")
        return RecommendationList(seed_session, list(self._ranked[:n]))


ALGORITHMS = ("sknn", "cagh", "markov", "pop")


def make_recommender(
    algorithm: str,
    sknn: SknnParams | None = None,
    cagh: CaghParams | None = None,
) -> Recommender:
    if algorithm == "sknn":
        return SknnRecommender(sknn)
    if algorithm == "cagh":
        return CaghRecommender(cagh)
    if algorithm == "markov":
        return MarkovRecommender()
    if algorithm == "pop":
        return PopRecommender()
    raise InvalidInput(f"unknown algorithm {algorithm!r}, expected one of {ALGORITHMS}")
