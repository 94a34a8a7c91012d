"""Penalty-based re-ranking countermeasures.

Two strategies move items back in a recommendation list before it is
shown:

* strategy1 (global): penalize items by how often they were recommended
  to anyone in the previous round, p = floor(10 * ln(count)) for count > 1.
* strategy2 (personal): penalize items the user already consumed in the
  simulation, p = 10 * consumptions, so two prior listens move a track
  back 20 positions.

A penalty p sends the item at 0-based position i toward position i + p;
the list is stably re-sorted by that target. Exactly one strategy (or
none) is active per run; strategies do not compose.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import InvalidInput
from .recommenders import RecommendationList
from .store import ItemId, UserId

STRATEGIES = ("none", "strategy1", "strategy2")


@dataclass
class RerankState:
    """Counts driving the penalties.

    previous_recs is replaced wholesale at every round boundary with the
    post-reranking exposure counts of that round; previous_consumptions
    accumulates accepted (item, user) pairs over the whole run. Organic
    history is deliberately not counted.
    """

    previous_recs: dict[ItemId, int] = field(default_factory=dict)
    previous_consumptions: dict[tuple[ItemId, UserId], int] = field(default_factory=dict)


def penalty_strategy1(count: int) -> int:
    """Positions to move back an item recommended ``count`` times last round."""
    if count <= 1:
        return 0
    return math.floor(10.0 * math.log(count))


def penalty_strategy2(consumptions: int) -> int:
    """Positions to move back an item the user consumed ``consumptions`` times."""
    return 10 * consumptions


def apply_penalties(
    rec_list: RecommendationList, penalty_of: Mapping[ItemId, int]
) -> RecommendationList:
    """Stably re-sort items by (original index + penalty).

    Always a permutation of the input; scores travel with their items.
    Ties on the target position keep original relative order, so a zero
    or uniform penalty map returns the list unchanged.
    """
    keyed = []
    for idx, (item, score) in enumerate(rec_list.items):
        penalty = penalty_of.get(item, 0)
        if penalty < 0:
            raise InvalidInput("penalties must be non-negative")
        keyed.append((idx + penalty, idx, item, score))
    keyed.sort(key=lambda t: (t[0], t[1]))
    return RecommendationList(rec_list.seed_session, [(item, score) for _, _, item, score in keyed])


def rerank(
    strategy: str,
    rec_list: RecommendationList,
    state: RerankState,
    user: UserId,
) -> RecommendationList:
    """Apply the configured strategy to one list for one user."""
    if strategy == "none":
        return rec_list
    if strategy == "strategy1":
        penalty_of = {
            item: penalty_strategy1(state.previous_recs.get(item, 0))
            for item, _ in rec_list.items
        }
    elif strategy == "strategy2":
        penalty_of = {
            item: penalty_strategy2(state.previous_consumptions.get((item, user), 0))
            for item, _ in rec_list.items
        }
    else:
        raise InvalidInput(f"unknown rerank strategy {strategy!r}, expected one of {STRATEGIES}")
    return apply_penalties(rec_list, penalty_of)


def update_state_after_round(
    state: RerankState,
    all_lists: Iterable[RecommendationList],
    accepted: Iterable[tuple[ItemId, UserId]],
) -> RerankState:
    """Roll the state across a round boundary.

    previous_recs becomes the exact per-item exposure count of this
    round's (post-reranking) lists; consumption counts grow by this
    round's accepted pairs.
    """
    recs: Counter[ItemId] = Counter()
    for rec_list in all_lists:
        recs.update(rec_list.item_ids())
    consumptions = dict(state.previous_consumptions)
    for item, user in accepted:
        consumptions[(item, user)] = consumptions.get((item, user), 0) + 1
    return RerankState(previous_recs=dict(recs), previous_consumptions=consumptions)
