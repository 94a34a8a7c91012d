"""Append-only store for session-grouped listening events.

All identifiers (items, sessions, users, artists) are dense non-negative
integers, interned from the source strings at ingest time. Events loaded
from a dataset are organic and immutable; the only mutation path is
:func:`append_session`, which adds a whole simulated session at the end of
the log. Reads are thread-safe as long as no append is in progress; the
simulation engine serializes all appends between query phases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidInput, NotFound

ItemId = int
SessionId = int
UserId = int
ArtistId = int

ORGANIC = "organic"
SIMULATED = "simulated"


@dataclass(frozen=True)
class Event:
    """One listening event. round is 0 exactly when origin is organic."""

    session: SessionId
    user: UserId
    item: ItemId
    timestamp: int
    origin: str = ORGANIC
    round_no: int = 0


@dataclass
class ItemCatalog:
    """Per-item artist assignment and exact playcounts for a store snapshot."""

    artist_of: list[ArtistId]
    playcount: list[int]

    @property
    def n_items(self) -> int:
        return len(self.artist_of)


@dataclass
class SessionStore:
    n_items: int
    n_users: int
    n_artists: int
    artist_of: list[ArtistId]
    events: list[Event] = field(default_factory=list)
    session_index: dict[SessionId, list[int]] = field(default_factory=dict)
    user_of_session: dict[SessionId, UserId] = field(default_factory=dict)
    organic_session_ids: list[SessionId] = field(default_factory=list)
    next_session_id: SessionId = 0
    max_timestamp: int = 0

    @classmethod
    def from_sessions(
        cls,
        sessions: Sequence[tuple[UserId, Sequence[ItemId]]],
        n_items: int,
        artist_of: Sequence[ArtistId],
        n_users: int | None = None,
        n_artists: int | None = None,
    ) -> "SessionStore":
        """Build an organic store from (user, items) pairs.

        Timestamps are sequential over the whole event log, so session
        recency follows construction order.
        """
        if len(artist_of) != n_items:
            raise InvalidInput("artist_of must cover every item")
        users = [u for u, _ in sessions]
        store = cls(
            n_items=n_items,
            n_users=n_users if n_users is not None else (max(users) + 1 if users else 0),
            n_artists=n_artists if n_artists is not None else (max(artist_of) + 1 if artist_of else 0),
            artist_of=list(artist_of),
        )
        ts = 0
        for sid, (user, items) in enumerate(sessions):
            if not items:
                raise InvalidInput("sessions must contain at least one item")
            positions = []
            for item in items:
                store._check_item(item)
                positions.append(len(store.events))
                store.events.append(Event(sid, user, item, ts))
                ts += 1
            store.session_index[sid] = positions
            store.user_of_session[sid] = user
            store.organic_session_ids.append(sid)
        store.next_session_id = len(sessions)
        store.max_timestamp = ts - 1 if ts else 0
        return store

    def _check_item(self, item: ItemId) -> None:
        if not 0 <= item < self.n_items:
            raise InvalidInput(f"item id {item} outside catalog range 0..{self.n_items - 1}")

    def append_session(
        self,
        user: UserId,
        items: Sequence[ItemId],
        timestamp_base: int,
        round_no: int,
    ) -> SessionId:
        """Append one simulated session; returns the freshly allocated id.

        Events are appended in list order with strictly increasing
        timestamps starting at timestamp_base. Existing events are never
        touched.
        """
        if not items:
            raise InvalidInput("cannot append an empty session")
        if round_no < 1:
            raise InvalidInput("simulated sessions require round_no >= 1")
        for item in items:
            self._check_item(item)
        sid = self.next_session_id
        self.next_session_id += 1
        positions = []
        for offset, item in enumerate(items):
            ts = timestamp_base + offset
            positions.append(len(self.events))
            self.events.append(Event(sid, user, item, ts, SIMULATED, round_no))
            self.max_timestamp = max(self.max_timestamp, ts)
        self.session_index[sid] = positions
        self.user_of_session[sid] = user
        return sid

    def session_items(self, session: SessionId) -> list[ItemId]:
        """Items of one session in timestamp order, duplicates preserved."""
        try:
            positions = self.session_index[session]
        except KeyError:
            raise NotFound(f"unknown session id {session}") from None
        ordered = sorted(positions, key=lambda p: (self.events[p].timestamp, p))
        return [self.events[p].item for p in ordered]

    def session_ids(self) -> list[SessionId]:
        return sorted(self.session_index)

    def copy(self) -> "SessionStore":
        """Independent copy; events are immutable and shared."""
        return SessionStore(
            n_items=self.n_items,
            n_users=self.n_users,
            n_artists=self.n_artists,
            artist_of=list(self.artist_of),
            events=list(self.events),
            session_index={s: list(p) for s, p in self.session_index.items()},
            user_of_session=dict(self.user_of_session),
            organic_session_ids=list(self.organic_session_ids),
            next_session_id=self.next_session_id,
            max_timestamp=self.max_timestamp,
        )


def recompute_catalog(store: SessionStore) -> ItemCatalog:
    """Exact playcounts over every event currently in the store.

    Counts cover organic and simulated events alike; the artist map is
    carried over from ingest.
    """
    playcount = [0] * store.n_items
    for event in store.events:
        playcount[event.item] += 1
    return ItemCatalog(artist_of=list(store.artist_of), playcount=playcount)


def iter_session_unique_items(store: SessionStore) -> Iterable[tuple[SessionId, set[ItemId]]]:
    """(session, unique item set) pairs, ascending session id."""
    for sid in store.session_ids():
        yield sid, {store.events[p].item for p in store.session_index[sid]}
