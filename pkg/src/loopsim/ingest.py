"""Dataset ingestion: canonical TSV parsing/writing and synthetic generation.

The canonical event file is UTF-8, tab-separated, ``\\n`` line ends, with a
fixed header. Converters from raw public dataset dumps are user-side
scripts; this module only speaks the canonical schema.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Union

import numpy as np

from .errors import InvalidInput, ParseError
from .store import (
    ORGANIC,
    SIMULATED,
    Event,
    ItemCatalog,
    SessionStore,
    recompute_catalog,
)

TSV_COLUMNS = ("session_id", "user_id", "item_id", "artist_id", "timestamp", "origin", "round")
TSV_HEADER = "\t".join(TSV_COLUMNS)

Source = Union[str, Path, IO[str]]


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic Zipf dataset generator."""

    n_sessions: int
    n_items: int
    n_artists: int
    zipf_exponent: float
    session_len_min: int = 3
    session_len_max: int = 10
    rng_seed: int = 0

    def validate(self) -> None:
        if self.n_sessions < 1 or self.n_items < 1:
            raise InvalidInput("n_sessions and n_items must be positive")
        if not 1 <= self.n_artists <= self.n_items:
            raise InvalidInput("need 1 <= n_artists <= n_items")
        if not self.zipf_exponent > 0:
            raise InvalidInput("zipf_exponent must be > 0")
        if not 1 <= self.session_len_min <= self.session_len_max:
            raise InvalidInput("need 1 <= session_len_min <= session_len_max")


class _Interner:
    """First-appearance interning of source-string ids to dense integers."""

    def __init__(self) -> None:
        self._ids: dict[str, int] = {}

    def intern(self, token: str) -> int:
        return self._ids.setdefault(token, len(self._ids))

    def __len__(self) -> int:
        return len(self._ids)


def _parse_lines(lines: Iterable[str]) -> tuple[SessionStore, ItemCatalog]:
    sessions = _Interner()
    users = _Interner()
    items = _Interner()
    artists = _Interner()
    artist_of: dict[int, int] = {}
    rows: list[tuple[int, int, int, int, str, int, int]] = []
    session_user: dict[int, int] = {}
    session_origin: dict[int, tuple[str, int]] = {}

    line_no = 0
    saw_header = False
    for raw in lines:
        line_no += 1
        line = raw.rstrip("\n")
        if line_no == 1:
            if line != TSV_HEADER:
                raise ParseError(f"expected header {TSV_HEADER!r}", line_no)
            saw_header = True
            continue
        if line == "":
            continue
        fields = line.split("\t")
        if len(fields) != len(TSV_COLUMNS):
            raise ParseError(f"expected {len(TSV_COLUMNS)} columns, got {len(fields)}", line_no)
        sid_s, uid_s, item_s, artist_s, ts_s, origin, round_s = fields
        try:
            ts = int(ts_s)
            round_no = int(round_s)
        except ValueError:
            raise ParseError("timestamp and round must be integers", line_no) from None
        if ts < 0 or round_no < 0:
            raise ParseError("timestamp and round must be non-negative", line_no)
        if origin not in (ORGANIC, SIMULATED):
            raise ParseError(f"origin must be organic or simulated, got {origin!r}", line_no)
        if (round_no == 0) != (origin == ORGANIC):
            raise ParseError("round must be 0 exactly for organic events", line_no)

        sid = sessions.intern(sid_s)
        uid = users.intern(uid_s)
        item = items.intern(item_s)
        artist = artists.intern(artist_s)
        if artist_of.setdefault(item, artist) != artist:
            raise ParseError(f"item {item_s!r} listed with two different artists", line_no)
        if session_user.setdefault(sid, uid) != uid:
            raise ParseError(f"session {sid_s!r} listed with two different users", line_no)
        if session_origin.setdefault(sid, (origin, round_no)) != (origin, round_no):
            raise ParseError(f"session {sid_s!r} mixes origins or rounds", line_no)
        rows.append((sid, uid, item, artist, origin, ts, round_no))

    if not saw_header:
        raise ParseError(f"expected header {TSV_HEADER!r}", 1)

    store = SessionStore(
        n_items=len(items),
        n_users=len(users),
        n_artists=len(artists),
        artist_of=[artist_of[i] for i in range(len(items))],
    )
    max_ts = 0
    for sid, uid, item, artist, origin, ts, round_no in rows:
        store.session_index.setdefault(sid, []).append(len(store.events))
        store.events.append(Event(sid, uid, item, ts, origin, round_no))
        store.user_of_session[sid] = uid
        max_ts = max(max_ts, ts)
    store.organic_session_ids = sorted(
        sid for sid, (origin, _) in session_origin.items() if origin == ORGANIC
    )
    store.next_session_id = len(sessions)
    store.max_timestamp = max_ts
    return store, recompute_catalog(store)


def parse_events_tsv(source: Source) -> tuple[SessionStore, ItemCatalog]:
    """Parse a canonical TSV file (path or open text stream).

    Origin and round columns are honored as written, so a dump taken after
    a simulation round-trips losslessly. Duplicate (session, timestamp,
    item) triples are accepted; real logs contain them.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return _parse_lines(fh)
    return _parse_lines(source)


def dumps_events_tsv(store: SessionStore, catalog: ItemCatalog | None = None) -> str:
    """Serialize a store to the canonical TSV text, deterministically.

    Sessions are emitted in ascending id order, events inside a session in
    timestamp order; two stores with equal content produce equal bytes.
    """
    artist_of = catalog.artist_of if catalog is not None else store.artist_of
    out = io.StringIO()
    out.write(TSV_HEADER + "\n")
    for sid in store.session_ids():
        positions = sorted(store.session_index[sid], key=lambda p: (store.events[p].timestamp, p))
        for p in positions:
            e = store.events[p]
            out.write(
                f"{e.session}\t{e.user}\t{e.item}\t{artist_of[e.item]}\t"
                f"{e.timestamp}\t{e.origin}\t{e.round_no}\n"
            )
    return out.getvalue()


def write_events_tsv(store: SessionStore, catalog: ItemCatalog, path: str | Path) -> None:
    """Write the canonical TSV file; inverse of parse up to id renaming."""
    Path(path).write_text(dumps_events_tsv(store, catalog), encoding="utf-8", newline="")


def generate_synthetic(cfg: SynthConfig) -> tuple[SessionStore, ItemCatalog]:
    """Deterministic synthetic dataset with Zipf-skewed item popularity.

    Item ids are assigned by popularity rank (id 0 is the most popular) and
    draws are i.i.d. from a bounded Zipf over the catalog via inverse-CDF
    on a precomputed table. Each item gets one uniformly random artist, and
    every session belongs to its own user.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.rng_seed)

    artist_of = rng.integers(0, cfg.n_artists, size=cfg.n_items)
    lengths = rng.integers(cfg.session_len_min, cfg.session_len_max + 1, size=cfg.n_sessions)
    weights = 1.0 / np.arange(1, cfg.n_items + 1, dtype=np.float64) ** cfg.zipf_exponent
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    draws = np.searchsorted(cdf, rng.random(int(lengths.sum())), side="right")

    sessions = []
    offset = 0
    for i, length in enumerate(lengths):
        sessions.append((i, draws[offset : offset + length].tolist()))
        offset += length
    store = SessionStore.from_sessions(
        sessions,
        n_items=cfg.n_items,
        artist_of=artist_of.tolist(),
        n_users=cfg.n_sessions,
        n_artists=cfg.n_artists,
    )
    return store, recompute_catalog(store)
