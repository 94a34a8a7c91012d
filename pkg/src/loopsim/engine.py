"""Longitudinal simulation loop: generate, accept, retrain, measure.

Each round picks one random seed track per organic session, asks the
fitted model for a playlist, optionally re-ranks it, accepts a random
subset of the tracks, and appends seed + accepted tracks to the store as
a new simulated session. The model is refit every ``retrain_every``
rounds on the grown store, and metrics are taken right after each refit,
always against the round-1 seed assignment so the longitudinal series is
measured on a fixed query set. A 30-round run with retraining every third
round therefore yields 10 report rows.

Determinism contract: identical (store, config) inputs produce a
byte-identical serialized manifest, no matter how many worker threads the
LOOPSIM_THREADS environment variable allows.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import InvalidInput, SimulationAborted
from .ingest import dumps_events_tsv
from .metrics import aggregate_prf, coverage, gini, popularity_abs, popularity_rel, prf_at_k
from .recommenders import (
    ALGORITHMS,
    CaghParams,
    RecommendationList,
    Recommender,
    SknnParams,
    make_recommender,
)
from .reranking import STRATEGIES, RerankState, rerank, update_state_after_round
from .rng import pick_index, sample_positions
from .store import ItemCatalog, ItemId, SessionId, SessionStore, UserId, recompute_catalog

REPORT_CSV_HEADER = "iteration,gini,coverage,pop_abs,pop_rel,precision,recall,f1"
METRIC_FIELDS = ("gini", "coverage", "pop_abs", "pop_rel", "precision", "recall", "f1")


@dataclass(frozen=True)
class SimulationConfig:
    algorithm: str = "sknn"
    rerank: str = "none"
    rounds: int = 30
    playlist_len: int = 30
    accept_n: int = 10
    retrain_every: int = 3
    metrics_k: int = 10
    rng_seed: int = 0
    sknn: SknnParams = SknnParams()
    cagh: CaghParams = CaghParams()

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise InvalidInput(f"unknown algorithm {self.algorithm!r}")
        if self.rerank not in STRATEGIES:
            raise InvalidInput(f"unknown rerank strategy {self.rerank!r}")
        if self.rounds < 1:
            raise InvalidInput("rounds must be >= 1")
        if self.retrain_every < 1:
            raise InvalidInput("retrain_every must be >= 1")
        if self.playlist_len < 1:
            raise InvalidInput("playlist_len must be >= 1")
        if not 0 <= self.accept_n <= self.playlist_len:
            raise InvalidInput("need 0 <= accept_n <= playlist_len")
        if self.metrics_k < 1:
            raise InvalidInput("metrics_k must be >= 1")
        self.sknn.validate()
        self.cagh.validate()

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "rerank": self.rerank,
            "rounds": self.rounds,
            "playlist_len": self.playlist_len,
            "accept_n": self.accept_n,
            "retrain_every": self.retrain_every,
            "metrics_k": self.metrics_k,
            "rng_seed": self.rng_seed,
            "sknn": {"k_neighbors": self.sknn.k_neighbors, "sample_size": self.sknn.sample_size},
            "cagh": {"k_artists": self.cagh.k_artists, "hits_per_artist": self.cagh.hits_per_artist},
        }


@dataclass(frozen=True)
class RoundReport:
    """Metric snapshot of one retraining iteration."""

    iteration: int
    gini: float
    coverage: int
    pop_abs: float
    pop_rel: float
    precision: float
    recall: float
    f1: float

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in ("iteration",) + METRIC_FIELDS}


@dataclass
class RunManifest:
    """Everything one run produced.

    Wall-clock timings are kept on the object for logging but excluded
    from to_json: two equal runs must serialize to equal bytes.
    """

    config: dict
    dataset_fingerprint: str
    initial_events: int
    final_events: int
    reports: list[RoundReport]
    timings: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "config": self.config,
            "dataset_fingerprint": self.dataset_fingerprint,
            "initial_events": self.initial_events,
            "final_events": self.final_events,
            "reports": [r.as_dict() for r in self.reports],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        try:
            data = json.loads(text)
            reports = [RoundReport(**r) for r in data["reports"]]
            return cls(
                config=data["config"],
                dataset_fingerprint=data["dataset_fingerprint"],
                initial_events=data["initial_events"],
                final_events=data["final_events"],
                reports=reports,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"not a run manifest: {exc}") from None

    def report_csv(self) -> str:
        lines = [REPORT_CSV_HEADER]
        for r in self.reports:
            lines.append(
                f"{r.iteration},{r.gini!r},{r.coverage},{r.pop_abs!r},{r.pop_rel!r},"
                f"{r.precision!r},{r.recall!r},{r.f1!r}"
            )
        return "\n".join(lines) + "\n"


def worker_count() -> int:
    """Worker threads for the per-seed recommendation phase.

    Defaults to 1; the LOOPSIM_THREADS environment variable raises the
    cap. Results are identical for any value by construction.
    """
    raw = os.environ.get("LOOPSIM_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidInput(f"LOOPSIM_THREADS must be an integer, got {raw!r}") from None


def select_seeds(store: SessionStore, master_seed: int, round_no: int) -> dict[SessionId, ItemId]:
    """One uniformly random played track per organic session.

    Duplicates count: a track played twice is twice as likely. The draw
    for each session comes from its own (round, session) stream, so the
    map does not depend on processing order.
    """
    seeds: dict[SessionId, ItemId] = {}
    for sid in store.organic_session_ids:
        items = store.session_items(sid)
        seeds[sid] = items[pick_index(master_seed, round_no, sid, len(items))]
    return seeds


def accept_tracks(rec_list: RecommendationList, accept_n: int, master_seed: int, round_no: int) -> list[ItemId]:
    """Uniform without-replacement sample of the list, kept in list order."""
    positions = sample_positions(
        master_seed, round_no, rec_list.seed_session, len(rec_list), accept_n
    )
    return [rec_list.items[p][0] for p in positions]


_ListPair = tuple[RecommendationList, RecommendationList]


def _generate_pairs(
    pool: ThreadPoolExecutor | None,
    job: Callable[[SessionId], _ListPair],
    sids: Sequence[SessionId],
) -> list[_ListPair]:
    if pool is None:
        return [job(sid) for sid in sids]
    return list(pool.map(job, sids))


def _measure(
    iteration: int,
    shown: Sequence[RecommendationList],
    ranked: Sequence[RecommendationList],
    sids: Sequence[SessionId],
    seeds: dict[SessionId, ItemId],
    relevant: dict[SessionId, set[ItemId]],
    catalog: ItemCatalog,
    metrics_k: int,
) -> RoundReport:
    """Metrics over one measurement pass.

    Exposure metrics (gini, coverage, popularity) are taken on the shown
    lists, after any re-ranking: they describe what users see. Accuracy
    is taken on the accuracy-ranked lists, before penalties: it describes
    whether the model can still find the relevant tracks.
    """
    shown_items = [lst.item_ids() for lst in shown]
    top_counts: Counter[ItemId] = Counter()
    for items in shown_items:
        top_counts.update(items[:metrics_k])
    # concentration is judged against the whole catalog: items that never
    # reach a top-k slot count as zeros, so an algorithm recommending the
    # same few tracks to everyone reads as maximally concentrated
    exposure = [top_counts.get(i, 0) for i in range(catalog.n_items)]
    prf_pairs = []
    for sid, lst in zip(sids, ranked):
        rel = relevant[sid]
        if rel:
            p, r, _ = prf_at_k(lst.item_ids(), rel, metrics_k)
            prf_pairs.append((p, r))
    precision, recall, f1 = aggregate_prf(prf_pairs)
    seed_items = [seeds[sid] for sid in sids]
    pop = popularity_abs(shown_items, catalog)
    return RoundReport(
        iteration=iteration,
        gini=gini(exposure),
        coverage=coverage(shown_items),
        pop_abs=pop,
        pop_rel=popularity_rel(shown_items, seed_items, catalog),
        precision=precision,
        recall=recall,
        f1=f1,
    )


def run_simulation(
    store: SessionStore, catalog: ItemCatalog, config: SimulationConfig
) -> RunManifest:
    """Run the full loop; the caller's store is left untouched.

    Raises SimulationAborted with the offending round number if any round
    fails; configuration problems surface as InvalidInput before round 1.
    """
    config.validate()
    if not store.organic_session_ids:
        raise InvalidInput("simulation requires at least one organic session")
    t_start = time.perf_counter()
    fingerprint = hashlib.sha256(dumps_events_tsv(store, catalog).encode("utf-8")).hexdigest()
    work = store.copy()
    initial_events = len(work.events)
    model: Recommender = make_recommender(config.algorithm, config.sknn, config.cagh)
    state = RerankState()
    frozen_seeds: dict[SessionId, ItemId] | None = None
    relevant: dict[SessionId, set[ItemId]] = {}
    reports: list[RoundReport] = []
    catalog_now = catalog
    fit_seconds = 0.0

    workers = worker_count()
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for round_no in range(1, config.rounds + 1):
            try:
                retrained = (round_no - 1) % config.retrain_every == 0
                if retrained:
                    t0 = time.perf_counter()
                    catalog_now = recompute_catalog(work)
                    model.fit(work, catalog_now)
                    fit_seconds += time.perf_counter() - t0

                seeds = select_seeds(work, config.rng_seed, round_no)
                sids = sorted(seeds)
                if frozen_seeds is None:
                    frozen_seeds = dict(seeds)
                    relevant = {
                        sid: set(work.session_items(sid)) - {seed}
                        for sid, seed in frozen_seeds.items()
                    }

                def job(sid: SessionId, seed_of: dict = seeds) -> _ListPair:
                    ranked = model.recommend([seed_of[sid]], config.playlist_len, sid)
                    shown = rerank(config.rerank, ranked, state, work.user_of_session[sid])
                    return ranked, shown

                sim_pairs = _generate_pairs(pool, job, sids)
                sim_lists = [shown for _, shown in sim_pairs]

                if retrained:
                    # dedicated measurement pass on the frozen round-1 seeds;
                    # it feeds neither acceptance nor the rerank state
                    if round_no == 1:
                        meas_pairs = sim_pairs
                    else:
                        meas_pairs = _generate_pairs(
                            pool, lambda sid: job(sid, frozen_seeds), sids
                        )
                    reports.append(
                        _measure(
                            len(reports) + 1,
                            [shown for _, shown in meas_pairs],
                            [ranked for ranked, _ in meas_pairs],
                            sids,
                            frozen_seeds,
                            relevant,
                            catalog_now,
                            config.metrics_k,
                        )
                    )

                accepted_pairs: list[tuple[ItemId, UserId]] = []
                for sid, lst in zip(sids, sim_lists):
                    items = accept_tracks(lst, config.accept_n, config.rng_seed, round_no)
                    if not items:
                        continue
                    user = work.user_of_session[sid]
                    work.append_session(
                        user, [seeds[sid]] + items, work.max_timestamp + 1, round_no
                    )
                    accepted_pairs.extend((item, user) for item in items)
                state = update_state_after_round(state, sim_lists, accepted_pairs)
            except SimulationAborted:
                raise
            except Exception as exc:
                raise SimulationAborted(round_no, str(exc)) from exc
    finally:
        if pool is not None:
            pool.shutdown()

    return RunManifest(
        config=config.to_dict(),
        dataset_fingerprint=fingerprint,
        initial_events=initial_events,
        final_events=len(work.events),
        reports=reports,
        timings={
            "fit_seconds": fit_seconds,
            "total_seconds": time.perf_counter() - t_start,
        },
    )


def compare_runs(manifests: Sequence[RunManifest]) -> tuple[list[str], list[list]]:
    """Align runs by iteration; one column group per run plus deltas.

    Delta columns report each later run minus the first run, iteration by
    iteration. Runs must have equal iteration counts.
    """
    if len(manifests) < 2:
        raise InvalidInput("compare needs at least two runs")
    n_iter = len(manifests[0].reports)
    for m in manifests[1:]:
        if len(m.reports) != n_iter:
            raise InvalidInput("runs have different iteration counts")
    columns = ["iteration"]
    for idx in range(1, len(manifests) + 1):
        columns.extend(f"run{idx}_{name}" for name in METRIC_FIELDS)
    for idx in range(2, len(manifests) + 1):
        columns.extend(f"run{idx}_minus_run1_{name}" for name in METRIC_FIELDS)
    rows: list[list] = []
    for i in range(n_iter):
        row: list = [manifests[0].reports[i].iteration]
        for m in manifests:
            row.extend(getattr(m.reports[i], name) for name in METRIC_FIELDS)
        base = manifests[0].reports[i]
        for m in manifests[1:]:
            row.extend(
                getattr(m.reports[i], name) - getattr(base, name) for name in METRIC_FIELDS
            )
        rows.append(row)
    return columns, rows


def comparison_csv(manifests: Sequence[RunManifest]) -> str:
    columns, rows = compare_runs(manifests)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"
