from collections import Counter

import numpy as np
import pytest

import loopsim.engine as engine
from loopsim.engine import (
    METRIC_FIELDS,
    REPORT_CSV_HEADER,
    RoundReport,
    RunManifest,
    SimulationConfig,
    accept_tracks,
    compare_runs,
    comparison_csv,
    run_simulation,
    select_seeds,
    worker_count,
)
from loopsim.errors import InvalidInput, SimulationAborted
from loopsim.ingest import dumps_events_tsv
from loopsim.recommenders import RecommendationList, SknnParams

from helpers import make_store

FAST = dict(playlist_len=5, accept_n=2, sknn=SknnParams(k_neighbors=10, sample_size=None))


def tiny_store(n_sessions=6, n_items=12, seed=5):
    rng = np.random.default_rng(seed)
    sessions = []
    for user in range(n_sessions):
        length = int(rng.integers(2, 6))
        sessions.append((user, rng.integers(0, n_items, size=length).tolist()))
    assert any(len(set(items)) >= 2 for _, items in sessions)
    return make_store(sessions, n_items=n_items)


def config(**kwargs):
    merged = {**FAST, **kwargs}
    return SimulationConfig(**merged)


class TestSchedule:
    @pytest.mark.parametrize(
        "rounds,retrain_every,expected",
        [(1, 3, 1), (3, 3, 1), (4, 3, 2), (9, 3, 3), (4, 1, 4), (5, 10, 1)],
    )
    def test_one_report_per_retraining(self, rounds, retrain_every, expected):
        store, catalog = tiny_store()
        cfg = config(algorithm="pop", rounds=rounds, retrain_every=retrain_every)
        manifest = run_simulation(store, catalog, cfg)
        assert len(manifest.reports) == expected
        assert [r.iteration for r in manifest.reports] == list(range(1, expected + 1))

    def test_store_grows_by_seed_plus_accepted_each_round(self):
        store, catalog = tiny_store()
        assert len({e.item for e in store.events}) >= 5  # playlists never run short
        n_org = len(store.organic_session_ids)
        cfg = config(algorithm="pop", rounds=4, retrain_every=2, accept_n=3)
        manifest = run_simulation(store, catalog, cfg)
        assert manifest.initial_events == len(store.events)
        assert manifest.final_events == manifest.initial_events + 4 * n_org * (1 + 3)

    def test_accept_nothing_freezes_the_store(self):
        store, catalog = tiny_store()
        cfg = config(algorithm="sknn", rounds=6, retrain_every=3, accept_n=0)
        manifest = run_simulation(store, catalog, cfg)
        assert manifest.final_events == manifest.initial_events
        assert len(manifest.reports) == 2
        first, second = manifest.reports
        assert second.as_dict() == {**first.as_dict(), "iteration": 2}

    def test_caller_store_is_never_mutated(self):
        store, catalog = tiny_store()
        before = dumps_events_tsv(store, catalog)
        run_simulation(store, catalog, config(algorithm="markov", rounds=5, retrain_every=2))
        assert dumps_events_tsv(store, catalog) == before


class TestSeedSelection:
    def test_deterministic_per_round(self):
        store, _ = tiny_store()
        assert select_seeds(store, 42, 3) == select_seeds(store, 42, 3)

    def test_round_and_master_seed_both_matter(self):
        store, _ = tiny_store(n_sessions=20)
        base = select_seeds(store, 42, 1)
        assert select_seeds(store, 42, 2) != base
        assert select_seeds(store, 43, 1) != base

    def test_single_track_session_always_seeds_that_track(self):
        store, _ = make_store([(0, [7])], n_items=8)
        for round_no in range(1, 30):
            assert select_seeds(store, 0, round_no) == {0: 7}

    def test_uniform_over_played_tracks(self):
        store, _ = make_store([(0, [0, 1, 2, 3])], n_items=4)
        counts = Counter(select_seeds(store, 9, r)[0] for r in range(1, 10001))
        for item in range(4):
            assert 0.22 <= counts[item] / 10000 <= 0.28

    def test_duplicates_weight_the_draw(self):
        store, _ = make_store([(0, [5, 5, 6])], n_items=7)
        counts = Counter(select_seeds(store, 9, r)[0] for r in range(1, 3001))
        assert 0.60 <= counts[5] / 3000 <= 0.73

    def test_only_organic_sessions_are_seeded(self):
        store, _ = make_store([(0, [0, 1]), (1, [2])], n_items=3)
        store.append_session(0, [1, 2], store.max_timestamp + 1, round_no=1)
        assert sorted(select_seeds(store, 0, 1)) == [0, 1]


class TestAcceptance:
    def rec(self, items, sid=0):
        return RecommendationList(sid, [(i, 1.0) for i in items])

    def test_subset_in_list_order(self):
        lst = self.rec([9, 4, 7, 2, 5])
        for round_no in range(1, 50):
            picked = accept_tracks(lst, 2, 0, round_no)
            assert len(picked) == 2
            positions = [lst.item_ids().index(i) for i in picked]
            assert positions == sorted(positions)

    def test_accept_zero_and_oversized_requests(self):
        lst = self.rec([9, 4, 7, 2])
        assert accept_tracks(lst, 0, 0, 1) == []
        assert accept_tracks(lst, 10, 0, 1) == [9, 4, 7, 2]
        assert accept_tracks(RecommendationList(0, []), 3, 0, 1) == []

    def test_deterministic(self):
        lst = self.rec([9, 4, 7, 2, 5])
        assert accept_tracks(lst, 3, 1, 2) == accept_tracks(lst, 3, 1, 2)

    def test_sessions_draw_independently(self):
        a = self.rec(list(range(10)), sid=0)
        b = self.rec(list(range(10)), sid=1)
        draws = [(accept_tracks(a, 3, 0, r), accept_tracks(b, 3, 0, r)) for r in range(1, 21)]
        assert any(x != y for x, y in draws)

    def test_each_track_roughly_equally_likely(self):
        lst = self.rec([3, 4, 5])
        counts = Counter(accept_tracks(lst, 1, 7, r)[0] for r in range(1, 9001))
        for item in (3, 4, 5):
            assert 0.30 <= counts[item] / 9000 <= 0.37


class TestDeterminism:
    def test_identical_runs_serialize_identically(self):
        store, catalog = tiny_store()
        cfg = config(algorithm="sknn", rounds=5, retrain_every=2, rerank="strategy1")
        a = run_simulation(store, catalog, cfg)
        b = run_simulation(store, catalog, cfg)
        assert a.to_json() == b.to_json()

    def test_thread_count_does_not_change_results(self, monkeypatch):
        store, catalog = tiny_store()
        cfg = config(algorithm="sknn", rounds=5, retrain_every=2, rerank="strategy2")
        monkeypatch.delenv("LOOPSIM_THREADS", raising=False)
        serial = run_simulation(store, catalog, cfg).to_json()
        monkeypatch.setenv("LOOPSIM_THREADS", "3")
        threaded = run_simulation(store, catalog, cfg).to_json()
        assert serial == threaded

    def test_fingerprint_tracks_the_dataset(self):
        store, catalog = tiny_store()
        other, other_catalog = tiny_store(seed=6)
        cfg = config(algorithm="pop", rounds=1)
        assert (
            run_simulation(store, catalog, cfg).dataset_fingerprint
            == run_simulation(store, catalog, cfg).dataset_fingerprint
        )
        assert (
            run_simulation(store, catalog, cfg).dataset_fingerprint
            != run_simulation(other, other_catalog, cfg).dataset_fingerprint
        )

    def test_manifest_records_the_config(self):
        store, catalog = tiny_store()
        cfg = config(algorithm="markov", rounds=2, retrain_every=1, rerank="strategy1")
        assert run_simulation(store, catalog, cfg).config == cfg.to_dict()


class TestFailureModes:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(algorithm="svd"),
            dict(rerank="bogus"),
            dict(rounds=0),
            dict(retrain_every=0),
            dict(playlist_len=0),
            dict(accept_n=-1),
            dict(accept_n=31, playlist_len=30),
            dict(metrics_k=0),
            dict(sknn=SknnParams(k_neighbors=50, sample_size=10)),
        ],
    )
    def test_bad_configs_rejected_before_round_one(self, kwargs):
        with pytest.raises(InvalidInput):
            SimulationConfig(**kwargs).validate()

    def test_store_without_organic_sessions_rejected(self):
        from loopsim.store import SessionStore, recompute_catalog

        store = SessionStore.from_sessions([], n_items=3, artist_of=[0, 0, 0])
        with pytest.raises(InvalidInput):
            run_simulation(store, recompute_catalog(store), config(algorithm="pop", rounds=1))

    def test_round_failures_carry_the_round_number(self, monkeypatch):
        store, catalog = tiny_store()
        real = engine.make_recommender
        fits = {"n": 0}

        def flaky(algorithm, sknn=None, cagh=None):
            rec = real(algorithm, sknn, cagh)
            original = rec.fit

            def fit(store, catalog):
                fits["n"] += 1
                if fits["n"] == 2:
                    raise RuntimeError("disk on fire")
                original(store, catalog)

            rec.fit = fit
            return rec

        monkeypatch.setattr(engine, "make_recommender", flaky)
        cfg = config(algorithm="pop", rounds=9, retrain_every=3)
        with pytest.raises(SimulationAborted) as err:
            run_simulation(store, catalog, cfg)
        assert err.value.round_no == 4
        assert "disk on fire" in str(err.value)

    def test_all_single_track_sessions_abort_in_round_one(self):
        store, catalog = make_store([(0, [1]), (1, [2])], n_items=3)
        with pytest.raises(SimulationAborted) as err:
            run_simulation(store, catalog, config(algorithm="pop", rounds=3))
        assert err.value.round_no == 1


class TestManifest:
    def run_once(self):
        store, catalog = tiny_store()
        return run_simulation(store, catalog, config(algorithm="pop", rounds=4, retrain_every=2))

    def test_json_round_trip(self):
        manifest = self.run_once()
        parsed = RunManifest.from_json(manifest.to_json())
        assert parsed.config == manifest.config
        assert parsed.dataset_fingerprint == manifest.dataset_fingerprint
        assert parsed.initial_events == manifest.initial_events
        assert parsed.final_events == manifest.final_events
        assert parsed.reports == manifest.reports
        assert parsed.to_json() == manifest.to_json()

    def test_timings_stay_out_of_the_serialized_form(self):
        manifest = self.run_once()
        assert manifest.timings["total_seconds"] > 0
        assert "timings" not in manifest.to_json()
        assert "fit_seconds" not in manifest.to_json()

    def test_from_json_rejects_garbage(self):
        with pytest.raises(InvalidInput):
            RunManifest.from_json('{"config": {}}')

    def test_report_csv_shape(self):
        manifest = self.run_once()
        lines = manifest.report_csv().splitlines()
        assert lines[0] == REPORT_CSV_HEADER
        assert len(lines) == 1 + len(manifest.reports)
        first = lines[1].split(",")
        assert first[0] == "1"
        assert float(first[1]) == manifest.reports[0].gini


def report(iteration, base):
    return RoundReport(
        iteration=iteration,
        gini=base,
        coverage=int(base * 10),
        pop_abs=base * 2,
        pop_rel=base - 1,
        precision=base / 2,
        recall=base / 3,
        f1=base / 4,
    )


def manifest_with(values):
    return RunManifest(
        config={}, dataset_fingerprint="f", initial_events=0, final_events=0,
        reports=[report(i + 1, v) for i, v in enumerate(values)],
    )


class TestCompare:
    def test_column_layout(self):
        columns, rows = compare_runs([manifest_with([0.5]), manifest_with([0.7])])
        expected = (
            ["iteration"]
            + [f"run1_{f}" for f in METRIC_FIELDS]
            + [f"run2_{f}" for f in METRIC_FIELDS]
            + [f"run2_minus_run1_{f}" for f in METRIC_FIELDS]
        )
        assert columns == expected
        assert len(rows) == 1 and len(rows[0]) == len(expected)

    def test_self_comparison_has_zero_deltas(self):
        m = manifest_with([0.5, 0.6])
        _, rows = compare_runs([m, m])
        for row in rows:
            assert all(delta == 0 for delta in row[-len(METRIC_FIELDS):])

    def test_deltas_negate_when_runs_swap(self):
        a, b = manifest_with([0.5, 0.6]), manifest_with([0.7, 0.4])
        _, ab = compare_runs([a, b])
        _, ba = compare_runs([b, a])
        for row_ab, row_ba in zip(ab, ba):
            for x, y in zip(row_ab[-len(METRIC_FIELDS):], row_ba[-len(METRIC_FIELDS):]):
                assert x == pytest.approx(-y)

    def test_three_runs_compare_against_the_first(self):
        columns, _ = compare_runs([manifest_with([1.0]), manifest_with([2.0]), manifest_with([3.0])])
        assert "run3_minus_run1_gini" in columns
        assert "run3_minus_run2_gini" not in columns

    def test_mismatched_iteration_counts_rejected(self):
        with pytest.raises(InvalidInput):
            compare_runs([manifest_with([0.5]), manifest_with([0.5, 0.6])])

    def test_single_run_rejected(self):
        with pytest.raises(InvalidInput):
            compare_runs([manifest_with([0.5])])

    def test_csv_floats_survive_round_trip(self):
        text = comparison_csv([manifest_with([0.5]), manifest_with([0.7])])
        header, row = text.splitlines()
        assert header.startswith("iteration,run1_gini")
        values = row.split(",")
        assert values[0] == "1"
        assert float(values[1]) == 0.5


class TestWorkerCount:
    def test_defaults_to_one(self, monkeypatch):
        monkeypatch.delenv("LOOPSIM_THREADS", raising=False)
        assert worker_count() == 1

    def test_reads_environment(self, monkeypatch):
        monkeypatch.setenv("LOOPSIM_THREADS", "8")
        assert worker_count() == 8

    def test_clamps_to_at_least_one(self, monkeypatch):
        monkeypatch.setenv("LOOPSIM_THREADS", "0")
        assert worker_count() == 1

    def test_rejects_non_integers(self, monkeypatch):
        monkeypatch.setenv("LOOPSIM_THREADS", "many")
        with pytest.raises(InvalidInput):
            worker_count()
