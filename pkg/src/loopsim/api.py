"""Request/response models and the operations behind service and CLI.

Datasets travel inline as canonical TSV text, so the operations are pure
content-in/content-out and behave identically whether invoked in-process
by the CLI or over HTTP by the service.
"""

from __future__ import annotations

import io
import json

from pydantic import BaseModel

from .engine import RunManifest, SimulationConfig, comparison_csv, run_simulation
from .ingest import SynthConfig, dumps_events_tsv, generate_synthetic, parse_events_tsv
from .recommenders import CaghParams, SknnParams


class SynthRequest(BaseModel):
    sessions: int = 1000
    items: int = 2000
    artists: int | None = None  # defaults to one artist per 80 items
    zipf: float = 1.0
    session_len_min: int = 3
    session_len_max: int = 10
    seed: int = 0


class SynthResponse(BaseModel):
    dataset_tsv: str
    n_sessions: int
    n_items: int
    n_events: int


class SimulateRequest(BaseModel):
    dataset_tsv: str
    algorithm: str = "sknn"
    rerank: str = "none"
    rounds: int = 30
    playlist_len: int = 30
    accept_n: int = 10
    retrain_every: int = 3
    metrics_k: int = 10
    seed: int = 0
    sknn_k: int = 100
    sknn_sample: int | None = 1000
    cagh_artists: int = 10
    cagh_hits: int = 20


class SimulateResponse(BaseModel):
    manifest: dict
    report_csv: str


class CompareRequest(BaseModel):
    manifests: list[dict]


class CompareResponse(BaseModel):
    table_csv: str


def default_artists(items: int) -> int:
    # small pool keeps artist-level structure visible at desk scale
    return max(1, items // 80)


def synth(req: SynthRequest) -> SynthResponse:
    cfg = SynthConfig(
        n_sessions=req.sessions,
        n_items=req.items,
        n_artists=req.artists if req.artists is not None else default_artists(req.items),
        zipf_exponent=req.zipf,
        session_len_min=req.session_len_min,
        session_len_max=req.session_len_max,
        rng_seed=req.seed,
    )
    store, catalog = generate_synthetic(cfg)
    return SynthResponse(
        dataset_tsv=dumps_events_tsv(store, catalog),
        n_sessions=len(store.session_index),
        n_items=store.n_items,
        n_events=len(store.events),
    )


def simulation_config(req: SimulateRequest) -> SimulationConfig:
    return SimulationConfig(
        algorithm=req.algorithm,
        rerank=req.rerank,
        rounds=req.rounds,
        playlist_len=req.playlist_len,
        accept_n=req.accept_n,
        retrain_every=req.retrain_every,
        metrics_k=req.metrics_k,
        rng_seed=req.seed,
        sknn=SknnParams(k_neighbors=req.sknn_k, sample_size=req.sknn_sample),
        cagh=CaghParams(k_artists=req.cagh_artists, hits_per_artist=req.cagh_hits),
    )


def simulate(req: SimulateRequest) -> SimulateResponse:
    store, catalog = parse_events_tsv(io.StringIO(req.dataset_tsv))
    manifest = run_simulation(store, catalog, simulation_config(req))
    return SimulateResponse(
        manifest=json.loads(manifest.to_json()),
        report_csv=manifest.report_csv(),
    )


def compare(req: CompareRequest) -> CompareResponse:
    manifests = [RunManifest.from_json(json.dumps(m)) for m in req.manifests]
    return CompareResponse(table_csv=comparison_csv(manifests))
