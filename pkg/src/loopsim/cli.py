"""Command-line front end.

The CLI is a thin client over the same operations the HTTP service
exposes: every subcommand builds a request model, executes it in-process
by default, or sends it to a running service when --server is given, and
writes the response content to disk. Exit codes: 0 success, 1 runtime
failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from . import api
from .errors import InvalidInput, LoopsimError, ParseError, SimulationAborted

CONFIG_STR_KEYS = ("dataset", "out", "algorithm", "rerank")
CONFIG_INT_KEYS = (
    "rounds",
    "playlist_len",
    "accept_n",
    "retrain_every",
    "metrics_k",
    "seed",
    "sknn_k",
    "cagh_artists",
    "cagh_hits",
)


def parse_config_file(path: str | Path) -> dict:
    """key = value lines mirroring the simulate flags; unknown keys rejected."""
    values: dict = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError("expected key = value", line_no)
        key = key.strip()
        value = value.strip()
        if key in CONFIG_STR_KEYS:
            values[key] = value
        elif key in CONFIG_INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ParseError(f"{key} must be an integer", line_no) from None
        elif key == "sknn_sample":
            if value.lower() == "none":
                values[key] = None
            else:
                try:
                    values[key] = int(value)
                except ValueError:
                    raise ParseError("sknn_sample must be an integer or none", line_no) from None
        else:
            raise InvalidInput(f"unknown config key {key!r}")
    return values


def _post(server: str, path: str, payload: dict) -> dict:
    with httpx.Client(base_url=server, timeout=None) as client:
        resp = client.post(path, json=payload)
    if resp.status_code >= 400:
        try:
            body = resp.json()
            detail = body.get("error") or body.get("detail") or resp.text
        except ValueError:
            detail = resp.text
        raise InvalidInput(f"server rejected request: {detail}")
    return resp.json()


def cmd_synth(args: argparse.Namespace) -> int:
    req = api.SynthRequest(
        sessions=args.sessions,
        items=args.items,
        artists=args.artists,
        zipf=args.zipf,
        session_len_min=args.session_len_min,
        session_len_max=args.session_len_max,
        seed=args.seed,
    )
    if args.server:
        resp = _post(args.server, "/synth", req.model_dump())
    else:
        resp = api.synth(req).model_dump()
    Path(args.out).write_text(resp["dataset_tsv"], encoding="utf-8", newline="")
    print(
        f"wrote {args.out}: {resp['n_events']} events, "
        f"{resp['n_sessions']} sessions, {resp['n_items']} items"
    )
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    file_values = parse_config_file(args.config) if args.config else {}

    dataset = args.dataset if args.dataset is not None else file_values.get("dataset")
    if not dataset:
        raise InvalidInput("no dataset given (use --dataset or the dataset config key)")
    out_dir = args.out if args.out is not None else file_values.get("out", ".")

    overrides: dict = {}
    for name in (
        "algorithm",
        "rerank",
        "rounds",
        "playlist_len",
        "accept_n",
        "retrain_every",
        "metrics_k",
        "seed",
        "sknn_k",
        "cagh_artists",
        "cagh_hits",
    ):
        value = getattr(args, name)
        if value is None:
            value = file_values.get(name)
        if value is not None:
            overrides[name] = value
    if args.sknn_sample is not None:
        if args.sknn_sample.lower() == "none":
            overrides["sknn_sample"] = None
        else:
            try:
                overrides["sknn_sample"] = int(args.sknn_sample)
            except ValueError:
                raise InvalidInput("--sknn-sample must be an integer or none") from None
    elif "sknn_sample" in file_values:
        overrides["sknn_sample"] = file_values["sknn_sample"]

    dataset_tsv = Path(dataset).read_text(encoding="utf-8")
    req = api.SimulateRequest(dataset_tsv=dataset_tsv, **overrides)
    if args.server:
        resp = _post(args.server, "/simulate", req.model_dump())
    else:
        resp = api.simulate(req).model_dump()

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    report_path = out / "report.csv"
    manifest_path.write_text(
        json.dumps(resp["manifest"], sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
        newline="",
    )
    report_path.write_text(resp["report_csv"], encoding="utf-8", newline="")
    print(f"wrote {manifest_path} and {report_path}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    manifests = []
    for path in args.manifests:
        try:
            manifests.append(json.loads(Path(path).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{path} is not a JSON manifest: {exc}") from None
    req = api.CompareRequest(manifests=manifests)
    if args.server:
        resp = _post(args.server, "/compare", req.model_dump())
    else:
        resp = api.compare(req).model_dump()
    if args.out:
        Path(args.out).write_text(resp["table_csv"], encoding="utf-8", newline="")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(resp["table_csv"])
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopsim",
        description="Feedback-loop simulator for session-based recommenders",
    )
    sub = parser.add_subparsers(dest="command")

    p_synth = sub.add_parser("synth", help="generate a synthetic Zipf dataset")
    p_synth.add_argument("--sessions", type=int, default=1000)
    p_synth.add_argument("--items", type=int, default=2000)
    p_synth.add_argument("--artists", type=int, default=None, help="default: items // 80")
    p_synth.add_argument("--zipf", type=float, default=1.0, help="popularity skew exponent")
    p_synth.add_argument("--session-len-min", type=int, default=3)
    p_synth.add_argument("--session-len-max", type=int, default=10)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True, help="output TSV path")
    p_synth.add_argument("--server", default=None, help="run against an HTTP service instead")
    p_synth.set_defaults(func=cmd_synth)

    p_sim = sub.add_parser("simulate", help="run one simulation")
    p_sim.add_argument("--dataset", default=None, help="canonical TSV dataset path")
    p_sim.add_argument("--out", default=None, help="output directory (default .)")
    p_sim.add_argument("--config", default=None, help="key = value config file")
    p_sim.add_argument("--algorithm", choices=("sknn", "cagh", "markov", "pop"), default=None)
    p_sim.add_argument("--rerank", choices=("none", "strategy1", "strategy2"), default=None)
    p_sim.add_argument("--rounds", type=int, default=None)
    p_sim.add_argument("--playlist-len", type=int, default=None)
    p_sim.add_argument("--accept-n", type=int, default=None)
    p_sim.add_argument("--retrain-every", type=int, default=None)
    p_sim.add_argument("--metrics-k", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--sknn-k", type=int, default=None)
    p_sim.add_argument("--sknn-sample", default=None, help="sample size or 'none' to disable")
    p_sim.add_argument("--cagh-artists", type=int, default=None)
    p_sim.add_argument("--cagh-hits", type=int, default=None)
    p_sim.add_argument("--server", default=None, help="run against an HTTP service instead")
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare", help="align runs by iteration into one CSV")
    p_cmp.add_argument("manifests", nargs="+", help="manifest.json paths")
    p_cmp.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p_cmp.add_argument("--server", default=None, help="run against an HTTP service instead")
    p_cmp.set_defaults(func=cmd_compare)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)

    parser.set_defaults(func=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.func is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        return args.func(args)
    except SimulationAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except LoopsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except httpx.HTTPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
