"""Command line for the selection pipeline.

Every subcommand builds a request for the HTTP service and posts it,
by default to an in-process application instance (no server needed),
or to a running server given with --server. Requests carry file paths
local to wherever the service runs, so with a remote server the
manifest must exist on that machine.

Budgets are given in hours and the agreement threshold in percent
(--tau 5 keeps averages below 0.05; --tau-fraction is the exact
alternative). All randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import asyncio
import os
import sys
from typing import Any

import httpx

from segsel import __version__
from segsel.cer_selection import DEFAULT_REQUIRED_SYSTEMS, DEFAULT_TAU
from segsel.runner import DEFAULT_SEED
from segsel.wer_classifier import DEFAULT_EPOCHS, DEFAULT_LAMBDA

THREADS_ENV = "SEGSEL_THREADS"


class CliError(Exception):
    """Anything that should end the run with a message and exit 1."""


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        raise CliError(
            f"{THREADS_ENV} must be a positive integer, got {raw!r}"
        )
    return value


def _resolve_tau(args: argparse.Namespace) -> float:
    if getattr(args, "tau_fraction", None) is not None:
        return args.tau_fraction
    if getattr(args, "tau", None) is not None:
        return args.tau / 100.0
    return DEFAULT_TAU


def _normalization(args: argparse.Namespace) -> dict[str, bool]:
    return {
        "lowercase": not args.keep_case,
        "strip_punctuation": not args.keep_punctuation,
        "collapse_whitespace": not args.keep_whitespace,
    }


def _systems(args: argparse.Namespace) -> list[str]:
    return [s.strip() for s in args.systems.split(",") if s.strip()]


def _add_tau_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument(
        "--tau",
        type=float,
        default=None,
        metavar="PERCENT",
        help=f"agreement threshold in percent (default {DEFAULT_TAU * 100:g})",
    )
    group.add_argument(
        "--tau-fraction",
        type=float,
        default=None,
        metavar="FRACTION",
        help="agreement threshold as a fraction (--tau 5 == --tau-fraction 0.05)",
    )


def _add_cer_options(parser: argparse.ArgumentParser) -> None:
    _add_tau_options(parser)
    parser.add_argument(
        "--systems",
        default=",".join(DEFAULT_REQUIRED_SYSTEMS),
        help="comma-separated hypothesis systems every segment must carry",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"worker threads for scoring (default ${THREADS_ENV} or 1)",
    )
    parser.add_argument(
        "--keep-case",
        action="store_true",
        help="skip lowercasing before comparing transcripts",
    )
    parser.add_argument(
        "--keep-punctuation",
        action="store_true",
        help="keep punctuation when comparing transcripts",
    )
    parser.add_argument(
        "--keep-whitespace",
        action="store_true",
        help="keep whitespace runs as-is when comparing transcripts",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segsel",
        description="Budgeted subset selection for pseudo-labeled speech corpora.",
    )
    parser.add_argument("--version", action="version", version=f"segsel {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--server",
        metavar="URL",
        default=None,
        help="run against this server instead of in-process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "score-cer",
        parents=[common],
        help="score inter-system agreement and write scores plus histogram",
    )
    p.add_argument("manifest")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--bin-width", type=float, default=0.05)
    _add_cer_options(p)

    p = sub.add_parser(
        "select",
        parents=[common],
        help="select a budgeted subset and write manifest plus report",
    )
    p.add_argument("manifest")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--budget-hours", type=float, required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument(
        "--model",
        default=None,
        help="trained classifier path (wer-clf strategy)",
    )
    p.add_argument(
        "--rank-lowest",
        action="store_true",
        help="cer strategy: fill with lowest averages instead of sampling",
    )
    p.add_argument(
        "--aggregate",
        choices=("max", "mean"),
        default="max",
        help="how a segment's confidence summarizes its entities",
    )
    _add_cer_options(p)

    p = sub.add_parser(
        "train-wer",
        parents=[common],
        help="train the low/high-WER classifier",
    )
    p.add_argument("manifest")
    p.add_argument("--model-out", required=True)
    p.add_argument("--out-dir", default=None, help="report directory (default: model directory)")
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser(
        "eval-wer",
        parents=[common],
        help="evaluate a trained classifier against reference labels",
    )
    p.add_argument("manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser(
        "stats",
        parents=[common],
        help="report the entity class and confidence distribution",
    )
    p.add_argument("manifest")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--aggregate", choices=("max", "mean"), default="max")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _request_for(args: argparse.Namespace) -> tuple[str, dict[str, Any]]:
    if args.command == "score-cer":
        return "/v1/score-cer", {
            "manifest_path": args.manifest,
            "out_dir": args.out_dir,
            "tau": _resolve_tau(args),
            "required_systems": _systems(args),
            "threads": args.threads or _default_threads(),
            "bin_width": args.bin_width,
            "normalization": _normalization(args),
        }
    if args.command == "select":
        return "/v1/select", {
            "manifest_path": args.manifest,
            "out_dir": args.out_dir,
            "strategy": args.strategy,
            "budget_hours": args.budget_hours,
            "seed": args.seed,
            "tau": _resolve_tau(args),
            "required_systems": _systems(args),
            "rank_lowest": args.rank_lowest,
            "aggregate": args.aggregate,
            "model_path": args.model,
            "threads": args.threads or _default_threads(),
            "normalization": _normalization(args),
        }
    if args.command == "train-wer":
        return "/v1/train-wer", {
            "manifest_path": args.manifest,
            "model_path": args.model_out,
            "lambda": args.lam,
            "epochs": args.epochs,
            "seed": args.seed,
            "out_dir": args.out_dir,
        }
    if args.command == "eval-wer":
        return "/v1/eval-wer", {
            "manifest_path": args.manifest,
            "model_path": args.model,
            "out_dir": args.out_dir,
        }
    if args.command == "stats":
        return "/v1/stats", {
            "manifest_path": args.manifest,
            "out_dir": args.out_dir,
            "aggregate": args.aggregate,
        }
    raise CliError(f"unhandled command {args.command!r}")


def _error_detail(resp: httpx.Response) -> str:
    try:
        body = resp.json()
    except ValueError:
        return f"server returned {resp.status_code}: {resp.text[:200]}"
    detail = body.get("detail")
    if isinstance(detail, str):
        return detail
    if isinstance(detail, list):
        parts = []
        for item in detail:
            loc = ".".join(str(p) for p in item.get("loc", []) if p != "body")
            parts.append(f"{loc}: {item.get('msg', 'invalid')}")
        return "; ".join(parts)
    return f"server returned {resp.status_code}"


def _post(server: str | None, route: str, payload: dict[str, Any]) -> dict[str, Any]:
    if server is not None:
        try:
            with httpx.Client(base_url=server.rstrip("/"), timeout=600.0) as client:
                resp = client.post(route, json=payload)
        except httpx.HTTPError as exc:
            raise CliError(f"cannot reach server {server}: {exc}") from exc
    else:
        from segsel.service.app import app

        async def go() -> httpx.Response:
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://segsel.invalid"
            ) as client:
                return await client.post(route, json=payload)

        resp = asyncio.run(go())
    if resp.status_code != 200:
        raise CliError(_error_detail(resp))
    return resp.json()


def _print_outcome(body: dict[str, Any]) -> None:
    for name in sorted(body["outputs"]):
        print(f"{name}: {body['outputs'][name]}")
    report = body.get("report", {})
    selection = report.get("selection")
    if selection:
        print(
            f"selected {len(selection['selected_ids'])} segments, "
            f"{selection['realized_duration_s']:.1f} s of "
            f"{selection['budget_s']:.1f} s budget"
        )
    classification = report.get("classification")
    if classification:
        print(f"accuracy: {classification['accuracy']:.4f}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        import uvicorn

        uvicorn.run("segsel.service.app:app", host=args.host, port=args.port)
        return 0
    try:
        route, payload = _request_for(args)
        body = _post(args.server, route, payload)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _print_outcome(body)
    return 0


if __name__ == "__main__":
    sys.exit(main())
