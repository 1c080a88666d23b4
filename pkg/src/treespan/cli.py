"""Command-line client for the toolkit's HTTP service.

Commands post to a running server when --server (or TREESPAN_SERVER) is set;
otherwise they talk to an in-process application instance, so no server
needs to be running for local work. Paths in requests are interpreted on the
server's filesystem, which is the local one in the default in-process mode.

A plain-text key=value file passed via --config supplies defaults; explicit
command-line flags always win. TREESPAN_OUT sets the root for default output
directories. Exit status is 0 only when every requested artifact was
written, 1 on server-reported or transport errors, and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import asyncio
import os
import sys
from pathlib import Path

import httpx

from .config import load_config

DEFAULT_LIMIT = 8


def _parse_patience(text: str):
    return None if text.strip().lower() in ("", "none") else int(text)


def _parse_int_list(text: str):
    return [int(v) for v in text.split(",") if v.strip()]


def _parse_float_list(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def _parse_bool(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


def _out_default(name: str) -> str:
    return str(Path(os.environ.get("TREESPAN_OUT", ".")) / name)


# Per-command converters for keys allowed in a --config file. Keys mirror the
# long flag names; "lambda" maps onto the lam destination.
_COMMON_TRAIN_KEYS = {
    "data": ("data", str),
    "out": ("out", str),
    "seed": ("seed", int),
    "epochs": ("epochs", int),
    "learning_rate": ("lr", float),
    "lr": ("lr", float),
    "batch_size": ("batch_size", int),
    "patience": ("patience", _parse_patience),
    "lambda": ("lam", float),
}

CONFIG_KEYS = {
    "gen": {
        "out": ("out", str),
        "profile": ("profile", str),
        "train": ("train", int),
        "val": ("val", int),
        "test": ("test", int),
        "seed": ("seed", int),
        "rules": ("rules", str),
        "force": ("force", _parse_bool),
    },
    "train": {**_COMMON_TRAIN_KEYS, "mode": ("mode", str)},
    "eval": {
        "data": ("data", str),
        "checkpoint": ("checkpoint", str),
        "split": ("split", str),
        "mode": ("mode", str),
        "self_check": ("self_check", _parse_bool),
        "out": ("out", str),
        "smd_points": ("smd_points", int),
        "topo_radius": ("topo_radius", float),
        "topo_angle_tol": ("topo_angle_tol", float),
    },
    "project": {"in": ("in_path", str), "out": ("out", str)},
    "plot": {
        "data": ("data", str),
        "checkpoint": ("checkpoint", str),
        "out": ("out", str),
        "split": ("split", str),
        "ids": ("ids", _parse_int_list),
        "limit": ("limit", int),
    },
    "compare": dict(_COMMON_TRAIN_KEYS),
    "ablate": {**_COMMON_TRAIN_KEYS, "lambdas": ("lambdas", _parse_float_list)},
    "serve": {"host": ("host", str), "port": ("port", int)},
}


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="treespan",
        description="Generate branching datasets, train tree-constrained edge predictors, and evaluate them.",
    )
    parser.add_argument(
        "--server",
        default=os.environ.get("TREESPAN_SERVER"),
        help="base URL of a running service; defaults to in-process execution",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {}

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value file with defaults for this command")
        parsers[name] = p
        return p

    p = add("gen", "generate a synthetic dataset")
    p.add_argument("--out", default=_out_default("dataset"), help="dataset directory")
    p.add_argument("--profile", default="standard",
                   choices=("standard", "generalized", "thickened", "mini"))
    p.add_argument("--train", type=int, default=10, help="training sample count")
    p.add_argument("--val", type=int, default=0, help="validation sample count")
    p.add_argument("--test", type=int, default=0, help="test sample count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rules", default=None, help="alternative rule bank JSON")
    p.add_argument("--force", action="store_true", help="overwrite a non-empty directory")

    p = add("train", "train an edge predictor")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", default=_out_default("train"), help="output directory")
    p.add_argument("--mode", default="unconstrained", choices=("unconstrained", "ttc", "sfs"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--lr", type=float, default=1e-3, help="learning rate")
    p.add_argument("--batch-size", type=int, default=1, dest="batch_size")
    p.add_argument("--patience", type=_parse_patience, default=30,
                   help="early-stopping patience in epochs, or 'none'")
    p.add_argument("--lambda", type=float, default=10.0, dest="lam",
                   help="suppression magnitude")

    p = add("eval", "evaluate a checkpoint on a dataset split")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--mode", default=None, choices=("unconstrained", "ttc", "sfs"),
                   help="override the checkpoint's inference mode")
    p.add_argument("--self-check", action="store_true", dest="self_check",
                   help="evaluate ground truth against itself instead of a checkpoint")
    p.add_argument("--out", default=None, help="directory for report files (optional)")
    p.add_argument("--smd-points", type=int, default=100, dest="smd_points")
    p.add_argument("--topo-radius", type=float, default=13.0, dest="topo_radius")
    p.add_argument("--topo-angle-tol", type=float, default=30.0, dest="topo_angle_tol")

    p = add("project", "project an edge prediction file onto its spanning tree")
    p.add_argument("--in", required=True, dest="in_path",
                   help="graph JSON or probability JSON input")
    p.add_argument("--out", default=None, help="output graph JSON (default: <in>.tree.json)")

    p = add("plot", "write overlay SVG figures for dataset samples")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", default=_out_default("plots"))
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--ids", type=_parse_int_list, default=None,
                   help="comma-separated sample ids (default: first --limit of the split)")
    p.add_argument("--limit", type=int, default=DEFAULT_LIMIT)

    p = add("compare", "train and evaluate all three method rows")
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=_out_default("compare"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--patience", type=_parse_patience, default=30)
    p.add_argument("--lambda", type=float, default=10.0, dest="lam")
    p.add_argument("--batch-size", type=int, default=1, dest="batch_size")
    p.add_argument("--lr", type=float, default=1e-3)

    p = add("ablate", "sweep the suppression magnitude")
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=_out_default("ablate"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambdas", type=_parse_float_list, default=[2.0, 5.0, 10.0, 100.0])
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--patience", type=_parse_patience, default=30)
    p.add_argument("--batch-size", type=int, default=1, dest="batch_size")
    p.add_argument("--lr", type=float, default=1e-3)

    p = add("serve", "run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8023)

    return parser, parsers


def _apply_config(parser, parsers, argv):
    """Let a --config file supply defaults, then re-parse so flags win."""
    args = parser.parse_args(argv)
    config_path = getattr(args, "config", None)
    if not config_path:
        return args
    known = CONFIG_KEYS[args.command]
    try:
        raw = load_config(config_path)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    defaults = {}
    for key, value in raw.items():
        if key not in known:
            parser.error(f"{config_path}: unknown key {key!r} for command {args.command!r}")
        dest, convert = known[key]
        try:
            defaults[dest] = convert(value)
        except ValueError as exc:
            parser.error(f"{config_path}: bad value for {key!r}: {exc}")
    parsers[args.command].set_defaults(**defaults)
    return parser.parse_args(argv)


async def _local_request(method: str, path: str, payload):
    from .service.app import create_app

    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(
        transport=transport, base_url="http://treespan.internal", timeout=None
    ) as client:
        return await client.request(method, path, json=payload)


def _request(server, method: str, path: str, payload=None) -> dict:
    try:
        if server:
            with httpx.Client(base_url=server, timeout=None) as client:
                response = client.request(method, path, json=payload)
        else:
            response = asyncio.run(_local_request(method, path, payload))
    except httpx.HTTPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1)
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(1)
    return response.json()


def _cmd_gen(args) -> int:
    out = _request(args.server, "POST", "/generate", {
        "out_dir": args.out,
        "profile": args.profile,
        "train": args.train,
        "val": args.val,
        "test": args.test,
        "seed": args.seed,
        "rules_path": args.rules,
        "force": args.force,
    })
    counts = " ".join(f"{k}={v}" for k, v in sorted(out["counts"].items()))
    print(f"wrote {out['samples']} samples ({counts}) to {out['out_dir']}")
    print(f"manifest: {out['manifest']}")
    return 0


def _cmd_train(args) -> int:
    out = _request(args.server, "POST", "/train", {
        "dataset_dir": args.data,
        "out_dir": args.out,
        "mode": args.mode,
        "seed": args.seed,
        "epochs": args.epochs,
        "learning_rate": args.lr,
        "batch_size": args.batch_size,
        "patience": args.patience,
        "lambda": args.lam,
    })
    print(f"checkpoint: {out['checkpoint']}")
    print(f"history: {out['history']}")
    if out["best_f1"] is not None:
        print(f"best epoch {out['best_epoch']} (val F1 {out['best_f1']:.4f}), "
              f"{out['epochs_run']} epochs run")
    else:
        print(f"{out['epochs_run']} epochs run (no validation split)")
    return 0


def _cmd_eval(args) -> int:
    out = _request(args.server, "POST", "/eval", {
        "dataset_dir": args.data,
        "checkpoint": args.checkpoint,
        "split": args.split,
        "mode": args.mode,
        "self_check": args.self_check,
        "out_dir": args.out,
        "smd_points": args.smd_points,
        "topo_radius": args.topo_radius,
        "topo_angle_tol": args.topo_angle_tol,
    })
    print(out["table"])
    for path in out["artifacts"]:
        print(f"wrote {path}")
    return 0


def _cmd_project(args) -> int:
    out_path = args.out if args.out is not None else f"{args.in_path}.tree.json"
    out = _request(args.server, "POST", "/project", {
        "in_path": args.in_path,
        "out_path": out_path,
    })
    print(f"wrote {out['out_path']}: {out['nodes']} nodes, {out['tree_edges']} tree edges")
    print(f"projection diff: added {out['added']}, removed {out['removed']}")
    return 0


def _cmd_plot(args) -> int:
    out = _request(args.server, "POST", "/plot", {
        "dataset_dir": args.data,
        "checkpoint": args.checkpoint,
        "out_dir": args.out,
        "split": args.split,
        "ids": args.ids,
        "limit": args.limit,
    })
    for path in out["written"]:
        print(f"wrote {path}")
    for skip in out["skipped"]:
        print(f"warning: skipped sample {skip['id']}: {skip['reason']}", file=sys.stderr)
    print(f"{len(out['written'])} figures written, {len(out['skipped'])} skipped")
    return 1 if out["skipped"] else 0


def _cmd_compare(args) -> int:
    out = _request(args.server, "POST", "/compare", {
        "dataset_dir": args.data,
        "out_dir": args.out,
        "seed": args.seed,
        "epochs": args.epochs,
        "patience": args.patience,
        "lambda": args.lam,
        "batch_size": args.batch_size,
        "learning_rate": args.lr,
    })
    print(out["table"])
    print(f"artifacts in {args.out}")
    return 0


def _cmd_ablate(args) -> int:
    out = _request(args.server, "POST", "/ablate", {
        "dataset_dir": args.data,
        "out_dir": args.out,
        "seed": args.seed,
        "lambdas": args.lambdas,
        "epochs": args.epochs,
        "patience": args.patience,
        "batch_size": args.batch_size,
        "learning_rate": args.lr,
    })
    print(out["table"])
    print(f"artifacts in {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


HANDLERS = {
    "gen": _cmd_gen,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "project": _cmd_project,
    "plot": _cmd_plot,
    "compare": _cmd_compare,
    "ablate": _cmd_ablate,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, parsers = build_parser()
    args = _apply_config(parser, parsers, argv)
    return HANDLERS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
