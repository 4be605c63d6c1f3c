"""``coalsel`` command-line tool.

Every subcommand reads an optional JSON config (``--config``) whose keys are
:class:`~coalsel.pipeline.RunConfig` fields; command-line flags override it.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from coalsel import __version__, pipeline
from coalsel.pipeline import RunConfig


def _synthetic_arg(text: str) -> dict:
    """Inline JSON object or path to a JSON file."""
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    with open(text, encoding="utf-8") as fh:
        return json.load(fh)


def _filters_arg(text: str) -> dict:
    out = {}
    for item in text.split(","):
        ch, sep, name = item.partition("=")
        if not sep or not ch or not name:
            raise argparse.ArgumentTypeError(f"expected CHANNEL=WAVELET[,...], got {text!r}")
        out[ch.strip()] = name.strip()
    return out


def _list_arg(text: str) -> list:
    return [s.strip() for s in text.split(",") if s.strip()]


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--dataset", help="directory holding manifest.json and record folders")
    p.add_argument("--synthetic", type=_synthetic_arg, help="generator spec: inline JSON or a JSON file")
    p.add_argument("--filters", type=_filters_arg, help="per-channel wavelets, e.g. ECG=db8,ABP=db4")
    p.add_argument("--depth", type=int)
    p.add_argument("--boundary", choices=("periodic", "symmetric"))
    p.add_argument("--catalog", help="feature catalog name")
    p.add_argument("--selectors", type=_list_arg, help=f"comma list from {','.join(pipeline.SELECTORS)}")
    p.add_argument("--L", dest="L", type=int, help="group size of the Shapley estimator")
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--relief-k", dest="relief_k", type=int)
    p.add_argument("--relief-m", dest="relief_m", type=int)
    p.add_argument("--classifier")
    p.add_argument("--no-none", dest="include_none", action="store_const", const=False,
                   help="omit the all-features row from the evaluation table")
    p.add_argument("--n-jobs", dest="n_jobs", type=int)
    p.add_argument("--output", "-o", help="output directory")


_CONFIG_KEYS = [
    "dataset", "synthetic", "filters", "depth", "boundary", "catalog", "selectors", "L",
    "rounds", "seed", "folds", "top_k", "bins", "relief_k", "relief_m", "classifier",
    "include_none", "n_jobs", "output",
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coalsel",
        description="Wavelet features from multi-channel signals ranked by coalition-game Shapley values.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic dataset with planted coalitions")
    _add_config_flags(p)
    p = sub.add_parser("decompose", help="dump the wavelet coefficients of one record")
    _add_config_flags(p)
    p.add_argument("--record", help="record id (default: the first record)")
    p = sub.add_parser("rank", help="rank features with every configured selector")
    _add_config_flags(p)
    p = sub.add_parser("evaluate", help="rank, then cross-validate the top-k subset of each selector")
    _add_config_flags(p)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    raw = {}
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError(f"{args.config}: config must be a JSON object")
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    # a source given on the command line replaces the one from the file
    if args.dataset is not None:
        raw.pop("synthetic", None)
    elif args.synthetic is not None:
        raw.pop("dataset", None)
    return RunConfig.from_dict(raw)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(args)
        out = Path(cfg.output)
        if args.command == "synth":
            path = pipeline.run_synth(cfg, out)
        elif args.command == "decompose":
            path = pipeline.run_decompose(cfg, args.record, out)
        elif args.command == "rank":
            pipeline.run_rank(cfg, out)
            path = out
        else:
            pipeline.run_evaluate(cfg, out)
            path = out / "evaluation.csv"
    except (ValueError, OSError, KeyError, TypeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"coalsel: error: {msg}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
