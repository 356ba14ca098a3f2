"""``qpcocycle`` command line.

Each subcommand builds an :class:`~qpcocycle.harness.ExperimentConfig`,
optionally starting from ``--config FILE``; flags given on the command line
override file values. The resolved config is printed and stored in
``summary.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict

from . import __version__
from .harness import (
    CLAIMS,
    EXIT_ERROR,
    OUTPUT_ENV,
    ConfigError,
    ExperimentConfig,
    read_config_file,
    run,
)


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _points(text: str) -> list[list[float]]:
    """``"0,0;0.05,0"`` -> [[0, 0], [0.05, 0]]."""
    return [[float(v) for v in p.split(",")] for p in text.split(";") if p.strip()]


def _keyval(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, val = text.split("=", 1)
    try:
        return key.strip(), json.loads(val)
    except json.JSONDecodeError:
        return key.strip(), val


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or flat key = value config file")
    common.add_argument("--out", dest="output_dir", help=f"output directory (default ${OUTPUT_ENV}/<operation>)")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    coc = argparse.ArgumentParser(add_help=False)
    coc.add_argument("--cocycle", help="gallery name or path to a cocycle .json file")
    coc.add_argument("--param", action="append", type=_keyval, default=[], metavar="KEY=VALUE",
                     help="gallery parameter (value parsed as JSON when possible); repeatable")
    coc.add_argument("--freq", help="comma-separated frequency: decimals or sqrt2m1 / sqrt3m1")

    p = argparse.ArgumentParser(prog="qpcocycle", description="Quasi-periodic cocycle numerics")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="operation", required=True)

    sp = sub.add_parser("construct", parents=[common, coc], help="write a gallery cocycle as JSON")
    sp.add_argument("name", nargs="?", help="gallery name (same as --cocycle)")

    sp = sub.add_parser("lyapunov", parents=[common, coc], help="Lyapunov spectrum")
    sp.add_argument("--n", type=int)
    sp.add_argument("--phases", type=int)
    sp.add_argument("--gap-tol", type=float)

    for name, helptext in (("dominate", "k-domination test"), ("sweep", "complexified domination sweep")):
        sp = sub.add_parser(name, parents=[common, coc], help=helptext)
        sp.add_argument("--k", type=int)
        sp.add_argument("--grid", type=int)
        sp.add_argument("--schedule", type=_ints, help="comma-separated iterate lengths")
        sp.add_argument("--angle-tol", type=float)
        if name == "sweep":
            sp.add_argument("--y", type=_points, help='imaginary shifts, e.g. "0,0;0.05,0"')

    sp = sub.add_parser("degree", parents=[common], help="degree of a sampled map T^2 -> S^2")
    sp.add_argument("--field", help="built-in field: constant, wrap, weierstrass, torus-rev")
    sp.add_argument("--file", help="CSV rows x,y,c1,c2,c3 on a square grid")
    sp.add_argument("--N", type=int)

    sp = sub.add_parser("homology", parents=[common], help="Betti numbers, splitting, obstruction")
    sp.add_argument("action", nargs="?", choices=["betti", "kunneth", "split", "obstruct"])
    sp.add_argument("--space", choices=["torus", "grassmann"])
    sp.add_argument("--d", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--m", type=int)
    sp.add_argument("--left", help="Betti numbers, comma separated")
    sp.add_argument("--right", help="Betti numbers, comma separated")
    sp.add_argument("--file", help='factor JSON {"f": [[...]], "pi": [[...]], "h": [[...]]} with "p/q" entries')
    nz = sp.add_mutually_exclusive_group()
    nz.add_argument("--nonzero", dest="nonzero", action="store_true", default=None)
    nz.add_argument("--zero", dest="nonzero", action="store_false")

    sp = sub.add_parser("reproduce", parents=[common], help="bundled reproduction checks")
    sp.add_argument("claim", nargs="?", choices=CLAIMS + ("all",))
    return p


_PARAM_FLAGS = {
    "lyapunov": ("n", "phases", "gap_tol"),
    "dominate": ("k", "grid", "schedule", "angle_tol"),
    "sweep": ("k", "grid", "schedule", "angle_tol", "y"),
    "degree": ("field", "file", "N"),
    "homology": ("action", "space", "d", "k", "m", "left", "right", "file", "nonzero"),
    "reproduce": ("claim",),
    "construct": (),
}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base = read_config_file(args.config) if args.config else {}
    if base.get("operation", args.operation) != args.operation:
        raise ConfigError(f"operation: config file says {base['operation']!r}, command is {args.operation!r}")
    base["operation"] = args.operation
    params = dict(base.get("params", {}))
    for key in _PARAM_FLAGS[args.operation]:
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    base["params"] = params
    name = getattr(args, "name", None) or getattr(args, "cocycle", None)
    if name is not None:
        base["cocycle"] = name
    if getattr(args, "param", None):
        base["cocycle_params"] = {**base.get("cocycle_params", {}), **dict(args.param)}
    if getattr(args, "freq", None) is not None:
        base["frequency"] = [t.strip() for t in args.freq.split(",") if t.strip()]
    for key in ("output_dir", "seed"):
        if getattr(args, key) is not None:
            base[key] = getattr(args, key)
    return ExperimentConfig.from_mapping(base)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = config_from_args(args).resolved()
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps(asdict(cfg), sort_keys=True))
    code = run(cfg)
    if code == EXIT_ERROR:
        print("error: run failed (see messages above)", file=sys.stderr)
    else:
        print(f"wrote {cfg.output_dir}/summary.json")
    return code


if __name__ == "__main__":
    sys.exit(main())
