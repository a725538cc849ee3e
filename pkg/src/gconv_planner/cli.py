"""Command-line interface.

Exit codes: 0 success, 1 kernel verification failure, 2 validation error,
3 calibration error, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from . import blueprints
from .calibration import CalibrationError, calibrate
from .core import ValidationError, network_cost, validate
from .formats import (
    FormatError,
    bundled_measurements,
    dumps_network,
    format_table,
    parse_network_json,
    read_measurements,
    REPORT_COLUMNS,
)
from .planner import (
    EnergyModelParams,
    GroupingStrategy,
    balanced_groups,
    plan,
    round_to_valid,
)
from .report import SWEEP_COLUMNS, cost_rows, sweep_dicts, sweep_fig3
from .verification import DEFAULT_SEED, run_suite

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_VALIDATION = 2
EXIT_CALIBRATION = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _strategy(text):
    try:
        return GroupingStrategy.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_output(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, help="write here instead of stdout")


def _add_network(p, required=True):
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--net", choices=blueprints.BLUEPRINT_NAMES, help="built-in blueprint")
    src.add_argument("--network", type=Path, help="network JSON file")
    p.add_argument("--resolution", type=int, default=224, help="input resolution for blueprints")
    p.add_argument("--batchnorm", action="store_true", help="count batch-norm parameters in blueprints")


def _add_energy(p):
    p.add_argument("--beta", type=float, help="fill the energy-proxy column with this beta")
    p.add_argument("--scale-k", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gconv-planner", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("analyze", help="cost table for a network and strategy")
    _add_network(p)
    p.add_argument("--strategy", type=_strategy, help="e2gc:G=<int>, fggc:g=<int>, sconv or dwconv")
    p.add_argument("--per-layer", action="store_true")
    _add_energy(p)
    _add_output(p)

    p = sub.add_parser("transform", help="emit the rewritten network")
    _add_network(p)
    p.add_argument("--strategy", type=_strategy, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("optimize", help="balanced group count per substitution site")
    _add_network(p)
    p.add_argument("--beta", type=float, default=0.5)
    anchor = p.add_mutually_exclusive_group(required=True)
    anchor.add_argument("--gamma", type=float)
    anchor.add_argument("--target-G", type=int, dest="target_G",
                        help="choose gamma so the first site balances at this group size")
    _add_output(p)

    p = sub.add_parser("sweep", help="normalized MACs / AI / memory access versus group size")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--m", type=int, default=512)
    p.add_argument("--dk", type=int, default=3)
    p.add_argument("--h", type=int, default=14)
    p.add_argument("--w", type=int, default=14)
    _add_output(p)

    p = sub.add_parser("calibrate", help="fit beta and k to measured energy per frame")
    p.add_argument("--measurements", type=Path, help="measurement CSV (default: bundled data)")
    p.add_argument("--device")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--net", choices=blueprints.BLUEPRINT_NAMES)
    _add_output(p)

    p = sub.add_parser("verify-kernels", help="run the reference-kernel oracle suite")
    p.add_argument("--configs", type=int, default=100)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_output(p)

    p = sub.add_parser("tables", help="Params/MACs for every E2GC and FgGC variant")
    p.add_argument("--net", choices=blueprints.BLUEPRINT_NAMES)
    p.add_argument("--device", help="attach bundled EPF for this device")
    p.add_argument("--batch-size", type=int, default=16)
    _add_energy(p)
    _add_output(p)
    return parser


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _load_network(args):
    if args.network is not None:
        if not args.network.exists():
            raise UsageError(f"no such file: {args.network}")
        net = parse_network_json(args.network)
        diags = validate(net)
        if diags:
            raise ValidationError("; ".join(str(d) for d in diags), diags)
        return net
    return blueprints.generate(
        blueprints.BlueprintId(args.net, input_resolution=args.resolution, batchnorm=args.batchnorm)
    )


def _energy_params(args):
    if args.beta is None:
        return None
    return EnergyModelParams(beta=args.beta, scale_k=args.scale_k)


def _cmd_analyze(args):
    net = _load_network(args)
    label = "as-is"
    if args.strategy is not None:
        net = plan(net, args.strategy)
        label = str(args.strategy)
    cid = f"{net.name}/{args.strategy.label}" if args.strategy else net.name
    rows = cost_rows(net, cid, label, _energy_params(args), per_layer=args.per_layer)
    _emit(format_table(rows, REPORT_COLUMNS, args.format), args.out)


_LAYER_COLUMNS = ("id", "kind", "in_channels", "out_channels", "kernel_h", "kernel_w",
                  "stride", "padding", "ofmap_h", "ofmap_w", "groups", "bias", "batchnorm")


def _cmd_transform(args):
    net = plan(_load_network(args), args.strategy)
    if args.format == "json":
        _emit(dumps_network(net), args.out)
        return
    rows = [
        dict(zip(_LAYER_COLUMNS, (l.id, l.kind, l.m, l.n, l.dk_h, l.dk_w, l.stride, l.padding,
                                  l.h, l.w, l.g, l.has_bias, l.has_batchnorm)))
        for l in net.layers
    ]
    _emit(format_table(rows, _LAYER_COLUMNS, "csv"), args.out)


_OPT_COLUMNS = ("layer_id", "m", "n", "h", "w", "g_current", "g_balanced", "G_balanced", "g_rounded", "G_rounded")


def _cmd_optimize(args):
    net = _load_network(args)
    sites = [net.layer(lid) for lid in net.site_layer_ids]
    if not sites:
        raise ValidationError(f"{net.name} has no substitution sites")
    if args.gamma is not None:
        params = EnergyModelParams(beta=args.beta, gamma=args.gamma)
    else:
        params = EnergyModelParams.anchored(sites[0], args.target_G, beta=args.beta, target_G=args.target_G)
    rows = []
    for layer in sites:
        g_star = balanced_groups(layer, params)
        g = round_to_valid(g_star, layer.m, layer.n)
        rows.append(dict(zip(_OPT_COLUMNS, (layer.id, layer.m, layer.n, layer.h, layer.w, layer.g,
                                            g_star, layer.m / g_star, g, layer.m // g))))
    _emit(format_table(rows, _OPT_COLUMNS, args.format), args.out)


def _cmd_sweep(args):
    rows = sweep_dicts(sweep_fig3(args.n, args.m, args.dk, args.h, args.w))
    _emit(format_table(rows, SWEEP_COLUMNS, args.format), args.out)


_FIT_COLUMNS = ("beta", "scale_k", "n_records", "r2_log", "spearman_rho", "beta_clamped", "beta_unconstrained")


def _cmd_calibrate(args):
    if args.measurements is not None:
        if not args.measurements.exists():
            raise UsageError(f"no such file: {args.measurements}")
        records = read_measurements(args.measurements)
    else:
        records = bundled_measurements()
    records = [
        r for r in records
        if (args.device is None or r.device == args.device)
        and (args.batch_size is None or r.batch_size == args.batch_size)
        and (args.net is None or r.config_id.startswith(args.net + "/"))
    ]
    costs = {}
    for cid in sorted({r.config_id for r in records}):
        try:
            costs[cid], _ = network_cost(blueprints.config_network(cid))
        except ValueError:
            continue  # reported as skipped
    _, report = calibrate(records, costs)
    if args.format == "json":
        _emit(json.dumps(report.as_dict(), indent=2) + "\n", args.out)
    else:
        _emit(format_table([report.as_dict()], _FIT_COLUMNS, "csv"), args.out)


def _cmd_verify(args):
    results = run_suite(args.configs, args.seed)
    rows = [{"check": r.name, "passed": r.passed, "detail": r.detail} for r in results]
    _emit(format_table(rows, ("check", "passed", "detail"), args.format), args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY_FAILED


def _cmd_tables(args):
    names = [args.net] if args.net else list(blueprints.BLUEPRINT_NAMES)
    epf = {}
    if args.device:
        epf = {
            r.config_id: r.epf_millijoule
            for r in bundled_measurements()
            if r.device == args.device and r.batch_size == args.batch_size
        }
    params = _energy_params(args)
    rows = []
    for name in names:
        base = blueprints.generate(name)
        for strategy in blueprints.variant_strategies():
            cid = blueprints.config_id(name, strategy)
            rows.extend(cost_rows(plan(base, strategy), cid, str(strategy), params, epf=epf.get(cid)))
    _emit(format_table(rows, REPORT_COLUMNS, args.format), args.out)


_COMMANDS = {
    "analyze": _cmd_analyze,
    "transform": _cmd_transform,
    "optimize": _cmd_optimize,
    "sweep": _cmd_sweep,
    "calibrate": _cmd_calibrate,
    "verify-kernels": _cmd_verify,
    "tables": _cmd_tables,
}


def run(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args) or EXIT_OK
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip() + "\n")
        return EXIT_USAGE
    except ValidationError as exc:
        sys.stderr.write("validation error:\n")
        for diag in exc.diagnostics or [exc]:
            sys.stderr.write(f"  {diag}\n")
        return EXIT_VALIDATION
    except FormatError as exc:
        sys.stderr.write(f"format error: {exc}\n")
        return EXIT_VALIDATION
    except CalibrationError as exc:
        sys.stderr.write(f"calibration error: {exc}\n")
        return EXIT_CALIBRATION
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
