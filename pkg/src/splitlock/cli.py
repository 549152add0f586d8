"""Command line driver.

Six subcommands mirror the flow and hand off through files, so any stage can
be rerun or inspected in isolation:

    lock      netlist -> locked.bench + locked.json (key sidecar)
    layout    locked design -> layout.json (placement + layer assignment)
    split     locked design + layout -> feol.json + beol.json
    attack    feol.json -> inferred.json (proximity attack)
    eval      everything -> report.json + report.csv
    pipeline  all of the above, over a sweep of seeds, with aggregates

Every stage is seeded and pure: rerunning a command with the same inputs and
seed rewrites byte-identical outputs.  Reports embed the full configuration
and the derived per-stage seeds.  The CSV is meant for external plotting and
analysis tools.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from . import __version__
from .attack import AttackConfig, InferredSecret, proximity_attack, random_key_attack
from .bench import Netlist, NetlistError, parse_bench
from .benchmarks import benchmark_names, load_benchmark
from .layout import (
    BEOLSecret,
    FEOLView,
    LayerAssignment,
    LayoutError,
    Placement,
    assign_layers,
    place,
    split,
)
from .locking import (
    LockedDesign,
    LockingError,
    load_locked_design,
    lock,
    save_locked_design,
)
from .metrics import aggregate_oer, error_stats, evaluate_attack, recovered_netlist
from .seeds import derive

CSV_COLUMNS = (
    "benchmark",
    "mode",
    "split_layer",
    "seed",
    "ccr_regular",
    "ccr_key_phys",
    "ccr_key_log",
    "hd",
    "oer",
    "pnr",
)


def _atomic_write(path: str, data: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _write_json(path: str, doc) -> None:
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _read_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _load_input(spec: str) -> Netlist:
    """A benchmark name, or a path to a BENCH file."""
    if not spec.endswith(".bench") and not os.path.exists(spec):
        return load_benchmark(spec)
    with open(spec) as fh:
        name = os.path.splitext(os.path.basename(spec))[0]
        return parse_bench(fh.read(), name=name)


def _parse_grid(value: str):
    if value == "auto":
        return None
    try:
        w, _, h = value.partition("x")
        grid = (int(w), int(h))
        if grid[0] < 1 or grid[1] < 1:
            raise ValueError
        return grid
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"grid must be 'auto' or WxH, got {value!r}"
        ) from None


def _parse_thresholds(value: str):
    if value == "default":
        return None
    try:
        parts = [
            math.inf if p.strip() == "inf" else float(p)
            for p in value.split(",")
        ]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"thresholds must be comma-separated numbers, got {value!r}"
        ) from None
    return tuple(parts)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row["benchmark"],
                row["mode"],
                row["split_layer"],
                row["seed"],
                f"{row['ccr_regular']:.6f}",
                f"{row['ccr_key_phys']:.6f}",
                f"{row['ccr_key_log']:.6f}",
                f"{row['hd']:.6f}",
                f"{row['oer']:.6f}",
                f"{row['pnr']:.6f}",
            ]
        )
    return buf.getvalue()


def _metrics_row(benchmark, mode, split_layer, seed, report) -> dict:
    return {
        "benchmark": benchmark,
        "mode": mode,
        "split_layer": split_layer,
        "seed": seed,
        "ccr_regular": report.ccr_regular,
        "ccr_key_phys": report.ccr_key_physical,
        "ccr_key_log": report.ccr_key_logical,
        "hd": report.hamming_distance,
        "oer": 100.0 if report.oer else 0.0,
        "pnr": report.pnr,
        "n_broken_regular": report.n_broken_regular,
        "n_broken_key": report.n_broken_key,
        "n_unresolved": report.n_unresolved,
    }


def _out(args, name: str) -> str:
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


# -- subcommands -------------------------------------------------------------------


def cmd_lock(args) -> int:
    netlist = _load_input(args.input)
    design = lock(netlist, args.k, args.modules or None, args.seed)
    save_locked_design(design, _out(args, "locked.bench"), _out(args, "locked.json"))
    print(
        f"locked {netlist.name}: {len(netlist.gates)} gates -> "
        f"{len(design.netlist.gates)}, k={design.k}, "
        f"{len(design.module_records)} modules"
    )
    return 0


def _load_design(args) -> LockedDesign:
    return load_locked_design(args.locked, args.sidecar)


def cmd_layout(args) -> int:
    design = _load_design(args)
    placement = place(design, args.grid, args.seed, args.mode)
    layers = assign_layers(
        placement, design, args.thresholds, args.split_layer, args.mode
    )
    doc = {"placement": placement.to_dict(), "layers": layers.to_dict()}
    _write_json(_out(args, "layout.json"), doc)
    broken = sum(1 for e in layers.entries if e.top_layer > layers.split_layer)
    print(
        f"placed {len(placement.positions)} cells on "
        f"{placement.grid[0]}x{placement.grid[1]}, mode={args.mode}, "
        f"{broken}/{len(layers.entries)} connections above layer "
        f"{layers.split_layer}"
    )
    return 0


def cmd_split(args) -> int:
    design = _load_design(args)
    doc = _read_json(args.layout)
    placement = Placement.from_dict(doc["placement"])
    layers = LayerAssignment.from_dict(doc["layers"])
    feol, secret = split(design, placement, layers, args.split_layer)
    _write_json(_out(args, "feol.json"), feol.to_dict())
    _write_json(_out(args, "beol.json"), secret.to_dict())
    print(
        f"split at layer {feol.split_layer}: {len(secret.edges)} edges "
        f"withheld, {len(feol.dangling_sinks)} open sinks"
    )
    return 0


def cmd_attack(args) -> int:
    feol = FEOLView.from_dict(_read_json(args.feol))
    config = AttackConfig(
        max_fanout_regular=args.max_fanout,
        tie_capacity=args.tie_capacity,
        avoid_loops=not args.no_avoid_loops,
        min_separation=args.min_separation,
        keygate_postprocess=not args.no_keygate_postprocess,
        seed=args.seed,
    )
    inferred = proximity_attack(feol, config)
    _write_json(_out(args, "inferred.json"), inferred.to_dict())
    print(
        f"proximity attack: {len(inferred.edges)} edges guessed, "
        f"{len(inferred.unresolved)} unresolved"
    )
    return 0


def cmd_eval(args) -> int:
    original = _load_input(args.input)
    design = _load_design(args)
    feol = FEOLView.from_dict(_read_json(args.feol))
    secret = BEOLSecret.from_dict(_read_json(args.beol))
    inferred = InferredSecret.from_dict(_read_json(args.inferred))
    report = evaluate_attack(
        original, design, feol, secret, inferred, args.samples, args.seed
    )
    row = _metrics_row(original.name, feol.mode, feol.split_layer, args.seed, report)
    doc = {
        "config": {
            "input": args.input,
            "samples": args.samples,
            "seed": args.seed,
            "unresolved_fill": "TIE0",
        },
        "row": row,
    }
    _write_json(_out(args, "report.json"), doc)
    _atomic_write(_out(args, "report.csv"), _csv_text([row]))
    print(
        f"ccr regular {report.ccr_regular:.1f}, key physical "
        f"{report.ccr_key_physical:.1f}, key logical "
        f"{report.ccr_key_logical:.1f}, hd {report.hamming_distance:.1f}, "
        f"oer {'yes' if report.oer else 'no'}, pnr {report.pnr:.1f}"
    )
    return 0


def cmd_pipeline(args) -> int:
    original = _load_input(args.input)
    rows = []
    runs = []
    for r in range(args.seeds):
        seeds = {
            "lock": derive(args.seed, f"run{r}.lock"),
            "place": derive(args.seed, f"run{r}.place"),
            "attack": derive(args.seed, f"run{r}.attack"),
            "eval": derive(args.seed, f"run{r}.eval"),
        }
        design = lock(original, args.k, args.modules or None, seeds["lock"])
        placement = place(design, args.grid, seeds["place"], args.mode)
        layers = assign_layers(
            placement, design, args.thresholds, args.split_layer, args.mode
        )
        feol, secret = split(design, placement, layers)
        config = AttackConfig(
            max_fanout_regular=args.max_fanout,
            tie_capacity=args.tie_capacity,
            min_separation=args.min_separation,
            seed=seeds["attack"],
        )
        inferred = proximity_attack(feol, config)
        report = evaluate_attack(
            original, design, feol, secret, inferred, args.samples, seeds["eval"]
        )
        row = _metrics_row(
            original.name, args.mode, args.split_layer, r, report
        )
        rows.append(row)
        runs.append({"stage_seeds": seeds, "metrics": row})
        if args.keep_runs:
            run_dir = os.path.join(args.out_dir, f"run{r:03d}")
            os.makedirs(run_dir, exist_ok=True)
            save_locked_design(
                design,
                os.path.join(run_dir, "locked.bench"),
                os.path.join(run_dir, "locked.json"),
            )
            _write_json(
                os.path.join(run_dir, "layout.json"),
                {"placement": placement.to_dict(), "layers": layers.to_dict()},
            )
            _write_json(os.path.join(run_dir, "feol.json"), feol.to_dict())
            _write_json(os.path.join(run_dir, "beol.json"), secret.to_dict())
            _write_json(os.path.join(run_dir, "inferred.json"), inferred.to_dict())
        print(
            f"run {r + 1}/{args.seeds}: ccr key physical "
            f"{report.ccr_key_physical:.1f}, logical "
            f"{report.ccr_key_logical:.1f}, regular {report.ccr_regular:.1f}",
            file=sys.stderr,
        )
    mean = lambda key: sum(row[key] for row in rows) / len(rows)  # noqa: E731
    aggregate = {
        "ccr_regular_mean": mean("ccr_regular"),
        "ccr_key_phys_mean": mean("ccr_key_phys"),
        "ccr_key_log_mean": mean("ccr_key_log"),
        "hd_mean": mean("hd"),
        "oer_percent": mean("oer"),
        "pnr_mean": mean("pnr"),
    }
    doc = {
        "config": {
            "input": args.input,
            "benchmark": original.name,
            "k": args.k,
            "modules": args.modules or "auto",
            "mode": args.mode,
            "grid": list(args.grid) if args.grid else "auto",
            "split_layer": args.split_layer,
            "thresholds": [
                None if math.isinf(t) else t for t in args.thresholds
            ]
            if args.thresholds
            else "default",
            "seeds": args.seeds,
            "master_seed": args.seed,
            "samples": args.samples,
            "max_fanout": args.max_fanout,
            "tie_capacity": args.tie_capacity,
            "min_separation": "auto"
            if args.min_separation is None
            else args.min_separation,
            "random_trials": args.random_trials,
            "unresolved_fill": "TIE0",
        },
        "runs": runs,
        "aggregate": aggregate,
    }
    if args.random_trials > 0:
        doc["random_key"] = _random_key_summary(args, original)
    _write_json(_out(args, "report.json"), doc)
    _atomic_write(_out(args, "report.csv"), _csv_text(rows))
    print(
        f"{args.seeds} runs of {original.name} ({args.mode}, split "
        f"{args.split_layer}): ccr regular {aggregate['ccr_regular_mean']:.1f}, "
        f"key physical {aggregate['ccr_key_phys_mean']:.1f}, key logical "
        f"{aggregate['ccr_key_log_mean']:.1f}, hd {aggregate['hd_mean']:.1f}, "
        f"oer {aggregate['oer_percent']:.1f}, pnr {aggregate['pnr_mean']:.1f}"
    )
    return 0


def _random_key_summary(args, original) -> dict:
    """Random-key guessing on the first run's layout: per-trial output
    corruption, plus how often the exact physical key wiring came out."""
    seeds = {
        "lock": derive(args.seed, "run0.lock"),
        "place": derive(args.seed, "run0.place"),
        "random": derive(args.seed, "run0.random-key"),
        "eval": derive(args.seed, "run0.eval"),
    }
    design = lock(original, args.k, args.modules or None, seeds["lock"])
    placement = place(design, args.grid, seeds["place"], args.mode)
    layers = assign_layers(
        placement, design, args.thresholds, args.split_layer, args.mode
    )
    feol, secret = split(design, placement, layers)
    trials = random_key_attack(
        feol, secret, args.random_trials, seeds["random"], args.tie_capacity
    )
    truth = set(secret.edges)
    flags = []
    hds = []
    full = 0
    for t, inferred in enumerate(trials):
        if set(inferred.edges) == truth:
            full += 1
        recovered = recovered_netlist(feol, inferred)
        hd, differs = error_stats(
            original, recovered, args.samples, derive(seeds["eval"], f"trial.{t}")
        )
        flags.append(differs)
        hds.append(hd)
    return {
        "trials": args.random_trials,
        "oer_percent": aggregate_oer(flags),
        "hd_mean": sum(hds) / len(hds),
        "full_physical_recoveries": full,
    }


# -- parser ------------------------------------------------------------------------


def _add_locked_args(p, out_default):
    p.add_argument(
        "--locked",
        default=os.path.join(out_default, "locked.bench"),
        help="locked netlist (BENCH)",
    )
    p.add_argument(
        "--sidecar",
        default=os.path.join(out_default, "locked.json"),
        help="key sidecar written by lock",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splitlock",
        description=(
            "Fault-injection logic locking with the key hidden in withheld "
            "back-end wiring, plus layout, attacks and metrics.  Bundled "
            f"benchmarks: {', '.join(benchmark_names())}."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    out = "out"

    p = sub.add_parser("lock", help="lock a netlist")
    p.add_argument("--input", required=True, help="benchmark name or BENCH path")
    p.add_argument("--k", type=int, default=128, help="key bits (default 128)")
    p.add_argument(
        "--modules",
        type=int,
        default=0,
        help="module count (default: one per two gates)",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=out)
    p.set_defaults(func=cmd_lock)

    p = sub.add_parser("layout", help="place and assign layers")
    _add_locked_args(p, out)
    p.add_argument("--mode", choices=("secure", "naive"), default="secure")
    p.add_argument("--grid", type=_parse_grid, default=None, help="WxH or auto")
    p.add_argument(
        "--thresholds",
        type=_parse_thresholds,
        default=None,
        help="per-layer wirelength limits, e.g. 2,4,8,16,32,64,128,inf",
    )
    p.add_argument("--split-layer", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=out)
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("split", help="separate front end from back end")
    _add_locked_args(p, out)
    p.add_argument("--layout", default=os.path.join(out, "layout.json"))
    p.add_argument(
        "--split-layer",
        type=int,
        default=None,
        help="override the layer recorded in the layout",
    )
    p.add_argument("--out-dir", default=out)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("attack", help="proximity attack on a front end")
    p.add_argument("--feol", default=os.path.join(out, "feol.json"))
    p.add_argument("--max-fanout", type=int, default=16)
    p.add_argument("--tie-capacity", type=int, default=1)
    p.add_argument("--no-avoid-loops", action="store_true")
    p.add_argument(
        "--min-separation",
        type=float,
        default=None,
        help="length floor for non-key pairs (default: the split layer's "
        "wirelength bound; 0 disables)",
    )
    p.add_argument("--no-keygate-postprocess", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=out)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("eval", help="score an attack")
    p.add_argument("--input", required=True, help="original netlist")
    _add_locked_args(p, out)
    p.add_argument("--feol", default=os.path.join(out, "feol.json"))
    p.add_argument("--beol", default=os.path.join(out, "beol.json"))
    p.add_argument("--inferred", default=os.path.join(out, "inferred.json"))
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=out)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="lock/layout/split/attack/eval sweep")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, default=128)
    p.add_argument("--modules", type=int, default=0)
    p.add_argument("--mode", choices=("secure", "naive"), default="secure")
    p.add_argument("--grid", type=_parse_grid, default=None)
    p.add_argument("--thresholds", type=_parse_thresholds, default=None)
    p.add_argument("--split-layer", type=int, default=4)
    p.add_argument("--seeds", type=int, default=20, help="number of runs")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--max-fanout", type=int, default=16)
    p.add_argument("--tie-capacity", type=int, default=1)
    p.add_argument("--min-separation", type=float, default=None)
    p.add_argument(
        "--random-trials",
        type=int,
        default=0,
        help="also run this many random-key guesses on the first run",
    )
    p.add_argument(
        "--keep-runs",
        action="store_true",
        help="write per-run artifacts under run<NNN>/",
    )
    p.add_argument("--out-dir", default=out)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NetlistError, LockingError, LayoutError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
