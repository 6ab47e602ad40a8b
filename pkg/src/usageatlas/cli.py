"""Command-line interface.

Subcommands compose on disk: `generate` writes panel CSVs, `graph`,
`cluster`, `measure`, and `layout` each read the previous stage's
artifacts, `report` is the all-in-one per-snapshot run, and `pipeline`
executes a full multi-snapshot run from one config file.

Exit codes: 0 success, 1 validation error, 2 missing upstream artifact,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from usageatlas import __version__, pipeline
from usageatlas.cartograph import LayoutParams
from usageatlas.config import load_config, world_from_dict
from usageatlas.errors import DependencyError, ValidationError
from usageatlas.regions import CutSpec


def _add_layout_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--width", type=float, default=1000.0)
    parser.add_argument("--height", type=float, default=1000.0)
    parser.add_argument("--iterations", type=int, default=500)
    parser.add_argument("--temperature", type=float, default=0.1,
                        help="initial temperature as a fraction of the frame width")


def _layout_params(args: argparse.Namespace) -> LayoutParams:
    return LayoutParams(
        width=args.width, height=args.height, iterations=args.iterations,
        initial_temperature=args.temperature, seed=args.seed,
    )


def _add_cut_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cut-mode", choices=["auto", "fixed"], default="auto")
    parser.add_argument("--k", type=int, default=None, help="cluster count for fixed cuts")
    parser.add_argument("--prev-partition", type=Path, default=None,
                        help="previous snapshot's partition, for stable cluster colors")
    parser.add_argument("--match-threshold", type=float, default=0.3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="usageatlas", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"usageatlas {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize panel CSVs from a world spec")
    p.add_argument("--world", type=Path, required=True, help="world spec JSON file")
    p.add_argument("--snapshots", type=int, default=None, help="override the spec's snapshot count")
    p.add_argument("--seed", type=int, default=None, help="override the spec's seed")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("graph", help="panel CSV -> duplication graph + summary")
    p.add_argument("--panel", type=Path, required=True)
    p.add_argument("--sites", type=Path, default=None, help="optional site metadata CSV")
    p.add_argument("--label", default=None, help="snapshot label (default: from file name)")
    p.add_argument("--top-n", type=int, default=1000)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("cluster", help="graph JSON -> partition JSON")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_cut_flags(p)

    p = sub.add_parser("measure", help="graph + partition -> metrics JSON")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--partition", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("layout", help="graph + partition -> coordinates JSON + map SVG")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--partition", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_layout_flags(p)

    p = sub.add_parser("report", help="all per-snapshot stages from one panel CSV")
    p.add_argument("--panel", type=Path, required=True)
    p.add_argument("--sites", type=Path, default=None)
    p.add_argument("--label", default=None)
    p.add_argument("--top-n", type=int, default=1000)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_cut_flags(p)
    _add_layout_flags(p)

    p = sub.add_parser("pipeline", help="full multi-snapshot run from a config file")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None, help="override the config's output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config's seed")
    return parser


def _run(args: argparse.Namespace) -> None:
    if args.command == "generate":
        if not args.world.exists():
            raise ValidationError(f"world spec not found: {args.world}")
        data = json.loads(args.world.read_text(encoding="utf-8"))
        if args.seed is not None:
            data = {**data, "seed": args.seed}
        world = world_from_dict(data)
        snapshots = args.snapshots if args.snapshots is not None else int(data.get("snapshots", 1))
        sources = pipeline.stage_generate(world, snapshots, args.out)
        for label, visits, _sites in sources:
            print(f"wrote {visits} ({label})")

    elif args.command == "graph":
        label = pipeline.stage_graph(args.panel, args.out, label=args.label,
                                     sites_path=args.sites, top_n=args.top_n)
        print(f"wrote {args.out / f'graph_{label}.json'}")

    elif args.command == "cluster":
        cut = CutSpec(mode=args.cut_mode, k=args.k)
        label = pipeline.stage_cluster(args.graph, args.out, cut,
                                       prev_partition_path=args.prev_partition,
                                       match_threshold=args.match_threshold)
        print(f"wrote {args.out / f'partition_{label}.json'}")

    elif args.command == "measure":
        label = pipeline.stage_measure(args.graph, args.partition, args.out)
        print(f"wrote {args.out / f'metrics_{label}.json'}")

    elif args.command == "layout":
        label = pipeline.stage_layout(args.graph, args.partition, args.out, _layout_params(args))
        print(f"wrote {args.out / f'map_{label}.svg'}")

    elif args.command == "report":
        report = pipeline.run_snapshot(
            args.panel, args.out, label=args.label, sites_path=args.sites,
            top_n=args.top_n, cut=CutSpec(mode=args.cut_mode, k=args.k),
            layout_params=_layout_params(args), prev_partition_path=args.prev_partition,
            match_threshold=args.match_threshold,
        )
        print(f"wrote {args.out / ('report_' + report['snapshot_label'] + '.json')}")

    elif args.command == "pipeline":
        config = load_config(args.config, seed_override=args.seed,
                             out_override=str(args.out) if args.out else None)
        reports = pipeline.run_pipeline(config)
        out = config.out_dir or Path("out")
        for report in reports:
            print(f"snapshot {report['snapshot_label']}: "
                  f"{len(report['metrics'])} cluster(s), "
                  f"{report['summary']['pairs_evaluated']} pairs evaluated")
        print(f"artifacts under {out}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _run(args)
    except DependencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
