from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..metrics import build_tpfa, front_extent, igd, normalize, purity
from ..msrcpsp import InstanceError, critical_path_fraction, load_instance
from ..ttp import TtpFormatError, load_ttp, mst_length, ttp_reference_points
from .config import ExperimentConfigError, load_config
from .experiment import ResultFormatError, read_records, run_experiment
from .report import ReportError, write_report


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    paths = run_experiment(cfg)
    print(f"{len(paths)} result files in {cfg.output_dir}")
    return 0


def _cmd_report(args) -> int:
    rep = write_report(
        args.directory,
        args.out,
        reference=args.reference,
        normalization=args.normalization,
        canonical_igd=args.canonical,
    )
    out = Path(args.out or args.directory)
    print((out / "report.txt").read_text(), end="")
    print(f"wrote {out / 'summary.csv'}, {out / 'stats.csv'}, {out / 'report.txt'} ({len(rep.instances)} instances)")
    return 0


def _cmd_validate(args) -> int:
    try:
        if args.kind == "msrcpsp":
            inst = load_instance(args.instance)
            counts = inst.capable_count
            print(f"instance {inst.name}: OK")
            print(f"tasks {inst.n_tasks}, resources {inst.n_resources}")
            print(f"capable resources per task: min {counts.min()}, mean {counts.mean():.2f}, max {counts.max()}")
            print(f"critical-path fraction: {critical_path_fraction(inst):.4f}")
        else:
            inst = load_ttp(args.instance)
            perfect, nadir = ttp_reference_points(inst)
            print(f"instance {inst.name}: OK")
            print(f"cities {inst.n_cities}, items {inst.n_items}, capacity {inst.capacity:g}")
            print(f"speed range [{inst.v_min:g}, {inst.v_max:g}], edge weights {inst.edge_weight_type}")
            print(f"MST length {mst_length(inst):g}")
            print(f"perfect point {perfect.tolist()}, nadir point {nadir.tolist()}")
    except (InstanceError, TtpFormatError, ValueError, OSError) as exc:
        print(f"instance {args.instance}: INVALID: {exc}", file=sys.stderr)
        return 1
    return 0


def _read_points(path: Path) -> tuple[list[np.ndarray], tuple | None]:
    """Fronts in a file plus (perfect, nadir) when the file carries them."""
    if path.suffix == ".jsonl":
        recs = list(read_records(path))
        refs = (np.asarray(recs[0]["perfect"]), np.asarray(recs[0]["nadir"])) if recs else None
        return [np.asarray(r["front"], dtype=float) for r in recs], refs
    pts = np.loadtxt(path, delimiter="," if path.suffix == ".csv" else None, ndmin=2)
    return [pts], None


def _cmd_metrics(args) -> int:
    tpfa_raw, _ = _read_points(Path(args.tpfa))
    tpfa = build_tpfa(tpfa_raw)
    inputs = [(Path(f), *_read_points(Path(f))) for f in args.fronts]
    refs = [r for _, _, r in inputs]
    if args.normalization == "reference" and all(r is not None for r in refs):
        perfect, nadir = refs[0]
    else:
        perfect, nadir = front_extent(tpfa)
    T = normalize(tpfa, perfect, nadir)
    rows = []
    for path, fronts, _ in inputs:
        normed = [normalize(f, perfect, nadir) for f in fronts]
        igds = [igd(n, T, canonical=args.canonical) for n in normed]
        union = np.vstack([n.points for n in normed]) if normed else np.empty((0, T.points.shape[1]))
        rows.append({"file": str(path), "runs": len(fronts), "igd_avg": float(np.mean(igds)), "purity": purity(union, T)})
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            print(f"{r['file']}\truns={r['runs']}\tigd={r['igd_avg']:.6g}\tpurity={r['purity']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="moeakit", description="Multi-objective experiment toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute an experiment config")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="summarise a results directory")
    p.add_argument("directory")
    p.add_argument("--out", help="write tables here instead of the results directory")
    p.add_argument("--reference", default="bntga", help="algorithm label compared against the rest")
    p.add_argument("--normalization", choices=("reference", "extent"), default="reference")
    p.add_argument("--canonical", action="store_true", help="average IGD distances instead of root-sum-square")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("validate", help="check an instance file and print derived statistics")
    p.add_argument("instance")
    p.add_argument("--kind", choices=("msrcpsp", "ttp"), required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("metrics", help="IGD and Purity of front files against a reference front")
    p.add_argument("fronts", nargs="+", help=".jsonl result files or whitespace/CSV point files")
    p.add_argument("--tpfa", required=True)
    p.add_argument("--normalization", choices=("reference", "extent"), default="reference")
    p.add_argument("--canonical", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_metrics)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ExperimentConfigError, ReportError, ResultFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
