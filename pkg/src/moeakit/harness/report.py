"""Comparison tables from a directory of run records."""
from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..metrics import WilcoxonResult, build_tpfa, front_extent, igd, normalize, purity, wilcoxon_signed_rank
from .experiment import load_results

OTHERS = "[non {ref}]"


class ReportError(ValueError):
    pass


@dataclass
class CellStats:
    igd_runs: list[float]
    purity: float

    @property
    def igd_avg(self) -> float:
        return float(np.mean(self.igd_runs))

    @property
    def igd_std(self) -> float:
        return float(np.std(self.igd_runs, ddof=1)) if len(self.igd_runs) > 1 else 0.0


@dataclass
class StatRow:
    metric: str
    other: str
    pairing: str  # 'instance' (per-instance means) or 'run' (instance, seed pairs)
    result: WilcoxonResult


@dataclass
class Report:
    reference: str | None
    algorithms: list[str]
    instances: list[str]
    cells: dict[tuple[str, str], CellStats]
    seeds: dict[tuple[str, str], list[int]]
    stats: list[StatRow] = field(default_factory=list)
    others: dict[str, tuple[float, float]] = field(default_factory=dict)  # instance -> (best igd avg, best purity)

    def instance_means(self, algorithm: str, metric: str) -> list[float]:
        if metric == "igd":
            return [self.cells[(i, algorithm)].igd_avg for i in self.instances]
        return [self.cells[(i, algorithm)].purity for i in self.instances]


def _group(records: list[dict[str, Any]]):
    modes = {(r["kind"], r["objectives"]) for r in records}
    if len(modes) > 1:
        raise ReportError(f"results mix objective settings: {sorted(modes)}")
    by_cell: dict[tuple[str, str], list[dict]] = defaultdict(list)
    for r in records:
        by_cell[(r["instance"], r["label"])].append(r)
    for recs in by_cell.values():
        recs.sort(key=lambda r: r["seed"])
    return by_cell


def build_report(
    records: list[dict[str, Any]],
    reference: str | None = "bntga",
    normalization: str = "reference",
    canonical_igd: bool = False,
) -> Report:
    """Per-instance IGD/Purity per algorithm, best-of-others, and signed-rank rows.

    ``normalization`` is ``"reference"`` (perfect/nadir stored with each run) or
    ``"extent"`` (min/max of the instance's combined front).
    """
    if not records:
        raise ReportError("no result records found")
    by_cell = _group(records)
    instances = sorted({i for i, _ in by_cell})
    algorithms = sorted({a for _, a in by_cell})
    if reference is not None and reference not in algorithms:
        reference = None
    cells: dict[tuple[str, str], CellStats] = {}
    seeds: dict[tuple[str, str], list[int]] = {}
    for inst in instances:
        fronts = {a: [np.asarray(r["front"], dtype=float) for r in by_cell.get((inst, a), [])] for a in algorithms}
        missing = [a for a in algorithms if not fronts[a]]
        if missing:
            raise ReportError(f"instance {inst} has no runs for {missing}")
        tpfa = build_tpfa([f for fs in fronts.values() for f in fs])
        sample = by_cell[(inst, algorithms[0])][0]
        if normalization == "reference":
            perfect, nadir = np.asarray(sample["perfect"]), np.asarray(sample["nadir"])
        elif normalization == "extent":
            perfect, nadir = front_extent(tpfa)
        else:
            raise ReportError(f"unknown normalization {normalization!r}")
        T = normalize(tpfa, perfect, nadir)
        for a in algorithms:
            runs = [normalize(f, perfect, nadir) for f in fronts[a]]
            union = np.vstack([r.points for r in runs if len(r)]) if any(len(r) for r in runs) else np.empty((0, T.points.shape[1]))
            cells[(inst, a)] = CellStats(
                igd_runs=[igd(r, T, canonical=canonical_igd) for r in runs],
                purity=purity(union, T),
            )
            seeds[(inst, a)] = [r["seed"] for r in by_cell[(inst, a)]]
    report = Report(reference, algorithms, instances, cells, seeds)
    if reference is not None:
        rivals = [a for a in algorithms if a != reference]
        if rivals:
            for inst in instances:
                report.others[inst] = (
                    min(cells[(inst, a)].igd_avg for a in rivals),
                    max(cells[(inst, a)].purity for a in rivals),
                )
        for other in rivals:
            report.stats.extend(_stat_rows(report, reference, other))
    return report


def _stat_rows(report: Report, ref: str, other: str) -> list[StatRow]:
    rows = [
        StatRow("igd", other, "instance", wilcoxon_signed_rank(report.instance_means(ref, "igd"), report.instance_means(other, "igd"), lower_is_better=True)),
        StatRow("purity", other, "instance", wilcoxon_signed_rank(report.instance_means(ref, "purity"), report.instance_means(other, "purity"), lower_is_better=False)),
    ]
    a, b = [], []
    for inst in report.instances:
        ref_runs = dict(zip(report.seeds[(inst, ref)], report.cells[(inst, ref)].igd_runs))
        other_runs = dict(zip(report.seeds[(inst, other)], report.cells[(inst, other)].igd_runs))
        for seed in sorted(set(ref_runs) & set(other_runs)):
            a.append(ref_runs[seed])
            b.append(other_runs[seed])
    rows.append(StatRow("igd", other, "run", wilcoxon_signed_rank(a, b, lower_is_better=True)))
    return rows


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6g}"


def report_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance", "algorithm", "runs", "igd_avg", "igd_std", "purity"])
    for inst in report.instances:
        for a in report.algorithms:
            c = report.cells[(inst, a)]
            w.writerow([inst, a, len(c.igd_runs), repr(c.igd_avg), repr(c.igd_std), repr(c.purity)])
        if inst in report.others:
            best_igd, best_pur = report.others[inst]
            w.writerow([inst, OTHERS.format(ref=report.reference), "", repr(best_igd), "", repr(best_pur)])
    return buf.getvalue()


def stats_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["reference", "other", "metric", "pairing", "n", "statistic", "p_value", "verdict"])
    for s in report.stats:
        r = s.result
        w.writerow([report.reference, s.other, s.metric, s.pairing, r.n_effective, r.statistic, repr(r.p_value), r.verdict])
    return buf.getvalue()


def report_text(report: Report) -> str:
    lines = []
    for metric in ("igd", "purity"):
        head = ["instance"] + [f"{a} avg" for a in report.algorithms]
        if metric == "igd":
            head += [f"{a} std" for a in report.algorithms]
        if report.others:
            head.append(OTHERS.format(ref=report.reference))
        lines.append(f"== {metric.upper()} ==")
        lines.append("\t".join(head))
        for inst in report.instances:
            cells = [report.cells[(inst, a)] for a in report.algorithms]
            if metric == "igd":
                row = [_fmt(c.igd_avg) for c in cells] + [_fmt(c.igd_std) for c in cells]
            else:
                row = [_fmt(c.purity) for c in cells]
            if report.others:
                row.append(_fmt(report.others[inst][0 if metric == "igd" else 1]))
            lines.append("\t".join([inst] + row))
        for s in report.stats:
            if s.metric == metric:
                r = s.result
                p = "n/a" if math.isnan(r.p_value) else f"{r.p_value:.3g}"
                lines.append(f"stat {report.reference} vs {s.other} [{s.pairing}]: {r.verdict} (p={p}, n={r.n_effective})")
        lines.append("")
    return "\n".join(lines)


def write_report(directory: str | Path, out_dir: str | Path | None = None, **kwargs) -> Report:
    directory = Path(directory)
    out_dir = Path(out_dir) if out_dir else directory
    report = build_report(load_results(directory), **kwargs)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.csv").write_text(report_csv(report))
    (out_dir / "stats.csv").write_text(stats_csv(report))
    (out_dir / "report.txt").write_text(report_text(report))
    return report
