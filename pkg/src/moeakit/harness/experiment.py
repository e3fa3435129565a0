"""Seeded multi-run execution with atomic, resumable JSON-lines result files."""
from __future__ import annotations

import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from ..core import RunResult, nondominated_mask
from .config import ALGORITHMS, ExperimentConfig, build_config, make_problem

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
VOLATILE_FIELDS = ("wall_time",)


class ResultFormatError(ValueError):
    pass


@dataclass(frozen=True)
class RunTask:
    algorithm: str
    label: str
    kind: str
    objectives: int
    instance_path: str
    seed: int
    params: dict[str, Any]
    output: str


def result_filename(label: str, instance: str, seed: int) -> str:
    return f"{label}__{instance}__{seed}.jsonl"


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def result_record(result: RunResult, task: RunTask, perfect, nadir, budget: int) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "algorithm": result.algorithm,
        "label": task.label,
        "kind": task.kind,
        "objectives": task.objectives,
        "instance": result.instance,
        "seed": result.seed,
        "budget": budget,
        "evaluations": result.evaluations,
        "generations": result.generations,
        "wall_time": result.wall_time,
        "perfect": [float(v) for v in perfect],
        "nadir": [float(v) for v in nadir],
        "config": _jsonable(result.config),
        "diagnostics": _jsonable(result.diagnostics),
        "front": [list(p) for p in result.front],
        "genotypes": _jsonable(result.genotypes),
    }


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def execute_task(task: RunTask) -> str:
    """Run one (algorithm, instance, seed) triple and persist its record."""
    problem = make_problem(task.kind, task.instance_path, task.objectives)
    config = build_config(task.algorithm, task.params)
    result = ALGORITHMS[task.algorithm].runner(problem, config)
    perfect, nadir = problem.reference_points()
    record = result_record(result, task, perfect, nadir, task.params["budget"])
    write_atomic(Path(task.output), json.dumps(record, sort_keys=True) + "\n")
    return task.output


def plan_tasks(config: ExperimentConfig) -> list[RunTask]:
    # names come from the parsed instance so result files match the record
    names = {p: make_problem(config.kind, p, config.objectives).name for p in config.instances}
    tasks = []
    for spec in config.algorithms:
        for inst_path in config.instances:
            name = names[inst_path]
            for k in range(config.runs):
                seed = config.base_seed + k
                tasks.append(
                    RunTask(
                        algorithm=spec.name,
                        label=spec.label,
                        kind=config.kind,
                        objectives=config.objectives,
                        instance_path=str(inst_path),
                        seed=seed,
                        params=config.algorithm_params(spec, seed),
                        output=str(config.output_dir / result_filename(spec.label, name, seed)),
                    )
                )
    return tasks


def run_experiment(config: ExperimentConfig) -> list[Path]:
    """Execute every missing run of ``config``; return all result paths in plan order.

    Existing result files are left alone, so an interrupted experiment resumes
    where it stopped.
    """
    # loading every instance up front makes bad files fail before any run
    tasks = plan_tasks(config)
    pending = [t for t in tasks if not Path(t.output).exists()]
    if len(pending) < len(tasks):
        logger.info("skipping %d finished runs", len(tasks) - len(pending))
    config.output_dir.mkdir(parents=True, exist_ok=True)
    if config.workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for path in pool.map(execute_task, pending):
                logger.info("wrote %s", path)
    else:
        for task in pending:
            logger.info("wrote %s", execute_task(task))
    return [Path(t.output) for t in tasks]


def read_records(path: str | Path) -> Iterator[dict[str, Any]]:
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ResultFormatError(f"{path}:{lineno}: {exc}") from None
            if rec.get("schema_version") != SCHEMA_VERSION:
                raise ResultFormatError(f"{path}:{lineno}: unsupported schema version {rec.get('schema_version')}")
            front = np.asarray(rec["front"], dtype=float)
            if len(front) and not nondominated_mask(front).all():
                raise ResultFormatError(f"{path}:{lineno}: stored front is not mutually non-dominated")
            yield rec


def load_results(directory: str | Path) -> list[dict[str, Any]]:
    records = []
    for path in sorted(Path(directory).glob("*.jsonl")):
        records.extend(read_records(path))
    return records


def stable_payload(record: dict[str, Any]) -> str:
    """Serialised record without run-time dependent fields, for determinism checks."""
    return json.dumps({k: v for k, v in record.items() if k not in VOLATILE_FIELDS}, sort_keys=True)
