"""Experiment configuration, algorithm registry and the published parameter presets."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

import yaml

from ..baselines import (
    MoeadConfig,
    Nsga2Config,
    Ntga2Config,
    Spea2Config,
    ThetaDeaConfig,
    UNsga3Config,
    moead_run,
    nsga2_run,
    ntga2_run,
    spea2_run,
    thetadea_run,
    unsga3_run,
)
from ..bntga import BntgaConfig, run_bntga
from ..core import Problem, RunResult
from ..msrcpsp import MsrcpspProblem, load_instance
from ..selection import BalanceParams
from ..ttp import TtpProblem, load_ttp


class ExperimentConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AlgorithmEntry:
    config_cls: type
    runner: Callable[[Problem, Any], RunResult]


ALGORITHMS: dict[str, AlgorithmEntry] = {
    "bntga": AlgorithmEntry(BntgaConfig, run_bntga),
    "ntga2": AlgorithmEntry(Ntga2Config, ntga2_run),
    "nsga2": AlgorithmEntry(Nsga2Config, nsga2_run),
    "unsga3": AlgorithmEntry(UNsga3Config, unsga3_run),
    "thetadea": AlgorithmEntry(ThetaDeaConfig, thetadea_run),
    "spea2": AlgorithmEntry(Spea2Config, spea2_run),
    "moead": AlgorithmEntry(MoeadConfig, moead_run),
}

DEFAULT_BUDGETS = {"msrcpsp2": 50_000, "msrcpsp5": 250_000, "ttp": 250_000}

# Tuned parameters per problem setting; TTP probabilities are (route, item) pairs.
PRESETS: dict[str, dict[str, dict[str, Any]]] = {
    "msrcpsp2": {
        "bntga": dict(pop_size=50, p_m=0.01, p_x=0.9, tour_size=40),
        "ntga2": dict(pop_size=50, p_m=0.01, p_x=0.6, tour_size=6, gs_tour_size=20, gs_generations=50),
        "thetadea": dict(pop_size=100, p_m=0.005, p_x=0.6, tour_size=2, theta=0.5),
        "unsga3": dict(pop_size=100, p_m=0.005, p_x=0.9),
        "moead": dict(p_m=0.015, p_x=0.2, nh_size=6, part_nr=50),
        "spea2": dict(pop_size=200, p_m=0.015, p_x=0.99),
        "nsga2": dict(pop_size=300, p_m=0.015, p_x=0.99, tour_size=2),
    },
    "msrcpsp5": {
        "bntga": dict(pop_size=50, p_m=0.01, p_x=0.9, tour_size=40),
        "ntga2": dict(pop_size=50, p_m=0.01, p_x=0.6, tour_size=6, gs_tour_size=20, gs_generations=50),
        "thetadea": dict(pop_size=500, p_m=0.005, p_x=0.6, tour_size=2, theta=0.5),
        "unsga3": dict(pop_size=200, p_m=0.005, p_x=0.9),
        "moead": dict(p_m=0.02, p_x=0.4, nh_size=2, part_nr=7),
        "spea2": dict(pop_size=400, p_m=0.015, p_x=0.9),
        "nsga2": dict(pop_size=400, p_m=0.015, p_x=0.9, tour_size=2),
    },
    "ttp": {
        "bntga": dict(pop_size=50, p_m=(0.7, 0.7), p_x=(0.5, 0.5), tour_size=40),
        "ntga2": dict(pop_size=50, p_m=(0.9, 0.9), p_x=(0.3, 0.3), tour_size=6, gs_tour_size=20, gs_generations=50),
        "thetadea": dict(pop_size=100, p_m=(0.9, 0.9), p_x=(0.3, 0.3), theta=0.1),
        "moead": dict(p_m=(0.4, 0.3), p_x=(0.5, 1.0), nh_size=3, part_nr=100),
        "spea2": dict(pop_size=100, p_m=(0.4, 0.3), p_x=(0.1, 0.8)),
        "nsga2": dict(pop_size=300, p_m=(0.4, 0.7), p_x=(0.9, 0.3), tour_size=2),
    },
}


def setting_key(kind: str, objectives: int) -> str:
    return "ttp" if kind == "ttp" else f"msrcpsp{objectives}"


def build_config(name: str, params: dict[str, Any]):
    """Instantiate the config dataclass of ``name`` from plain parameters."""
    if name not in ALGORITHMS:
        raise ExperimentConfigError(f"unknown algorithm {name!r}; known: {sorted(ALGORITHMS)}")
    cls = ALGORITHMS[name].config_cls
    params = dict(params)
    allowed = {f.name for f in fields(cls)}
    unknown = set(params) - allowed
    if unknown:
        raise ExperimentConfigError(f"{name}: unknown parameters {sorted(unknown)}")
    for key in ("p_x", "p_m"):
        if isinstance(params.get(key), list):
            params[key] = tuple(params[key])
    try:
        if name == "bntga" and isinstance(params.get("balance"), dict):
            params["balance"] = BalanceParams(**params["balance"])
        return cls(**params)
    except (TypeError, ValueError) as exc:
        raise ExperimentConfigError(f"{name}: {exc}") from exc


def make_problem(kind: str, path: str | Path, objectives: int = 2) -> Problem:
    if kind == "msrcpsp":
        return MsrcpspProblem(load_instance(path), mode=objectives)
    if kind == "ttp":
        return TtpProblem(load_ttp(path))
    raise ExperimentConfigError(f"unknown problem kind {kind!r}")


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    label: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    instances: tuple[Path, ...]
    algorithms: tuple[AlgorithmSpec, ...]
    objectives: int = 2
    runs: int = 30
    budget: int | None = None
    base_seed: int = 0
    output_dir: Path = Path("results")
    workers: int = 1

    @property
    def setting(self) -> str:
        return setting_key(self.kind, self.objectives)

    @property
    def effective_budget(self) -> int:
        return self.budget if self.budget is not None else DEFAULT_BUDGETS[self.setting]

    def algorithm_params(self, spec: AlgorithmSpec, seed: int) -> dict[str, Any]:
        params = {"budget": self.effective_budget}
        params.update(spec.params)
        params["seed"] = seed
        return params


def _parse_algorithm(raw: Any, setting: str) -> AlgorithmSpec:
    if isinstance(raw, str):
        raw = {"name": raw}
    if not isinstance(raw, dict) or "name" not in raw:
        raise ExperimentConfigError(f"algorithm entry needs a name: {raw!r}")
    name = raw["name"]
    if name not in ALGORITHMS:
        raise ExperimentConfigError(f"unknown algorithm {name!r}; known: {sorted(ALGORITHMS)}")
    preset = raw.get("preset", setting)
    params: dict[str, Any] = {}
    if preset:
        if preset not in PRESETS or name not in PRESETS[preset]:
            raise ExperimentConfigError(f"no preset {preset!r} for {name}")
        params.update(PRESETS[preset][name])
    params.update(raw.get("params") or {})
    return AlgorithmSpec(name=name, label=raw.get("label", name), params=params)


def parse_config(data: dict[str, Any], base_dir: Path | None = None) -> ExperimentConfig:
    """Validate a config mapping; environment overrides win over file values."""
    base_dir = base_dir or Path.cwd()
    problem = data.get("problem") or {}
    kind = problem.get("kind")
    if kind not in ("msrcpsp", "ttp"):
        raise ExperimentConfigError("problem.kind must be 'msrcpsp' or 'ttp'")
    objectives = int(problem.get("objectives", 2))
    if kind == "msrcpsp" and objectives not in (2, 5):
        raise ExperimentConfigError("msrcpsp objectives must be 2 or 5")
    if kind == "ttp" and objectives != 2:
        raise ExperimentConfigError("ttp has exactly 2 objectives")
    instances = problem.get("instances") or ([problem["instance"]] if "instance" in problem else [])
    if not instances:
        raise ExperimentConfigError("problem.instances is empty")
    paths = []
    for inst in instances:
        p = Path(inst)
        if not p.is_absolute():
            p = base_dir / p
        if not p.is_file():
            raise ExperimentConfigError(f"instance file not found: {p}")
        paths.append(p)
    setting = setting_key(kind, objectives)
    algos = tuple(_parse_algorithm(a, setting) for a in data.get("algorithms") or [])
    if not algos:
        raise ExperimentConfigError("no algorithms configured")
    labels = [a.label for a in algos]
    if len(set(labels)) != len(labels):
        raise ExperimentConfigError("algorithm labels must be unique")
    runs = int(data.get("runs", 30))
    if runs < 1:
        raise ExperimentConfigError("runs must be >= 1")
    output_dir = Path(os.environ.get("MOEAKIT_OUTPUT_DIR") or data.get("output_dir", "results"))
    if not output_dir.is_absolute():
        output_dir = base_dir / output_dir
    workers = int(os.environ.get("MOEAKIT_WORKERS") or data.get("workers", 1))
    if workers < 1:
        raise ExperimentConfigError("workers must be >= 1")
    cfg = ExperimentConfig(
        kind=kind,
        instances=tuple(paths),
        algorithms=algos,
        objectives=objectives,
        runs=runs,
        budget=data.get("budget"),
        base_seed=int(data.get("base_seed", 0)),
        output_dir=output_dir,
        workers=workers,
    )
    for spec in cfg.algorithms:
        build_config(spec.name, cfg.algorithm_params(spec, cfg.base_seed))
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return parse_config(data, base_dir=path.parent)
