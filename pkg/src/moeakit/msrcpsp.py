"""Multi-skill resource-constrained project scheduling backend.

Genotype: one resource index per task (0-based into ``instance.resources``).
A greedy builder places every task at its earliest start given its
predecessors and the current end of its resource's queue.
"""
from __future__ import annotations

import io
import math
import re
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .core import ContractError, Individual, Problem


class InstanceError(ValueError):
    pass


class ParseError(InstanceError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Task:
    id: int
    duration: int
    skill_type: int
    skill_level: int
    predecessors: tuple[int, ...] = ()


@dataclass(frozen=True)
class Resource:
    id: int
    salary: float
    skills: tuple[tuple[int, int], ...]  # (type, level), sorted by type

    def level(self, skill_type: int) -> int | None:
        for t, lvl in self.skills:
            if t == skill_type:
                return lvl
        return None


class MsrcpspInstance:
    def __init__(
        self,
        tasks: Iterable[Task],
        resources: Iterable[Resource],
        name: str = "instance",
        meta: dict[str, str] | None = None,
    ):
        self.name = name
        self.tasks = tuple(tasks)
        self.resources = tuple(resources)
        self.meta = dict(meta or {})
        self._validate()
        self._derive()

    # structural equality is what round-trips care about
    def __eq__(self, other) -> bool:
        if not isinstance(other, MsrcpspInstance):
            return NotImplemented
        return self.tasks == other.tasks and self.resources == other.resources

    def __repr__(self) -> str:
        return f"MsrcpspInstance({self.name!r}, tasks={self.n_tasks}, resources={self.n_resources})"

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def n_resources(self) -> int:
        return len(self.resources)

    def _validate(self) -> None:
        if not self.tasks:
            raise InstanceError("instance has no tasks")
        if not self.resources:
            raise InstanceError("instance has no resources")
        for r in self.resources:
            if r.salary < 0:
                raise InstanceError(f"resource {r.id} has a negative salary")
            if not r.skills:
                raise InstanceError(f"resource {r.id} has no skills")
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise InstanceError("duplicate task ids")
        if len({r.id for r in self.resources}) != len(self.resources):
            raise InstanceError("duplicate resource ids")
        known = set(ids)
        for t in self.tasks:
            if t.duration < 0:
                raise InstanceError(f"task {t.id} has a negative duration")
            for p in t.predecessors:
                if p not in known:
                    raise InstanceError(f"task {t.id} lists unknown predecessor {p}")
        cycle = find_cycle(self.tasks)
        if cycle:
            raise InstanceError("cyclic precedence: " + " -> ".join(map(str, cycle)))

    def _derive(self) -> None:
        n, R = self.n_tasks, self.n_resources
        index = {t.id: i for i, t in enumerate(self.tasks)}
        self.task_index = index
        self.pred_idx = [tuple(index[p] for p in t.predecessors) for t in self.tasks]
        has_succ = [False] * n
        for preds in self.pred_idx:
            for p in preds:
                has_succ[p] = True
        self.has_successors = has_succ

        capable = []
        overuse = np.zeros((n, R))
        for i, t in enumerate(self.tasks):
            caps = []
            for j, r in enumerate(self.resources):
                lvl = r.level(t.skill_type)
                if lvl is not None and lvl >= t.skill_level:
                    caps.append(j)
                    overuse[i, j] = lvl - t.skill_level
            if not caps:
                raise InstanceError(f"task {t.id} has no capable resource")
            capable.append(np.array(caps, dtype=np.int64))
        self.capable = capable
        kmax = max(len(c) for c in capable)
        self.capable_count = np.array([len(c) for c in capable], dtype=np.int64)
        pad = np.zeros((n, kmax), dtype=np.int64)
        for i, c in enumerate(capable):
            pad[i, : len(c)] = c
        self.capable_pad = pad
        valid = np.zeros((n, R), dtype=bool)
        for i, c in enumerate(capable):
            valid[i, c] = True
        self.valid = valid
        self.overuse = overuse

        self.durations = np.array([t.duration for t in self.tasks], dtype=np.int64)
        self.salaries = np.array([r.salary for r in self.resources], dtype=float)
        self.cost_table = self.durations[:, None] * self.salaries[None, :]

        level = [0] * n
        for i in topological_order(self.pred_idx):
            preds = self.pred_idx[i]
            level[i] = 1 + max(level[p] for p in preds) if preds else 0
        self.level = level
        order = sorted(range(n), key=lambda i: (level[i], not has_succ[i], self.tasks[i].id))
        self.order = order
        self._plan = [(i, self.pred_idx[i], int(self.durations[i])) for i in order]


def topological_order(pred_idx: list[tuple[int, ...]]) -> list[int]:
    n = len(pred_idx)
    indeg = [len(p) for p in pred_idx]
    succ: list[list[int]] = [[] for _ in range(n)]
    for i, preds in enumerate(pred_idx):
        for p in preds:
            succ[p].append(i)
    ready = [i for i in range(n) if indeg[i] == 0]
    out = []
    while ready:
        i = ready.pop()
        out.append(i)
        for s in succ[i]:
            indeg[s] -= 1
            if indeg[s] == 0:
                ready.append(s)
    return out


def find_cycle(tasks: tuple[Task, ...]) -> list[int] | None:
    """Return task ids forming a precedence cycle (first id repeated at the end), or None."""
    preds = {t.id: t.predecessors for t in tasks}
    state: dict[int, int] = {}
    for root in preds:
        if root in state:
            continue
        stack = [(root, iter(preds[root]))]
        path = [root]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
                path.pop()
                continue
            if nxt not in preds:
                continue
            s = state.get(nxt, 0)
            if s == 1:
                cycle = path[path.index(nxt):] + [nxt]
                return cycle[::-1]
            if s == 0:
                state[nxt] = 1
                stack.append((nxt, iter(preds[nxt])))
                path.append(nxt)
    return None


# --------------------------------------------------------------------------- parsing

_SKILL = re.compile(r"^Q?(\d+):(-?\d+(?:\.\d+)?)$", re.IGNORECASE)
_SKILL_SPACING = re.compile(r"(Q?\d+)\s*:\s*(?=-?\d)", re.IGNORECASE)
_HEADER = re.compile(r"^([A-Za-z][A-Za-z ]*?)\s*:\s*(.*)$")


def _number(tok: str, lineno: int, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected {what}, got {tok!r}", lineno) from None


def _int(tok: str, lineno: int, what: str) -> int:
    val = _number(tok, lineno, what)
    if val != int(val):
        raise ParseError(f"{what} must be an integer, got {tok!r}", lineno)
    return int(val)


def _skill(tok: str, lineno: int) -> tuple[int, int] | None:
    m = _SKILL.match(tok)
    if not m:
        return None
    level = float(m.group(2))
    if level != int(level):
        raise ParseError(f"skill level must be an integer: {tok!r}", lineno)
    return int(m.group(1)), int(level)


def parse_instance(stream: TextIO | str, name: str | None = None) -> MsrcpspInstance:
    """Parse an instance in the iMOPSE ``.def`` layout (see README for the grammar)."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    meta: dict[str, str] = {}
    resources: list[Resource] = []
    tasks: list[Task] = []
    section = None
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#") or set(line) <= {"=", "-"}:
            continue
        head = line.split()[0].rstrip(":").lower()
        if head in ("resourceid", "resources") and not re.match(r"(?i)resources\s*:\s*\d", line):
            section = "resources"
            continue
        if head in ("taskid", "tasks") and not re.match(r"(?i)tasks\s*:\s*\d", line):
            section = "tasks"
            continue
        if section is None:
            m = _HEADER.match(line)
            if not m:
                raise ParseError(f"unexpected header line {line!r}", lineno)
            meta[m.group(1).strip().lower()] = m.group(2).strip()
            continue
        toks = _SKILL_SPACING.sub(r"\1:", line).split()
        if section == "resources":
            if len(toks) < 3:
                raise ParseError("resource line needs id, salary and at least one skill", lineno)
            rid = _int(toks[0], lineno, "resource id")
            salary = _number(toks[1], lineno, "salary")
            skills = []
            for tok in toks[2:]:
                sk = _skill(tok, lineno)
                if sk is None:
                    raise ParseError(f"malformed skill {tok!r}", lineno)
                skills.append(sk)
            resources.append(Resource(rid, salary, tuple(sorted(skills))))
        else:
            if len(toks) < 3:
                raise ParseError("task line needs id, duration and a skill", lineno)
            tid = _int(toks[0], lineno, "task id")
            duration = _int(toks[1], lineno, "duration")
            sk = _skill(toks[2], lineno)
            if sk is None:
                raise ParseError(f"malformed skill {toks[2]!r}", lineno)
            preds = []
            for tok in toks[3:]:
                if _skill(tok, lineno) is not None:
                    raise ParseError("tasks require exactly one skill", lineno)
                preds.append(_int(tok, lineno, "predecessor id"))
            tasks.append(Task(tid, duration, sk[0], sk[1], tuple(preds)))
    if not tasks:
        raise ParseError("no tasks section or it is empty")
    if not resources:
        raise ParseError("no resources section or it is empty")
    for key, count in (("tasks", len(tasks)), ("resources", len(resources))):
        if key in meta and meta[key] and int(float(meta[key])) != count:
            raise ParseError(f"header declares {meta[key]} {key}, found {count}")
    n_skills = meta.get("number of skill types")
    if n_skills:
        limit = int(float(n_skills))
        for r in resources:
            for t, _ in r.skills:
                if t > limit:
                    raise ParseError(f"resource {r.id} references unknown skill Q{t}")
        for t in tasks:
            if t.skill_type > limit:
                raise ParseError(f"task {t.id} references unknown skill Q{t.skill_type}")
    if name is None:
        name = Path(meta.get("file name", "instance")).stem
    return MsrcpspInstance(tasks, resources, name=name, meta=meta)


def load_instance(path: str | Path) -> MsrcpspInstance:
    path = Path(path)
    with open(path) as fh:
        return parse_instance(fh, name=path.stem)


def serialize_instance(instance: MsrcpspInstance) -> str:
    bar = "=" * 80
    n_rel = sum(len(t.predecessors) for t in instance.tasks)
    n_skills = max(
        [t.skill_type for t in instance.tasks] + [s for r in instance.resources for s, _ in r.skills]
    )
    out = [
        bar,
        f"File name:\t{instance.name}.def",
        bar,
        "General characteristics:",
        f"Tasks:\t{instance.n_tasks}",
        f"Resources:\t{instance.n_resources}",
        f"Precedence relations:\t{n_rel}",
        f"Number of skill types:\t{n_skills}",
        bar,
        "ResourceID\tSalary\tSkills",
    ]
    for r in instance.resources:
        skills = "\t".join(f"Q{t}: {lvl}" for t, lvl in r.skills)
        out.append(f"{r.id}\t{r.salary:.15g}\t{skills}")
    out += [bar, "TaskID\tDuration\tSkills\tPredecessor IDs"]
    for t in instance.tasks:
        preds = " ".join(map(str, t.predecessors))
        out.append(f"{t.id}\t{t.duration}\tQ{t.skill_type}: {t.skill_level}\t{preds}".rstrip())
    out.append(bar)
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------- schedules


@dataclass
class Schedule:
    assignment: np.ndarray  # resource index per task
    start: np.ndarray
    finish: np.ndarray

    @property
    def makespan(self) -> int:
        return int(self.finish.max()) if len(self.finish) else 0


def repair_genotype(
    instance: MsrcpspInstance, genotype: np.ndarray, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, int]:
    """Replace genes pointing at incapable resources by a uniformly drawn capable one."""
    g = np.asarray(genotype, dtype=np.int64)
    if g.shape != (instance.n_tasks,):
        raise ContractError(f"genotype length {g.shape} does not match {instance.n_tasks} tasks")
    in_range = (g >= 0) & (g < instance.n_resources)
    ok = np.zeros_like(in_range)
    ok[in_range] = instance.valid[np.flatnonzero(in_range), g[in_range]]
    if ok.all():
        return g, 0
    if rng is None:
        rng = np.random.default_rng(zlib.crc32(g.tobytes()))
    g = g.copy()
    bad = np.flatnonzero(~ok)
    pick = (rng.random(len(bad)) * instance.capable_count[bad]).astype(np.int64)
    g[bad] = instance.capable_pad[bad, pick]
    return g, len(bad)


def _timeline(instance: MsrcpspInstance, genes: list[int]) -> tuple[list[int], list[int]]:
    start = [0] * instance.n_tasks
    finish = [0] * instance.n_tasks
    res_end = [0] * instance.n_resources
    for i, preds, dur in instance._plan:
        r = genes[i]
        s = res_end[r]
        for p in preds:
            f = finish[p]
            if f > s:
                s = f
        e = s + dur
        start[i] = s
        finish[i] = e
        res_end[r] = e
    return start, finish


def build_schedule(
    instance: MsrcpspInstance, genotype, rng: np.random.Generator | None = None
) -> Schedule:
    g, _ = repair_genotype(instance, genotype, rng)
    start, finish = _timeline(instance, g.tolist())
    return Schedule(g, np.array(start, dtype=np.int64), np.array(finish, dtype=np.int64))


OBJECTIVE_NAMES = {
    2: ("makespan", "cost"),
    5: ("makespan", "cost", "cash_flow", "skill_overuse", "resource_use"),
}


def _objectives(instance: MsrcpspInstance, g: np.ndarray, start, finish, mode: int):
    rows = np.arange(instance.n_tasks)
    makespan = max(finish)
    cost = float(instance.cost_table[rows, g].sum())
    if mode == 2:
        return (float(makespan), cost)
    n, R = instance.n_tasks, instance.n_resources
    overuse = float(instance.overuse[rows, g].sum())
    counts = np.bincount(g, minlength=R)
    resource_use = float(np.abs(counts - n / R).sum() / R)
    if makespan > 0:
        sal = instance.salaries[g]
        T = int(math.ceil(makespan))
        rate = np.bincount(start, weights=sal, minlength=T + 1) - np.bincount(
            finish, weights=sal, minlength=T + 1
        )
        per_slot = np.cumsum(rate)[:T]
        cash_flow = float(np.abs(per_slot - cost / makespan).sum() / makespan)
    else:
        cash_flow = 0.0
    return (float(makespan), cost, cash_flow, overuse, resource_use)


def evaluate_schedule(instance: MsrcpspInstance, schedule: Schedule, mode: int = 2) -> tuple:
    if mode not in OBJECTIVE_NAMES:
        raise ValueError("mode must be 2 or 5")
    return _objectives(
        instance, schedule.assignment, schedule.start.tolist(), schedule.finish.tolist(), mode
    )


def reference_points(instance: MsrcpspInstance, mode: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """(perfect, nadir) objective vectors for normalization."""
    d = instance.durations
    total = float(d.sum())
    n, R = instance.n_tasks, instance.n_resources
    lo_sal, hi_sal = float(instance.salaries.min()), float(instance.salaries.max())
    perfect = [float(d.min()) * n / R, total * lo_sal, 0.0, 0.0, 0.0]
    worst_overuse = float(sum(instance.overuse[i, c].max() for i, c in enumerate(instance.capable)))
    nadir = [total, total * hi_sal, total * hi_sal, worst_overuse, total * (R - 1) / R]
    if mode == 2:
        return np.array(perfect[:2]), np.array(nadir[:2])
    return np.array(perfect), np.array(nadir)


def check_schedule(instance: MsrcpspInstance, schedule: Schedule) -> list[str]:
    """Return human-readable constraint violations (empty when feasible)."""
    problems = []
    n = instance.n_tasks
    if len(schedule.assignment) != n or len(schedule.start) != n:
        return ["schedule does not cover every task"]
    for i, t in enumerate(instance.tasks):
        r = int(schedule.assignment[i])
        s, f = int(schedule.start[i]), int(schedule.finish[i])
        if s < 0 or f - s != t.duration:
            problems.append(f"task {t.id}: bad interval [{s}, {f})")
        if not instance.valid[i, r]:
            problems.append(f"task {t.id}: resource {instance.resources[r].id} lacks skill")
        for p in instance.pred_idx[i]:
            if schedule.finish[p] > s:
                problems.append(f"task {t.id} starts before predecessor {instance.tasks[p].id} ends")
    for r in range(instance.n_resources):
        idx = np.flatnonzero(schedule.assignment == r)
        spans = sorted((int(schedule.start[i]), int(schedule.finish[i])) for i in idx)
        busy_until = None
        for s, f in spans:
            if f == s:
                continue
            if busy_until is not None and s < busy_until:
                problems.append(f"resource {instance.resources[r].id} double-booked at {s}")
            busy_until = f if busy_until is None else max(busy_until, f)
    return problems


def critical_path_fraction(instance: MsrcpspInstance) -> float:
    """Share of tasks with zero total float in the resource-free precedence network."""
    n = instance.n_tasks
    order = topological_order(instance.pred_idx)
    dur = instance.durations
    es = np.zeros(n, dtype=np.int64)
    for i in order:
        for p in instance.pred_idx[i]:
            es[i] = max(es[i], es[p] + dur[p])
    ef = es + dur
    horizon = ef.max()
    lf = np.full(n, horizon, dtype=np.int64)
    succ: list[list[int]] = [[] for _ in range(n)]
    for i, preds in enumerate(instance.pred_idx):
        for p in preds:
            succ[p].append(i)
    for i in reversed(order):
        for s in succ[i]:
            lf[i] = min(lf[i], lf[s] - dur[s])
    ls = lf - dur
    return float(np.count_nonzero(ls == es)) / n


# --------------------------------------------------------------------------- operators


def random_genotype(instance: MsrcpspInstance, rng: np.random.Generator) -> np.ndarray:
    pick = (rng.random(instance.n_tasks) * instance.capable_count).astype(np.int64)
    return instance.capable_pad[np.arange(instance.n_tasks), pick]


def uniform_crossover(a: np.ndarray, b: np.ndarray, p_x: float, rng: np.random.Generator):
    if rng.random() >= p_x:
        return a.copy(), b.copy()
    swap = rng.random(len(a)) < 0.5
    c1 = np.where(swap, b, a)
    c2 = np.where(swap, a, b)
    return c1, c2


def gene_mutation(
    instance: MsrcpspInstance, genotype: np.ndarray, p_m: float, rng: np.random.Generator
) -> np.ndarray:
    """Redraw each gene with probability p_m from the task's capable resources."""
    hit = np.flatnonzero(rng.random(len(genotype)) < p_m)
    g = genotype.copy()
    if len(hit):
        pick = (rng.random(len(hit)) * instance.capable_count[hit]).astype(np.int64)
        g[hit] = instance.capable_pad[hit, pick]
    return g


class MsrcpspProblem(Problem):
    def __init__(self, instance: MsrcpspInstance, mode: int = 2):
        super().__init__()
        if mode not in OBJECTIVE_NAMES:
            raise ValueError("mode must be 2 or 5")
        self.instance = instance
        self.mode = mode
        self.n_objectives = mode
        self.name = instance.name
        self.repairs = 0
        self._rows = np.arange(instance.n_tasks)

    def random_genotype(self, rng):
        return random_genotype(self.instance, rng)

    def _objectives(self, genotype):
        genes = genotype.tolist()
        start, finish = _timeline(self.instance, genes)
        return _objectives(self.instance, genotype, start, finish, self.mode)

    def evaluate(self, genotype) -> Individual:
        g = np.asarray(genotype, dtype=np.int64)
        if g.min() < 0 or g.max() >= self.instance.n_resources or not self.instance.valid[self._rows, g].all():
            g, fixed = repair_genotype(self.instance, g)
            self.repairs += fixed
        return super().evaluate(g)

    def crossover(self, a, b, p_x, rng):
        return uniform_crossover(a, b, p_x, rng)

    def mutate(self, genotype, p_m, rng):
        return gene_mutation(self.instance, genotype, p_m, rng)

    def genotype_key(self, genotype) -> bytes:
        return genotype.tobytes()

    def genotype_to_json(self, genotype):
        return [int(x) for x in genotype]

    def genotype_from_json(self, data):
        return np.asarray(data, dtype=np.int64)

    def reference_points(self):
        return reference_points(self.instance, self.mode)


# --------------------------------------------------------------------------- synthetic data


def generate_instance(
    n_tasks: int,
    n_resources: int,
    n_relations: int,
    n_skill_types: int,
    rng: np.random.Generator,
    name: str | None = None,
    max_level: int = 3,
    duration_range: tuple[int, int] = (10, 60),
    salary_range: tuple[float, float] = (10.0, 60.0),
) -> MsrcpspInstance:
    """Random instance with the same shape conventions as the iMOPSE files."""
    resources = []
    for rid in range(1, n_resources + 1):
        k = int(rng.integers(2, max(3, n_skill_types // 2 + 2)))
        types = sorted(rng.choice(np.arange(1, n_skill_types + 1), size=min(k, n_skill_types), replace=False))
        skills = tuple((int(t), int(rng.integers(0, max_level + 1))) for t in types)
        salary = round(float(rng.uniform(*salary_range)), 1)
        resources.append(Resource(rid, salary, skills))
    offered: dict[int, int] = {}
    for r in resources:
        for t, lvl in r.skills:
            offered[t] = max(offered.get(t, -1), lvl)
    skill_pool = sorted(offered)
    preds: dict[int, set[int]] = {i: set() for i in range(1, n_tasks + 1)}
    pairs = set()
    while len(pairs) < min(n_relations, n_tasks * (n_tasks - 1) // 2):
        a, b = sorted(rng.choice(np.arange(1, n_tasks + 1), size=2, replace=False))
        pairs.add((int(a), int(b)))
    for a, b in pairs:
        preds[b].add(a)
    tasks = []
    for tid in range(1, n_tasks + 1):
        st = int(skill_pool[rng.integers(len(skill_pool))])
        lvl = int(rng.integers(0, offered[st] + 1))
        dur = int(rng.integers(duration_range[0], duration_range[1] + 1))
        tasks.append(Task(tid, dur, st, lvl, tuple(sorted(preds[tid]))))
    if name is None:
        name = f"{n_tasks}_{n_resources}_{n_relations}_{n_skill_types}"
    return MsrcpspInstance(tasks, resources, name=name)
