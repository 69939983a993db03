"""Parameter sweeps over heuristics, team sizes and goal counts."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConnectivityViolation, InfeasiblePlanError, ScenarioError
from .grid_world import Scenario, WorldPoint, cells_near, generate_goals, read_map
from .mission import audit_connectivity
from .pipeline import MissionPlanner
from .visit_order import HEURISTICS

REPORT_HEADER = ["heuristic", "team", "goals", "mean_time_s", "min_time_s", "max_time_s",
                 "mean_coverage", "mean_plan_ms_relay", "mean_plan_ms_alloc"]
RAW_HEADER = ["heuristic", "team", "goals", "seed", "time_s", "coverage", "clusters",
              "skipped", "plan_ms_relay", "plan_ms_alloc", "violations"]


@dataclass
class BenchmarkSpec:
    map: str
    bs: WorldPoint | None = None
    team_sizes: list = field(default_factory=lambda: [10, 20, 50])
    goal_counts: list = field(default_factory=lambda: [100])
    seeds: list = field(default_factory=lambda: list(range(10)))
    heuristics: list = field(default_factory=lambda: list(HEURISTICS))
    d_gamma: float = 10.0
    velocity: float = 0.2

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchmarkSpec":
        if "map" not in doc:
            raise ScenarioError("benchmark spec needs a 'map'")
        heur = doc.get("heuristics", "all")
        if heur == "all":
            heur = list(HEURISTICS)
        bad = [h for h in heur if h not in HEURISTICS]
        if bad:
            raise ScenarioError(f"unknown heuristics {bad}")
        seeds = doc.get("seeds", 10)
        if isinstance(seeds, int):
            seeds = list(range(seeds))
        bs = doc.get("bs")
        return cls(
            map=str(doc["map"]),
            bs=WorldPoint(*map(float, bs)) if bs is not None else None,
            team_sizes=[int(t) for t in doc.get("team_sizes", [10, 20, 50])],
            goal_counts=[int(n) for n in doc.get("goal_counts", [100])],
            seeds=[int(s) for s in seeds],
            heuristics=list(heur),
            d_gamma=float(doc.get("d_gamma_m", 10.0)),
            velocity=float(doc.get("velocity_mps", 0.2)),
        )

    @classmethod
    def load(cls, path) -> "BenchmarkSpec":
        path = Path(path)
        doc = json.loads(path.read_text())
        spec = cls.from_dict(doc)
        local = path.parent / spec.map
        if local.exists():
            spec.map = str(local)
        return spec


def _map_and_bs(spec: BenchmarkSpec):
    from .desk_maps import BUNDLED, bundled

    if spec.bs is None:
        if spec.map not in BUNDLED:
            raise ScenarioError("spec needs 'bs' unless it names a bundled map")
        return bundled(spec.map)
    return read_map(spec.map), spec.bs


def run_seed(spec: BenchmarkSpec, goals_n: int, seed: int) -> list[dict]:
    """Every (team, heuristic) row for one goal set.

    A connectivity violation in any run is raised rather than recorded.
    """
    grid, bs = _map_and_bs(spec)
    goals = generate_goals(grid, goals_n, bs, seed)
    rows = []
    base = None
    for team in spec.team_sizes:
        if team > goals_n:
            continue
        starts = cells_near(grid, bs, team)
        scenario = Scenario(grid, bs, starts, goals, spec.d_gamma, spec.velocity, seed, spec.map)
        planner = MissionPlanner(scenario) if base is None else base.with_team(starts)
        base = base or planner
        for h in spec.heuristics:
            row = {"heuristic": h, "team": team, "goals": goals_n, "seed": seed,
                   "clusters": planner.clusters.K}
            try:
                run = planner.run(h)
            except InfeasiblePlanError as exc:
                row.update(time_s=0.0, coverage=0.0, skipped=len(exc.skipped),
                           plan_ms_relay=planner.relay_ms, plan_ms_alloc=0.0, violations=0)
                rows.append(row)
                continue
            violations = audit_connectivity(run.result, scenario, planner.cfg)
            if violations:
                v = violations[0]
                raise ConnectivityViolation(
                    f"{h}, team {team}, {goals_n} goals, seed {seed}: goal {v['goal']} "
                    f"completed at t={v['time']:.3f}s without a link "
                    f"({len(violations)} violations)")
            row.update(time_s=run.result.total_time, coverage=run.result.coverage,
                       skipped=len(run.result.skipped_clusters), plan_ms_relay=run.relay_ms,
                       plan_ms_alloc=run.alloc_ms, violations=0)
            rows.append(row)
    return rows


def run_benchmark(spec: BenchmarkSpec, jobs: int = 1) -> list[dict]:
    """Raw per-seed rows, ordered by goal count, seed, team and heuristic."""
    work = [(n, s) for n in spec.goal_counts for s in spec.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            parts = list(pool.map(run_seed, [spec] * len(work), *zip(*work)))
    else:
        parts = [run_seed(spec, n, s) for n, s in work]
    return [row for part in parts for row in part]


def summarise(rows: list[dict]) -> list[dict]:
    groups = {}
    for r in rows:
        groups.setdefault((r["goals"], r["team"], r["heuristic"]), []).append(r)
    order = {h: k for k, h in enumerate(HEURISTICS)}
    out = []
    for (goals, team, h) in sorted(groups, key=lambda k: (k[0], k[1], order[k[2]])):
        rs = groups[(goals, team, h)]
        t = np.array([r["time_s"] for r in rs])
        out.append({
            "heuristic": h, "team": team, "goals": goals,
            "mean_time_s": float(t.mean()), "min_time_s": float(t.min()),
            "max_time_s": float(t.max()),
            "mean_coverage": float(np.mean([r["coverage"] for r in rs])),
            "mean_plan_ms_relay": float(np.mean([r["plan_ms_relay"] for r in rs])),
            "mean_plan_ms_alloc": float(np.mean([r["plan_ms_alloc"] for r in rs])),
        })
    return out


def _fmt(v, timing: bool):
    if isinstance(v, float):
        return f"{v:.4f}" if timing else "0.0000"
    return v


def to_csv(rows: list[dict], header: list[str], timing: bool = True) -> str:
    """CSV text; with ``timing=False`` wall-clock columns are zeroed."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[k], timing or "_ms_" not in k) for k in header])
    return buf.getvalue()


def best_by_family(summary: list[dict], team: int, goals: int | None = None):
    """(best sequential mean, best concurrent mean) for one team size."""
    rows = [r for r in summary if r["team"] == team and (goals is None or r["goals"] == goals)]
    seq = min(r["mean_time_s"] for r in rows if r["heuristic"].startswith("S"))
    con = min(r["mean_time_s"] for r in rows if r["heuristic"].startswith("C"))
    return seq, con
