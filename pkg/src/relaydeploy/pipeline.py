"""End-to-end planning: clusters, visit plan and simulated execution."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

from . import fmm
from .allocation import FieldCache
from .comms import CommConfig
from .grid_world import world_to_cell
from .mission import MissionResult, simulate
from .relays import ClusterSet, form_clusters
from .visit_order import (SEQUENTIAL, ConcurrentPlan, SequentialOrder, cluster_metrics,
                          feasible_clusters, plan_visits)


@dataclass
class PlanRun:
    heuristic: str
    plan: object
    result: MissionResult
    relay_ms: float
    alloc_ms: float


class MissionPlanner:
    """Shares relay clusters and distance fields across heuristics and teams.

    Clusters depend only on the map, base station, goals and range, so they
    are formed once.  ``warm`` pre-solves every field that allocation will
    read; its cost is charged to the allocation time of each run so that the
    reported figures do not depend on the order heuristics are evaluated in.
    """

    def __init__(self, scenario):
        self.scenario = scenario
        self.cfg = CommConfig(scenario.d_gamma)
        self.cache = FieldCache(scenario.grid)
        self._clusters = None
        self.relay_ms = 0.0
        self.warm_ms = 0.0
        self._metrics = {}
        self._routes = {}

    @property
    def clusters(self) -> ClusterSet:
        if self._clusters is None:
            s = self.scenario
            t0 = time.perf_counter()
            bs_field = self.cache.field(s.x_bs)
            self._clusters = form_clusters(s.grid, s.x_bs, s.goals, self.cfg, bs_field=bs_field)
            self.relay_ms = 1e3 * (time.perf_counter() - t0)
            t0 = time.perf_counter()
            self.warm()
            self.warm_ms = 1e3 * (time.perf_counter() - t0)
        return self._clusters

    def warm(self):
        s = self.scenario
        for c in self._clusters.clusters:
            self.cache.field(c.anchor(s.x_bs))
            for p in list(c.relay_goals) + list(c.primary_goals):
                self.cache.field(p)

    def with_team(self, robot_starts):
        """Planner for the same goals with a different team; caches are shared."""
        other = MissionPlanner.__new__(MissionPlanner)
        other.__dict__.update(self.__dict__)
        other.scenario = type(self.scenario)(
            grid=self.scenario.grid, x_bs=self.scenario.x_bs, robot_starts=list(robot_starts),
            goals=self.scenario.goals, d_gamma=self.scenario.d_gamma,
            velocity=self.scenario.velocity, seed=self.scenario.seed,
            map_path=self.scenario.map_path)
        other._metrics = {}
        _ = self.clusters
        other._clusters = self._clusters
        return other

    def metrics(self):
        team = self.scenario.team_size
        if team not in self._metrics:
            s = self.scenario
            self._metrics[team] = cluster_metrics(s.grid, self.clusters.clusters, s.x_bs, team, self.cache)
        return self._metrics[team]

    def plan(self, heuristic: str):
        team = self.scenario.team_size
        metrics = self.metrics()
        if heuristic not in SEQUENTIAL:
            return plan_visits(metrics, heuristic, team)
        # routes depend on the team only through feasibility, except for the
        # relay-demand term of S3
        keep, skipped = feasible_clusters(metrics, team)
        key = (heuristic, tuple(keep), team if heuristic == "S3" else None)
        if key not in self._routes:
            self._routes[key] = list(plan_visits(metrics, heuristic, team).order)
        return SequentialOrder(heuristic, list(self._routes[key]), skipped)

    def run(self, heuristic: str) -> PlanRun:
        clusters = self.clusters
        t0 = time.perf_counter()
        plan = self.plan(heuristic)
        result = simulate(self.scenario, plan, clusters, self.cache, self.cfg)
        alloc_ms = self.warm_ms + 1e3 * (time.perf_counter() - t0)
        return PlanRun(heuristic, plan, result, self.relay_ms, alloc_ms)


def plan_to_dict(plan, clusters: ClusterSet, result: MissionResult | None = None) -> dict:
    doc = {"heuristic": plan.heuristic, "skipped_clusters": list(plan.skipped),
           "unconnected_goals": list(clusters.unconnected_goals),
           "clusters": [c.to_dict() for c in clusters.clusters]}
    if isinstance(plan, SequentialOrder):
        doc["mode"] = "sequential"
        doc["order"] = list(plan.order)
    elif isinstance(plan, ConcurrentPlan):
        doc["mode"] = "concurrent"
        doc["order"] = plan.order
        doc["waves"] = [{"opened": list(w.opened),
                         "visitors": {str(k): v for k, v in w.visitors.items()}}
                        for w in plan.waves]
    if result is not None:
        doc["assignments"] = {str(r.cluster): r.rounds for r in result.clusters}
    return doc


def plan_to_json(plan, clusters: ClusterSet, result: MissionResult | None = None) -> str:
    return json.dumps(plan_to_dict(plan, clusters, result), indent=2)


def bs_fields(scenario):
    """Unit-speed and Voronoi-weighted fields from the base station."""
    grid = scenario.grid
    unit = fmm.solve(grid, [world_to_cell(scenario.x_bs, grid)])
    return unit, fmm.voronoi_field(grid, scenario.x_bs)
