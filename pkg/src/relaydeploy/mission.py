"""Event-driven execution of a deployment plan.

Robots move along geodesics at constant speed, so every travel time is a
distance-field value divided by the velocity.  A primary goal completes
when its visitor has arrived and the cluster's whole relay chain is in
place; at that instant the visitor must reach the base station through the
relays deployed at that moment.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .allocation import PRIMARY, RELAY, FieldCache, allocate_cluster, hungarian
from .comms import CommConfig, LinkChecker, comm_link, connected_to_bs
from .errors import ConnectivityViolation, UnreachableError
from .relays import ClusterSet, form_clusters
from .visit_order import ConcurrentPlan, SequentialOrder


@dataclass
class GoalRecord:
    goal: int
    cluster: int
    robot: int
    position: tuple
    arrival: float
    completion: float
    connected: bool = True


@dataclass
class RelayRecord:
    cluster: int
    robot: int
    position: tuple
    arrival: float
    release: float


@dataclass
class ClusterRecord:
    cluster: int
    start: float
    chain_ready: float
    completion: float
    robots: list
    rounds: list = field(default_factory=list)


@dataclass
class MissionResult:
    total_time: float
    per_goal: list
    coverage: float
    skipped_clusters: list
    clusters: list
    relays: list
    unconnected_goals: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("events")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def timeline_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "robot", "event"])
        for t, robot, event in sorted(self.events, key=lambda e: (e[0], e[1], e[2])):
            w.writerow([f"{t:.6f}", robot, event])
        return buf.getvalue()


def _stages(plan, clusters: ClusterSet, team: int):
    """Normalise a plan into waves of ``{cluster_id: robot budget}``."""
    if isinstance(plan, SequentialOrder):
        return [{cid: team} for cid in plan.order], list(plan.skipped)
    if isinstance(plan, ConcurrentPlan):
        stages = []
        for wave in plan.waves:
            stages.append({cid: clusters.by_id(cid).m_rel + wave.visitors.get(cid, 0)
                           for cid in wave.opened})
        return stages, list(plan.skipped)
    raise TypeError(f"unsupported plan type {type(plan).__name__}")


def _split_team(stage, clusters, x_bs, positions, cache):
    """Assign robots to the clusters of a wave, nearest-anchor first."""
    rids = sorted(positions)
    if len(stage) == 1:
        (cid, _), = stage.items()
        return {cid: rids}
    slots = [cid for cid, n in stage.items() for _ in range(n)]
    D = np.array([[cache.distance(positions[r], clusters.by_id(cid).anchor(x_bs))
                   for cid in slots] for r in rids])
    D[~np.isfinite(D)] = 1e9
    groups = {cid: [] for cid in stage}
    for i, j in hungarian(D).pairs:
        groups[slots[j]].append(rids[i])
    return groups


def simulate(scenario, plan, clusters: ClusterSet | None = None,
             cache: FieldCache | None = None, cfg: CommConfig | None = None) -> MissionResult:
    grid = scenario.grid
    x_bs = scenario.x_bs
    v = scenario.velocity
    cfg = cfg or CommConfig(scenario.d_gamma)
    cache = cache or FieldCache(grid)
    if clusters is None:
        clusters = form_clusters(grid, x_bs, scenario.goals, cfg)
    for r, p in enumerate(scenario.robot_starts):
        if not np.isfinite(cache.distance(p, x_bs)):
            raise UnreachableError(f"robot {r} cannot reach the base station")
    checker = LinkChecker(grid, cfg)

    stages, skipped = _stages(plan, clusters, scenario.team_size)
    positions = {r: tuple(p) for r, p in enumerate(scenario.robot_starts)}
    goal_records, relay_records, cluster_records, events = [], [], [], []
    now = 0.0

    for stage in stages:
        groups = _split_team(stage, clusters, x_bs, positions, cache)
        stage_end = now
        pending = []
        for cid in stage:
            cluster = clusters.by_id(cid)
            crew = {r: positions[r] for r in groups[cid]}
            rounds = allocate_cluster(grid, cluster, crew, cache)
            clock = {r: now for r in crew}
            chain_ready = now
            relays_here = []
            for t in rounds[0]:
                if t.kind == RELAY:
                    arrival = now + t.distance / v
                    chain_ready = max(chain_ready, arrival)
                    relays_here.append((t, arrival))
                    events.append((now, t.robot, f"depart relay {cid}:{t.index}"))
                    events.append((arrival, t.robot, f"arrive relay {cid}:{t.index}"))
            completion = chain_ready
            visits = []
            for rnd in rounds:
                for t in rnd:
                    if t.kind != PRIMARY:
                        continue
                    start = clock[t.robot]
                    arrival = start + t.distance / v
                    done = max(arrival, chain_ready)
                    clock[t.robot] = done
                    completion = max(completion, done)
                    visits.append(GoalRecord(t.index, cid, t.robot, tuple(t.position), arrival, done))
                    events.append((start, t.robot, f"depart goal {t.index}"))
                    events.append((arrival, t.robot, f"arrive goal {t.index}"))
                    events.append((done, t.robot, f"complete goal {t.index}"))
                positions.update({t.robot: tuple(t.position) for t in rnd})
            for t, arrival in relays_here:
                relay_records.append(RelayRecord(cid, t.robot, tuple(t.position), arrival, completion))
                events.append((completion, t.robot, f"release relay {cid}:{t.index}"))
            cluster_records.append(ClusterRecord(
                cid, now, chain_ready, completion, sorted(crew),
                [[{"robot": t.robot, "kind": t.kind, "index": t.index,
                   "position": list(t.position)} for t in rnd] for rnd in rounds]))
            goal_records.extend(visits)
            pending.extend(visits)
            stage_end = max(stage_end, completion)
        for rec in pending:
            active = [r.position for r in relay_records
                      if r.arrival <= rec.completion <= r.release]
            if not checker.connected(x_bs, active, rec.position):
                raise ConnectivityViolation(
                    f"goal {rec.goal} completed at t={rec.completion:.3f}s without a link to the base station")
        now = stage_end

    goal_records.sort(key=lambda g: g.goal)
    n_goals = len(scenario.goals)
    total = max((g.completion for g in goal_records), default=0.0)
    return MissionResult(
        total_time=float(total),
        per_goal=goal_records,
        coverage=len(goal_records) / n_goals if n_goals else 1.0,
        skipped_clusters=list(skipped),
        clusters=cluster_records,
        relays=relay_records,
        unconnected_goals=list(clusters.unconnected_goals),
        events=events,
    )


def audit_connectivity(result: MissionResult, scenario, cfg: CommConfig | None = None) -> list[dict]:
    """Re-check every completion against the link model; returns violations."""
    grid = scenario.grid
    cfg = cfg or CommConfig(scenario.d_gamma)
    by_relays = {}
    for rec in result.per_goal:
        active = tuple(sorted(tuple(r.position) for r in result.relays
                              if r.arrival <= rec.completion <= r.release))
        by_relays.setdefault(active, []).append(rec)
    violations = []
    for active, recs in by_relays.items():
        flags = connected_to_bs(grid, scenario.x_bs, list(active), cfg)
        backbone = [scenario.x_bs] + [p for p, ok in zip(active, flags) if ok]
        for rec in recs:
            ok = any(comm_link(grid, rec.position, node, cfg) for node in backbone)
            rec.connected = ok
            if not ok:
                violations.append({"goal": rec.goal, "cluster": rec.cluster,
                                   "time": rec.completion, "relays": len(active)})
    violations.sort(key=lambda d: (d["time"], d["goal"]))
    return violations
