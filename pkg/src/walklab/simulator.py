"""Single walks and seeded Monte Carlo replication.

Reproducibility contract: run r of a batch draws every random number from
``random.Random(mix_seed(seed_base, r))``, so adding runs, reordering them,
or changing the worker count never changes what any individual run does.
For environments with a uniform start rule the start node is the first draw
of the run's stream.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Optional, Sequence

from . import environments
from .environments import EnvSpec
from .graph_core import Graph, NodeId, bfs_distances, eccentricity_max
from .policies import PolicySpec, new_state, next_action

# splitmix64 finalizer; the run id is spread by the 64-bit golden ratio
# so that nearby (seed_base, run_id) pairs land far apart.
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1

# Bounds larger than this are reported as overflowed rather than evaluated.
SATURATION_LIMIT = 1 << 62


def mix_seed(seed_base: int, run_id: int) -> int:
    """64-bit splittable seed for one run; distinct runs get unrelated streams."""
    z = (seed_base ^ ((run_id + 1) * _GOLDEN)) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


@dataclass
class WalkRecord:
    """Outcome of one walk."""

    start: NodeId
    steps: int
    t_cover: Optional[int]
    t_hit: Optional[int]
    cap_hit: bool
    visits: list[int]
    trajectory: Optional[list[NodeId]]
    variant: str


@dataclass(frozen=True)
class McStats:
    n_runs: int
    mean: float
    variance: float
    stderr: float
    seed_base: int
    cap_hits: int


@dataclass(frozen=True)
class RunResult:
    """Per-run row, the unit the CSV writer and the merge step work with."""

    run_id: int
    start: NodeId
    t_cover: Optional[int]
    t_hit: Optional[int]
    cap_hit: bool
    bound_failures: tuple[str, ...] = ()


@dataclass(frozen=True)
class SimConfig:
    env: EnvSpec
    policy: PolicySpec
    n_runs: int
    seed_base: int
    step_cap: Optional[int] = None  # None: default_step_cap of the graph
    record_trajectory: bool = False
    bound_checks: bool = False
    quantity: str = "cover"  # "cover" or "hitting"

    def __post_init__(self):
        if self.quantity not in ("cover", "hitting"):
            raise ValueError(f"quantity must be cover or hitting, got {self.quantity!r}")
        if self.n_runs < 1:
            raise ValueError(f"n_runs must be >= 1, got {self.n_runs}")


def general_cover_bound(g: Graph) -> Optional[int]:
    """Worst-case favor-least cover bound 1 + (m-1) * d_max ** diameter.

    Returns None when the value exceeds the saturation limit.
    """
    d_max = max(len(row) for row in g.out)
    diam = eccentricity_max(g)
    # saturating power so a 200-node graph with huge diameter cannot hang
    value = 1
    for _ in range(diam):
        value *= d_max
        if value > SATURATION_LIMIT:
            return None
    bound = 1 + (g.m - 1) * value
    return bound if bound <= SATURATION_LIMIT else None


def default_step_cap(g: Graph) -> int:
    bound = general_cover_bound(g)
    if bound is None:
        return 10 ** 7
    return max(10 ** 7, 2 * bound)


def _walk(
    g: Graph,
    spec: PolicySpec,
    start: NodeId,
    rng,
    step_cap: int,
    stop: str,
    target: Optional[NodeId],
    record_trajectory: bool,
) -> WalkRecord:
    out = g.out
    state = new_state(spec, g)
    visits = [0] * g.m
    visits[start] = 1
    uncovered = g.m - 1
    traj = [start] if record_trajectory else None
    cur = start
    t = 0
    t_hit = None
    t_cover = 0 if (stop == "cover" and uncovered == 0) else None
    while True:
        if stop == "cover" and t_cover is not None:
            break
        if stop == "hitting" and t_hit is not None:
            break
        if t >= step_cap:
            return WalkRecord(start, t, None, t_hit, True, visits, traj, spec.variant)
        a = next_action(spec, state, g, cur, rng)
        nxt = cur if a is None else out[cur][a]
        t += 1
        if visits[nxt] == 0:
            uncovered -= 1
            if uncovered == 0 and stop == "cover":
                t_cover = t
        visits[nxt] += 1
        if traj is not None:
            traj.append(nxt)
        if nxt == target and t_hit is None:
            t_hit = t
        cur = nxt
    return WalkRecord(start, t, t_cover, t_hit, False, visits, traj, spec.variant)


def run_cover(
    g: Graph,
    spec: PolicySpec,
    start: NodeId,
    rng,
    step_cap: int,
    record_trajectory: bool = False,
    target: Optional[NodeId] = None,
) -> WalkRecord:
    """Walk until every node has been visited (or the cap strikes).

    t_cover is the index of the step that completed coverage; the start
    node counts as visited at step 0.
    """
    return _walk(g, spec, start, rng, step_cap, "cover", target, record_trajectory)


def run_hitting(
    g: Graph,
    spec: PolicySpec,
    start: NodeId,
    target: NodeId,
    rng,
    step_cap: int,
    record_trajectory: bool = False,
) -> WalkRecord:
    """Walk until the target node is first occupied (or the cap strikes)."""
    if target == start:
        raise ValueError("hitting runs need target != start")
    return _walk(g, spec, start, rng, step_cap, "hitting", target, record_trajectory)


def count_excursions(record: WalkRecord, start: NodeId) -> dict[NodeId, int]:
    """For each node j first reached in the recorded trajectory, the index
    (1-based) of the excursion away from `start` during which it happened.

    An excursion begins each time the walk moves off the start node.
    """
    if record.trajectory is None:
        raise ValueError("count_excursions needs a recorded trajectory")
    traj = record.trajectory
    result: dict[NodeId, int] = {}
    exc = 0
    prev = traj[0]
    for v in traj[1:]:
        if prev == start and v != start:
            exc += 1
        if v != start and v not in result:
            result[v] = exc
        prev = v
    return result


def run_excursion_count(
    g: Graph,
    spec: PolicySpec,
    start: NodeId,
    target: NodeId,
    rng,
    step_cap: int,
) -> Optional[int]:
    """Excursion index during which `target` is first visited; None on cap."""
    if target == start:
        raise ValueError("target must differ from start")
    out = g.out
    state = new_state(spec, g)
    cur = start
    exc = 0
    t = 0
    while t < step_cap:
        a = next_action(spec, state, g, cur, rng)
        nxt = cur if a is None else out[cur][a]
        t += 1
        if cur == start and nxt != start:
            exc += 1
        if nxt == target:
            return exc
        cur = nxt
    return None


@dataclass(frozen=True)
class BoundResult:
    name: str
    applicable: bool
    passed: Optional[bool]
    detail: str


def _first_hit_index(traj: Sequence[int], node: int) -> Optional[int]:
    for t, v in enumerate(traj):
        if t >= 1 and v == node:
            return t
    return None


def check_bounds(record: WalkRecord, g: Graph, env: EnvSpec) -> list[BoundResult]:
    """Evaluate the worst-case guarantees that apply to a favor-least run."""
    if record.variant != "nf":
        raise ValueError("bound checks are defined for favor-least (nf) runs")
    results: list[BoundResult] = []

    gb = general_cover_bound(g)
    if gb is None:
        results.append(BoundResult("general-cover", False, None, "bound overflows saturation limit"))
    elif record.t_cover is None:
        results.append(BoundResult("general-cover", False, None, "run did not cover"))
    else:
        ok = record.t_cover <= gb
        results.append(BoundResult("general-cover", True, ok, f"t_cover={record.t_cover} limit={gb}"))

    if env.kind == "btree":
        b, H = env.params["b"], env.params["H"]
        cover_limit = 4 * H * (b + 1) * b ** H / (b - 1)
        visit_limit = 2 * (b + 1) * H
        if record.t_cover is None:
            results.append(BoundResult("tree-cover", False, None, "run did not cover"))
        else:
            ok = record.t_cover <= cover_limit
            results.append(
                BoundResult("tree-cover", True, ok, f"t_cover={record.t_cover} limit={cover_limit:g}")
            )
        worst = max(record.visits)
        ok = worst <= visit_limit
        results.append(BoundResult("tree-visits", True, ok, f"max_visits={worst} limit={visit_limit}"))

    if env.kind == "path":
        n = env.params["n"]
        if record.trajectory is None:
            results.append(BoundResult("path-start-returns", False, None, "needs a trajectory"))
        else:
            hit = _first_hit_index(record.trajectory, n)
            horizon = hit if hit is not None else len(record.trajectory)
            returns = sum(1 for t in range(1, horizon) if record.trajectory[t] == 0)
            ok = returns <= n - 1
            results.append(
                BoundResult("path-start-returns", True, ok, f"returns={returns} limit={n - 1}")
            )

    return results


def _resolve(config: SimConfig) -> tuple[Graph, int]:
    g, _ = environments.make(config.env.kind, **config.env.params)
    cap = config.step_cap if config.step_cap is not None else default_step_cap(g)
    return g, cap


def _need_trajectory(config: SimConfig) -> bool:
    return config.record_trajectory or (config.bound_checks and config.env.kind == "path")


def _one_run(config: SimConfig, g: Graph, cap: int, run_id: int) -> RunResult:
    rng = random.Random(mix_seed(config.seed_base, run_id))
    env = config.env
    if env.start is None:
        start = rng.randrange(g.m)
        if config.quantity == "hitting":
            while start == env.target:
                start = rng.randrange(g.m)
    else:
        start = env.start
    record_traj = _need_trajectory(config)
    if config.quantity == "hitting":
        if env.target is None:
            raise ValueError(f"environment {env.kind} has no target for hitting runs")
        rec = run_hitting(g, config.policy, start, env.target, rng, cap, record_traj)
    else:
        rec = run_cover(g, config.policy, start, rng, cap, record_traj, target=env.target)
    failures: tuple[str, ...] = ()
    if config.bound_checks and not rec.cap_hit:
        failures = tuple(
            r.name for r in check_bounds(rec, g, env) if r.applicable and r.passed is False
        )
    return RunResult(run_id, start, rec.t_cover, rec.t_hit, rec.cap_hit, failures)


_POOL_STATE: dict = {}


def _pool_init(config: SimConfig) -> None:
    g, cap = _resolve(config)
    _POOL_STATE["args"] = (config, g, cap)


def _pool_run(run_id: int) -> RunResult:
    config, g, cap = _POOL_STATE["args"]
    return _one_run(config, g, cap, run_id)


def summarize(values: Sequence[float], seed_base: int, cap_hits: int) -> McStats:
    """Mean / sample variance / stderr of the non-capped run values."""
    n = len(values)
    if n == 0:
        return McStats(0, math.nan, math.nan, math.nan, seed_base, cap_hits)
    mean = math.fsum(values) / n
    if n > 1:
        variance = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    else:
        variance = 0.0
    return McStats(n, mean, variance, math.sqrt(variance / n), seed_base, cap_hits)


def monte_carlo(config: SimConfig, workers: int = 1) -> tuple[McStats, list[RunResult]]:
    """Independent seeded replications of one walk configuration.

    Identical config gives bit-identical results at any worker count; rows
    come back sorted by run_id. Capped runs are excluded from the stats and
    counted in cap_hits.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if workers == 1 or config.n_runs < 2 * workers:
        g, cap = _resolve(config)
        rows = [_one_run(config, g, cap, r) for r in range(config.n_runs)]
    else:
        chunk = max(1, config.n_runs // (workers * 8))
        with Pool(workers, initializer=_pool_init, initargs=(config,)) as pool:
            rows = list(pool.map(_pool_run, range(config.n_runs), chunksize=chunk))
    rows.sort(key=lambda r: r.run_id)
    key = "t_cover" if config.quantity == "cover" else "t_hit"
    values = [getattr(r, key) for r in rows if not r.cap_hit]
    cap_hits = sum(1 for r in rows if r.cap_hit)
    stats = summarize(values, config.seed_base, cap_hits)
    return stats, rows
