"""Square-domain continuous walkers with cell-cover measurement.

The walker lives in [0, D] x [0, D] and moves along one of four axis
directions per step; the step length comes from the motion model (half
normal for brownian, Pareto shape 2 for levy) and both coordinates clip to
the domain. Coverage is measured on an M x M cell partition. The kernel
policy keeps a history of (position, direction) pairs and favors the
direction least used from positions within a box kernel of the current one.

Random draw protocol per step, in order: direction (randrange where there
is a choice), then length (brownian: two uniforms through Box-Muller;
levy: one uniform through the inverse CDF). Uniform starts draw x then y.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from multiprocessing import Pool
from typing import NamedTuple, Optional

from .simulator import McStats, RunResult, mix_seed, summarize

DIRECTIONS = ("+x", "-x", "+y", "-y")
_DX = (1.0, -1.0, 0.0, 0.0)
_DY = (0.0, 0.0, 1.0, -1.0)


class ContinuousState(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class KernelSpec:
    """Indicator box kernel: 1 when both coordinate gaps are <= delta."""

    delta: float
    kind: str = "indicator"

    def __post_init__(self):
        if self.kind != "indicator":
            raise ValueError(f"unsupported kernel kind {self.kind!r}")
        if not self.delta > 0:
            raise ValueError(f"kernel delta must be positive, got {self.delta!r}")

    def affinity(self, s1: ContinuousState, s2: ContinuousState) -> int:
        inside = abs(s1.x - s2.x) <= self.delta and abs(s1.y - s2.y) <= self.delta
        return 1 if inside else 0


class History:
    """Append-only record of (position, direction index) pairs."""

    __slots__ = ("xs", "ys", "acts")

    def __init__(self) -> None:
        self.xs: list[float] = []
        self.ys: list[float] = []
        self.acts: list[int] = []

    def append(self, s: ContinuousState, action: int) -> None:
        self.xs.append(s.x)
        self.ys.append(s.y)
        self.acts.append(action)

    def __len__(self) -> int:
        return len(self.xs)


def n_approx(hist: History, kernel: KernelSpec, s: ContinuousState, a: int) -> int:
    """Approximate visit count: past steps that took action `a` from a
    position kernel-close to `s`. Plain linear scan; the simulation loop
    uses a bucketed index that must stay query-equivalent to this."""
    delta = kernel.delta
    count = 0
    for px, py, pa in zip(hist.xs, hist.ys, hist.acts):
        if pa == a and abs(px - s.x) <= delta and abs(py - s.y) <= delta:
            count += 1
    return count


class _BoxCounter:
    """Bucketed exact evaluator for all four n_approx values at a point.

    Buckets have side `delta`, so every history point within the kernel box
    of a query lies in the 3 x 3 bucket patch around it.
    """

    __slots__ = ("delta", "buckets")

    def __init__(self, delta: float) -> None:
        self.delta = delta
        self.buckets: dict[tuple[int, int], list[tuple[float, float, int]]] = {}

    def add(self, s: ContinuousState, action: int) -> None:
        key = (int(s.x / self.delta), int(s.y / self.delta))
        self.buckets.setdefault(key, []).append((s.x, s.y, action))

    def counts(self, s: ContinuousState) -> list[int]:
        delta = self.delta
        bx = int(s.x / delta)
        by = int(s.y / delta)
        out = [0, 0, 0, 0]
        sx, sy = s.x, s.y
        for kx in (bx - 1, bx, bx + 1):
            for ky in (by - 1, by, by + 1):
                pts = self.buckets.get((kx, ky))
                if not pts:
                    continue
                for px, py, pa in pts:
                    if abs(px - sx) <= delta and abs(py - sy) <= delta:
                        out[pa] += 1
        return out


@dataclass(frozen=True)
class MotionModel:
    kind: str  # "brownian" | "levy"
    D: float

    def __post_init__(self):
        if self.kind not in ("brownian", "levy"):
            raise ValueError(f"unknown motion kind {self.kind!r}")
        if not self.D > 0:
            raise ValueError(f"domain size must be positive, got {self.D!r}")


def draw_length(kind: str, rng: random.Random) -> float:
    """One step length. brownian: |standard normal| via Box-Muller.
    levy: Pareto with shape 2 and scale 1, so every draw is >= 1."""
    if kind == "brownian":
        u1 = 1.0 - rng.random()  # (0, 1], keeps the log finite
        u2 = rng.random()
        return abs(math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2))
    u = rng.random()
    return (1.0 - u) ** -0.5


def step(model: MotionModel, direction: int, s: ContinuousState, rng: random.Random) -> ContinuousState:
    """Move along one axis direction with a model-drawn length, clipping to the domain."""
    length = draw_length(model.kind, rng)
    x = s.x + _DX[direction] * length
    y = s.y + _DY[direction] * length
    D = model.D
    return ContinuousState(min(max(x, 0.0), D), min(max(y, 0.0), D))


def cell_of(s: ContinuousState, D: float, M: int) -> tuple[int, int]:
    """Cell indices of a state; the far boundary belongs to the last cell."""
    width = D / M
    return (min(int(s.x / width), M - 1), min(int(s.y / width), M - 1))


@dataclass
class ContinuousRecord:
    start: ContinuousState
    steps: int
    t_cover: Optional[int]
    cap_hit: bool


def run_cover_continuous(
    D: float,
    M: int,
    policy: str,
    model: MotionModel,
    rng: random.Random,
    step_cap: int,
    kernel: Optional[KernelSpec] = None,
    start: Optional[ContinuousState] = None,
) -> ContinuousRecord:
    """Walk until all M x M cells have been entered, or the cap strikes.

    policy is "uniform" (direction uniform over the four axes) or
    "approx-nf" (direction = least kernel-counted, ties uniform). The
    kernel defaults to a box of half-width D / M, the cell width.
    """
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if policy not in ("uniform", "approx-nf"):
        raise ValueError(f"unknown continuous policy {policy!r}")
    if start is None:
        start = ContinuousState(rng.random() * D, rng.random() * D)
    counter: Optional[_BoxCounter] = None
    if policy == "approx-nf":
        kern = kernel if kernel is not None else KernelSpec(delta=D / M)
        counter = _BoxCounter(kern.delta)

    width = D / M
    last = M - 1
    seen = bytearray(M * M)
    cx = min(int(start.x / width), last)
    cy = min(int(start.y / width), last)
    seen[cx * M + cy] = 1
    uncovered = M * M - 1
    if uncovered == 0:
        return ContinuousRecord(start, 0, 0, False)

    s = start
    t = 0
    while t < step_cap:
        if counter is None:
            direction = rng.randrange(4)
        else:
            counts = counter.counts(s)
            lo = min(counts)
            cands = [d for d in range(4) if counts[d] == lo]
            direction = cands[0] if len(cands) == 1 else cands[rng.randrange(len(cands))]
            counter.add(s, direction)
        s = step(model, direction, s, rng)
        t += 1
        cx = min(int(s.x / width), last)
        cy = min(int(s.y / width), last)
        idx = cx * M + cy
        if not seen[idx]:
            seen[idx] = 1
            uncovered -= 1
            if uncovered == 0:
                return ContinuousRecord(start, t, t, False)
    return ContinuousRecord(start, t, None, True)


@dataclass(frozen=True)
class ContSimConfig:
    D: float
    M: int
    policy: str  # "uniform" | "approx-nf"
    motion: str  # "brownian" | "levy"
    n_runs: int
    seed_base: int
    step_cap: int = 10 ** 7
    delta: Optional[float] = None  # kernel half-width; None: D / M


def _cont_one_run(config: ContSimConfig, run_id: int) -> RunResult:
    rng = random.Random(mix_seed(config.seed_base, run_id))
    model = MotionModel(config.motion, config.D)
    kernel = KernelSpec(config.delta) if config.delta is not None else None
    rec = run_cover_continuous(
        config.D, config.M, config.policy, model, rng, config.step_cap, kernel
    )
    return RunResult(run_id, -1, rec.t_cover, None, rec.cap_hit)


_POOL_CFG: dict = {}


def _cont_pool_init(config: ContSimConfig) -> None:
    _POOL_CFG["config"] = config


def _cont_pool_run(run_id: int) -> RunResult:
    return _cont_one_run(_POOL_CFG["config"], run_id)


def cont_monte_carlo(config: ContSimConfig, workers: int = 1) -> tuple[McStats, list[RunResult]]:
    """Seeded replications of the continuous cover walk; same determinism
    contract as the graph simulator (worker count cannot change results)."""
    if workers == 1 or config.n_runs < 2 * workers:
        rows = [_cont_one_run(config, r) for r in range(config.n_runs)]
    else:
        chunk = max(1, config.n_runs // (workers * 8))
        with Pool(workers, initializer=_cont_pool_init, initargs=(config,)) as pool:
            rows = list(pool.map(_cont_pool_run, range(config.n_runs), chunksize=chunk))
    rows.sort(key=lambda r: r.run_id)
    values = [r.t_cover for r in rows if not r.cap_hit]
    cap_hits = sum(1 for r in rows if r.cap_hit)
    return summarize(values, config.seed_base, cap_hits), rows
