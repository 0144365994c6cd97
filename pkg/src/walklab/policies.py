"""Next-action selection rules.

Four variants walk the graphs:

* ``rw``: uniform over the current node's actions.
* ``nf``: favor-least. Each node keeps a per-action selection count and the
  next action is uniform over the least-selected ones; the chosen counter
  is bumped at selection time.
* ``local-nf``: favor-least at a single anchor node, plain ``rw`` elsewhere.
* ``persistent``: pick an action uniformly plus a repetition count z drawn
  from a RepetitionDist, then re-apply the same direction for the next z-1
  steps. On labeled graphs "the same direction" means the equally named
  action at the node the walker is currently in; when that node lacks the
  direction (or, on unlabeled graphs, the action id), the walker stays put
  for that step. next_action returns None for such stay-in-place steps and
  a real ActionId otherwise; only the persistent variant ever returns None.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import fsum
from typing import Optional

from .graph_core import ActionId, Graph, NodeId

VARIANTS = ("rw", "nf", "local-nf", "persistent")


class CountTable:
    """Per-(node, action) nonnegative selection counters, all starting at 0."""

    __slots__ = ("rows",)

    def __init__(self, g: Graph) -> None:
        self.rows = [[0] * len(g.out[i]) for i in range(g.m)]

    def get(self, i: NodeId, a: ActionId) -> int:
        return self.rows[i][a]

    def increment(self, i: NodeId, a: ActionId) -> None:
        self.rows[i][a] += 1

    def total(self) -> int:
        return sum(sum(r) for r in self.rows)

    def spread(self, i: NodeId) -> int:
        """max count minus min count over the actions of node i."""
        row = self.rows[i]
        return max(row) - min(row)

    def zero(self) -> None:
        for row in self.rows:
            for a in range(len(row)):
                row[a] = 0


@dataclass(frozen=True)
class RepetitionDist:
    """Distribution of the repetition count z (positive integer support)."""

    support: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.support) != len(self.probs) or not self.support:
            raise ValueError("support and probs must be same nonzero length")
        if any(z < 1 or z != int(z) for z in self.support):
            raise ValueError(f"support must be positive integers, got {self.support}")
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be nonnegative")
        if abs(fsum(self.probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {fsum(self.probs)!r}, need 1 within 1e-12")

    @classmethod
    def explicit(cls, pairs: dict[int, float]) -> "RepetitionDist":
        zs = tuple(sorted(pairs))
        return cls(zs, tuple(pairs[z] for z in zs))

    @classmethod
    def inverse_z(cls, z_max: int) -> "RepetitionDist":
        """p(z) proportional to 1/z on support 1..z_max."""
        if z_max < 1:
            raise ValueError(f"z_max must be >= 1, got {z_max}")
        weights = [1.0 / z for z in range(1, z_max + 1)]
        norm = fsum(weights)
        return cls(tuple(range(1, z_max + 1)), tuple(w / norm for w in weights))

    def sample(self, rng) -> int:
        u = rng.random()
        acc = 0.0
        for z, p in zip(self.support, self.probs):
            acc += p
            if u < acc:
                return z
        return self.support[-1]

    def describe(self) -> str:
        return ",".join(f"{z}={p:g}" for z, p in zip(self.support, self.probs))


@dataclass(frozen=True)
class PolicySpec:
    """Which rule picks the next action, plus its fixed options."""

    variant: str
    anchor: Optional[NodeId] = None
    dist: Optional[RepetitionDist] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown policy variant {self.variant!r}; known: {VARIANTS}")
        if self.variant == "local-nf" and self.anchor is None:
            raise ValueError("local-nf needs an anchor node")
        if self.variant == "persistent" and self.dist is None:
            raise ValueError("persistent needs a repetition distribution")

    def describe(self) -> str:
        if self.variant == "local-nf":
            return f"local-nf(anchor={self.anchor})"
        if self.variant == "persistent":
            return f"persistent({self.dist.describe()})"
        return self.variant


class PolicyState:
    """Mutable per-run state: counters for the favor-least variants, the
    pending repetition for the persistent one."""

    __slots__ = ("counts", "pending_label", "pending_action", "remaining")

    def __init__(self, spec: PolicySpec, g: Graph) -> None:
        self.counts = CountTable(g) if spec.variant in ("nf", "local-nf") else None
        self.pending_label: Optional[str] = None
        self.pending_action: Optional[ActionId] = None
        self.remaining = 0


def new_state(spec: PolicySpec, g: Graph) -> PolicyState:
    return PolicyState(spec, g)


def reset(state: PolicyState) -> PolicyState:
    """Zero the counters and drop any pending repetition; returns the state."""
    if state.counts is not None:
        state.counts.zero()
    state.pending_label = None
    state.pending_action = None
    state.remaining = 0
    return state


def argmin_set(state: PolicyState, g: Graph, i: NodeId) -> list[ActionId]:
    """Actions at node i whose count equals the node's minimum, ascending.

    A state without counters (rw / persistent) reads as all-zero, so the
    full action list comes back.
    """
    d = len(g.out[i])
    if state.counts is None:
        return list(range(d))
    row = state.counts.rows[i]
    lo = min(row)
    return [a for a in range(d) if row[a] == lo]


def _uniform_index(rng, k: int) -> int:
    return 0 if k == 1 else rng.randrange(k)


def next_action(
    spec: PolicySpec, state: PolicyState, g: Graph, i: NodeId, rng
) -> Optional[ActionId]:
    """Select the next action at node i, updating the state.

    Returns None only for a persistent stay-in-place step (see module doc).
    """
    variant = spec.variant
    if variant == "rw" or (variant == "local-nf" and i != spec.anchor):
        return _uniform_index(rng, len(g.out[i]))

    if variant == "nf" or variant == "local-nf":
        row = state.counts.rows[i]
        lo = min(row)
        cands = [a for a, c in enumerate(row) if c == lo]
        a = cands[_uniform_index(rng, len(cands))]
        row[a] += 1
        return a

    # persistent
    if state.remaining > 0:
        state.remaining -= 1
        if g.labels is not None:
            return g.find_action(i, state.pending_label)
        a = state.pending_action
        return a if a < len(g.out[i]) else None
    d = len(g.out[i])
    a = _uniform_index(rng, d)
    z = spec.dist.sample(rng)
    state.remaining = z - 1
    if g.labels is not None:
        state.pending_label = g.labels[i][a]
    else:
        state.pending_action = a
    return a
