"""Exact evaluation of hitting times, excursion laws, cover-time bounds and
closed forms, without simulation.

Hitting quantities come from dense first-step linear systems solved by LU
factorization with partial pivoting; every solution is verified against its
system to a max-norm residual tolerance before it is returned. Excursion
expectations and the favor-least comparison are evaluated through normalized
elementary symmetric means, computed by a stable O(K^2) prefix recurrence.
The 5-node maze walk distribution is enumerated in exact rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .environments import EnvSpec
from .graph_core import Graph, NodeId


class NumericalError(RuntimeError):
    """A linear solve failed or exceeded its residual tolerance."""


@dataclass(frozen=True)
class LinearSystem:
    """Dense square system ``A x = b`` with a residual tolerance.

    solve() returns x with ``max|A x - b| <= tol``, raising NumericalError
    when the factorization fails or the residual check does not pass.
    """

    A: np.ndarray
    b: np.ndarray
    tol: float = 1e-10

    def solve(self) -> np.ndarray:
        try:
            x = np.linalg.solve(self.A, self.b)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"linear solve failed: {exc}") from exc
        residual = float(np.max(np.abs(self.A @ x - self.b))) if self.b.size else 0.0
        if not residual <= self.tol:
            raise NumericalError(f"solve residual {residual:.3e} exceeds tolerance {self.tol:.1e}")
        return x


def harmonic(k: int) -> float:
    """k-th harmonic number 1 + 1/2 + ... + 1/k (0 for k <= 0)."""
    return math.fsum(1.0 / i for i in range(1, k + 1))


def hitting_times_rw(g: Graph, target: NodeId, tol: float = 1e-10) -> list[float]:
    """Expected uniform-random-walk hitting times of ``target`` from every node.

    Parameters
    ----------
    g : Graph
        Connected graph to walk on.
    target : int
        Absorbing node; the returned vector is 0 there.

    Returns
    -------
    list of float
        ``h[i]`` = expected number of steps from i to first reach target.

    Notes
    -----
    Solves the first-step system h_i = 1 + mean over successors of h, with
    h fixed to 0 at the target. Self-loop actions participate like any
    other action.
    """
    m = g.m
    if not 0 <= target < m:
        raise ValueError(f"target {target} outside 0..{m - 1}")
    others = [i for i in range(m) if i != target]
    index = {node: k for k, node in enumerate(others)}
    n = len(others)
    A = np.zeros((n, n))
    b = np.ones(n)
    for i in others:
        k = index[i]
        A[k, k] += 1.0
        w = 1.0 / len(g.out[i])
        for j in g.out[i]:
            if j != target:
                A[k, index[j]] -= w
    x = LinearSystem(A, b, tol).solve()
    h = [0.0] * m
    for i, k in index.items():
        h[i] = float(x[k])
    return h


def hitting_prob_before_return(g: Graph, i: NodeId, j: NodeId, tol: float = 1e-10) -> list[float]:
    """Per-action success probabilities for the excursion comparison.

    For each action a at node i, the probability that a random walk started
    at the successor of a reaches j before i (both treated as absorbing).
    An action pointing straight at j contributes 1; one pointing back at i
    contributes 0.
    """
    if i == j:
        raise ValueError("need two distinct nodes")
    others = [v for v in range(g.m) if v != i and v != j]
    index = {node: k for k, node in enumerate(others)}
    n = len(others)
    A = np.zeros((n, n))
    b = np.zeros(n)
    for v in others:
        k = index[v]
        A[k, k] += 1.0
        w = 1.0 / len(g.out[v])
        for u in g.out[v]:
            if u == j:
                b[k] += w
            elif u != i:
                A[k, index[u]] -= w
    x = LinearSystem(A, b, tol).solve()

    def q(v: int) -> float:
        if v == j:
            return 1.0
        if v == i:
            return 0.0
        return float(x[index[v]])

    return [q(succ) for succ in g.out[i]]


def expected_excursions_rw(p: Sequence[float]) -> float:
    """Expected excursion count K / sum(p) under uniform exits.

    Returns inf when every success probability is 0 (the node's excursions
    can never reach the target).
    """
    K = len(p)
    total = math.fsum(p)
    if total == 0.0:
        return math.inf
    return K / total


@dataclass(frozen=True)
class SymmetricMeans:
    """Normalized elementary symmetric means of a vector x in [0,1]^K.

    S[k-1] holds S_k = e_k(x) / C(K, k), k = 1..K.
    """

    x: tuple[float, ...]
    S: tuple[float, ...]


def symmetric_means(x: Sequence[float]) -> SymmetricMeans:
    """Compute all normalized elementary symmetric means of x.

    Uses the prefix recurrence e_k <- e_k + x_t * e_{k-1} (t = 1..K), which
    only ever adds products of nonnegative terms, then divides by the
    binomial coefficients. O(K^2) time, numerically stable on [0,1] inputs.
    """
    xs = tuple(float(v) for v in x)
    K = len(xs)
    e = [0.0] * (K + 1)
    e[0] = 1.0
    for t, xt in enumerate(xs, start=1):
        # downward sweep so e_{k-1} still refers to the previous prefix
        for k in range(min(t, K), 0, -1):
            e[k] += xt * e[k - 1]
    S = tuple(e[k] / math.comb(K, k) for k in range(1, K + 1))
    return SymmetricMeans(xs, S)


def expected_excursions_local_nf(p: Sequence[float]) -> float:
    """Expected excursion count when the exit node favors its least-used action.

    Evaluates (1 + sum_{k=1}^{K-1} S_k) / (1 - prod(1 - p_j)) with S_k the
    normalized symmetric means of x_j = 1 - p_j. Returns inf when all p are
    0. For K = 1 this reduces to 1/p, the same value as the uniform-exit
    formula.
    """
    K = len(p)
    x = [1.0 - v for v in p]
    prod_x = math.prod(x)
    if prod_x >= 1.0:
        return math.inf
    S = symmetric_means(x).S
    numerator = 1.0 + math.fsum(S[: K - 1])
    return numerator / (1.0 - prod_x)


def local_improvement_check(
    g: Graph, i: NodeId, j: NodeId, slack: float = 1e-9
) -> tuple[float, float, bool]:
    """Compare both excursion expectations for the ordered pair (i, j).

    Returns (e_rw, e_loc, holds) where holds means e_loc <= e_rw + slack.
    If both are infinite the comparison holds vacuously.
    """
    p = hitting_prob_before_return(g, i, j)
    e_rw = expected_excursions_rw(p)
    e_loc = expected_excursions_local_nf(p)
    if math.isinf(e_rw) and math.isinf(e_loc):
        return e_rw, e_loc, True
    return e_rw, e_loc, e_loc <= e_rw + slack


def matthews_bounds(g: Graph) -> tuple[float, float, float, float]:
    """Cover-time sandwich from extreme pairwise hitting expectations.

    Returns (mu_minus, mu_plus, lower, upper) with lower = mu_minus * H_{m-1}
    and upper = mu_plus * H_{m-1}, where mu_minus / mu_plus are the smallest
    and largest expected random-walk hitting times over ordered node pairs.
    """
    m = g.m
    if m < 2:
        raise ValueError("need at least two nodes")
    mu_minus = math.inf
    mu_plus = -math.inf
    for target in range(m):
        h = hitting_times_rw(g, target)
        for i in range(m):
            if i == target:
                continue
            mu_minus = min(mu_minus, h[i])
            mu_plus = max(mu_plus, h[i])
    hk = harmonic(m - 1)
    return mu_minus, mu_plus, mu_minus * hk, mu_plus * hk


@dataclass(frozen=True)
class ClosedForm:
    kind: str  # "exact" | "asymptotic" | "upper-bound"
    value: float


def closed_form(env: EnvSpec, policy: str) -> ClosedForm:
    """Reference cover-time value for a supported (environment, policy) pair.

    Supported pairs and their kinds:

    ==========  ======  ============  =========================================
    env         policy  kind          value
    ==========  ======  ============  =========================================
    star(n)     nf      exact         2n - 1
    star(n)     rw      exact         2n H_n - 1
    path(n)     rw      exact         n^2
    circle(n)   rw      exact         (n+1) n / 2
    clique(n)   rw      exact         1 + (n-1) H_{n-1}
    btree(b,H)  rw      asymptotic    2 H^2 b^{H+1} ln(b) / (b-1)
    btree(b,H)  nf      upper-bound   4 H (b+1) b^H / (b-1)
    ==========  ======  ============  =========================================

    Raises ValueError for any other pair.
    """
    kind = env.kind
    if kind == "star":
        n = env.params["n"]
        if policy == "nf":
            return ClosedForm("exact", float(2 * n - 1))
        if policy == "rw":
            return ClosedForm("exact", 2 * n * harmonic(n) - 1.0)
    elif kind == "path":
        if policy == "rw":
            n = env.params["n"]
            return ClosedForm("exact", float(n * n))
    elif kind == "circle":
        if policy == "rw":
            n = env.params["n"]
            return ClosedForm("exact", (n + 1) * n / 2.0)
    elif kind == "clique":
        if policy == "rw":
            n = env.params["n"]
            return ClosedForm("exact", 1.0 + (n - 1) * harmonic(n - 1))
    elif kind == "btree":
        b, H = env.params["b"], env.params["H"]
        if policy == "rw":
            return ClosedForm("asymptotic", 2.0 * H * H * b ** (H + 1) * math.log(b) / (b - 1))
        if policy == "nf":
            return ClosedForm("upper-bound", 4.0 * H * (b + 1) * b ** H / (b - 1))
    raise ValueError(f"no closed form for environment {kind!r} with policy {policy!r}")


def _persistent_t0_raw(a: float) -> float:
    b = 1.0 - a
    rep = a + 2.0 * b  # mean repetition length
    num = (
        2.0 * rep / (3.0 * (1.0 - b))
        + rep * (3.0 * a - 2.0 * a * a / 3.0 + 2.0 * a * b / 3.0 + 2.0 * b + 1.0 / 3.0)
        / (3.0 * (2.0 - a))
        + rep
    )
    den = (
        1.0
        - 2.0 * a / (3.0 * (1.0 - b))
        - (a - a * a / 3.0 + 2.0 * a * b / 3.0 + 2.0 * b * b / 3.0) / (3.0 * (2.0 - a))
    )
    if not den > 0.0:
        raise NumericalError(f"persistent_toy_T0 denominator {den!r} not positive at a={a!r}")
    return num / den


def persistent_toy_T0(a: float) -> float:
    """Expected steps to reach the maze target under repetition mixing weight a.

    ``a`` is the probability of repeating a chosen direction once (z = 1) and
    ``1 - a`` of repeating it twice (z = 2). The value at a = 1 equals the
    plain random-walk hitting expectation 23, which is re-asserted on every
    call as a transcription guard. At a = 0 the walk gets trapped bouncing
    between the two dead-end cells, so the expectation is infinite (the
    rational form degenerates to 0/0 there).
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must lie in [0, 1], got {a!r}")
    guard = _persistent_t0_raw(1.0)
    if abs(guard - 23.0) > 1e-9:
        raise NumericalError(f"transcription guard failed: T0(1) evaluated to {guard!r}")
    if a == 0.0:
        return math.inf
    return _persistent_t0_raw(a)


#: restricted 5-node maze: adjacency among the reachable nodes when the two
#: dead-end cells next to the start are walled off; node 6 absorbs.
_RESTRICTED_NEIGHBORS = {0: (3,), 3: (0, 4), 4: (3, 5, 6), 5: (4,)}
_RESTRICTED_ABSORB = 6


@dataclass(frozen=True)
class MazeEnumeration:
    """Full favor-least walk distribution on the restricted maze."""

    paths: tuple[tuple[tuple[int, ...], Fraction], ...]
    expected_steps: Fraction

    def probability_of(self, path: tuple[int, ...]) -> Fraction:
        """Probability of one exact node sequence; zero when the favor-least
        walk can never produce it."""
        for nodes, prob in self.paths:
            if nodes == path:
                return prob
        return Fraction(0)


def enumerate_restricted_maze() -> MazeEnumeration:
    """Enumerate every favor-least trajectory from node 0 to node 6.

    The walk favors the least-selected outgoing edge at each node, splitting
    probability equally over ties, so every branch probability is an exact
    rational. Returns the complete path table (probabilities sum to 1) and
    the expected number of steps.
    """
    counts = {i: [0] * len(nbrs) for i, nbrs in _RESTRICTED_NEIGHBORS.items()}
    paths: list[tuple[tuple[int, ...], Fraction]] = []

    def explore(cur: int, prob: Fraction, path: list[int]) -> None:
        if cur == _RESTRICTED_ABSORB:
            paths.append((tuple(path), prob))
            return
        row = counts[cur]
        lo = min(row)
        ties = [k for k, c in enumerate(row) if c == lo]
        share = prob / len(ties)
        for k in ties:
            row[k] += 1
            path.append(_RESTRICTED_NEIGHBORS[cur][k])
            explore(_RESTRICTED_NEIGHBORS[cur][k], share, path)
            path.pop()
            row[k] -= 1

    explore(0, Fraction(1), [0])
    paths.sort(key=lambda item: (len(item[0]), item[0]))
    expected = sum((prob * (len(nodes) - 1) for nodes, prob in paths), Fraction(0))
    return MazeEnumeration(tuple(paths), expected)
