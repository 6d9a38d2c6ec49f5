"""Pseudo-orbits and exact shadowing decisions.

The universal decision searches states ``(v, W)`` where ``v`` is the current
pseudo-orbit vertex and ``W`` the set of current positions of points still
within ``eps`` of every vertex so far.  ``W`` is a Python ``int`` bitset; the
image ``f(W)`` is assembled from per-byte lookup tables.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .metric import GuardExceeded, MetricSystem

DECISION_POINT_CAP = 4096
MAX_STATES = 2_000_000
BRUTE_FORCE_PATH_CAP = 10**7


@dataclass(frozen=True)
class PseudoOrbit:
    """A finite sequence, or ``points`` followed by ``block`` repeated forever."""

    points: tuple
    delta: float
    block: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(int(p) for p in self.points))
        object.__setattr__(self, "block", tuple(int(p) for p in self.block))
        if not self.points and not self.block:
            raise ValueError("empty pseudo-orbit")

    @property
    def is_periodic(self) -> bool:
        return bool(self.block)

    def __len__(self):
        if self.is_periodic:
            raise TypeError("periodic pseudo-orbit has no finite length")
        return len(self.points)

    def at(self, i: int) -> int:
        if i < len(self.points):
            return self.points[i]
        if not self.block:
            raise IndexError(i)
        return self.block[(i - len(self.points)) % len(self.block)]

    def prefix(self, length: int) -> tuple:
        return tuple(self.at(i) for i in range(length))

    def to_dict(self) -> dict:
        out = {"points": list(self.points), "delta": repr(float(self.delta))}
        if self.block:
            out["block"] = list(self.block)
        return out


def gap_profile(system: MetricSystem, seq: Sequence[int]) -> tuple[float, list[float]]:
    """Per-step jumps ``d(f(x_i), x_{i+1})`` and their maximum."""
    seq = np.asarray(seq, dtype=np.int64)
    if seq.size == 0:
        raise ValueError("sequence must be non-empty")
    gaps = system.dist(system.map[seq[:-1]], seq[1:]).tolist() if seq.size > 1 else []
    return (max(gaps) if gaps else 0.0), gaps


def orbit_gaps(system: MetricSystem, po: PseudoOrbit) -> list[float]:
    """All gaps of ``po``, including the wrap of a periodic block."""
    if not po.is_periodic:
        return gap_profile(system, po.points)[1]
    seq = list(po.points) + list(po.block) + [po.block[0]]
    return gap_profile(system, seq)[1]


def is_pseudo_orbit(system: MetricSystem, po: PseudoOrbit) -> bool:
    return all(g < po.delta for g in orbit_gaps(system, po))


def shadows(system: MetricSystem, z: int, po: PseudoOrbit, epsilon: float, horizon: int) -> bool:
    """True iff ``d(f^i z, po_i) < epsilon`` for ``0 <= i < horizon``."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    y = int(z)
    for i in range(horizon):
        if not system.d(y, po.at(i)) < epsilon:
            return False
        y = int(system.map[y])
    return True


def first_shadow_failure(system: MetricSystem, z: int, targets: Sequence[int], epsilon: float) -> Optional[int]:
    """Index of the first step where the orbit of ``z`` leaves the ``epsilon`` tube, else None."""
    y = int(z)
    for i, t in enumerate(targets):
        if not system.d(y, int(t)) < epsilon:
            return i
        y = int(system.map[y])
    return None


def tracking_candidates(
    system: MetricSystem, po: PseudoOrbit, epsilon: float, horizon: Optional[int] = None
) -> np.ndarray:
    """All points ``z`` that ``epsilon``-shadow ``po`` (vectorized W-recursion).

    ``horizon=None`` means the whole sequence for finite pseudo-orbits and
    forever for periodic ones (decided by cycle detection of the position set
    at each block phase).
    """
    if horizon is None and not po.is_periodic:
        horizon = len(po)
    z = np.flatnonzero(system.row(po.at(0)) < epsilon)
    pos = z.copy()
    seen = set()
    pre = len(po.points)
    period = len(po.block)
    i = 0
    while z.size:
        if horizon is not None and i >= horizon:
            break
        keep = system.dist(pos, po.at(i)) < epsilon
        z, pos = z[keep], pos[keep]
        pos = system.map[pos]
        i += 1
        if horizon is None and i >= pre:
            key = ((i - pre) % period, np.unique(pos).tobytes())
            if key in seen:
                break
            seen.add(key)
    return z


@dataclass
class ShadowingDecision:
    epsilon: float
    delta: float
    horizon: Optional[int]
    start: Optional[int]
    result: bool
    counterexample: Optional[PseudoOrbit] = None
    witness_stats: int = 0
    method: str = "tracking"

    def to_dict(self) -> dict:
        return {
            "epsilon": repr(float(self.epsilon)),
            "delta": repr(float(self.delta)),
            "horizon": "unbounded" if self.horizon is None else self.horizon,
            "start": self.start,
            "result": self.result,
            "counterexample": None if self.counterexample is None else self.counterexample.to_dict(),
            "reachable_states": self.witness_stats,
            "method": self.method,
        }


class _BitsetKit:
    """Ball masks, pseudo-graph adjacency and set images for one system."""

    def __init__(self, system: MetricSystem):
        self.system = system
        n = system.n
        self.nbytes = (n + 7) // 8
        fm = system.map
        tables = []
        for c in range(self.nbytes):
            table = [0] * 256
            for b in range(1, 256):
                low = b & -b
                j = 8 * c + low.bit_length() - 1
                table[b] = table[b ^ low] | ((1 << int(fm[j])) if j < n else 0)
            tables.append(table)
        self.tables = tables
        self._balls: dict = {}
        self._adj: dict = {}

    def _mask(self, flags: np.ndarray) -> int:
        return int.from_bytes(np.packbits(flags, bitorder="little").tobytes(), "little")

    def balls(self, eps: float) -> list[int]:
        if eps not in self._balls:
            s = self.system
            self._balls[eps] = [self._mask(s.row(v) < eps) for v in range(s.n)]
        return self._balls[eps]

    def adjacency(self, delta: float) -> list[list[int]]:
        if delta not in self._adj:
            s = self.system
            self._adj[delta] = [np.flatnonzero(s.row(int(s.map[v])) < delta).tolist() for v in range(s.n)]
        return self._adj[delta]

    def image(self, w: int) -> int:
        acc = 0
        tables = self.tables
        for c, byte in enumerate(w.to_bytes(self.nbytes, "little")):
            if byte:
                acc |= tables[c][byte]
        return acc


def _kit(system: MetricSystem) -> _BitsetKit:
    if "bitset" not in system._cache:
        if system.n > DECISION_POINT_CAP:
            raise GuardExceeded(
                "decision_point_cap",
                f"universal shadowing decisions are limited to {DECISION_POINT_CAP} points",
            )
        system._cache["bitset"] = _BitsetKit(system)
    return system._cache["bitset"]


def pseudo_graph(system: MetricSystem, delta: float) -> list[list[int]]:
    """Adjacency ``x -> {y : d(f(x), y) < delta}``; paths are the delta-pseudo-orbits."""
    return _kit(system).adjacency(delta)


def decide_shadowing(
    system: MetricSystem,
    epsilon: float,
    delta: float,
    horizon: Optional[int] = None,
    start: Optional[int] = None,
    max_states: int = MAX_STATES,
) -> ShadowingDecision:
    """Is every delta-pseudo-orbit (of length ``horizon``, or infinite) epsilon-shadowed?

    Breadth-first search, so a returned counterexample is a shortest one.
    """
    if epsilon <= 0 or delta <= 0:
        raise ValueError("epsilon and delta must be positive")
    if horizon is not None and horizon < 1:
        raise ValueError("horizon must be >= 1")
    kit = _kit(system)
    balls = kit.balls(epsilon)
    adj = kit.adjacency(delta)
    starts = range(system.n) if start is None else [int(start)]
    parent: dict = {}
    queue: deque = deque()
    for v in starts:
        st = (v, balls[v])
        if st not in parent:
            parent[st] = None
            queue.append((st, 1))
    while queue:
        (v, w), depth = queue.popleft()
        if horizon is not None and depth >= horizon:
            continue
        img = kit.image(w)
        for y in adj[v]:
            st = (y, img & balls[y])
            if st in parent:
                continue
            parent[st] = (v, w)
            if st[1] == 0:
                path = []
                cur = st
                while cur is not None:
                    path.append(cur[0])
                    cur = parent[cur]
                path.reverse()
                return ShadowingDecision(
                    epsilon, delta, horizon, start, False, PseudoOrbit(tuple(path), delta), len(parent)
                )
            if len(parent) > max_states:
                raise GuardExceeded("max_states", f"more than {max_states} tracking states")
            queue.append((st, depth + 1))
    return ShadowingDecision(epsilon, delta, horizon, start, True, None, len(parent))


class BruteForceOracle:
    """Enumerate every delta-pseudo-orbit up to ``horizon`` and test all shadows directly.

    For each length ``L`` and each pseudo-orbit, the best shadowing error
    ``min_z max_i d(f^i z, x_i)`` is stored, so one enumeration answers every
    ``epsilon``.
    """

    def __init__(self, system: MetricSystem, delta: float, horizon: int, start: Optional[int] = None):
        if delta <= 0:
            raise ValueError("delta must be positive")
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        n = system.n
        d = system.pairwise(np.arange(n))
        fm = system.map
        succ = [np.flatnonzero(d[int(fm[v])] < delta) for v in range(n)]
        # level_counts[v] = number of pseudo-orbits of the current length starting at v
        level_counts = np.ones(n, dtype=np.float64)
        total = 0.0
        for _ in range(horizon):
            total += level_counts.sum() if start is None else level_counts[int(start)]
            level_counts = np.array([level_counts[s].sum() for s in succ])
        if total > BRUTE_FORCE_PATH_CAP:
            raise GuardExceeded("brute_force_paths", f"~{int(total)} pseudo-orbits exceed {BRUTE_FORCE_PATH_CAP}")
        orbits = np.empty((n, horizon), dtype=np.int64)
        cur = np.arange(n)
        for i in range(horizon):
            orbits[:, i] = cur
            cur = fm[cur]
        seqs = np.arange(n, dtype=np.int64)[:, None] if start is None else np.array([[int(start)]])
        err = d[:, seqs[:, 0]].T.copy()  # err[s, z] = running max error of z against sequence s
        self.levels = []
        for length in range(1, horizon + 1):
            self.levels.append((seqs, err.min(axis=1)))
            if length == horizon:
                break
            last = seqs[:, -1]
            reps = np.array([succ[v].size for v in last])
            parent_idx = np.repeat(np.arange(seqs.shape[0]), reps)
            nxt = np.concatenate([succ[v] for v in last]) if parent_idx.size else np.empty(0, np.int64)
            seqs = np.hstack([seqs[parent_idx], nxt[:, None]])
            err = np.maximum(err[parent_idx], d[orbits[:, length][None, :], nxt[:, None]])
        self.system = system
        self.delta = delta
        self.horizon = horizon
        self.start = start

    def worst_error(self, length: int) -> float:
        return float(self.levels[length - 1][1].max())

    def decide(self, epsilon: float, horizon: Optional[int] = None) -> ShadowingDecision:
        horizon = self.horizon if horizon is None else horizon
        count = 0
        for length in range(1, horizon + 1):
            seqs, best = self.levels[length - 1]
            count += seqs.shape[0]
            bad = np.flatnonzero(best >= epsilon)
            if bad.size:
                po = PseudoOrbit(tuple(seqs[bad[0]].tolist()), self.delta)
                return ShadowingDecision(epsilon, self.delta, horizon, self.start, False, po, count, "brute_force")
        return ShadowingDecision(epsilon, self.delta, horizon, self.start, True, None, count, "brute_force")


def brute_force_shadowing(
    system: MetricSystem, epsilon: float, delta: float, horizon: int, start: Optional[int] = None
) -> ShadowingDecision:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return BruteForceOracle(system, delta, horizon, start).decide(epsilon)


def refutes(system: MetricSystem, po: PseudoOrbit, epsilon: float) -> bool:
    """Direct check that ``po`` is a valid pseudo-orbit that no point epsilon-shadows."""
    if not is_pseudo_orbit(system, po):
        return False
    return not any(shadows(system, z, po, epsilon, len(po)) for z in range(system.n))


def delta_candidates(system: MetricSystem) -> list[float]:
    return [float(v) for v in system.positive_grid()] + [math.inf]


def largest_true(candidates: Sequence[float], predicate) -> Optional[float]:
    """Binary search for the last candidate where a monotone (true-then-false) predicate holds."""
    lo, hi = 0, len(candidates) - 1
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        if predicate(candidates[mid]):
            best = candidates[mid]
            lo = mid + 1
        else:
            hi = mid - 1
    return best


def shadowable_point(system: MetricSystem, x: int, epsilon: float, horizon: Optional[int] = None) -> Optional[float]:
    """Largest grid delta for which every delta-pseudo-orbit from ``x`` is epsilon-shadowed.

    ``math.inf`` means every gap bound works (e.g. a one-point space).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")

    def ok(delta):
        return decide_shadowing(system, epsilon, delta, horizon, start=x).result

    return largest_true(delta_candidates(system), ok)


def shadowing_constant(system: MetricSystem, epsilon: float, horizon: Optional[int] = None) -> Optional[float]:
    """Largest grid delta for which the global decision holds."""
    return largest_true(
        delta_candidates(system), lambda delta: decide_shadowing(system, epsilon, delta, horizon).result
    )
