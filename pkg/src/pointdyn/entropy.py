"""(n, eps)-separated sets, separated-set growth and entropy-point scans.

Separation uses ``>=`` while balls and shadowing use ``<``; the mixed
convention is deliberate.  Maximal separated sets are maximum cliques of
the "is separated" graph, solved exactly by branch and bound on small
vertex sets and greedily otherwise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .metric import GuardExceeded, MetricSystem, closed_ball

EXACT_VERTEX_CAP = 512


@dataclass(frozen=True)
class SeparatedSet:
    points: tuple
    n: int
    epsilon: float
    exact: bool

    def __len__(self):
        return len(self.points)


def orbit_matrix(system: MetricSystem, pts, n: int) -> np.ndarray:
    """Rows ``f^i(pts)`` for ``i = 0..n``."""
    pts = np.asarray(pts, dtype=np.int64)
    out = np.empty((n + 1, pts.size), dtype=np.int64)
    cur = pts
    for i in range(n + 1):
        out[i] = cur
        cur = system.map[cur]
    return out


def separation_matrix(system: MetricSystem, pts, n: int, epsilon: float) -> np.ndarray:
    """``sep[a, b]`` is True when some ``0 <= i <= n`` has ``d(f^i a, f^i b) >= epsilon``."""
    orb = orbit_matrix(system, pts, n)
    sep = np.zeros((orb.shape[1], orb.shape[1]), dtype=bool)
    for row in orb:
        sep |= system.pairwise(row) >= epsilon
    return sep


def is_separated(system: MetricSystem, points: Iterable[int], n: int, epsilon: float) -> bool:
    pts = np.array(sorted(set(int(p) for p in points)), dtype=np.int64)
    if pts.size < 2:
        return True
    sep = separation_matrix(system, pts, n, epsilon)
    np.fill_diagonal(sep, True)
    return bool(sep.all())


# ---------------------------------------------------------------------------
# cliques on bitset adjacency


def _bits_from_matrix(adj: np.ndarray) -> list[int]:
    out = []
    for row in adj:
        out.append(int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little"))
    return out


def greedy_clique(adj: np.ndarray) -> list[int]:
    """Maximal clique built highest-degree first."""
    deg = adj.sum(axis=1)
    order = sorted(range(adj.shape[0]), key=lambda v: (-int(deg[v]), v))
    clique: list[int] = []
    for v in order:
        if all(adj[v, u] for u in clique):
            clique.append(v)
    return sorted(clique)


def _degeneracy_order(adj: np.ndarray) -> list[int]:
    deg = adj.sum(axis=1).astype(np.int64)
    alive = np.ones(adj.shape[0], dtype=bool)
    removed = []
    for _ in range(adj.shape[0]):
        cand = np.where(alive, deg, np.iinfo(np.int64).max)
        v = int(np.argmin(cand))
        removed.append(v)
        alive[v] = False
        deg -= adj[v].astype(np.int64)
    return removed[::-1]


def max_clique(adj: np.ndarray) -> list[int]:
    """Maximum clique by coloring-bound branch and bound (greedy seed, degeneracy order)."""
    nv = adj.shape[0]
    if nv == 0:
        return []
    adj = np.asarray(adj, dtype=bool).copy()
    np.fill_diagonal(adj, False)
    order = _degeneracy_order(adj)
    relabeled = adj[np.ix_(order, order)]
    nbrs = _bits_from_matrix(relabeled)
    seed = greedy_clique(relabeled)
    best = list(seed)

    def color_sort(p: int):
        verts, colors = [], []
        uncolored = p
        color = 0
        while uncolored:
            color += 1
            q = uncolored
            while q:
                low = q & -q
                v = low.bit_length() - 1
                q &= ~nbrs[v] & ~low
                uncolored &= ~low
                verts.append(v)
                colors.append(color)
        return verts, colors

    def expand(r: list[int], p: int):
        nonlocal best
        verts, colors = color_sort(p)
        for i in range(len(verts) - 1, -1, -1):
            if len(r) + colors[i] <= len(best):
                return
            v = verts[i]
            np_ = p & nbrs[v]
            if np_:
                expand(r + [v], np_)
            elif len(r) + 1 > len(best):
                best = r + [v]
            p &= ~(1 << v)

    expand([], (1 << nv) - 1)
    return sorted(order[v] for v in best)


def max_separated(
    system: MetricSystem, V: Optional[Sequence[int]], n: int, epsilon: float, mode: str = "exact"
) -> SeparatedSet:
    """Largest (exact) or maximal (greedy) ``(n, epsilon)``-separated subset of ``V``."""
    pts = np.arange(system.n) if V is None else np.array(sorted(set(int(v) for v in V)), dtype=np.int64)
    if mode not in ("exact", "greedy"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and pts.size > EXACT_VERTEX_CAP:
        raise GuardExceeded("exact_clique_cap", f"|V|={pts.size} exceeds {EXACT_VERTEX_CAP}; use greedy mode")
    sep = separation_matrix(system, pts, n, epsilon)
    return _clique_set(sep, pts, n, epsilon, mode)


def _clique_set(sep, pts, n, epsilon, mode) -> SeparatedSet:
    adj = sep.copy()
    np.fill_diagonal(adj, False)
    chosen = max_clique(adj) if mode == "exact" else greedy_clique(adj)
    return SeparatedSet(tuple(int(pts[i]) for i in chosen), n, epsilon, mode == "exact")


@dataclass
class GrowthReport:
    epsilon: float
    counts: dict  # n -> (count, exact)
    scope: Optional[tuple] = None
    witnesses: dict = field(default_factory=dict, repr=False)

    @property
    def ns(self) -> list[int]:
        return sorted(self.counts)

    @property
    def rates(self) -> dict:
        """``log(count_n) / n`` for ``n >= 1``."""
        return {n: math.log(self.counts[n][0]) / n for n in self.ns if n >= 1}

    @property
    def running_max(self) -> dict:
        out, cur = {}, -math.inf
        for n, r in self.rates.items():
            cur = max(cur, r)
            out[n] = cur
        return out

    @property
    def increments(self) -> dict:
        """Per-step growth exponents ``log(count_n / count_{n-1})``."""
        ns = self.ns
        return {
            n: math.log(self.counts[n][0] / self.counts[p][0]) for p, n in zip(ns, ns[1:]) if n == p + 1
        }

    @property
    def window_estimate(self) -> float:
        """Exponential growth rate over the window: the largest per-step exponent.

        Unlike ``log(count)/n`` this is free of the constant prefactor of the
        counts, so a shift of entropy ``log 2`` reads exactly ``log 2``.
        """
        inc = self.increments
        return max(inc.values()) if inc else 0.0

    def csv_rows(self) -> list[tuple]:
        rates = self.rates
        return [
            (n, self.counts[n][0], self.counts[n][1], repr(rates[n]) if n in rates else "") for n in self.ns
        ]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("n", "count", "exact", "rate"))
            w.writerows(self.csv_rows())

    def to_dict(self) -> dict:
        return {
            "epsilon": repr(float(self.epsilon)),
            "counts": [{"n": n, "count": c, "exact": e} for n, (c, e) in sorted(self.counts.items())],
            "rates": {str(n): repr(r) for n, r in self.rates.items()},
            "running_max": {str(n): repr(r) for n, r in self.running_max.items()},
            "increments": {str(n): repr(r) for n, r in self.increments.items()},
            "window_estimate": repr(self.window_estimate),
            "scope_size": None if self.scope is None else len(self.scope),
            "caveat": "fixed-scale estimate on a finite model",
        }


def growth_report(
    system: MetricSystem, V: Optional[Sequence[int]], epsilon: float, n_max: int, mode: Optional[str] = None
) -> GrowthReport:
    """Separated-set counts for ``n = 0..n_max``.

    ``mode=None`` picks exact when affordable.  Counts are kept monotone: a
    set separated at ``n - 1`` stays separated at ``n``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    pts = np.arange(system.n) if V is None else np.array(sorted(set(int(v) for v in V)), dtype=np.int64)
    if mode is None:
        mode = "exact" if pts.size <= EXACT_VERTEX_CAP else "greedy"
    if mode == "exact" and pts.size > EXACT_VERTEX_CAP:
        raise GuardExceeded("exact_clique_cap", f"|V|={pts.size} exceeds {EXACT_VERTEX_CAP}")
    orb = orbit_matrix(system, pts, n_max)
    sep = np.zeros((pts.size, pts.size), dtype=bool)
    counts, witnesses = {}, {}
    prev: Optional[SeparatedSet] = None
    for n in range(n_max + 1):
        sep |= system.pairwise(orb[n]) >= epsilon
        cur = _clique_set(sep, pts, n, epsilon, mode)
        if prev is not None and len(prev) > len(cur):
            cur = SeparatedSet(prev.points, n, epsilon, False)
        counts[n] = (len(cur), cur.exact)
        witnesses[n] = cur
        prev = cur
    return GrowthReport(epsilon, counts, None if V is None else tuple(int(p) for p in pts), witnesses)


@dataclass
class EntropyPointScan:
    point: int
    table: dict  # (r, eps) -> window estimate
    candidate: dict  # eps -> bool
    note: str = "approximate: finite model, fixed scales"

    def to_dict(self) -> dict:
        return {
            "point": self.point,
            "table": [
                {"radius": repr(r), "epsilon": repr(e), "window_estimate": repr(v)}
                for (r, e), v in sorted(self.table.items())
            ],
            "candidate": {repr(e): c for e, c in self.candidate.items()},
            "note": self.note,
        }


def entropy_point_scan(
    system: MetricSystem,
    x: int,
    epsilon_grid: Sequence[float],
    radius_grid: Sequence[float],
    n_max: int,
    mode: Optional[str] = None,
) -> EntropyPointScan:
    """Growth estimates on closed balls around ``x``; candidate when every radius grows."""
    table = {}
    candidate = {}
    for eps in epsilon_grid:
        flags = []
        for r in radius_grid:
            V = closed_ball(system, x, r)
            rep = growth_report(system, V, eps, n_max, mode)
            table[(float(r), float(eps))] = rep.window_estimate
            flags.append(rep.window_estimate > 0)
        candidate[float(eps)] = bool(flags) and all(flags)
    return EntropyPointScan(int(x), table, candidate)
