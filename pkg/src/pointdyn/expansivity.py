"""Pointwise positive expansivity: Reddy points, uniform points, n-expansive points."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .metric import MetricSystem, ball, ball_radii, dyn_sep_table

COUNTABLE_CAVEAT = (
    "countable-expansivity is trivially true on finite spaces and undecided in general; not used in any verdict"
)


@dataclass
class ExpansivityVerdict:
    point: int
    reddy_constant: float
    uniform: Optional[tuple]
    n_expansive: dict = field(default_factory=dict)
    countable_expansive: bool = True
    notes: tuple = (COUNTABLE_CAVEAT, "uniform notions require balls with at least 2 points")

    def to_dict(self) -> dict:
        def pair(v):
            return None if v is None else {"radius": repr(float(v[0])), "e": repr(float(v[1]))}

        return {
            "point": self.point,
            "reddy_constant": repr(float(self.reddy_constant)),
            "positively_expansive_point": self.reddy_constant > 0,
            "uniform": pair(self.uniform),
            "n_expansive": {str(k): pair(v) for k, v in self.n_expansive.items()},
            "countable_expansive": self.countable_expansive,
            "notes": list(self.notes),
        }


def reddy_constant(system: MetricSystem, x: int) -> float:
    """``min_{y != x} dyn_sep(x, y)``; x is a positively expansive point iff this is positive."""
    if system.n == 1:
        return math.inf
    row = dyn_sep_table(system)[x].copy()
    row[x] = math.inf
    return float(row.min())


def _ball_min_sep(table: np.ndarray, pts: np.ndarray) -> float:
    sub = table[np.ix_(pts, pts)].copy()
    np.fill_diagonal(sub, math.inf)
    return float(sub.min())


def uniform_expansive_point(system: MetricSystem, x: int) -> Optional[tuple[float, float]]:
    """Best ``(r, e)``: ``e`` is the least dyn_sep among distinct pairs of ``ball(x, r)``.

    Radii whose ball is a singleton are skipped.  Larger ``e`` wins, then larger ``r``.
    """
    table = dyn_sep_table(system)
    best = None
    for r in ball_radii(system, x):
        pts = ball(system, x, r)
        if pts.size < 2:
            continue
        e = _ball_min_sep(table, pts)
        if e > 0 and (best is None or (e, r) >= (best[1], best[0])):
            best = (r, e)
    return best


def n_expansive_point(system: MetricSystem, x: int, n: int) -> Optional[tuple[float, float]]:
    """Best ``(r, e)`` such that every dynamical e-ball inside ``ball(x, r)`` has at most ``n`` points.

    When the ball itself has at most ``n`` points the bound is vacuous and
    ``e`` is reported as the top radius sentinel.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    table = dyn_sep_table(system)
    best = None
    for r in ball_radii(system, x):
        pts = ball(system, x, r)
        if pts.size < 2:
            continue
        if pts.size <= n:
            e = system.top_radius()
        else:
            sub = np.sort(table[np.ix_(pts, pts)], axis=1)
            # the (n+1)-th smallest value (self included at 0) caps e for each row
            e = float(sub[:, n].min())
        if e > 0 and (best is None or (e, r) >= (best[1], best[0])):
            best = (r, e)
    return best


def global_expansivity(system: MetricSystem) -> Optional[float]:
    """Least dyn_sep over all distinct pairs, or None if some pair never separates."""
    if system.n == 1:
        return math.inf
    t = dyn_sep_table(system).copy()
    np.fill_diagonal(t, math.inf)
    e = float(t.min())
    return e if e > 0 else None


def lebesgue_number(system: MetricSystem, cover: list[np.ndarray]) -> float:
    """Largest grid radius ``lam`` such that every open ball of radius ``lam`` lies in one cover member."""
    masks = []
    for members in cover:
        m = np.zeros(system.n, dtype=bool)
        m[members] = True
        masks.append(m)
    lam = math.inf
    for y in range(system.n):
        row = system.row(y)
        best_y = 0.0
        for m in masks:
            if not m[y]:
                continue
            outside = row[~m]
            # ball(y, rho) stays inside for every rho up to the nearest outside point
            best_y = max(best_y, float(outside.min()) if outside.size else math.inf)
        lam = min(lam, best_y)
    return lam


@dataclass
class CoveringCheck:
    constant: float
    lebesgue: float
    cover_centers: list
    global_constant: Optional[float]

    @property
    def ok(self) -> bool:
        return self.constant > 0 and (self.global_constant is None or self.constant <= self.global_constant)


def covering_constant(system: MetricSystem) -> Optional[CoveringCheck]:
    """Rebuild an expansivity constant from per-point uniform constants over a finite subcover.

    Returns None when some point has no uniform constant.
    """
    per_point = {}
    for x in range(system.n):
        u = uniform_expansive_point(system, x)
        if u is None:
            return None
        per_point[x] = u
    covered = np.zeros(system.n, dtype=bool)
    centers = []
    cover = []
    # greedy subcover: biggest balls first, ties by index
    order = sorted(range(system.n), key=lambda x: (-ball(system, x, per_point[x][0]).size, x))
    for x in order:
        members = ball(system, x, per_point[x][0])
        if covered[members].all():
            continue
        covered[members] = True
        centers.append(x)
        cover.append(members)
        if covered.all():
            break
    lam = lebesgue_number(system, cover)
    const = min([per_point[x][1] for x in centers] + [lam])
    return CoveringCheck(const, lam, centers, global_expansivity(system))


def classify_expansivity(system: MetricSystem, x: int, ns=(1, 2)) -> ExpansivityVerdict:
    return ExpansivityVerdict(
        point=int(x),
        reddy_constant=reddy_constant(system, x),
        uniform=uniform_expansive_point(system, x),
        n_expansive={n: n_expansive_point(system, x, n) for n in ns},
    )
