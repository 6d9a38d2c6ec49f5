"""Families of maps converging to a limit: uniform shadowing and its consequences.

A finite list ``f_1, ..., f_K`` stands for a sequence whose tail is the last
member repeated, so it converges uniformly exactly when the distances to the
limit never increase and the last one is 0.  The compactness step of the
limit-shadow construction (a convergent subsequence of member shadows)
becomes a pigeonhole choice: the tail member's shadow recurs forever.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .metric import MetricSystem, is_nonwandering_map, nonwandering_points
from .shadowing import (
    PseudoOrbit,
    decide_shadowing,
    delta_candidates,
    gap_profile,
    largest_true,
    tracking_candidates,
)


@dataclass
class MapFamily:
    limit: MetricSystem
    members: list  # MetricSystem per member, same metric as ``limit``
    name: str = ""

    def __post_init__(self):
        for m in self.members:
            if m.n != self.limit.n:
                raise ValueError("all family members must act on the same point set")

    def __len__(self):
        return len(self.members)

    @property
    def distances(self) -> list[float]:
        return [uniform_distance(self.limit, m.map, self.limit.map) for m in self.members]

    def convergence_problems(self) -> list[str]:
        d = self.distances
        out = []
        for i in range(1, len(d)):
            if d[i] > d[i - 1]:
                out.append(f"distance increases at member {i}: {d[i - 1]!r} -> {d[i]!r}")
        if not d or d[-1] != 0:
            out.append("tail member differs from the limit")
        return out

    @property
    def converges(self) -> bool:
        return not self.convergence_problems()


class FamilyError(ValueError):
    def __init__(self, stage: str, message: str, member: Optional[int] = None):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.member = member


def uniform_distance(space: MetricSystem, g, h) -> float:
    """``max_x d(g(x), h(x))``."""
    g = np.asarray(g, dtype=np.int64)
    h = np.asarray(h, dtype=np.int64)
    return float(space.dist(g, h).max())


def family_shadowing_constant(
    family: MapFamily, epsilon: float, horizon: Optional[int] = None
) -> Optional[float]:
    """Largest grid delta that works for every member at ``(epsilon, horizon)``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")

    def ok(delta):
        return all(decide_shadowing(m, epsilon, delta, horizon).result for m in family.members)

    return largest_true(delta_candidates(family.limit), ok)


@dataclass
class LiftAudit:
    member: int
    bound: float
    steps: list  # (d(f_n x_i, f x_i), d(f x_i, x_{i+1}), sum)

    @property
    def max_gap(self) -> float:
        return max((s[2] for s in self.steps), default=0.0)


def lift_pseudo_orbit(family: MapFamily, po: PseudoOrbit) -> LiftAudit:
    """First member close enough to the limit that ``po`` is a ``2 * po.delta`` pseudo-orbit for it.

    ``po`` is a pseudo-orbit of the limit with gap bound ``delta / 2``; the
    audit records both triangle-inequality addends per step.
    """
    problems = family.convergence_problems()
    if problems:
        raise FamilyError("convergence", "; ".join(problems))
    half = po.delta
    _, gaps = gap_profile(family.limit, po.points)
    if any(not g < half for g in gaps):
        raise FamilyError("lift", "sequence is not a pseudo-orbit of the limit at the stated bound")
    for idx, (m, dist) in enumerate(zip(family.members, family.distances)):
        if dist < half:
            steps = []
            pts = np.asarray(po.points, dtype=np.int64)
            near = family.limit.dist(m.map[pts[:-1]], family.limit.map[pts[:-1]])
            for a, b in zip(near.tolist(), gaps):
                steps.append((a, b, a + b))
            return LiftAudit(idx, 2 * half, steps)
    raise FamilyError("lift", "no member is within delta/2 of the limit")


@dataclass
class LimitShadow:
    point: int
    member: int
    member_shadows: dict
    audit: list  # per step (d(f^i y, f^i y_n), d(f^i y_n, f_n^i y_n), d(f_n^i y_n, x_i), d(f^i y, x_i))
    epsilon: float

    @property
    def ok(self) -> bool:
        third = self.epsilon / 3
        return all(
            a <= third and b <= third and c <= third and total <= self.epsilon and total <= a + b + c
            for a, b, c, total in self.audit
        )


def limit_shadow(family: MapFamily, po: PseudoOrbit, epsilon: float) -> LimitShadow:
    """Build an epsilon-shadow for the limit from epsilon/3-shadows of the lifted members."""
    lift = lift_pseudo_orbit(family, po)
    third = epsilon / 3
    target = PseudoOrbit(po.points, lift.bound)
    shadows = {}
    for idx in range(lift.member, len(family)):
        cands = tracking_candidates(family.members[idx], target, third)
        if cands.size == 0:
            raise FamilyError("member_shadow", f"member {idx} has no epsilon/3 shadow", idx)
        shadows[idx] = int(cands[0])
    tail = len(family) - 1
    y = shadows[tail]
    member = family.members[tail]
    lim = family.limit
    audit = []
    a_pos = b_pos = c_pos = y
    for x in po.points:
        # a_pos = f^i(y), b_pos = f^i(y_n), c_pos = f_n^i(y_n)
        a = lim.d(a_pos, b_pos)
        b = lim.d(b_pos, c_pos)
        c = lim.d(c_pos, x)
        audit.append((a, b, c, lim.d(a_pos, x)))
        a_pos, b_pos, c_pos = int(lim.map[a_pos]), int(lim.map[b_pos]), int(member.map[c_pos])
    return LimitShadow(y, tail, shadows, audit, epsilon)


def _pseudo_graph_matrix(system: MetricSystem, epsilon: float) -> csr_matrix:
    if epsilon <= system.metric.min_positive():
        # only exact steps qualify: the graph of the map itself
        r, c = np.arange(system.n), system.map
        return csr_matrix((np.ones(system.n, dtype=np.int8), (r, c)), shape=(system.n, system.n))
    rows, cols = [], []
    for v in range(system.n):
        nb = np.flatnonzero(system.row(int(system.map[v])) < epsilon)
        rows.append(np.full(nb.size, v))
        cols.append(nb)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    return csr_matrix((np.ones(r.size, dtype=np.int8), (r, c)), shape=(system.n, system.n))


@dataclass
class ChainRecurrence:
    epsilon: float
    points: frozenset
    is_chain_recurrent_map: bool
    components: int


def chain_recurrence(system: MetricSystem, epsilon: float) -> ChainRecurrence:
    """Points on a cycle of the epsilon-pseudo-graph (strongly connected component analysis)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    g = _pseudo_graph_matrix(system, epsilon)
    ncomp, labels = connected_components(g, directed=True, connection="strong")
    sizes = np.bincount(labels, minlength=ncomp)
    selfloop = np.asarray(g.diagonal() > 0)
    on_cycle = (sizes[labels] > 1) | selfloop
    pts = frozenset(int(i) for i in np.flatnonzero(on_cycle))
    return ChainRecurrence(epsilon, pts, len(pts) == system.n, int(ncomp))


def is_chain_transitive(system: MetricSystem, epsilon: float) -> bool:
    g = _pseudo_graph_matrix(system, epsilon)
    ncomp, _ = connected_components(g, directed=True, connection="strong")
    return ncomp == 1


def is_chain_recurrent_map(system: MetricSystem) -> bool:
    """Chain recurrent at every scale; the smallest positive distance is the decisive one."""
    eps = system.metric.min_positive()
    if not np.isfinite(eps):
        return True
    return chain_recurrence(system, eps).is_chain_recurrent_map


@dataclass
class NonwanderingVerdict:
    result: bool
    failed_step: Optional[str]
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"result": self.result, "failed_step": self.failed_step, "evidence": self.evidence}


def check_limit_nonwandering(
    family: MapFamily, epsilon_grid: Sequence[float], horizon: Optional[int] = None
) -> NonwanderingVerdict:
    """Premises, chain recurrence and shadowing of the limit, then a direct nonwandering scan."""
    evidence: dict = {}
    bad_members = [i for i, m in enumerate(family.members) if not is_nonwandering_map(m)]
    evidence["members_nonwandering"] = not bad_members
    if bad_members:
        return NonwanderingVerdict(False, f"member {bad_members[0]} is not nonwandering", evidence)
    problems = family.convergence_problems()
    if problems:
        return NonwanderingVerdict(False, "convergence: " + "; ".join(problems), evidence)
    per_eps = {}
    for eps in epsilon_grid:
        delta = family_shadowing_constant(family, eps / 3, horizon)
        if delta is None:
            return NonwanderingVerdict(False, f"no uniform shadowing constant at eps={eps!r}", evidence)
        cr = chain_recurrence(family.limit, eps)
        dec = decide_shadowing(family.limit, eps, delta / 2, horizon)
        per_eps[repr(float(eps))] = {
            "uniform_delta": repr(float(delta)),
            "limit_chain_recurrent": cr.is_chain_recurrent_map,
            "limit_shadowing_at_half_delta": dec.result,
        }
        evidence["per_epsilon"] = per_eps
        if not cr.is_chain_recurrent_map:
            return NonwanderingVerdict(False, f"limit not chain recurrent at eps={eps!r}", evidence)
        if not dec.result:
            return NonwanderingVerdict(False, f"limit shadowing fails at eps={eps!r}", evidence)
    nw = nonwandering_points(family.limit)
    evidence["limit_nonwandering_points"] = int(nw.sum())
    evidence["point_count"] = family.limit.n
    if not nw.all():
        return NonwanderingVerdict(False, f"limit point {int(np.flatnonzero(~nw)[0])} is wandering", evidence)
    return NonwanderingVerdict(True, None, evidence)


def sample_pseudo_orbits(
    system: MetricSystem, delta: float, length: int, count: int, seed: int
) -> list[PseudoOrbit]:
    """Seeded random walks in the delta-pseudo-graph."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        x = int(rng.integers(system.n))
        pts = [x]
        for _ in range(length - 1):
            nb = np.flatnonzero(system.row(int(system.map[x])) < delta)
            x = int(nb[rng.integers(nb.size)])
            pts.append(x)
        out.append(PseudoOrbit(tuple(pts), delta))
    return out
