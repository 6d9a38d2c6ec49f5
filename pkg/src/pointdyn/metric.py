"""Finite metric spaces, self-maps, orbits and pointwise classifiers.

Every point is an integer index ``0 <= i < n``.  Distances come from a
metric provider; formula providers never materialize an ``n x n`` matrix,
so spaces up to ``2**20`` points remain usable.

All inequalities are strict where the dynamics uses ``<`` (balls,
pseudo-orbit gaps, shadowing) and nothing is fudged by an epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

MATRIX_POINT_CAP = 5000
TRIANGLE_TOL = 1e-12

FINITE_MODEL_CAVEATS = (
    "finite model: every point is isolated",
    "finite model: recurrent <=> periodic, nonwandering <=> periodic",
    "finite model: entropy statements hold at fixed scale only (eps -> 0 limit is 0)",
    "finite model: continuity of the map is vacuous",
)


class GuardExceeded(RuntimeError):
    """Raised when a computation would exceed a documented size guard."""

    def __init__(self, guard: str, message: str):
        super().__init__(f"{guard}: {message}")
        self.guard = guard


class MetricProvider:
    """Distance oracle on ``range(n)``.

    Subclasses implement :meth:`pair`, an elementwise (broadcasting)
    distance between index arrays.
    """

    kind = "abstract"
    n: int

    def pair(self, a, b) -> np.ndarray:
        raise NotImplementedError

    def grid(self) -> np.ndarray:
        """Sorted distinct realized distance values, including 0."""
        raise NotImplementedError

    def diameter(self) -> float:
        return float(self.grid()[-1])

    def min_positive(self) -> float:
        g = self.grid()
        pos = g[g > 0]
        return float(pos[0]) if pos.size else math.inf

    def to_spec(self) -> dict:
        raise NotImplementedError


class ExplicitMatrix(MetricProvider):
    kind = "matrix"

    def __init__(self, matrix):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {m.shape}")
        if m.shape[0] > MATRIX_POINT_CAP:
            raise GuardExceeded(
                "matrix_point_cap",
                f"{m.shape[0]} points exceeds {MATRIX_POINT_CAP}; use a formula provider",
            )
        m.setflags(write=False)
        self.matrix = m
        self.n = m.shape[0]
        self._grid = None

    def pair(self, a, b):
        return self.matrix[np.asarray(a), np.asarray(b)]

    def grid(self):
        if self._grid is None:
            self._grid = np.unique(self.matrix)
        return self._grid

    def to_spec(self):
        return {"kind": "matrix", "data": [[repr(float(v)) for v in row] for row in self.matrix]}


class CircleGrid(MetricProvider):
    """``n`` equally spaced points on the unit circle, arc-length metric."""

    kind = "circle"

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("CircleGrid needs n >= 1")
        self.n = int(n)

    def pair(self, a, b):
        diff = np.abs(np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64))
        return np.minimum(diff, self.n - diff) / self.n

    def grid(self):
        return np.arange(self.n // 2 + 1, dtype=np.int64) / self.n

    def diameter(self):
        return (self.n // 2) / self.n

    def min_positive(self):
        return 1 / self.n if self.n > 1 else math.inf

    def to_spec(self):
        return {"kind": "circle", "n": self.n}


class BinaryWords(MetricProvider):
    """Words of length ``k`` over {0, 1}; index bits read most-significant first.

    ``d(s, t) = sum_i 2**-i |s_i - t_i|`` which equals ``(s XOR t) / 2**k``.
    """

    kind = "binary_words"

    def __init__(self, k: int):
        if not 1 <= k <= 20:
            raise ValueError("BinaryWords needs 1 <= k <= 20")
        self.k = int(k)
        self.n = 1 << self.k

    def pair(self, a, b):
        x = np.bitwise_xor(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
        return x / float(self.n)

    def grid(self):
        return np.arange(self.n, dtype=np.int64) / float(self.n)

    def diameter(self):
        return (self.n - 1) / self.n

    def min_positive(self):
        return 1 / self.n

    def word(self, i: int) -> str:
        return format(i, f"0{self.k}b")

    def to_spec(self):
        return {"kind": "binary_words", "k": self.k}


@dataclass(frozen=True)
class Violation:
    axiom: str
    witness: tuple
    detail: str = ""

    def __str__(self):
        return f"{self.axiom} {self.witness}: {self.detail}".rstrip(": ")


class MetricSystem:
    """A finite metric space together with a self-map given as an index array."""

    def __init__(self, metric: MetricProvider, fmap: Sequence[int], labels=None, name: str = ""):
        fm = np.array(fmap, dtype=np.int64)
        if fm.ndim != 1 or fm.shape[0] != metric.n:
            raise ValueError(f"map must have length {metric.n}, got {fm.shape}")
        bad = np.flatnonzero((fm < 0) | (fm >= metric.n))
        if bad.size:
            i = int(bad[0])
            raise ValueError(f"map[{i}] = {int(fm[i])} is out of range [0, {metric.n})")
        fm.setflags(write=False)
        self.metric = metric
        self.map = fm
        self.n = metric.n
        self.labels = list(labels) if labels is not None else None
        self.name = name
        self._cache: dict = {}

    def __repr__(self):
        return f"MetricSystem(name={self.name!r}, n={self.n}, metric={self.metric.kind})"

    def d(self, i: int, j: int) -> float:
        return float(self.metric.pair(i, j))

    def dist(self, a, b) -> np.ndarray:
        return self.metric.pair(a, b)

    def row(self, i: int) -> np.ndarray:
        return self.metric.pair(i, np.arange(self.n))

    def pairwise(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.int64)
        return self.metric.pair(pts[:, None], pts[None, :])

    def matrix(self) -> np.ndarray:
        """Full distance matrix (cached); refused above the matrix cap."""
        if "matrix" not in self._cache:
            if self.n > MATRIX_POINT_CAP:
                raise GuardExceeded("matrix_point_cap", f"{self.n} points is too many for a dense matrix")
            if isinstance(self.metric, ExplicitMatrix):
                self._cache["matrix"] = self.metric.matrix
            else:
                self._cache["matrix"] = self.pairwise(np.arange(self.n))
        return self._cache["matrix"]

    def grid(self) -> np.ndarray:
        return self.metric.grid()

    def positive_grid(self) -> np.ndarray:
        g = self.grid()
        return g[g > 0]

    def top_radius(self) -> float:
        """A radius strictly beyond the diameter: ``diameter + smallest positive distance``."""
        step = self.metric.min_positive()
        if math.isinf(step):
            return 1.0
        return self.metric.diameter() + step

    def iterate(self, x: int, k: int) -> int:
        for _ in range(k):
            x = int(self.map[x])
        return x

    def orbit(self, x: int, length: int) -> list[int]:
        out = []
        for _ in range(length):
            out.append(x)
            x = int(self.map[x])
        return out

    def with_map(self, fmap, name: str = "") -> "MetricSystem":
        return MetricSystem(self.metric, fmap, self.labels, name or self.name)


# ---------------------------------------------------------------------------
# Operations


def validate(system: MetricSystem) -> list[Violation]:
    """Check the metric axioms and the map range; empty list means valid."""
    out: list[Violation] = []
    fm = system.map
    for i in np.flatnonzero((fm < 0) | (fm >= system.n)):
        out.append(Violation("map_range", (int(i),), f"map[{i}]={int(fm[i])}"))
    if not isinstance(system.metric, ExplicitMatrix):
        return out
    m = system.metric.matrix
    n = m.shape[0]
    if not np.all(np.isfinite(m)):
        i, j = np.argwhere(~np.isfinite(m))[0]
        out.append(Violation("finite", (int(i), int(j)), f"d={m[i, j]}"))
        return out
    neg = np.argwhere(m < 0)
    if neg.size:
        i, j = neg[0]
        out.append(Violation("non_negative", (int(i), int(j)), f"d={m[i, j]!r}"))
    diag = np.flatnonzero(np.diag(m) != 0)
    if diag.size:
        i = int(diag[0])
        out.append(Violation("identity", (i, i), f"d={m[i, i]!r}"))
    asym = np.argwhere(m != m.T)
    if asym.size:
        i, j = asym[0]
        out.append(Violation("symmetry", (int(i), int(j)), f"{m[i, j]!r} != {m[j, i]!r}"))
    off = ~np.eye(n, dtype=bool)
    zero = np.argwhere((m <= 0) & off)
    if zero.size:
        i, j = zero[0]
        out.append(Violation("separation", (int(i), int(j)), "distinct points at distance 0"))
    for k in range(n):
        via = m[:, k][:, None] + m[k, :][None, :]
        bad = np.argwhere(m > via + TRIANGLE_TOL)
        if bad.size:
            i, j = bad[0]
            out.append(
                Violation(
                    "triangle",
                    (int(i), int(j), k),
                    f"d({i},{j})={m[i, j]!r} > d({i},{k})+d({k},{j})={via[i, j]!r}",
                )
            )
            break
    return out


def ball(system: MetricSystem, center: int, r: float) -> np.ndarray:
    """Open ball ``{y : d(y, center) < r}`` as a sorted index array."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    return np.flatnonzero(system.row(center) < r)


def closed_ball(system: MetricSystem, center: int, r: float) -> np.ndarray:
    return np.flatnonzero(system.row(center) <= r)


def ball_radii(system: MetricSystem, x: int) -> list[float]:
    """One radius per distinct open ball at ``x``, ascending.

    Each radius is the smallest value realizing that ball: the distinct
    positive distances from ``x`` followed by :meth:`MetricSystem.top_radius`.
    """
    vals = np.unique(system.row(x))
    radii = [float(v) for v in vals[vals > 0]]
    radii.append(system.top_radius())
    return radii


def continuity_modulus(system: MetricSystem, delta: float) -> float:
    """Largest grid value ``eta`` with ``d(y,z) < eta  =>  d(f y, f z) < delta``.

    Returns ``math.inf`` when no pair violates the implication.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    m = system.matrix()
    fm = system.map
    mf = m[np.ix_(fm, fm)]
    bad = m[mf >= delta]
    return float(bad.min()) if bad.size else math.inf


@dataclass(frozen=True)
class OrbitStructure:
    preperiod: int
    cycle: tuple
    visited: tuple

    @property
    def period(self) -> int:
        return len(self.cycle)


def orbit_structure(system: MetricSystem, x: int) -> OrbitStructure:
    seen: dict[int, int] = {}
    visited = []
    y = int(x)
    while y not in seen:
        seen[y] = len(visited)
        visited.append(y)
        y = int(system.map[y])
    pre = seen[y]
    return OrbitStructure(pre, tuple(visited[pre:]), tuple(visited))


def dyn_sep(system: MetricSystem, y: int, z: int) -> float:
    """``sup_i d(f^i y, f^i z)`` over the joint orbit until it closes."""
    seen = set()
    best = 0.0
    a, b = int(y), int(z)
    while (a, b) not in seen:
        seen.add((a, b))
        best = max(best, system.d(a, b))
        a, b = int(system.map[a]), int(system.map[b])
    return best


def dyn_sep_table(system: MetricSystem) -> np.ndarray:
    """All-pairs ``dyn_sep`` by monotone fixed-point iteration (cached)."""
    if "dyn_sep" not in system._cache:
        d = system.matrix()
        fm = system.map
        s = d.copy()
        while True:
            nxt = np.maximum(d, s[np.ix_(fm, fm)])
            if np.array_equal(nxt, s):
                break
            s = nxt
        s.setflags(write=False)
        system._cache["dyn_sep"] = s
    return system._cache["dyn_sep"]


def dyn_sep_subset(system: MetricSystem, pts, horizon: Optional[int] = None) -> np.ndarray:
    """Pairwise ``dyn_sep`` restricted to ``pts`` using direct orbit evaluation.

    Works on formula spaces without a dense matrix.  ``horizon`` defaults to
    the length after which every joint orbit of the subset has closed.
    """
    pts = np.asarray(pts, dtype=np.int64)
    if horizon is None:
        pre, lcm = 0, 1
        for p in pts:
            o = orbit_structure(system, int(p))
            pre = max(pre, o.preperiod)
            lcm = math.lcm(lcm, o.period)
        horizon = pre + lcm
    cur = pts.copy()
    out = np.zeros((pts.size, pts.size))
    for _ in range(horizon):
        np.maximum(out, system.pairwise(cur), out=out)
        cur = system.map[cur]
    return out


def _first_return(system: MetricSystem, members: np.ndarray) -> Optional[int]:
    """Smallest ``k >= 1`` with ``f^k(B) & B`` non-empty, iterating the set until it cycles."""
    target = np.zeros(system.n, dtype=bool)
    target[members] = True
    cur = np.unique(members)
    seen = set()
    k = 0
    while True:
        cur = np.unique(system.map[cur])
        k += 1
        if target[cur].any():
            return k
        key = cur.tobytes()
        if key in seen:
            return None
        seen.add(key)


@dataclass
class PointClass:
    point: int
    periodic: bool
    recurrent: bool
    nonwandering: bool
    witnesses: dict = field(default_factory=dict)
    notes: tuple = ()


def classify_point(system: MetricSystem, x: int) -> PointClass:
    """Periodic / recurrent / nonwandering flags for ``x``.

    ``witnesses`` maps each distinct ball radius to the first return time of
    the ball (``None`` when the ball never returns).
    """
    orb = orbit_structure(system, x)
    periodic = orb.preperiod == 0
    witnesses = {}
    for r in ball_radii(system, x):
        witnesses[r] = _first_return(system, ball(system, x, r))
    nonwandering = all(v is not None for v in witnesses.values())
    return PointClass(
        point=int(x),
        periodic=periodic,
        recurrent=periodic,
        nonwandering=nonwandering,
        witnesses=witnesses,
        notes=("recurrent <=> periodic on finite spaces",),
    )


def periodic_points(system: MetricSystem) -> np.ndarray:
    """Boolean mask of points lying on a cycle of the map."""
    if "periodic" not in system._cache:
        n = system.n
        state = np.zeros(n, dtype=np.int8)  # 0 new, 1 on stack, 2 done
        mask = np.zeros(n, dtype=bool)
        fm = system.map
        for s in range(n):
            if state[s]:
                continue
            path = []
            y = s
            while state[y] == 0:
                state[y] = 1
                path.append(y)
                y = int(fm[y])
            if state[y] == 1:
                mask[path[path.index(y):]] = True
            state[path] = 2
        system._cache["periodic"] = mask
    return system._cache["periodic"]


def nonwandering_points(system: MetricSystem) -> np.ndarray:
    """Nonwandering mask; on a finite space the singleton ball decides, so this is the periodic mask."""
    return periodic_points(system)


def is_nonwandering_map(system: MetricSystem) -> bool:
    return bool(nonwandering_points(system).all())
