"""Full-shift factors from a separated pair of periodic pseudo-orbits.

Two period-``m`` delta-pseudo-orbit blocks through an anchor ``z`` are
chained by a binary word into ``gamma(word)``; when every such chain is
b-shadowed and the blocks are e-separated with ``e > 2b``, the shadows of
distinct words are distinct and ``(e - 2b)``-separated, which gives a
separated set of size ``2**N`` over ``N*m`` steps and the entropy bound
``log 2 / m``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .entropy import is_separated
from .metric import (
    GuardExceeded,
    MetricSystem,
    ball,
    ball_radii,
    dyn_sep_subset,
    orbit_structure,
)
from .shadowing import (
    DECISION_POINT_CAP,
    PseudoOrbit,
    decide_shadowing,
    tracking_candidates,
)

SYMBOLS = "AB"
GENERAL_SEARCH_POINT_CAP = 4096
MAX_BLOCKS = 20000
EXPANSIVITY_BALL_CAP = 4096
INJECTIVITY_SCAN_CAP = 1 << 21


class CertificationFailed(Exception):
    """A certification stage could not be completed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.message = message


@dataclass(frozen=True)
class CodingWord:
    symbols: tuple

    @classmethod
    def parse(cls, text: str) -> "CodingWord":
        return cls(tuple(SYMBOLS.index(c) for c in text))

    def shift(self) -> "CodingWord":
        return CodingWord(self.symbols[1:])

    def __len__(self):
        return len(self.symbols)

    def __str__(self):
        return "".join(SYMBOLS[s] for s in self.symbols)


def all_words(depth: int) -> list[CodingWord]:
    return [CodingWord(s) for s in itertools.product((0, 1), repeat=depth)]


@dataclass(frozen=True)
class PeriodicPseudoOrbitPair:
    anchor: int
    period: int
    block0: tuple
    block1: tuple
    delta: float
    separation_index: int
    e_attained: float

    def block(self, symbol: int) -> tuple:
        return self.block1 if symbol else self.block0

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor,
            "period": self.period,
            "block0": list(self.block0),
            "block1": list(self.block1),
            "delta": repr(float(self.delta)),
            "separation_index": self.separation_index,
            "e_attained": repr(float(self.e_attained)),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PeriodicPseudoOrbitPair":
        return cls(
            int(d["anchor"]),
            int(d["period"]),
            tuple(int(v) for v in d["block0"]),
            tuple(int(v) for v in d["block1"]),
            float(d["delta"]),
            int(d["separation_index"]),
            float(d["e_attained"]),
        )


def gamma(pair: PeriodicPseudoOrbitPair, word) -> PseudoOrbit:
    """Concatenate the blocks selected by ``word`` (a CodingWord or an "AB" string)."""
    if isinstance(word, str):
        word = CodingWord.parse(word)
    if len(word) == 0:
        raise ValueError("word must be non-empty")
    pts: list[int] = []
    for s in word.symbols:
        pts.extend(pair.block(s))
    return PseudoOrbit(tuple(pts), pair.delta)


# ---------------------------------------------------------------------------
# pair search


def _one_jump_blocks(system: MetricSystem, z: int, delta: float, m_max: int) -> set:
    """Blocks ``(z, y, f y, ..., f^{k-2} y)`` with one jump out of ``z`` and one jump back."""
    fz = int(system.map[z])
    out = set()
    if system.d(fz, z) < delta:
        out.add((z,))
    ys = np.flatnonzero(system.row(fz) < delta)
    cur = ys.copy()
    for k in range(2, m_max + 1):
        closes = system.dist(system.map[cur], z) < delta
        for y in ys[closes]:
            out.add((z,) + tuple(system.orbit(int(y), k - 1)))
        cur = system.map[cur]
    return out


def _dfs_blocks(system: MetricSystem, z: int, delta: float, m_max: int, cap: int) -> tuple[set, bool]:
    """All closed delta-walks through ``z`` of length <= m_max (capped)."""
    n = system.n
    fm = system.map
    adj = [np.flatnonzero(system.row(int(fm[v])) < delta).tolist() for v in range(n)]
    # back[v] = fewest further vertices needed before the walk can close at z
    closes = system.dist(fm, z) < delta
    back = np.full(n, np.iinfo(np.int64).max)
    back[closes] = 0
    radj = [[] for _ in range(n)]
    for v in range(n):
        for y in adj[v]:
            radj[y].append(v)
    frontier = list(np.flatnonzero(closes))
    dist = 0
    while frontier:
        dist += 1
        nxt = []
        for y in frontier:
            for v in radj[y]:
                if back[v] > dist:
                    back[v] = dist
                    nxt.append(v)
        frontier = nxt
    out = set()
    truncated = False
    stack = [(z,)]
    while stack:
        path = stack.pop()
        last = path[-1]
        if back[last] == 0:
            out.add(path)
            if len(out) >= cap:
                truncated = True
                break
        if len(path) >= m_max:
            continue
        room = m_max - len(path)
        for y in reversed(adj[last]):
            if back[y] < room:
                stack.append(path + (y,))
    return out, truncated


def enumerate_blocks(system: MetricSystem, z: int, delta: float, m_max: int) -> list[tuple]:
    """Closed delta-pseudo-orbit blocks through ``z`` (each starts at ``z``), sorted."""
    blocks = _one_jump_blocks(system, z, delta, m_max)
    if system.n <= GENERAL_SEARCH_POINT_CAP:
        more, _ = _dfs_blocks(system, z, delta, m_max, MAX_BLOCKS)
        blocks |= more
    return sorted(blocks)


def _choose_pair(system: MetricSystem, tiles: list[tuple], e_min: float):
    """Best ``(e, i, j)`` over tiled blocks, or None: largest separation, then lexicographic."""
    T = np.array(tiles, dtype=np.int64)
    best_e = -math.inf
    ties: list[tuple] = []
    for col in range(T.shape[1]):
        vals, inv = np.unique(T[:, col], return_inverse=True)
        if vals.size < 2:
            continue
        D = system.pairwise(vals)
        mx = float(D.max())
        if mx < best_e:
            continue
        if mx > best_e:
            best_e, ties = mx, []
        first = np.full(vals.size, T.shape[0])
        np.minimum.at(first, inv.ravel(), np.arange(T.shape[0]))
        for u1, u2 in np.argwhere(D == mx):
            if u1 < u2:
                a, b = int(first[u1]), int(first[u2])
                ties.append((min(a, b), max(a, b)))
    if not best_e > e_min:
        return None
    i, j = min(ties)
    return best_e, i, j


def find_periodic_pair(
    system: MetricSystem, z: int, delta: float, e_min: float, m_max: int = 16
) -> Optional[PeriodicPseudoOrbitPair]:
    """Smallest common period ``m`` admitting two blocks through ``z`` separated by more than ``e_min``.

    Ties: larger attained separation, then lexicographically smaller blocks.
    """
    if delta <= 0 or e_min <= 0:
        raise ValueError("delta and e_min must be positive")
    blocks = enumerate_blocks(system, z, delta, m_max)
    for m in range(1, m_max + 1):
        tiles = sorted({b * (m // len(b)) for b in blocks if m % len(b) == 0})
        if len(tiles) < 2:
            continue
        found = _choose_pair(system, tiles, e_min)
        if found is None:
            continue
        e_star, i, j = found
        b0, b1 = tiles[i], tiles[j]
        seps = system.dist(np.array(b0), np.array(b1))
        l = int(np.flatnonzero(seps == e_star)[0])
        return PeriodicPseudoOrbitPair(int(z), m, b0, b1, float(delta), l, float(e_star))
    return None


def pair_from_periodic_points(
    system: MetricSystem, p: int, q: int, delta: float, m_max: int = 64
) -> PeriodicPseudoOrbitPair:
    """Blocks from the true orbits of two periodic points, anchored at ``p``.

    ``block0`` is the orbit of ``p``; ``block1`` jumps from ``p`` onto the
    orbit of ``q`` and jumps back to ``p`` at the wrap.  The common period is
    the least common multiple of both periods that is at least 2.
    """
    p, q = int(p), int(q)
    if p == q:
        raise ValueError("p and q must be distinct")
    op, oq = orbit_structure(system, p), orbit_structure(system, q)
    if op.preperiod or oq.preperiod:
        raise ValueError("p and q must be periodic")
    m = math.lcm(op.period, oq.period)
    if m < 2:
        m = 2
    if m > m_max:
        raise CertificationFailed("pair", f"common period {m} exceeds m_max={m_max}")
    block0 = tuple(system.orbit(p, m))
    block1 = (p,) + tuple(system.orbit(q, m)[1:])
    for name, blk in (("block0", block0), ("block1", block1)):
        seq = np.array(blk + (blk[0],))
        gaps = system.dist(system.map[seq[:-1]], seq[1:])
        if not (gaps < delta).all():
            i = int(np.flatnonzero(~(gaps < delta))[0])
            raise CertificationFailed("pair", f"{name} gap {float(gaps[i])!r} at step {i} is not < delta")
    seps = system.dist(np.array(block0), np.array(block1))
    l = int(np.argmax(seps))
    return PeriodicPseudoOrbitPair(p, m, block0, block1, float(delta), l, float(seps[l]))


# ---------------------------------------------------------------------------
# certificates


@dataclass
class HorseshoeCertificate:
    pair: PeriodicPseudoOrbitPair
    b: float
    e: float
    depth: int
    shadows: dict  # word string -> point
    candidate_counts: dict  # word string -> number of b-shadows found
    injective: bool
    semiconjugacy_checked_depth: int
    entropy_bound: float
    mode: str  # "conjugacy" | "semiconjugacy"
    point: Optional[int] = None
    expansivity_constant: Optional[float] = None
    hypotheses: dict = field(default_factory=dict)
    caveats: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.pair.period

    @property
    def steps(self) -> int:
        return self.depth * self.pair.period

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "horseshoe_certificate",
            "point": self.point,
            "pair": self.pair.to_dict(),
            "b": repr(float(self.b)),
            "e": repr(float(self.e)),
            "depth": self.depth,
            "shadows": dict(self.shadows),
            "candidate_counts": dict(self.candidate_counts),
            "injective": self.injective,
            "semiconjugacy_checked_depth": self.semiconjugacy_checked_depth,
            "entropy_bound": repr(float(self.entropy_bound)),
            "entropy_bound_expression": f"log(2)/{self.pair.period}",
            "mode": self.mode,
            "expansivity_constant": None
            if self.expansivity_constant is None
            else repr(float(self.expansivity_constant)),
            "hypotheses": self.hypotheses,
            "caveats": list(self.caveats),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HorseshoeCertificate":
        ec = d.get("expansivity_constant")
        return cls(
            pair=PeriodicPseudoOrbitPair.from_dict(d["pair"]),
            b=float(d["b"]),
            e=float(d["e"]),
            depth=int(d["depth"]),
            shadows={str(k): int(v) for k, v in d["shadows"].items()},
            candidate_counts={str(k): int(v) for k, v in d.get("candidate_counts", {}).items()},
            injective=bool(d["injective"]),
            semiconjugacy_checked_depth=int(d["semiconjugacy_checked_depth"]),
            entropy_bound=float(d["entropy_bound"]),
            mode=str(d["mode"]),
            point=d.get("point"),
            expansivity_constant=None if ec is None else float(ec),
            hypotheses=dict(d.get("hypotheses", {})),
            caveats=list(d.get("caveats", [])),
        )


def _check_scales(b: float, e: float, delta: float, depth: int):
    if not b > 0:
        raise ValueError("b must be positive")
    if not e > 2 * b:
        raise ValueError(f"need e > 2b, got e={e!r}, b={b!r}")
    if not delta > 0:
        raise ValueError("delta must be positive")
    if depth < 1:
        raise ValueError("depth must be >= 1")


def _hypotheses(system: MetricSystem, x: int, b: float, delta: float) -> dict:
    orb = orbit_structure(system, x)
    out = {
        "periodic": orb.preperiod == 0,
        "nonwandering": orb.preperiod == 0,
        "non_isolated": False,
        "b_shadowable_at_delta": "skipped",
    }
    if system.n <= DECISION_POINT_CAP:
        try:
            out["b_shadowable_at_delta"] = decide_shadowing(system, b, delta, None, start=x, max_states=200_000).result
        except GuardExceeded as exc:
            out["b_shadowable_at_delta"] = f"skipped ({exc.guard})"
    return out


def _ball_expansivity(system: MetricSystem, x: int, shadows) -> Optional[float]:
    """Least dyn_sep among distinct points of the smallest ball at ``x`` containing every shadow."""
    far = float(system.dist(np.asarray(shadows), x).max())
    r = next(v for v in ball_radii(system, x) if v > far)
    pts = ball(system, x, r)
    if pts.size < 2 or pts.size > EXPANSIVITY_BALL_CAP:
        return None
    sep = dyn_sep_subset(system, pts)
    np.fill_diagonal(sep, math.inf)
    return float(sep.min())


def _assemble(
    system: MetricSystem, x: Optional[int], pair: PeriodicPseudoOrbitPair, b: float, e: float, depth: int, hypotheses
) -> HorseshoeCertificate:
    if not pair.e_attained > e:
        raise CertificationFailed("pair", f"separation {pair.e_attained!r} does not exceed e={e!r}")
    m = pair.period
    steps = depth * m
    shadows, counts = {}, {}
    # each word's W-recursion is independent of the others
    for w in all_words(depth):
        cands = tracking_candidates(system, gamma(pair, w), b, steps)
        if cands.size == 0:
            raise CertificationFailed(
                "shadow", f"no shadow for word {w} within {steps} steps (finite-model horizon bound)"
            )
        shadows[str(w)] = int(cands[0])
        counts[str(w)] = int(cands.size)
    pts = list(shadows.values())
    if len(set(pts)) != len(pts):
        raise CertificationFailed("distinct", "two words share a shadow point")
    if not is_separated(system, pts, steps, e - 2 * b):
        raise CertificationFailed("separation", f"shadows are not ({e - 2 * b!r})-separated within {steps} steps")
    for w in all_words(depth):
        if depth == 1:
            break
        start = system.iterate(shadows[str(w)], m)
        tgt = gamma(pair, w.shift())
        drift = system.dist(np.array(system.orbit(start, steps - m)), np.array(tgt.points))
        if not (drift < b).all():
            raise CertificationFailed("semiconjugacy", f"f^m(shadow[{w}]) does not b-shadow gamma({w.shift()})")
    injective = all(c == 1 for c in counts.values())
    center = pair.anchor if x is None else x
    exp_const = _ball_expansivity(system, center, pts)
    conj = injective and exp_const is not None and exp_const >= e
    caveats = [
        f"entropy bound log(2)/{m} holds at certificate scales (depth {depth}, separation scale {e - 2 * b!r})",
        f"finite depth: the word-to-shadow coding is verified for words of length {depth} only",
        "finite model: the anchor is a cycle point, not a non-periodic accumulation point",
    ]
    if exp_const is None:
        caveats.append("expansivity on the shadow ball not computed (ball too large or trivial)")
    return HorseshoeCertificate(
        pair=pair,
        b=float(b),
        e=float(e),
        depth=depth,
        shadows=shadows,
        candidate_counts=counts,
        injective=injective,
        semiconjugacy_checked_depth=depth - 1,
        entropy_bound=math.log(2) / m,
        mode="conjugacy" if conj else "semiconjugacy",
        point=None if x is None else int(x),
        expansivity_constant=exp_const,
        hypotheses=hypotheses,
        caveats=caveats,
    )


def certify(
    system: MetricSystem, x: int, b: float, e: float, delta: float, depth: int, m_max: int = 16
) -> HorseshoeCertificate:
    """Run the pair search at the first cycle point of ``x`` and shadow every word of length ``depth``.

    Raises :class:`CertificationFailed` naming the stage that failed.
    """
    _check_scales(b, e, delta, depth)
    z = orbit_structure(system, x).cycle[0]
    hyp = _hypotheses(system, x, b, delta)
    pair = find_periodic_pair(system, z, delta, e, m_max)
    if pair is None:
        raise CertificationFailed("pair", f"no e-separated pair of periodic pseudo-orbits through {z} (m <= {m_max})")
    return _assemble(system, x, pair, b, e, depth, hyp)


def certify_from_periodic_points(
    system: MetricSystem, p: int, q: int, b: float, e: float, delta: float, depth: int, m_max: int = 64
) -> HorseshoeCertificate:
    _check_scales(b, e, delta, depth)
    pair = pair_from_periodic_points(system, p, q, delta, m_max)
    hyp = _hypotheses(system, p, b, delta)
    hyp["built_from_periodic_points"] = [int(p), int(q)]
    return _assemble(system, None, pair, b, e, depth, hyp)


# ---------------------------------------------------------------------------
# independent re-check


def _orbit_dist(system: MetricSystem, start: int, targets) -> np.ndarray:
    return system.dist(np.array(system.orbit(int(start), len(targets))), np.asarray(targets))


def verify_certificate(system: MetricSystem, cert: HorseshoeCertificate) -> tuple[bool, list[str]]:
    """Re-derive every certificate invariant by direct orbit evaluation."""
    v: list[str] = []
    pair = cert.pair
    m = pair.period
    b, e = cert.b, cert.e
    if not b > 0:
        v.append(f"scale: b={b!r} is not positive")
    if not e > 2 * b:
        v.append(f"scale: e={e!r} does not exceed 2b={2 * b!r}")
    if len(pair.block0) != m or len(pair.block1) != m or m < 1:
        v.append(f"period: block lengths {len(pair.block0)}, {len(pair.block1)} do not equal m={m}")
        return False, v
    pts_ok = all(0 <= p < system.n for p in pair.block0 + pair.block1 + tuple(cert.shadows.values()))
    if not pts_ok:
        v.append("range: a certificate point is outside the space")
        return False, v
    if pair.block0[0] != pair.anchor or pair.block1[0] != pair.anchor:
        v.append(f"anchor: blocks do not both start at {pair.anchor}")
    for name, blk in (("block0", pair.block0), ("block1", pair.block1)):
        seq = list(blk) + [blk[0]]
        for i in range(m):
            g = system.d(int(system.map[seq[i]]), seq[i + 1])
            if not g < pair.delta:
                v.append(f"pseudo_orbit: {name} gap {g!r} at step {i} is not < delta={pair.delta!r}")
                break
    l = pair.separation_index
    if not 0 <= l < m:
        v.append(f"separation_index: {l} outside 0..{m - 1}")
    else:
        sep = system.d(pair.block0[l], pair.block1[l])
        if sep != pair.e_attained:
            v.append(f"separation_index: d(block0[{l}], block1[{l}])={sep!r} != e_attained={pair.e_attained!r}")
        if not pair.e_attained > e:
            v.append(f"separation: e_attained={pair.e_attained!r} does not exceed e={e!r}")
    if cert.entropy_bound != math.log(2) / m:
        v.append(f"entropy_bound: {cert.entropy_bound!r} != log(2)/{m}")
    expected = {str(w) for w in all_words(cert.depth)} if cert.depth >= 1 else set()
    if set(cert.shadows) != expected:
        v.append(f"words: shadow keys do not match all words of depth {cert.depth}")
        return False, v
    steps = cert.depth * m
    targets = {w: gamma(pair, w).points for w in cert.shadows}
    for w, s in sorted(cert.shadows.items()):
        dd = _orbit_dist(system, s, targets[w])
        bad = np.flatnonzero(~(dd < b))
        if bad.size:
            i = int(bad[0])
            v.append(f"b_shadow: shadow[{w}]={s} is {float(dd[i])!r} from gamma({w}) at step {i}")
    pts = list(cert.shadows.values())
    if len(set(pts)) != len(pts):
        v.append("distinct: two words share a shadow point")
    words = sorted(cert.shadows)
    orbits = {w: np.array(system.orbit(cert.shadows[w], steps + 1)) for w in words}
    lower = e - 2 * b
    for w1, w2 in itertools.combinations(words, 2):
        dd = system.dist(orbits[w1], orbits[w2])
        if not (dd >= lower).any():
            v.append(f"separated: shadows of {w1} and {w2} never reach {lower!r} within {steps} steps")
        j = next(k for k in range(cert.depth) if w1[k] != w2[k])
        t = j * m + l
        if 0 <= l < m and not dd[t] >= lower:
            v.append(f"block_separation: words {w1},{w2} at step {t}: {float(dd[t])!r} < {lower!r}")
    if cert.semiconjugacy_checked_depth != cert.depth - 1:
        v.append(f"semiconjugacy: checked depth {cert.semiconjugacy_checked_depth} != {cert.depth - 1}")
    for w in words:
        if cert.depth < 2:
            break
        start = system.iterate(cert.shadows[w], m)
        dd = _orbit_dist(system, start, targets[w][m:])
        bad = np.flatnonzero(~(dd < b))
        if bad.size:
            v.append(f"semiconjugacy: f^m(shadow[{w}]) leaves the b-tube of gamma({w[1:]}) at step {int(bad[0])}")
    if system.n <= INJECTIVITY_SCAN_CAP:
        counts = {}
        for w in words:
            # orbits of every point, dropping those that leave the tube
            pos = np.arange(system.n)
            for t in targets[w]:
                pos = system.map[pos[system.dist(pos, t) < b]]
            counts[w] = int(pos.size)
        if cert.candidate_counts and counts != cert.candidate_counts:
            v.append("injectivity: recorded shadow counts differ from a direct scan")
        if cert.injective != all(c == 1 for c in counts.values()):
            v.append(f"injectivity: flag {cert.injective} contradicts direct shadow counts")
    if cert.mode not in ("conjugacy", "semiconjugacy"):
        v.append(f"mode: unknown mode {cert.mode!r}")
    elif cert.mode == "conjugacy" and not cert.injective:
        v.append("mode: conjugacy claimed without injectivity")
    return not v, v
