"""Generators for the standard test systems."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .limits import MapFamily, uniform_distance
from .metric import BinaryWords, CircleGrid, ExplicitMatrix, MetricSystem, validate


def rotate_left(word: int, k: int) -> int:
    return ((word << 1) & ((1 << k) - 1)) | (word >> (k - 1))


def gen_shift_words(k: int) -> MetricSystem:
    """Length-k binary words with the cyclic shift: the full shift restricted to its period-k points."""
    if not 1 <= k <= 20:
        raise ValueError("k must be in 1..20")
    words = np.arange(1 << k, dtype=np.int64)
    fmap = ((words << 1) & ((1 << k) - 1)) | (words >> (k - 1))
    labels = [format(int(w), f"0{k}b") for w in words] if k <= 12 else None
    return MetricSystem(BinaryWords(k), fmap, labels, name=f"shift{k}")


def gen_doubling(k: int) -> MetricSystem:
    """Doubling map ``j -> 2j mod (2**k - 1)`` on the circle grid of ``2**k - 1`` points."""
    if not 3 <= k <= 20:
        raise ValueError("k must be in 3..20")
    n = (1 << k) - 1
    fmap = (2 * np.arange(n, dtype=np.int64)) % n
    return MetricSystem(CircleGrid(n), fmap, name=f"doubling{k}")


def gen_circle_map(n: int, fmap: Sequence[int], name: str = "") -> MetricSystem:
    return MetricSystem(CircleGrid(n), fmap, name=name)


def gen_line(count: int, spacing: float, fmap=None, name: str = "line") -> MetricSystem:
    """Collinear points ``0, spacing, 2*spacing, ...`` (identity map by default)."""
    idx = np.arange(count)
    m = np.abs(idx[:, None] - idx[None, :]) * spacing
    # round-trip through repr keeps the matrix identical to a parsed file
    m = np.array([[float(repr(float(v))) for v in row] for row in m])
    return MetricSystem(ExplicitMatrix(m), idx if fmap is None else fmap, name=name)


def minplus_closure(seed: np.ndarray) -> np.ndarray:
    """Shortest-path closure (Floyd-Warshall); ``inf`` marks unconstrained pairs."""
    d = np.array(seed, dtype=float)
    np.fill_diagonal(d, 0.0)
    for k in range(d.shape[0]):
        np.minimum(d, d[:, k][:, None] + d[k, :][None, :], out=d)
    return d


def gen_carvalho_cordeiro(base_cycles: Sequence[int], copies: int) -> MetricSystem:
    """Base cycles pairwise at distance 1, plus copy cycles ``O'_n`` at distance ``1/n`` from ``O_n``.

    Distances not pinned by the seed come from the min-plus closure, the
    largest metric compatible with the pinned values.  Points are ordered
    base cycles first, then copies.
    """
    if copies > len(base_cycles):
        raise ValueError("copies must not exceed the number of base cycles")
    if any(c < 1 for c in base_cycles):
        raise ValueError("cycle lengths must be positive")
    nbase = sum(base_cycles)
    ncopy = sum(base_cycles[:copies])
    n = nbase + ncopy
    seed = np.full((n, n), math.inf)
    seed[:nbase, :nbase] = 1.0
    fmap = np.empty(n, dtype=np.int64)
    labels = [""] * n
    offset = 0
    starts = []
    for c, length in enumerate(base_cycles, start=1):
        starts.append(offset)
        for i in range(length):
            fmap[offset + i] = offset + (i + 1) % length
            labels[offset + i] = f"O{c}[{i}]"
        offset += length
    for c in range(1, copies + 1):
        length = base_cycles[c - 1]
        base = starts[c - 1]
        for i in range(length):
            p = offset + i
            fmap[p] = offset + (i + 1) % length
            labels[p] = f"O{c}'[{i}]"
            seed[p, base + i] = seed[base + i, p] = 1.0 / c
        offset += length
    d = minplus_closure(seed)
    system = MetricSystem(ExplicitMatrix(d), fmap, labels, name=f"carvalho_cordeiro_j{copies}")
    report = validate(system)
    if report:
        raise ValueError(f"closure produced a non-metric: {report[0]}")
    return system


def cc_index(base_cycles: Sequence[int], cycle: int, i: int, copy: bool = False) -> int:
    """Index of ``O_cycle[i]`` (or its copy) in :func:`gen_carvalho_cordeiro` output; cycles count from 1."""
    if not copy:
        return sum(base_cycles[: cycle - 1]) + i
    return sum(base_cycles) + sum(base_cycles[: cycle - 1]) + i


def gen_perturbed_family(
    base: MetricSystem, count: int, magnitude: float, seed: int, swaps: int = 2
) -> MapFamily:
    """Members ``tau_i o f`` where ``tau_i`` swaps seeded point pairs at distance at most ``magnitude / 2**i``.

    The last member is the base map itself, so the list's tail (last member
    repeated) converges to ``base`` and the distances never increase.
    """
    if magnitude < 0:
        raise ValueError("magnitude must be non-negative")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    members = []
    prev = math.inf
    for i in range(count):
        limit_i = 0.0 if i == count - 1 else min(magnitude / 2**i, prev)
        tau = np.arange(base.n)
        used: set = set()
        for _ in range(swaps):
            if limit_i <= 0:
                break
            a = int(rng.integers(base.n))
            if a in used:
                continue
            row = base.row(a)
            ok = np.flatnonzero((row <= limit_i) & (row > 0))
            ok = np.array([b for b in ok if b not in used], dtype=np.int64)
            if ok.size == 0:
                continue
            b = int(ok[np.argmax(row[ok])])
            tau[a], tau[b] = b, a
            used.update((a, b))
        fmap = tau[base.map]
        member = base.with_map(fmap, name=f"{base.name}_member{i}")
        prev = uniform_distance(base, fmap, base.map)
        members.append(member)
    return MapFamily(base, members, name=f"{base.name}_family_seed{seed}")
