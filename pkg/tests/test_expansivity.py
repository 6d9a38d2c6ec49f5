import math

import numpy as np
from hypothesis import given, settings

from conftest import small_fixtures, small_systems
from pointdyn.expansivity import (
    classify_expansivity,
    covering_constant,
    global_expansivity,
    lebesgue_number,
    n_expansive_point,
    reddy_constant,
    uniform_expansive_point,
)
from pointdyn.fixtures import cc_index, gen_carvalho_cordeiro, gen_shift_words
from pointdyn.metric import CircleGrid, MetricSystem, ball, dyn_sep_table


def test_shift_words_constants():
    s = gen_shift_words(3)
    assert uniform_expansive_point(s, 0) == (1.0, 0.5)
    assert global_expansivity(s) == 0.5
    assert all(reddy_constant(s, x) == 0.5 for x in range(s.n))


def test_finite_constant_never_below_smallest_distance():
    # step 0 already separates distinct points, even under a constant map
    s = MetricSystem(CircleGrid(5), np.arange(5))
    assert global_expansivity(s) == 0.2
    c = MetricSystem(CircleGrid(5), np.zeros(5, dtype=int))
    assert global_expansivity(c) == 0.2
    assert reddy_constant(c, 1) == 0.2


def test_cc_fixture_constants():
    cycles = [4] * 8
    s = gen_carvalho_cordeiro(cycles, 8)
    assert global_expansivity(s) == 0.125
    assert min(reddy_constant(s, x) for x in range(s.n)) == 0.125
    x = cc_index(cycles, 1, 0)
    assert uniform_expansive_point(s, x) == (1.125, 1.0)
    assert n_expansive_point(s, x, 2) == (3.125, 1.0)


def test_cc_pair_attains_minimum():
    cycles = [4, 4, 4]
    s = gen_carvalho_cordeiro(cycles, 3)
    t = dyn_sep_table(s)
    a, b = cc_index(cycles, 3, 1), cc_index(cycles, 3, 1, copy=True)
    assert t[a, b] == global_expansivity(s) == 1 / 3


def test_covering_constant_bounded_by_global():
    s = gen_carvalho_cordeiro([4] * 8, 8)
    cov = covering_constant(s)
    assert cov.ok and cov.constant == 0.125 <= cov.global_constant


def test_lebesgue_number_of_trivial_cover():
    s = MetricSystem(CircleGrid(6), np.arange(6))
    assert lebesgue_number(s, [np.arange(6)]) == math.inf
    assert lebesgue_number(s, [np.array([0, 1, 2]), np.array([3, 4, 5])]) == 1 / 6


def test_verdict_dict_shape():
    v = classify_expansivity(gen_shift_words(2), 1).to_dict()
    assert v["positively_expansive_point"] and v["countable_expansive"]
    assert set(v["n_expansive"]) == {"1", "2"}


@settings(max_examples=80, deadline=None)
@given(small_systems())
def test_global_iff_every_point_uniform(system):
    g = global_expansivity(system)
    per_point = [uniform_expansive_point(system, x) for x in range(system.n)]
    if system.n == 1:
        return
    assert (g is not None) == all(u is not None for u in per_point)


@settings(max_examples=80, deadline=None)
@given(small_systems())
def test_uniform_constant_holds_on_its_ball(system):
    t = dyn_sep_table(system)
    for x in range(system.n):
        u = uniform_expansive_point(system, x)
        if u is None:
            continue
        r, e = u
        pts = ball(system, x, r)
        sub = t[np.ix_(pts, pts)] + np.eye(pts.size) * 1e9
        assert (sub >= e).all()


@settings(max_examples=60, deadline=None)
@given(small_systems())
def test_n_expansive_bound_holds(system):
    t = dyn_sep_table(system)
    for x in range(system.n):
        got = n_expansive_point(system, x, 2)
        if got is None:
            continue
        r, e = got
        pts = ball(system, x, r)
        for y in pts:
            assert (t[y, pts] < e).sum() <= 2


def test_global_iff_uniform_on_fixtures():
    for s in small_fixtures():
        if s.n < 2:
            continue
        g = global_expansivity(s)
        assert (g is not None) == all(uniform_expansive_point(s, x) is not None for x in range(s.n)), s.name


@settings(max_examples=60, deadline=None)
@given(small_systems())
def test_n_expansive_monotone_and_reddy_bound(system):
    g = global_expansivity(system)
    for x in range(system.n):
        if g is not None and system.n > 1:
            assert reddy_constant(system, x) >= g
        assert n_expansive_point(system, x, 1) == uniform_expansive_point(system, x)
        prev = n_expansive_point(system, x, 1)
        for n in (2, 3):
            cur = n_expansive_point(system, x, n)
            if prev is not None:
                assert cur is not None and cur[1] >= prev[1]
            prev = cur
