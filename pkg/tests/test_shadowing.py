import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import small_systems
from pointdyn.fixtures import gen_line
from pointdyn.metric import CircleGrid, GuardExceeded, MetricSystem
from pointdyn.shadowing import (
    BruteForceOracle,
    PseudoOrbit,
    brute_force_shadowing,
    decide_shadowing,
    gap_profile,
    is_pseudo_orbit,
    orbit_gaps,
    refutes,
    shadowable_point,
    shadows,
    tracking_candidates,
)


def grid_values(system):
    return [float(v) for v in system.positive_grid()] + [system.top_radius()]


def test_line_counterexample_is_the_whole_line():
    s = gen_line(6, 0.1)
    dec = decide_shadowing(s, 0.25, 0.15)
    assert not dec.result
    assert dec.counterexample.points == (0, 1, 2, 3, 4, 5)
    brute = brute_force_shadowing(s, 0.25, 0.15, 6)
    assert brute.counterexample.points == (0, 1, 2, 3, 4, 5)


def test_line_shadowable_point():
    assert shadowable_point(gen_line(6, 0.1), 0, 0.25) == 0.1


def test_identity_circle_shadowable_everywhere():
    s = MetricSystem(CircleGrid(3), [0, 1, 2])
    assert decide_shadowing(s, 0.1, 1 / 3).result
    assert shadowable_point(s, 0, 0.1) == 1 / 3


def test_gap_profile_and_periodic_wrap():
    s = gen_line(4, 0.25, fmap=[1, 2, 3, 3])
    mx, gaps = gap_profile(s, [0, 1, 3])
    assert gaps == [0.0, 0.25] and mx == 0.25
    po = PseudoOrbit((0,), 0.3, block=(1, 2))
    assert orbit_gaps(s, po)[-1] == s.d(3, 1)


def test_shadows_counts_steps():
    s = gen_line(3, 1.0)
    po = PseudoOrbit((0, 1, 2), 2.0)
    assert shadows(s, 1, po, 1.5, 3)
    assert not shadows(s, 0, po, 1.5, 3)


def test_tracking_candidates_periodic_target_terminates():
    s = MetricSystem(CircleGrid(6), (np.arange(6) + 1) % 6)
    po = PseudoOrbit((), 0.5, block=(0, 1, 2, 3, 4, 5))
    assert tracking_candidates(s, po, 0.1).tolist() == [0]
    assert tracking_candidates(s, po, 0.2).tolist() == [0, 1, 5]


def test_brute_force_guard():
    s = MetricSystem(CircleGrid(12), np.arange(12))
    with pytest.raises(GuardExceeded) as exc:
        BruteForceOracle(s, 1.0, 9)
    assert exc.value.guard == "brute_force_paths"


def test_state_guard():
    s = MetricSystem(CircleGrid(40), (3 * np.arange(40)) % 40)
    with pytest.raises(GuardExceeded):
        decide_shadowing(s, 0.3, 0.2, max_states=50)


@settings(max_examples=80, deadline=None)
@given(small_systems(n_max=5), st.integers(1, 5), st.data())
def test_decision_matches_brute_force(system, horizon, data):
    grid = grid_values(system)
    eps = data.draw(st.sampled_from(grid))
    delta = data.draw(st.sampled_from(grid))
    dec = decide_shadowing(system, eps, delta, horizon)
    brute = brute_force_shadowing(system, eps, delta, horizon)
    assert dec.result == brute.result
    if not dec.result:
        # both report shortest refutations
        assert len(dec.counterexample) == len(brute.counterexample)
        assert refutes(system, dec.counterexample, eps)


@settings(max_examples=60, deadline=None)
@given(small_systems(n_max=5), st.data())
def test_unbounded_counterexample_is_valid(system, data):
    grid = grid_values(system)
    eps = data.draw(st.sampled_from(grid))
    delta = data.draw(st.sampled_from(grid))
    dec = decide_shadowing(system, eps, delta)
    if dec.result:
        assert decide_shadowing(system, eps, delta, 6).result
    else:
        po = dec.counterexample
        assert is_pseudo_orbit(system, po)
        assert refutes(system, po, eps)


@settings(max_examples=60, deadline=None)
@given(small_systems(n_max=5), st.data())
def test_tracking_candidates_match_direct_scan(system, data):
    grid = grid_values(system)
    delta = data.draw(st.sampled_from(grid))
    eps = data.draw(st.sampled_from(grid))
    pts = [data.draw(st.integers(0, system.n - 1))]
    for _ in range(data.draw(st.integers(0, 5))):
        nb = np.flatnonzero(system.row(int(system.map[pts[-1]])) < delta)
        pts.append(int(nb[data.draw(st.integers(0, nb.size - 1))]))
    po = PseudoOrbit(tuple(pts), delta)
    direct = [z for z in range(system.n) if shadows(system, z, po, eps, len(po))]
    assert tracking_candidates(system, po, eps).tolist() == direct


@settings(max_examples=40, deadline=None)
@given(small_systems(n_max=5), st.data())
def test_decision_monotone_in_scales(system, data):
    grid = grid_values(system)
    e1, e2 = sorted(data.draw(st.lists(st.sampled_from(grid), min_size=2, max_size=2)))
    d1, d2 = sorted(data.draw(st.lists(st.sampled_from(grid), min_size=2, max_size=2)))
    if decide_shadowing(system, e1, d2, 4).result:
        assert decide_shadowing(system, e2, d1, 4).result
