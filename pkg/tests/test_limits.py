import numpy as np
import pytest
from hypothesis import given, settings

from conftest import small_fixtures, small_systems
from pointdyn.fixtures import gen_doubling, gen_line, gen_perturbed_family
from pointdyn.limits import (
    FamilyError,
    MapFamily,
    chain_recurrence,
    check_limit_nonwandering,
    family_shadowing_constant,
    is_chain_recurrent_map,
    is_chain_transitive,
    lift_pseudo_orbit,
    limit_shadow,
    sample_pseudo_orbits,
    uniform_distance,
)
from pointdyn.metric import CircleGrid, MetricSystem, is_nonwandering_map
from pointdyn.shadowing import PseudoOrbit, decide_shadowing, shadowing_constant


def rotation(n, step=1):
    return MetricSystem(CircleGrid(n), (np.arange(n) + step) % n)


def test_convergence_problems_are_reported():
    base = rotation(8)
    far = base.with_map((np.arange(8) + 3) % 8)
    near = base.with_map((np.arange(8) + 2) % 8)
    assert MapFamily(base, [near, far, base]).convergence_problems()[0].startswith("distance increases")
    assert MapFamily(base, [near]).convergence_problems() == ["tail member differs from the limit"]
    assert MapFamily(base, [far, near, base]).converges


def test_lift_refuses_non_convergent_family():
    base = rotation(8)
    fam = MapFamily(base, [base.with_map((np.arange(8) + 2) % 8)])
    with pytest.raises(FamilyError) as exc:
        lift_pseudo_orbit(fam, PseudoOrbit((0, 1), 0.1))
    assert exc.value.stage == "convergence"


def test_lift_picks_first_close_member():
    base = gen_doubling(6)
    fam = gen_perturbed_family(base, 4, 0.2, seed=3)
    po = PseudoOrbit(tuple(base.orbit(5, 6)), 0.06)
    audit = lift_pseudo_orbit(fam, po)
    assert fam.distances[audit.member] < po.delta
    assert all(fam.distances[i] >= po.delta for i in range(audit.member))
    assert audit.max_gap < audit.bound


def test_perturbed_family_properties():
    base = gen_doubling(7)
    fam = gen_perturbed_family(base, 5, 0.1, seed=9)
    d = fam.distances
    assert d == sorted(d, reverse=True) and d[-1] == 0.0
    assert all(d[i] <= 0.1 / 2**i for i in range(5))
    again = gen_perturbed_family(base, 5, 0.1, seed=9)
    assert all((a.map == b.map).all() for a, b in zip(fam.members, again.members))
    zero = gen_perturbed_family(base, 3, 0.0, seed=9)
    assert all((m.map == base.map).all() for m in zero.members)


def test_limit_shadow_audit_on_doubling():
    base = gen_doubling(6)
    fam = gen_perturbed_family(base, 3, 0.05, seed=1)
    eps = 0.3
    delta = family_shadowing_constant(fam, eps / 3, 6)
    assert delta is not None
    for po in sample_pseudo_orbits(base, delta / 2, 6, 10, seed=2):
        res = limit_shadow(fam, po, eps)
        assert res.ok
        assert res.member == len(fam) - 1


def test_uniform_constant_is_minimum_over_members():
    base = gen_doubling(6)
    fam = gen_perturbed_family(base, 3, 0.05, seed=1)
    fam_delta = family_shadowing_constant(fam, 0.2, 5)
    member_deltas = [shadowing_constant(m, 0.2, 5) for m in fam.members]
    assert fam_delta == min(member_deltas)


def test_chain_recurrence_of_shift_line():
    s = gen_line(4, 0.25, fmap=[1, 2, 3, 3])
    cr = chain_recurrence(s, 0.1)
    assert cr.points == frozenset({3}) and not cr.is_chain_recurrent_map
    # with big jumps everything returns
    assert chain_recurrence(s, 1.0).is_chain_recurrent_map


def test_limit_nonwandering_on_rotation_family():
    base = rotation(16)
    fam = gen_perturbed_family(base, 3, 0.2, seed=5)
    v = check_limit_nonwandering(fam, [0.2], horizon=6)
    assert v.result and v.failed_step is None
    assert v.evidence["limit_nonwandering_points"] == 16


def test_limit_nonwandering_reports_wandering_member():
    base = rotation(8)
    bad = base.with_map(np.zeros(8, dtype=int))
    v = check_limit_nonwandering(MapFamily(base, [bad, base]), [0.2])
    assert not v.result and v.failed_step.startswith("member 0")


def test_uniform_distance():
    base = rotation(8)
    assert uniform_distance(base, base.map, (np.arange(8) + 2) % 8) == 0.125


def test_chain_transitive_members_give_chain_transitive_limit():
    for seed in range(5):
        base = rotation(12, 5)
        fam = gen_perturbed_family(base, 3, 0.3, seed=seed)
        eps = 0.2
        if all(is_chain_transitive(m, eps) for m in fam.members) and family_shadowing_constant(fam, eps, 4):
            assert is_chain_transitive(fam.limit, eps)


def test_implications_on_fixtures():
    for s in small_fixtures():
        eps = s.metric.min_positive()
        if is_nonwandering_map(s):
            assert is_chain_recurrent_map(s), s.name
        if is_chain_recurrent_map(s) and shadowing_constant(s, eps, 4) is not None:
            assert is_nonwandering_map(s), s.name


@settings(max_examples=100, deadline=None)
@given(small_systems())
def test_implications_on_random_systems(system):
    if is_nonwandering_map(system):
        assert is_chain_recurrent_map(system)
    if system.n > 1 and is_chain_recurrent_map(system):
        eps = system.metric.min_positive()
        if decide_shadowing(system, eps, eps).result:
            assert is_nonwandering_map(system)
