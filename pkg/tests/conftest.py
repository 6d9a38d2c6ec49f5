import numpy as np
import pytest
from hypothesis import strategies as st

from pointdyn.fixtures import gen_carvalho_cordeiro, gen_doubling, gen_line, gen_shift_words, minplus_closure
from pointdyn.metric import ExplicitMatrix, MetricSystem


def random_system(rng, n_max=6, weight_max=4, name="rand"):
    """Integer-valued shortest-path metric with a random self-map."""
    n = int(rng.integers(1, n_max + 1))
    w = rng.integers(1, weight_max + 1, size=(n, n)).astype(float)
    w = np.minimum(w, w.T)
    d = minplus_closure(w)
    fmap = rng.integers(0, n, size=n)
    return MetricSystem(ExplicitMatrix(d), fmap, name=name)


@st.composite
def small_systems(draw, n_max=6, weight_max=4):
    n = draw(st.integers(1, n_max))
    weights = draw(st.lists(st.integers(1, weight_max), min_size=n * n, max_size=n * n))
    w = np.array(weights, dtype=float).reshape(n, n)
    w = np.minimum(w, w.T)
    fmap = draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
    return MetricSystem(ExplicitMatrix(minplus_closure(w)), fmap, name="hyp")


def small_fixtures():
    """Every generator at sizes where all-pairs computations are cheap."""
    out = [gen_shift_words(k) for k in (1, 2, 3, 4, 5)]
    out += [gen_doubling(k) for k in (3, 4, 5, 6)]
    out += [gen_carvalho_cordeiro([4] * j, j) for j in (1, 2, 3)]
    out.append(gen_carvalho_cordeiro([1, 2, 3], 2))
    out.append(gen_line(5, 0.1))
    out.append(gen_line(4, 0.25, fmap=[1, 2, 3, 3], name="line_shift"))
    return out


@pytest.fixture(scope="session")
def doubling20():
    return gen_doubling(20)


@pytest.fixture(scope="session")
def doubling20_cert(doubling20):
    from pointdyn.horseshoe import certify

    return certify(doubling20, 1, 0.1, 0.4, 0.002, 2)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
