import itertools
import math

import numpy as np
import pytest

from collrat.core import LinearOrder, pair_index
from collrat.errors import ResourceLimitError
from collrat.transitivity import rationalizable_mask
from collrat.vertices import (
    VertexSet,
    cached_vertices,
    enumerate_vertices,
    hull_contains,
    verify_nesting,
)


def test_per_order_counts_n3():
    order = LinearOrder((1, 2, 3))
    assert len(enumerate_vertices("ss", 3, order=order)) == 5
    assert len(enumerate_vertices("mu", 3, order=order)) == 7
    assert len(enumerate_vertices("wu", 3, order=order)) == 8


def test_listed_extreme_points_n3():
    order = LinearOrder((1, 2, 3))
    ss = {tuple(r) for r in enumerate_vertices("ss", 3, order=order).points_doubled}
    assert ss == {(2, 2, 2), (1, 2, 2), (2, 2, 1), (1, 2, 1), (1, 1, 1)}
    mu = {tuple(r) for r in enumerate_vertices("mu", 3, order=order).points_doubled}
    assert mu == ss | {(1, 1, 2), (2, 1, 1)}
    wu = {tuple(r) for r in enumerate_vertices("wu", 3, order=order).points_doubled}
    assert wu == mu | {(2, 1, 2)}


def test_ru_vertices_are_factorial():
    for n in (3, 4, 5):
        assert len(enumerate_vertices("ru", n)) == math.factorial(n)


def test_grid_cap():
    with pytest.raises(ResourceLimitError):
        enumerate_vertices("wu", 6)


@pytest.mark.parametrize("n", [3, 4])
def test_pointwise_nesting_and_self_consistency(n):
    ss = cached_vertices("ss", n)
    mu = cached_vertices("mu", n)
    wu = cached_vertices("wu", n)
    as_set = lambda vs: {tuple(r) for r in vs.points_doubled}
    assert as_set(ss) <= as_set(mu) <= as_set(wu)
    for model, vs in (("ss", ss), ("mu", mu), ("wu", wu)):
        mask = rationalizable_mask(vs.to_float(), n, model)
        assert np.all(mask)


@pytest.mark.parametrize("n", [3, 4])
def test_relabeling_invariance(n):
    m = n * (n - 1) // 2
    for model in ("ss", "mu", "wu"):
        vs = cached_vertices(model, n)
        pts = {tuple(r) for r in vs.points_doubled}
        for perm in itertools.permutations(range(1, n + 1)):
            relabeled = set()
            for row in vs.points_doubled:
                new = [0] * m
                for i in range(1, n + 1):
                    for j in range(i + 1, n + 1):
                        a, b = perm[i - 1], perm[j - 1]
                        t_new = pair_index(i, j, n)
                        if a < b:
                            new[t_new] = int(row[pair_index(a, b, n)])
                        else:
                            new[t_new] = 2 - int(row[pair_index(b, a, n)])
                relabeled.add(tuple(new))
            assert relabeled == pts


def test_vertex_set_json_roundtrip():
    vs = enumerate_vertices("wu", 3)
    back = VertexSet.from_json(vs.to_json())
    assert np.array_equal(back.points_doubled, vs.points_doubled)
    assert '"1/2"' in vs.to_json()


def test_contains_point_bisection():
    vs = enumerate_vertices("ss", 3)
    assert vs.contains_point(vs.points_doubled[7])
    assert not vs.contains_point(np.array([2, 0, 2], dtype=np.int8))  # strict cycle


def test_hull_contains_simple():
    V = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    inside, w = hull_contains(V, np.array([0.25, 0.25]))
    assert inside and w.sum() == pytest.approx(1.0, abs=1e-9)
    outside, w2 = hull_contains(V, np.array([0.8, 0.8]))
    assert not outside and w2 is None


def test_nesting_report_n3():
    rep = verify_nesting(3)
    assert rep.conv_ss_eq_conv_mu
    assert rep.ru_subset_css
    # strict nesting of the MU hull inside the WU hull: a WU witness exists
    assert not rep.containments[("wu", "mu")].contained
    assert rep.containments[("wu", "mu")].witness is not None
    # at n = 3 the hulls match the deterministic (linear-ordering) hull too
    assert rep.containments[("ss", "ru")].contained
    assert rep.containments[("mu", "ru")].contained
    assert "nesting report" in rep.summary()


def test_nesting_report_n4():
    rep = verify_nesting(4)
    assert rep.conv_ss_eq_conv_mu
    assert rep.ru_subset_css
    assert not rep.containments[("wu", "ss")].contained
