"""One-dimensional membership checks and continuous approximation."""

import numpy as np
import pytest

from dirtrace import fractal, oned
from dirtrace.errors import NotInH1tr
from dirtrace.fields import get_field


def crack_domain():
    return fractal.named_domain("crack_interval")


def cantor_domain(level: int = 6):
    return fractal.named_domain("cantor_complement", level=level)


def test_isolated_points():
    pts = oned.isolated_points([(0.0, 1.0), (1.0, 2.0), (3.0, 4.0)])
    np.testing.assert_allclose(pts, [1.0], atol=1e-12)
    assert oned.isolated_points([(0.0, 1.0), (2.0, 3.0)]).size == 0


def test_piecewise_field_evaluation():
    dom = crack_domain()
    u = oned.PiecewiseH1.from_field(get_field("crack_1d"), dom.intervals)
    x = np.array([0.5, 1.5])
    np.testing.assert_allclose(u.eval_many(x), [0.5, 0.5], atol=1e-9)
    np.testing.assert_allclose(u.deriv_many(x), [1.0, 1.0], atol=1e-6)
    assert u.h1_norm_sq() > 0.0


def test_crack_field_is_refuted_with_witness():
    dom = crack_domain()
    u = oned.PiecewiseH1.from_field(get_field("crack_1d"), dom.intervals)
    rep = oned.membership_report(u)
    assert rep.verdict == "out"
    w = rep.witnesses[0]
    assert w.point == pytest.approx(1.0, abs=1e-12)
    assert w.left == pytest.approx(1.0, abs=1e-8)
    assert w.right == pytest.approx(0.0, abs=1e-8)
    assert rep.max_jump == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(NotInH1tr):
        oned.continuous_approximation(u, 4)


def test_matching_traces_pass_membership():
    # x restricted to both sides of the shared endpoint is continuous
    dom = crack_domain()
    u = oned.PiecewiseH1.from_field(get_field("x1"), dom.intervals)
    rep = oned.membership_report(u)
    assert rep.verdict == "in"
    assert not rep.witnesses


def test_approximation_distances_decrease():
    dom = cantor_domain(6)
    for name in ("x1", "sin1"):
        u = oned.PiecewiseH1.from_field(get_field(name), dom.intervals)
        results = [oned.continuous_approximation(u, n) for n in (4, 6, 8, 10)]
        dists = [r.distance for r in results]
        assert all(a > b for a, b in zip(dists, dists[1:]))
        for r in results:
            assert r.unselected_length <= 2.0 ** (-r.n) + 1e-12


def test_approximant_is_continuous_across_bridges():
    dom = cantor_domain(5)
    u = oned.PiecewiseH1.from_field(get_field("sin1"), dom.intervals)
    res = oned.continuous_approximation(u, 6)
    for comp in res.components:
        left = res.eval_many(np.array([comp.lo]), u)[0]
        right = res.eval_many(np.array([comp.hi]), u)[0]
        assert left == pytest.approx(comp.left_value, abs=1e-9)
        assert right == pytest.approx(comp.right_value, abs=1e-9)


def test_truncation_caps_the_approximant():
    dom = cantor_domain(4)
    iv = np.asarray(dom.intervals)
    u = oned.PiecewiseH1.from_field(get_field("x1"), dom.intervals)
    res = oned.continuous_approximation(u, 5, truncation=0.25)
    # defined on the convex hull of the pieces: domain plus bridges
    xs = np.linspace(iv.min() + 1e-9, iv.max() - 1e-9, 257)
    vals = res.eval_many(xs, u)
    assert np.all(np.isfinite(vals))
    assert np.max(np.abs(vals)) <= 0.25 + 1e-12
