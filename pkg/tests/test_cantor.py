"""Gap tables, distances and level bookkeeping of the Cantor helpers."""

import numpy as np
import pytest

from dirtrace import _cantor
from dirtrace.errors import InvalidRatio


def test_gap_table_first_levels():
    table = _cantor.gap_table(1.0 / 3.0, 1)
    # heap order: root gap first, then its two children
    assert table.shape == (3, 3)
    np.testing.assert_allclose(table[0, :2], [1.0 / 3.0, 2.0 / 3.0], atol=1e-15)
    np.testing.assert_allclose(table[1, :2], [1.0 / 9.0, 2.0 / 9.0], atol=1e-15)
    np.testing.assert_allclose(table[2, :2], [7.0 / 9.0, 8.0 / 9.0], atol=1e-15)
    np.testing.assert_array_equal(table[:, 2], [0.0, 1.0, 1.0])


def test_gap_count_matches_table():
    for level in range(5):
        table = _cantor.gap_table(1.0 / 3.0, level)
        assert table.shape[0] == _cantor.gap_count(level) == 2 ** (level + 1) - 1


def test_depth_column_is_heap_depth():
    table = _cantor.gap_table(0.25, 4, scheme="rho")
    m = np.arange(1, table.shape[0] + 1)
    assert np.array_equal(table[:, 2], [_cantor.depth_of_index(k) for k in m])


@pytest.mark.parametrize("ratio,scheme", [(1.0 / 3.0, "third"), (0.25, "rho"), (0.1, "rho")])
def test_removed_length_matches_gap_sum(ratio, scheme):
    for level in (0, 1, 3, 6):
        table = _cantor.gap_table(ratio, level, scheme)
        total = float(np.sum(table[:, 1] - table[:, 0]))
        assert abs(total - _cantor.removed_length(ratio, level)) < 1e-12


def test_gaps_disjoint_and_inside_unit():
    table = _cantor.gap_table(0.25, 8, scheme="rho")
    order = np.argsort(table[:, 0])
    c, d = table[order, 0], table[order, 1]
    assert np.all(d > c)
    assert c[0] > 0.0 and d[-1] < 1.0
    assert np.all(c[1:] >= d[:-1])


def test_distance_golden_values():
    assert _cantor.distance(0.0) == 0.0
    assert _cantor.distance(1.0) == 0.0
    assert _cantor.distance(1.0 / 3.0) == pytest.approx(0.0, abs=1e-15)
    # middle of the first gap: nearest set points are 1/3 and 2/3
    assert _cantor.distance(0.5) == pytest.approx(1.0 / 6.0, abs=1e-12)
    assert _cantor.distance(0.4) == pytest.approx(0.4 - 1.0 / 3.0, abs=1e-12)


def test_distance_many_matches_scalar():
    xs = np.linspace(-0.2, 1.2, 113)
    many = _cantor.distance_many(xs)
    for x, v in zip(xs, many):
        assert _cantor.distance(float(x)) == pytest.approx(float(v), abs=1e-14)


def test_distance_outside_unit_interval():
    assert _cantor.distance(-0.5) == pytest.approx(0.5, abs=1e-15)
    assert _cantor.distance(1.25) == pytest.approx(0.25, abs=1e-15)


def test_scheme_equivalence_at_one_third():
    a = _cantor.gap_table(1.0 / 3.0, 5, "third")
    b = _cantor.gap_table(1.0 / 3.0, 5, "rho")
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_level_intervals_structure():
    starts, ends = _cantor.level_intervals(1)
    np.testing.assert_allclose(starts, [0.0, 2.0 / 3.0], atol=1e-15)
    np.testing.assert_allclose(ends, [1.0 / 3.0, 1.0], atol=1e-15)
    starts, ends = _cantor.level_intervals(6, 0.25, "rho")
    assert starts.size == 64
    # surviving length after L rounds plus removed length is the unit interval
    survived = float(np.sum(ends - starts))
    assert abs(survived + _cantor.removed_length(0.25, 5) - 1.0) < 1e-12


def test_total_gap_length():
    assert _cantor.total_gap_length(0.25) == pytest.approx(0.5, abs=1e-15)
    assert _cantor.total_gap_length(1.0 / 3.0) == pytest.approx(1.0, abs=1e-12)


def test_interval_length_shrinks_geometrically():
    for level in range(5):
        ratio = 0.25
        expect = _cantor.interval_length(ratio, level)
        starts, ends = _cantor.level_intervals(level, ratio, "rho")
        np.testing.assert_allclose(ends - starts, expect, atol=1e-14)
    assert _cantor.interval_length(1.0 / 3.0, 4) == pytest.approx(3.0 ** -4, abs=1e-15)


def test_ratio_validation():
    with pytest.raises(InvalidRatio):
        _cantor.gap_table(0.5, 2, "rho")
    with pytest.raises(InvalidRatio):
        _cantor.gap_table(0.0, 2, "rho")
    with pytest.raises(InvalidRatio):
        _cantor.gap_table(0.25, 2, "third")
    with pytest.raises(InvalidRatio):
        _cantor.gap_table(1.0 / 3.0, 2, "nope")
