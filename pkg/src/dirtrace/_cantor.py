"""Cantor set primitives: gap recursion, surviving intervals, exact distance.

Two construction schemes over [0, 1] are supported.  Both remove one open
gap from the middle of every surviving interval, level by level:

* ``third``: the removed gap is the exact middle third of the interval.
* ``rho``: the gap removed from a depth-k interval is centred and has
  length ratio**(k+1), which for ratio = 1/3 reproduces ``third`` up to
  rounding.

Gaps are indexed m = 1, 2, 3, ... in binary-tree order: the gap of the
root interval is m = 1, and the gaps of the two children of interval m
are 2m and 2m+1.  Depth(m) = floor(log2 m).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidRatio

# Recursive descent stops refining once the bracketing interval is this
# short; points that deep are reported as lying on the set.
DESCENT_FLOOR = 1e-15

_MAX_DEPTH = 80


def _check_ratio(ratio: float) -> None:
    if not (0.0 < ratio <= 1.0 / 3.0):
        raise InvalidRatio(f"ratio must lie in ]0, 1/3], got {ratio!r}")


def _split(a: np.ndarray, b: np.ndarray, depth: int, ratio: float, scheme: str):
    """Gap endpoints (c, d) removed from depth-`depth` intervals [a, b]."""
    if scheme == "third":
        c = (2.0 * a + b) / 3.0
        d = (a + 2.0 * b) / 3.0
    else:
        half_gap = 0.5 * ratio ** (depth + 1)
        mid = 0.5 * (a + b)
        c = mid - half_gap
        d = mid + half_gap
    return c, d


def _check_scheme(ratio: float, scheme: str) -> None:
    if scheme not in ("third", "rho"):
        raise InvalidRatio(f"unknown scheme {scheme!r}")
    if scheme == "third" and abs(ratio - 1.0 / 3.0) > 1e-12:
        raise InvalidRatio("scheme 'third' requires ratio 1/3")


def gap_table(ratio: float, level: int, scheme: str = "third") -> np.ndarray:
    """All gaps removed up to depth `level`, as rows (c, d, depth).

    Row i holds gap index m = i + 1; rows are in binary-tree order, so the
    2**k gaps of depth k occupy rows 2**k - 1 ... 2**(k+1) - 2.
    """
    _check_ratio(ratio)
    _check_scheme(ratio, scheme)
    if level < 0:
        raise InvalidRatio("level must be >= 0")
    a = np.array([0.0])
    b = np.array([1.0])
    out = np.empty((2 ** (level + 1) - 1, 3))
    row = 0
    for depth in range(level + 1):
        c, d = _split(a, b, depth, ratio, scheme)
        n = a.size
        out[row : row + n, 0] = c
        out[row : row + n, 1] = d
        out[row : row + n, 2] = depth
        row += n
        nxt_a = np.empty(2 * n)
        nxt_b = np.empty(2 * n)
        nxt_a[0::2] = a
        nxt_b[0::2] = c
        nxt_a[1::2] = d
        nxt_b[1::2] = b
        a, b = nxt_a, nxt_b
    return out


def level_intervals(level: int, ratio: float = 1.0 / 3.0, scheme: str = "third"):
    """Surviving closed intervals (a_m, b_m) after `level` removal rounds."""
    _check_ratio(ratio)
    _check_scheme(ratio, scheme)
    a = np.array([0.0])
    b = np.array([1.0])
    for depth in range(level):
        c, d = _split(a, b, depth, ratio, scheme)
        nxt_a = np.empty(2 * a.size)
        nxt_b = np.empty(2 * a.size)
        nxt_a[0::2] = a
        nxt_b[0::2] = c
        nxt_a[1::2] = d
        nxt_b[1::2] = b
        a, b = nxt_a, nxt_b
    return a, b


def distance_many(x: np.ndarray, ratio: float = 1.0 / 3.0, scheme: str = "third") -> np.ndarray:
    """Exact distance from each point to the Cantor set, by recursive descent.

    The descent never enumerates gaps: each point follows its own branch of
    the construction until it falls in a gap (distance to the nearer gap
    endpoint) or the bracket drops below DESCENT_FLOOR (distance 0).
    """
    _check_ratio(ratio)
    _check_scheme(ratio, scheme)
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    dist = np.zeros(flat.shape)
    below = flat < 0.0
    above = flat > 1.0
    dist[below] = -flat[below]
    dist[above] = flat[above] - 1.0
    active = ~(below | above)
    idx = np.nonzero(active)[0]
    xa = flat[idx]
    a = np.zeros(xa.shape)
    b = np.ones(xa.shape)
    for depth in range(_MAX_DEPTH):
        if idx.size == 0:
            break
        c, d = _split(a, b, depth, ratio, scheme)
        in_gap = (xa > c) & (xa < d)
        if np.any(in_gap):
            g = np.minimum(xa[in_gap] - c[in_gap], d[in_gap] - xa[in_gap])
            dist[idx[in_gap]] = g
        keep = ~in_gap
        idx = idx[keep]
        xa = xa[keep]
        a = a[keep]
        b = b[keep]
        c = c[keep]
        d = d[keep]
        right = xa >= d
        a = np.where(right, d, a)
        b = np.where(right, b, c)
        done = (b - a) < DESCENT_FLOOR
        if np.any(done):
            idx = idx[~done]
            xa = xa[~done]
            a = a[~done]
            b = b[~done]
    return dist.reshape(x.shape)


def distance(x: float, ratio: float = 1.0 / 3.0, scheme: str = "third") -> float:
    return float(distance_many(np.array([x]), ratio, scheme)[0])


def removed_length(ratio: float, level: int) -> float:
    """Total length of all gaps up to depth `level` (rho scheme)."""
    _check_ratio(ratio)
    return float(sum((2.0**k) * ratio ** (k + 1) for k in range(level + 1)))


def total_gap_length(ratio: float) -> float:
    """Limit of removed_length: ratio / (1 - 2 ratio), or 1 at ratio 1/3."""
    _check_ratio(ratio)
    if abs(ratio - 1.0 / 3.0) < 1e-15:
        return 1.0
    return ratio / (1.0 - 2.0 * ratio)


def max_useful_level(ratio: float, feature: float) -> int:
    """Smallest level whose gaps are all shorter than `feature`."""
    _check_ratio(ratio)
    level = 0
    while ratio ** (level + 1) >= feature and level < _MAX_DEPTH:
        level += 1
    return level


def interval_length(ratio: float, level: int) -> float:
    """Length of a surviving interval at the given depth."""
    _check_ratio(ratio)
    if abs(ratio - 1.0 / 3.0) < 1e-15:
        return 3.0 ** (-level)
    length = 1.0
    for k in range(level):
        length = 0.5 * (length - ratio ** (k + 1))
    return length


def gap_count(level: int) -> int:
    return 2 ** (level + 1) - 1


def depth_of_index(m: int) -> int:
    if m < 1:
        raise ValueError("gap index is 1-based")
    return int(math.floor(math.log2(m)))
