"""Domains, directions and ray-exit geometry.

The central object is the chord decomposition: for a unit direction theta
and an offset y on the hyperplane through the origin orthogonal to theta,
the open set {s : y + s theta in Omega} splits into countably many maximal
open intervals ]alpha, beta[.  Each interval is a chord.  Exit distances,
boundary measures and traces are all read off chords, so every domain kind
below only has to answer two questions: is a point inside, and what are
the chords of a given line.

Chords are computed in closed form where the boundary allows it (interval
unions, polygons, the cubic cusp, circle/slit constructions, and the
axis-aligned sections of the Cantor constructions) and otherwise by
sampling membership along the line at a fixed fraction of the diameter,
then bisecting every sign change.  Closed-form endpoints are exact up to
rounding (guarded by EPS_CLOSED); bisected endpoints are accurate to
EPS_SCAN.  Chord endpoints always fail membership, chords shorter than
the kind's endpoint tolerance are dropped, and a slice is flagged when
two sign changes sit closer than RESOLUTION_FACTOR times that tolerance
(a thin feature at the limit of resolution).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _cantor
from .errors import (
    NotDirectionalBoundary,
    PointOutsideDomain,
    UnknownName,
    ValidationError,
)

# Endpoint tolerance for closed-form chord construction (rounding guard).
EPS_CLOSED = 1e-10
# Endpoint tolerance for scan-and-bisect chord construction.
EPS_SCAN = 1e-7
# Shortest closed-form chord kept.  Closed-form endpoints are exact to
# rounding, so only machine-noise lengths are meaningless; near-degenerate
# chords (a cusp tip) carry real measure and must survive.
EPS_EXACT = 1e-13
# Membership sampling step along scanned rays, as a fraction of diameter.
SCAN_STEP_FRACTION = 1e-4
# Two sign changes closer than this multiple of the endpoint tolerance
# raise the per-slice resolution flag.
RESOLUTION_FACTOR = 4.0

_SCAN_CHUNK_POINTS = 2_000_000


def _worker_count() -> int:
    raw = os.environ.get("DIRTRACE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, min(n, os.cpu_count() or 1))


def _cross(a, b) -> float:
    return a[0] * b[1] - a[1] * b[0]


class Direction:
    """A unit vector in R^1 or R^2."""

    __slots__ = ("vector",)

    def __init__(self, components) -> None:
        v = np.asarray(components, dtype=float).copy()
        if v.ndim != 1 or v.size not in (1, 2):
            raise ValidationError("direction must be a 1D or 2D vector")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-12:
            if norm == 0.0:
                raise ValidationError("zero direction")
            v = v / norm
        # Snap near-axis components so axis directions stay exactly on axis.
        snapped = np.round(v)
        if np.max(np.abs(v - snapped)) < 1e-15:
            v = snapped
        v.setflags(write=False)
        self.vector = v

    @classmethod
    def from_angle(cls, angle: float) -> "Direction":
        return cls([math.cos(angle), math.sin(angle)])

    @property
    def dim(self) -> int:
        return self.vector.size

    @property
    def angle(self) -> float:
        if self.dim != 2:
            raise ValidationError("angle is only defined in 2D")
        return math.atan2(self.vector[1], self.vector[0])

    def __neg__(self) -> "Direction":
        return Direction(-self.vector)

    @property
    def perp_vector(self) -> np.ndarray:
        """Canonical unit normal spanning the offset hyperplane.

        The sign convention makes theta and -theta share the same normal,
        so the two opposite directions see identical offset grids.
        """
        if self.dim != 2:
            raise ValidationError("perp_vector is only defined in 2D")
        p = np.array([-self.vector[1], self.vector[0]])
        if p[0] < 0.0 or (p[0] == 0.0 and p[1] < 0.0):
            p = -p
        p.setflags(write=False)
        return p

    def key(self) -> tuple:
        return tuple(float(c) for c in self.vector)

    def is_axis(self) -> bool:
        return bool(np.any(self.vector == 0.0)) or self.dim == 1

    def __repr__(self) -> str:
        comps = ", ".join(f"{c:+.12g}" for c in self.vector)
        return f"Direction([{comps}])"

    def __eq__(self, other) -> bool:
        return isinstance(other, Direction) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())


def direction_table(count: int, start_angle: float = 0.0) -> list[Direction]:
    """`count` equally spaced planar directions starting at `start_angle`."""
    if count < 1:
        raise ValidationError("need at least one direction")
    return [
        Direction.from_angle(start_angle + 2.0 * math.pi * k / count)
        for k in range(count)
    ]


def axis_direction(axis: int, sign: int = 1) -> Direction:
    v = np.zeros(2)
    v[axis] = float(sign)
    return Direction(v)


@dataclass(frozen=True)
class Chord:
    """One maximal open segment ]alpha, beta[ of a line inside a domain."""

    direction: Direction
    base: np.ndarray  # point on the offset hyperplane
    alpha: float
    beta: float
    flagged: bool = False

    @property
    def length(self) -> float:
        return self.beta - self.alpha

    @property
    def endpoint_plus(self) -> np.ndarray:
        return self.base + self.beta * self.direction.vector

    @property
    def endpoint_minus(self) -> np.ndarray:
        return self.base + self.alpha * self.direction.vector

    @property
    def midpoint(self) -> np.ndarray:
        return self.base + 0.5 * (self.alpha + self.beta) * self.direction.vector

    def point_at(self, s: float) -> np.ndarray:
        return self.base + s * self.direction.vector


@dataclass(frozen=True)
class BoundaryPoint:
    """A boundary point together with the direction it was reached along."""

    point: np.ndarray
    direction: Direction
    side: int  # +1: exit endpoint of the chord, -1: entry endpoint


class Domain:
    """Base class: membership plus chord decompositions."""

    kind: str = ""

    # -- mandatory interface -------------------------------------------------
    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    # -- optional closed forms ----------------------------------------------
    def coordinate_slices(self, fixed_axis: int, value: float):
        """Open intervals of the moving coordinate along an axis line.

        `fixed_axis` is the coordinate held at `value`; intervals are in the
        other coordinate.  Return None when no closed form exists.
        """
        return None

    def line_slices(self, theta: Direction, ts: np.ndarray):
        """Closed-form chords for arbitrary directions, or None."""
        return None

    def offset_breakpoints(self, theta: Direction):
        """Offsets where the chord length function has kinks, or None.

        Offset grids never place a cell across one of these, which keeps
        the midpoint rule exact when chord length is piecewise affine.
        """
        return None

    # -- shared helpers -------------------------------------------------------
    def contains(self, x) -> bool:
        pt = np.asarray(x, dtype=float).reshape(1, -1)
        return bool(self.contains_many(pt)[0])

    @property
    def diameter(self) -> float:
        lo, hi = self.bbox
        return float(np.linalg.norm(hi - lo))

    @property
    def volume(self) -> float | None:
        """Exact Lebesgue measure when known in closed form."""
        return None

    @property
    def endpoint_tolerance(self) -> float:
        return EPS_CLOSED

    def cache_key(self) -> tuple:
        return (self.kind, tuple(sorted(self.params().items(), key=lambda kv: kv[0])))

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params()}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params()})"


# ---------------------------------------------------------------------------
# 1D interval unions


class IntervalUnion(Domain):
    kind = "interval_union"

    def __init__(self, intervals) -> None:
        arr = np.asarray(intervals, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
            raise ValidationError("intervals must be a non-empty (n, 2) array")
        order = np.argsort(arr[:, 0], kind="stable")
        arr = arr[order]
        if np.any(arr[:, 1] <= arr[:, 0]):
            raise ValidationError("each interval needs a < b")
        if np.any(arr[1:, 0] < arr[:-1, 1]):
            raise ValidationError("intervals overlap")
        arr.setflags(write=False)
        self.intervals = arr

    @property
    def dim(self) -> int:
        return 1

    @property
    def bbox(self):
        return (
            np.array([self.intervals[0, 0]]),
            np.array([self.intervals[-1, 1]]),
        )

    @property
    def diameter(self) -> float:
        return float(self.intervals[-1, 1] - self.intervals[0, 0])

    @property
    def volume(self) -> float:
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        x = np.asarray(pts, dtype=float).reshape(-1)
        idx = np.searchsorted(self.intervals[:, 0], x, side="right") - 1
        ok = idx >= 0
        safe = np.clip(idx, 0, len(self.intervals) - 1)
        inside = (x > self.intervals[safe, 0]) & (x < self.intervals[safe, 1])
        return ok & inside

    def params(self) -> dict:
        return {"intervals": tuple(map(tuple, self.intervals.tolist()))}

    def slices_1d(self, sign: int) -> np.ndarray:
        if sign > 0:
            return self.intervals.copy()
        flipped = np.column_stack(
            (-self.intervals[::-1, 1], -self.intervals[::-1, 0])
        )
        return flipped


# ---------------------------------------------------------------------------
# Polygons


class Polygon(Domain):
    kind = "polygon"

    def __init__(self, vertices) -> None:
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValidationError("polygon needs at least 3 planar vertices")
        v.setflags(write=False)
        self.vertices = v
        lo = v.min(axis=0)
        hi = v.max(axis=0)
        self._lo, self._hi = lo, hi
        self._scale = float(np.linalg.norm(hi - lo))
        self._edge_from = v
        self._edge_to = np.roll(v, -1, axis=0)

    @property
    def dim(self) -> int:
        return 2

    @property
    def bbox(self):
        return self._lo.copy(), self._hi.copy()

    @property
    def diameter(self) -> float:
        d = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((d * d).sum(axis=2)).max())

    @property
    def volume(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        return float(abs(np.sum(x * yn - xn * y)) / 2.0)

    def params(self) -> dict:
        return {"vertices": tuple(map(tuple, self.vertices.tolist()))}

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
        inside = np.zeros(len(pts), dtype=bool)
        boundary = np.zeros(len(pts), dtype=bool)
        tol = 1e-12 * max(self._scale, 1.0)
        for A, B in zip(self._edge_from, self._edge_to):
            ex, ey = B[0] - A[0], B[1] - A[1]
            # on-edge points count as outside (the domain is open)
            crossval = ex * (y - A[1]) - ey * (x - A[0])
            seg_lo_x, seg_hi_x = min(A[0], B[0]) - tol, max(A[0], B[0]) + tol
            seg_lo_y, seg_hi_y = min(A[1], B[1]) - tol, max(A[1], B[1]) + tol
            near = (
                (np.abs(crossval) <= tol * max(abs(ex), abs(ey), 1.0))
                & (x >= seg_lo_x)
                & (x <= seg_hi_x)
                & (y >= seg_lo_y)
                & (y <= seg_hi_y)
            )
            boundary |= near
            cond = (A[1] > y) != (B[1] > y)
            if not np.any(cond):
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = A[0] + (y - A[1]) * ex / ey
            inside ^= cond & (x < xint)
        return inside & ~boundary

    def offset_breakpoints(self, theta: Direction):
        # chord length is affine between vertex projections
        return np.asarray(self.vertices, dtype=float) @ theta.perp_vector

    def line_slices(self, theta: Direction, ts: np.ndarray):
        tv = theta.vector
        p = theta.perp_vector
        ts = np.asarray(ts, dtype=float)
        n = ts.size
        svals: list[list[float]] = [[] for _ in range(n)]
        cpt = _cross(p, tv)
        for A, B in zip(self._edge_from, self._edge_to):
            E = B - A
            denom = _cross(E, tv)
            if abs(denom) <= 1e-14 * max(self._scale, 1.0):
                continue
            u = (ts * cpt - _cross(A, tv)) / denom
            valid = (u >= -1e-12) & (u <= 1.0 + 1e-12)
            if not np.any(valid):
                continue
            s_edge = float(A @ tv) + u * float(E @ tv)
            for i in np.nonzero(valid)[0]:
                svals[i].append(float(s_edge[i]))
        return _pair_candidates(self, theta, ts, svals)


def _pair_candidates(domain, theta, ts, svals):
    """Turn per-offset crossing parameters into inside intervals.

    Candidate cells between consecutive crossings are classified by a single
    batched membership test at their midpoints, then adjacent inside cells
    are merged.  Robust against duplicate crossings at vertices.
    """
    tv = theta.vector
    p = theta.perp_vector
    tol = 1e-12 * max(domain.diameter, 1.0)
    cells = []  # (offset index, lo, hi)
    for i, vals in enumerate(svals):
        if len(vals) < 2:
            continue
        arr = np.sort(np.asarray(vals))
        keep = np.concatenate(([True], np.diff(arr) > tol))
        arr = arr[keep]
        for k in range(len(arr) - 1):
            cells.append((i, arr[k], arr[k + 1]))
    out = [np.empty((0, 2)) for _ in range(len(ts))]
    if not cells:
        return out
    cell_arr = np.asarray([(c[1], c[2]) for c in cells])
    rows = np.asarray([c[0] for c in cells])
    mids = 0.5 * (cell_arr[:, 0] + cell_arr[:, 1])
    pts = ts[rows, None] * p[None, :] + mids[:, None] * tv[None, :]
    inside = domain.contains_many(pts)
    for i in range(len(ts)):
        sel = rows == i
        if not np.any(sel):
            continue
        segs = cell_arr[sel]
        ins = inside[sel]
        merged = []
        cur = None
        for (lo, hi), flag in zip(segs, ins):
            if not flag:
                if cur is not None:
                    merged.append(cur)
                    cur = None
                continue
            if cur is not None and lo <= cur[1] + tol:
                cur = (cur[0], hi)
            else:
                if cur is not None:
                    merged.append(cur)
                cur = (lo, hi)
        if cur is not None:
            merged.append(cur)
        if merged:
            out[i] = np.asarray(merged)
    return out


# ---------------------------------------------------------------------------
# Cubic cusp


class Cusp(Domain):
    """{(x, y): 0 < y < 1, |x| < y**3}: an inward cusp at the origin."""

    kind = "cusp"

    @property
    def dim(self) -> int:
        return 2

    @property
    def bbox(self):
        return np.array([-1.0, 0.0]), np.array([1.0, 1.0])

    @property
    def diameter(self) -> float:
        return 2.0

    @property
    def volume(self) -> float:
        return 0.5

    def params(self) -> dict:
        return {}

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
        return (y > 0.0) & (y < 1.0) & (np.abs(x) < y * y * y)

    def coordinate_slices(self, fixed_axis: int, value: float):
        if fixed_axis == 1:  # horizontal line at height value
            if not (0.0 < value < 1.0):
                return []
            w = value**3
            return [(-w, w)]
        # vertical line at x = value
        if not (-1.0 < value < 1.0):
            return []
        lo = abs(value) ** (1.0 / 3.0)
        if lo >= 1.0:
            return []
        return [(lo, 1.0)]


# ---------------------------------------------------------------------------
# Cantor cone union, bicone, comb


class ConeUnionCantor(Domain):
    """Union of open cones {|x - a| < y < 1} over Cantor apex points a."""

    kind = "cone_union_cantor"

    def __init__(self, ratio: float = 1.0 / 3.0, level: int = 12, scheme: str = "third"):
        _cantor._check_ratio(ratio)
        _cantor._check_scheme(ratio, scheme)
        self.ratio = float(ratio)
        self.level = int(level)
        self.scheme = scheme
        gaps = _cantor.gap_table(ratio, level, scheme)
        order = np.argsort(gaps[:, 0], kind="stable")
        self._gaps_sorted = gaps[order]
        self._gap_lengths = self._gaps_sorted[:, 1] - self._gaps_sorted[:, 0]

    @property
    def dim(self) -> int:
        return 2

    @property
    def bbox(self):
        return np.array([-1.0, 0.0]), np.array([2.0, 1.0])

    @property
    def diameter(self) -> float:
        return 3.0

    @property
    def volume(self) -> float:
        r2 = self.ratio * self.ratio
        return 2.0 - r2 / (4.0 * (1.0 - 2.0 * r2))

    def params(self) -> dict:
        return {"ratio": self.ratio, "level": self.level, "scheme": self.scheme}

    def _dist(self, x: np.ndarray) -> np.ndarray:
        return _cantor.distance_many(x, self.ratio, self.scheme)

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
        band = (y > 0.0) & (y < 1.0)
        out = np.zeros(len(pts), dtype=bool)
        if np.any(band):
            out[band] = self._dist(x[band]) < y[band]
        return out

    def apex_slice(self, height: float) -> list[tuple[float, float]]:
        """Open horizontal section {x : dist(x, C) < height}."""
        h = float(height)
        if h <= 0.0:
            return []
        long = self._gap_lengths > 2.0 * h
        pieces = []
        cur = -h
        for c, d in self._gaps_sorted[long, :2]:
            pieces.append((cur, c + h))
            cur = d - h
        pieces.append((cur, 1.0 + h))
        return pieces

    def coordinate_slices(self, fixed_axis: int, value: float):
        if fixed_axis == 1:
            if not (0.0 < value < 1.0):
                return []
            return self.apex_slice(value)
        d = float(self._dist(np.array([value]))[0])
        if d >= 1.0:
            return []
        return [(d, 1.0)]


class Bicone(Domain):
    """Cone union together with its mirror image across the x-axis."""

    kind = "bicone"

    def __init__(self, ratio: float = 1.0 / 3.0, level: int = 12, scheme: str = "third"):
        self.upper = ConeUnionCantor(ratio, level, scheme)

    @property
    def ratio(self) -> float:
        return self.upper.ratio

    @property
    def level(self) -> int:
        return self.upper.level

    @property
    def dim(self) -> int:
        return 2

    @property
    def bbox(self):
        return np.array([-1.0, -1.0]), np.array([2.0, 1.0])

    @property
    def diameter(self) -> float:
        return math.sqrt(13.0)

    @property
    def volume(self) -> float:
        return 2.0 * self.upper.volume

    def params(self) -> dict:
        return self.upper.params()

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        mirrored = pts.copy()
        mirrored[:, 1] = np.abs(mirrored[:, 1])
        return self.upper.contains_many(mirrored) & (pts[:, 1] != 0.0)

    # Scan endpoints carry bisection noise, so flag with the scan epsilon.
    slice_eps = EPS_SCAN

    def line_slices(self, theta: Direction, ts: np.ndarray):
        """Scanned slices with the waist pinch restored.

        The two halves meet only on the x-axis, where every point fails
        membership.  A point sample can straddle that pinch without
        noticing it, so any scanned chord containing the axis crossing is
        split there and both new endpoints are refined by bisection.
        """
        if theta.is_axis():
            return None
        ts = np.asarray(ts, dtype=float)
        raw = _scan_slices(self, theta, ts)
        tv = theta.vector
        p = theta.perp_vector
        if tv[1] == 0.0:
            return raw
        s_star = -(ts * p[1]) / tv[1]

        hits = []  # (line index, segment index, lo, hi)
        for i, segs in enumerate(raw):
            segs = np.asarray(segs, dtype=float).reshape(-1, 2)
            raw[i] = segs
            k = np.nonzero((segs[:, 0] < s_star[i]) & (s_star[i] < segs[:, 1]))[0]
            if k.size:
                hits.append((i, int(k[0]), segs[k[0], 0], segs[k[0], 1]))
        if not hits:
            return raw

        idx = np.array([h[0] for h in hits])
        los = np.array([h[2] for h in hits])
        his = np.array([h[3] for h in hits])
        stars = s_star[idx]
        cross = ts[idx, None] * p[None, :] + stars[:, None] * tv[None, :]
        outside = ~self.contains_many(cross)
        end_a = _refine_boundary_many(self, ts[idx], tv, p, los, stars)
        start_b = _refine_boundary_many(self, ts[idx], tv, p, his, stars)
        for m, (i, k, lo, hi) in enumerate(hits):
            if not outside[m]:
                continue
            raw[i] = np.concatenate(
                [raw[i][:k], [(lo, end_a[m]), (start_b[m], hi)], raw[i][k + 1 :]],
                axis=0,
            )
        return raw

    def coordinate_slices(self, fixed_axis: int, value: float):
        if fixed_axis == 1:
            return self.upper.coordinate_slices(1, abs(value))
        d = float(self.upper._dist(np.array([value]))[0])
        if d >= 1.0:
            return []
        return [(-1.0, -d), (d, 1.0)]


class CantorComb(Domain):
    """Open square with Cantor teeth: full lower half, gap columns above."""

    kind = "cantor_comb"

    def __init__(self, ratio: float = 0.25, level: int = 12, scheme: str = "rho"):
        _cantor._check_ratio(ratio)
        _cantor._check_scheme(ratio, scheme)
        self.ratio = float(ratio)
        self.level = int(level)
        self.scheme = scheme
        gaps = _cantor.gap_table(ratio, level, scheme)
        order = np.argsort(gaps[:, 0], kind="stable")
        self._gaps_sorted = gaps[order][:, :2]

    @property
    def dim(self) -> int:
        return 2

    @property
    def bbox(self):
        return np.array([0.0, -1.0]), np.array([1.0, 1.0])

    @property
    def diameter(self) -> float:
        return math.sqrt(5.0)

    @property
    def volume(self) -> float:
        return 1.0 + _cantor.total_gap_length(self.ratio)

    def params(self) -> dict:
        return {"ratio": self.ratio, "level": self.level, "scheme": self.scheme}

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
        inx = (x > 0.0) & (x < 1.0) & (y > -1.0) & (y < 1.0)
        upper = inx & (y >= 0.0)
        out = inx & (y < 0.0)
        if np.any(upper):
            out[upper] = _cantor.distance_many(x[upper], self.ratio, self.scheme) > 0.0
        return out

    def line_slices(self, theta: Direction, ts: np.ndarray):
        """Exact oblique slices from the gap table.

        The teeth meet any non-axis line in a set a point scan cannot
        see, so the chords above the axis are built per gap column and
        joined with the lower rectangle chord when the axis crossing
        falls inside the same gap.
        """
        if theta.is_axis():
            return None
        tv = theta.vector
        p = theta.perp_vector
        ts = np.asarray(ts, dtype=float)
        c = self._gaps_sorted[:, 0]
        d = self._gaps_sorted[:, 1]
        out = []
        for t in ts:
            bx = t * p[0]
            by = t * p[1]
            sx = sorted(((0.0 - bx) / tv[0], (1.0 - bx) / tv[0]))
            s_ym1 = (-1.0 - by) / tv[1]
            s_y0 = (0.0 - by) / tv[1]
            s_y1 = (1.0 - by) / tv[1]
            low = (max(min(s_ym1, s_y0), sx[0]), min(max(s_ym1, s_y0), sx[1]))
            up_lo, up_hi = min(s_y0, s_y1), max(s_y0, s_y1)

            sc = (c - bx) / tv[0]
            sd = (d - bx) / tv[0]
            glo = np.maximum(np.minimum(sc, sd), up_lo)
            ghi = np.minimum(np.maximum(sc, sd), up_hi)
            keep = ghi > glo
            pieces = np.column_stack((glo[keep], ghi[keep]))

            segs = []
            if low[1] > low[0]:
                x_star = bx + s_y0 * tv[0]
                j = np.searchsorted(c, x_star) - 1
                joined = False
                if 0 <= j < c.size and c[j] < x_star < d[j]:
                    # crossing inside a gap: its column continues the
                    # lower chord
                    touch = np.isclose(pieces, s_y0, rtol=0.0, atol=1e-12)
                    col = np.nonzero(touch.any(axis=1))[0]
                    if col.size:
                        k = int(col[0])
                        lo = min(low[0], pieces[k, 0])
                        hi = max(low[1], pieces[k, 1])
                        segs.append((lo, hi))
                        pieces = np.delete(pieces, k, axis=0)
                        joined = True
                if not joined:
                    segs.append(low)
            if pieces.size:
                segs.extend(map(tuple, pieces))
            segs.sort()
            out.append(np.asarray(segs) if segs else np.empty((0, 2)))
        return out

    def coordinate_slices(self, fixed_axis: int, value: float):
        if fixed_axis == 1:
            if not (-1.0 < value < 1.0):
                return []
            if value < 0.0:
                return [(0.0, 1.0)]
            return [tuple(cd) for cd in self._gaps_sorted]
        if not (0.0 < value < 1.0):
            return []
        d = float(_cantor.distance_many(np.array([value]), self.ratio, self.scheme)[0])
        if d > 0.0:
            return [(-1.0, 1.0)]
        return [(-1.0, 0.0)]


# ---------------------------------------------------------------------------
# Disk with a Cantor slit removed


class DiskMinusCantor(Domain):
    """Open disk around (1/2, 0) of radius 2 minus the Cantor set on the axis."""

    kind = "disk_minus_cantor"

    CENTER = np.array([0.5, 0.0])
    RADIUS = 2.0

    def __init__(self, ratio: float = 1.0 / 3.0, level: int = 12, scheme: str = "third"):
        _cantor._check_ratio(ratio)
        _cantor._check_scheme(ratio, scheme)
        self.ratio = float(ratio)
        self.level = int(level)
        self.scheme = scheme
        gaps = _cantor.gap_table(ratio, level, scheme)
        order = np.argsort(gaps[:, 0], kind="stable")
        self._gaps_sorted = gaps[order][:, :2]

    @property
    def dim(self) -> int:
        return 2

    @property
    def bbox(self):
        c, r = self.CENTER, self.RADIUS
        return c - r, c + r

    @property
    def diameter(self) -> float:
        return 2.0 * self.RADIUS

    @property
    def volume(self) -> float:
        return math.pi * self.RADIUS**2

    def params(self) -> dict:
        return {"ratio": self.ratio, "level": self.level, "scheme": self.scheme}

    def _on_slit(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        on = (y == 0.0) & (x >= 0.0) & (x <= 1.0)
        if np.any(on):
            d = _cantor.distance_many(x[on], self.ratio, self.scheme)
            res = np.zeros(on.shape, dtype=bool)
            res[on] = d == 0.0
            return res
        return np.zeros(on.shape, dtype=bool)

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        dx = pts[:, 0] - self.CENTER[0]
        dy = pts[:, 1] - self.CENTER[1]
        indisk = dx * dx + dy * dy < self.RADIUS**2
        return indisk & ~self._on_slit(pts[:, 0], pts[:, 1])

    def line_slices(self, theta: Direction, ts: np.ndarray):
        tv = theta.vector
        p = theta.perp_vector
        ts = np.asarray(ts, dtype=float)
        base = ts[:, None] * p[None, :] - self.CENTER[None, :]
        b = base @ tv
        c = (base * base).sum(axis=1) - self.RADIUS**2
        disc = b * b - c
        out = []
        for i, t in enumerate(ts):
            if disc[i] <= 0.0:
                out.append(np.empty((0, 2)))
                continue
            root = math.sqrt(disc[i])
            lo, hi = -b[i] - root, -b[i] + root
            splits = self._slit_splits(t, tv, p, lo, hi)
            pieces = []
            cur = lo
            for s in splits:
                pieces.append((cur, s))
                cur = s
            pieces.append((cur, hi))
            out.append(np.asarray(pieces))
        return out

    def _slit_splits(self, t, tv, p, lo, hi) -> list[float]:
        if tv[1] != 0.0:
            s0 = (0.0 - t * p[1]) / tv[1]
            if not (lo < s0 < hi):
                return []
            x0 = t * p[0] + s0 * tv[0]
            if 0.0 <= x0 <= 1.0 and float(
                _cantor.distance_many(np.array([x0]), self.ratio, self.scheme)[0]
            ) == 0.0:
                return [s0]
            return []
        # Horizontal line: it meets the slit only when it sits exactly on
        # the axis, in which case every retained Cantor point splits it.
        if t * p[1] != 0.0:
            return []
        splits = []
        pieces = [0.0] + [v for cd in self._gaps_sorted for v in cd] + [1.0]
        endpoints = sorted(set(pieces))
        for e in endpoints:
            s = (e - t * p[0]) / tv[0]
            if lo < s < hi:
                splits.append(s)
        return sorted(splits)


# ---------------------------------------------------------------------------
# Rectangle with an interior slit


class SlitRectangle(Domain):
    """Open axis-aligned rectangle minus a closed vertical segment."""

    kind = "slit_rectangle"

    def __init__(self, x0, x1, y0, y1, slit_x, slit_y0, slit_y1) -> None:
        if not (x0 < slit_x < x1 and y0 <= slit_y0 < slit_y1 <= y1):
            raise ValidationError("slit must sit inside the rectangle")
        self.x0, self.x1, self.y0, self.y1 = map(float, (x0, x1, y0, y1))
        self.slit_x = float(slit_x)
        self.slit_y0, self.slit_y1 = float(slit_y0), float(slit_y1)
        self._rect = Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])

    @property
    def dim(self) -> int:
        return 2

    @property
    def bbox(self):
        return np.array([self.x0, self.y0]), np.array([self.x1, self.y1])

    @property
    def diameter(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    @property
    def volume(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def params(self) -> dict:
        return {
            "x0": self.x0,
            "x1": self.x1,
            "y0": self.y0,
            "y1": self.y1,
            "slit_x": self.slit_x,
            "slit_y0": self.slit_y0,
            "slit_y1": self.slit_y1,
        }

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
        inside = (x > self.x0) & (x < self.x1) & (y > self.y0) & (y < self.y1)
        on_slit = (x == self.slit_x) & (y >= self.slit_y0) & (y <= self.slit_y1)
        return inside & ~on_slit

    def line_slices(self, theta: Direction, ts: np.ndarray):
        tv = theta.vector
        p = theta.perp_vector
        rect_slices = self._rect.line_slices(theta, ts)
        out = []
        for t, segs in zip(np.asarray(ts, dtype=float), rect_slices):
            if segs.size == 0:
                out.append(segs)
                continue
            if tv[0] != 0.0:
                s_star = (self.slit_x - t * p[0]) / tv[0]
                y_star = t * p[1] + s_star * tv[1]
                if not (self.slit_y0 <= y_star <= self.slit_y1):
                    out.append(segs)
                    continue
                pieces = []
                for lo, hi in segs:
                    if lo < s_star < hi:
                        pieces.append((lo, s_star))
                        pieces.append((s_star, hi))
                    else:
                        pieces.append((lo, hi))
                out.append(np.asarray(pieces))
            else:
                # vertical line: remove the closed slit range when on it
                if t * p[0] != self.slit_x:
                    out.append(segs)
                    continue
                sgn = tv[1]
                cut_lo = min(self.slit_y0 * sgn, self.slit_y1 * sgn)
                cut_hi = max(self.slit_y0 * sgn, self.slit_y1 * sgn)
                pieces = []
                for lo, hi in segs:
                    a, b = max(lo, cut_lo), min(hi, cut_hi)
                    if a >= b:
                        pieces.append((lo, hi))
                        continue
                    if lo < a:
                        pieces.append((lo, a))
                    if b < hi:
                        pieces.append((b, hi))
                out.append(np.asarray(pieces) if pieces else np.empty((0, 2)))
        return out


# ---------------------------------------------------------------------------
# Chord computation


def hyperplane_range(domain: Domain, theta: Direction) -> tuple[float, float]:
    """Projection of the bounding box onto the offset hyperplane."""
    if domain.dim == 1:
        return (0.0, 0.0)
    p = theta.perp_vector
    lo, hi = domain.bbox
    corners = np.array([[lo[0], lo[1]], [lo[0], hi[1]], [hi[0], lo[1]], [hi[0], hi[1]]])
    proj = corners @ p
    return float(proj.min()), float(proj.max())


def _axis_slices(domain: Domain, theta: Direction, ts: np.ndarray):
    tv = theta.vector
    moving = 0 if tv[0] != 0.0 else 1
    fixed = 1 - moving
    sign = tv[moving]
    out = []
    for t in np.asarray(ts, dtype=float):
        segs = domain.coordinate_slices(fixed, float(t))
        if segs is None:
            return None
        if not len(segs):
            out.append(np.empty((0, 2)))
            continue
        arr = np.asarray(segs, dtype=float)
        if sign < 0:
            arr = np.column_stack((-arr[::-1, 1], -arr[::-1, 0]))
        out.append(arr)
    return out


def _scan_slices(domain: Domain, theta: Direction, ts: np.ndarray):
    tv = theta.vector
    p = theta.perp_vector
    ts = np.asarray(ts, dtype=float)
    lo, hi = domain.bbox
    corners = np.array([[lo[0], lo[1]], [lo[0], hi[1]], [hi[0], lo[1]], [hi[0], hi[1]]])
    proj = corners @ tv
    step = SCAN_STEP_FRACTION * domain.diameter
    smin = float(proj.min()) - 2.0 * step
    smax = float(proj.max()) + 2.0 * step
    ns = int(math.ceil((smax - smin) / step)) + 1
    s = np.linspace(smin, smax, ns)
    n_iter = int(math.ceil(math.log2(max(s[1] - s[0], EPS_SCAN) / EPS_SCAN))) + 2

    rows_per_chunk = max(1, _SCAN_CHUNK_POINTS // ns)
    chunks = [
        (start, min(start + rows_per_chunk, ts.size))
        for start in range(0, ts.size, rows_per_chunk)
    ]

    def do_chunk(bounds):
        start, stop = bounds
        tc = ts[start:stop]
        pts = tc[:, None, None] * p[None, None, :] + s[None, :, None] * tv[None, None, :]
        mask = domain.contains_many(pts.reshape(-1, 2)).reshape(tc.size, ns)
        mask[:, 0] = False
        mask[:, -1] = False
        delta = np.diff(mask.astype(np.int8), axis=1)
        rr, cc = np.nonzero(delta)
        kind = delta[rr, cc]  # +1 enter, -1 exit
        if rr.size == 0:
            return [np.empty((0, 2)) for _ in tc]
        pin = np.where(kind > 0, s[cc + 1], s[cc])
        pout = np.where(kind > 0, s[cc], s[cc + 1])
        tvals = tc[rr]
        for _ in range(n_iter):
            mid = 0.5 * (pin + pout)
            mpts = tvals[:, None] * p[None, :] + mid[:, None] * tv[None, :]
            ins = domain.contains_many(mpts)
            pin = np.where(ins, mid, pin)
            pout = np.where(ins, pout, mid)
        res = []
        for local_i in range(tc.size):
            sel = rr == local_i
            if not np.any(sel):
                res.append(np.empty((0, 2)))
                continue
            ends = pout[sel]
            kinds = kind[sel]
            # transitions come out ordered in s; enters and exits alternate
            alphas = ends[kinds > 0]
            betas = ends[kinds < 0]
            res.append(np.column_stack((alphas, betas)))
        return res

    workers = _worker_count()
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(do_chunk, chunks))
    else:
        parts = [do_chunk(c) for c in chunks]
    out: list[np.ndarray] = []
    for part in parts:
        out.extend(part)
    return out


def _refine_boundary_many(domain, ts, tv, p, s_in, s_out) -> np.ndarray:
    """Bisect between inside and outside line parameters, one pair per line.

    Returns the inside-side bounds, so open chords built from them stay
    inside the domain.
    """
    s_in = np.array(s_in, dtype=float)
    s_out = np.array(s_out, dtype=float)
    for _ in range(60):
        mid = 0.5 * (s_in + s_out)
        live = (mid != s_in) & (mid != s_out)
        if not np.any(live):
            break
        pts = ts[:, None] * p[None, :] + mid[:, None] * tv[None, :]
        inside = domain.contains_many(pts)
        s_in = np.where(live & inside, mid, s_in)
        s_out = np.where(live & ~inside, mid, s_out)
    return s_in


def _finalize_slices(domain, theta, ts, raw, eps):
    """Drop short chords, nudge endpoints outside, compute per-slice flags."""
    tv = theta.vector
    p = theta.perp_vector if domain.dim == 2 else None
    # Exact endpoints only have rounding noise, so closed-form kinds keep
    # chords all the way down to machine scale.
    short = eps if eps > EPS_CLOSED else EPS_EXACT
    flags = np.zeros(len(raw), dtype=bool)
    cleaned = []
    for i, segs in enumerate(raw):
        segs = np.asarray(segs, dtype=float).reshape(-1, 2)
        if segs.size:
            gaps_prev = np.diff(np.concatenate([segs[:, 1][:-1, None], segs[:, 0][1:, None]], axis=1), axis=1)
            lengths = segs[:, 1] - segs[:, 0]
            # A gap of exactly zero is a slit: two maximal intervals that
            # share an excluded endpoint.  Only positive gaps below the
            # resolution are unresolved features.
            if np.any(lengths < RESOLUTION_FACTOR * short) or (
                gaps_prev.size
                and np.any(
                    (gaps_prev > 0.0) & (gaps_prev < RESOLUTION_FACTOR * short)
                )
            ):
                flags[i] = True
            segs = segs[lengths > short]
        cleaned.append(segs)
    # endpoint nudging: every retained endpoint must fail membership
    counts = [len(c) for c in cleaned]
    total = int(np.sum(counts))
    if total and domain.dim == 2:
        allseg = np.concatenate([c for c in cleaned if len(c)], axis=0)
        tvals = np.concatenate(
            [np.full(len(c), ts[i]) for i, c in enumerate(cleaned) if len(c)]
        )
        for col, sign in ((0, -1.0), (1, 1.0)):
            svals = allseg[:, col].copy()
            pts = tvals[:, None] * p[None, :] + svals[:, None] * tv[None, :]
            bad = domain.contains_many(pts)
            it = 0
            while np.any(bad) and it < 10:
                stepv = np.maximum(np.abs(svals[bad]) * 2.0**-50, 1e-15 * max(domain.diameter, 1.0))
                svals[bad] = svals[bad] + sign * stepv * 2.0**it
                pts = tvals[bad, None] * p[None, :] + svals[bad, None] * tv[None, :]
                newbad = domain.contains_many(pts)
                tmp = bad.copy()
                tmp[bad] = newbad
                bad = tmp
                it += 1
            allseg[:, col] = svals
        # write back
        pos = 0
        rebuilt = []
        for c in cleaned:
            n = len(c)
            rebuilt.append(allseg[pos : pos + n])
            pos += n
        cleaned = rebuilt
    return cleaned, flags


def slice_lines(domain: Domain, theta: Direction, ts) -> tuple[list[np.ndarray], np.ndarray]:
    """Chord intervals for a batch of hyperplane offsets.

    Returns (intervals, flags): intervals[i] is a (k_i, 2) array of open
    (alpha, beta) pairs for offset ts[i]; flags[i] is True when the slice
    hit the resolution limit and should be skipped by quadrature.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if domain.dim == 1:
        if not isinstance(domain, IntervalUnion):
            raise ValidationError("only interval unions are supported in 1D")
        sign = 1 if theta.vector[0] > 0 else -1
        segs = domain.slices_1d(sign)
        return [segs.copy() for _ in ts], np.zeros(ts.size, dtype=bool)

    raw = domain.line_slices(theta, ts)
    eps = getattr(domain, "slice_eps", EPS_CLOSED)
    if raw is None and theta.is_axis():
        raw = _axis_slices(domain, theta, ts)
        eps = EPS_CLOSED
    if raw is None:
        raw = _scan_slices(domain, theta, ts)
        eps = EPS_SCAN
    return _finalize_slices(domain, theta, ts, raw, eps)


def chords(domain: Domain, theta: Direction, y) -> list[Chord]:
    """Ordered maximal open segments of the line through y along theta."""
    if domain.dim == 1:
        t = 0.0
        base = np.zeros(1)
    else:
        y = np.asarray(y, dtype=float).reshape(2)
        p = theta.perp_vector
        t = float(y @ p)
        base = t * p
    intervals, flags = slice_lines(domain, theta, np.array([t]))
    flagged = bool(flags[0])
    return [
        Chord(theta, base, float(a), float(b), flagged)
        for a, b in intervals[0]
    ]


def exit_distance(domain: Domain, x, theta: Direction) -> float:
    """Distance travelled from x along theta before leaving the domain."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if not domain.contains(x):
        raise PointOutsideDomain(f"{x.tolist()} is not inside the domain")
    s = float(x @ theta.vector) if domain.dim == 2 else float(x[0] * theta.vector[0])
    for ch in chords(domain, theta, x if domain.dim == 2 else None):
        if ch.alpha - 4.0 * domain.endpoint_tolerance <= s <= ch.beta + 4.0 * domain.endpoint_tolerance:
            if ch.alpha <= s <= ch.beta:
                return ch.beta - s
    raise PointOutsideDomain(
        f"no chord through {x.tolist()} along {theta!r}; tangential ray?"
    )


def exit_point(domain: Domain, x, theta: Direction) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    return x + exit_distance(domain, x, theta) * theta.vector


def opposite_endpoint(
    domain: Domain, z, theta: Direction, r_match: float | None = None
) -> tuple[np.ndarray, float]:
    """Other endpoint of the chord exiting at z, and the chord's length.

    z must lie on the exit set of theta up to r_match (default 1e-6 of the
    diameter); otherwise NotDirectionalBoundary is raised.
    """
    if r_match is None:
        r_match = 1e-6 * max(domain.diameter, 1.0)
    z = np.asarray(z, dtype=float).reshape(-1)
    if domain.dim == 2:
        s = float(z @ theta.vector)
        clist = chords(domain, theta, z)
    else:
        s = float(z[0] * theta.vector[0])
        clist = chords(domain, theta, None)
    best = None
    for ch in clist:
        err = abs(ch.beta - s)
        if err <= r_match and (best is None or err < best[0]):
            best = (err, ch)
    if best is None:
        raise NotDirectionalBoundary(
            f"{z.tolist()} is not an exit point for {theta!r}"
        )
    ch = best[1]
    return ch.endpoint_minus, ch.length


# ---------------------------------------------------------------------------
# Construction helpers and serialization

_KINDS = {
    "interval_union": IntervalUnion,
    "polygon": Polygon,
    "cusp": Cusp,
    "cone_union_cantor": ConeUnionCantor,
    "bicone": Bicone,
    "cantor_comb": CantorComb,
    "disk_minus_cantor": DiskMinusCantor,
    # The slit-disk construction travels under two historical names.
    "square_minus_cantor": DiskMinusCantor,
    "slit_rectangle": SlitRectangle,
}


def domain_from_json(payload: dict) -> Domain:
    if not isinstance(payload, dict) or "kind" not in payload:
        raise ValidationError("domain JSON needs a 'kind' entry")
    kind = payload["kind"]
    params = payload.get("params", {})
    extra = set(payload) - {"kind", "params"}
    if extra:
        raise ValidationError(f"unknown domain keys: {sorted(extra)}")
    cls = _KINDS.get(kind)
    if cls is None:
        raise UnknownName(f"unknown domain kind {kind!r}")
    if kind == "interval_union":
        return cls(params["intervals"])
    if kind == "polygon":
        return cls(params["vertices"])
    if kind == "slit_rectangle":
        return cls(**params)
    if kind == "cusp":
        if params:
            raise ValidationError("cusp takes no parameters")
        return cls()
    allowed = {"ratio", "level", "scheme"}
    bad = set(params) - allowed
    if bad:
        raise ValidationError(f"unknown parameters {sorted(bad)} for kind {kind!r}")
    return cls(**params)
