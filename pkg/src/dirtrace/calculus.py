"""Integration by parts, paired boundary fields, and limit functionals.

The chord-paired integration by parts identity: the volume integral of
u dv + v du along a direction equals the boundary sum, over chords, of
the exit-trace product minus the entry-trace product, each chord's terms
weighted by offset step.  Both sides are evaluated on the same chord
grid, so the identity is checked per configuration with the offset
discretization error cancelling structurally; what remains is honest
quadrature error, which the report carries.

The paired fields G+ and G- repackage exit and entry traces so that the
difference of their boundary inner products reproduces the volume
pairing; their atoms live on the same measure.

The nu functionals probe the Cantor-supported boundary of the cone
union: at stage n, average the field over slightly extended level-n
intervals at height 3**-n / 2, then average the averages.  Increments
are controlled by 2**((1-n)/2) times the Sobolev norm, so the sequence
converges geometrically and a tail bound encloses the limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _cantor, _gauss
from .errors import NonIntegrablePairing, ValidationError
from .fields import ScalarField, get_field
from .geometry import Direction, Domain
from .quadrature import (
    IntegralResult,
    QuadratureSpec,
    chord_grid,
    volume_integral,
)
from .trace import chord_trace_values

_FLOOR_EPS = 32.0 * np.finfo(float).eps


@dataclass(frozen=True)
class IbpReport:
    theta: Direction
    lhs: float
    rhs: float
    err_lhs: float
    err_rhs: float
    flags: int
    n_offsets: int
    gauss_order: int

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    def passes(self, factor: float = 3.0) -> bool:
        return self.residual <= factor * (self.err_lhs + self.err_rhs)

    def to_json(self) -> dict:
        return {
            "theta": list(map(float, self.theta.vector)),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "err_lhs": self.err_lhs,
            "err_rhs": self.err_rhs,
            "flags": self.flags,
            "n_offsets": self.n_offsets,
            "gauss_order": self.gauss_order,
        }


def _ibp_sides(u, v, domain, theta, n_offsets, order):
    """(lhs, rhs, lhs scale, rhs scale, flags) on one chord grid."""
    grid = chord_grid(domain, theta, n_offsets)
    if grid.n_chords == 0:
        return 0.0, 0.0, 0.0, 0.0, grid.flagged_offsets
    pts, _, w = grid.gauss_points(order)
    flat = pts.reshape(-1, pts.shape[-1])
    uu = np.asarray(u.eval_many(flat), dtype=float).reshape(grid.n_chords, order)
    vv = np.asarray(v.eval_many(flat), dtype=float).reshape(grid.n_chords, order)
    du = np.asarray(u.dderiv_many(flat, theta), dtype=float).reshape(uu.shape)
    dv = np.asarray(v.dderiv_many(flat, theta), dtype=float).reshape(uu.shape)
    per_chord = ((uu * dv + vv * du) @ w) * (0.5 * grid.lengths) * grid.chord_dt
    lhs = float(np.sum(per_chord))
    lhs_scale = float(np.sum(np.abs(per_chord)))

    up, um = chord_trace_values(u, grid, order)
    vp, vm = chord_trace_values(v, grid, order)
    terms = (up * vp - um * vm) * grid.chord_dt
    rhs = float(np.sum(terms))
    rhs_scale = float(np.sum(np.abs(terms)))
    if not (np.isfinite(lhs) and np.isfinite(rhs)):
        raise NonIntegrablePairing("boundary pairing failed to produce finite sums")
    return lhs, rhs, lhs_scale, rhs_scale, grid.flagged_offsets


def integration_by_parts(u: ScalarField, v: ScalarField, domain: Domain,
                         theta: Direction,
                         spec: QuadratureSpec | None = None) -> IbpReport:
    """Both sides of the chord-paired integration by parts identity."""
    spec = spec or QuadratureSpec()
    lhs, rhs, ls, rs, flags = _ibp_sides(u, v, domain, theta,
                                         spec.n_offsets, spec.gauss_order)
    lhs_c, rhs_c, _, _, _ = _ibp_sides(u, v, domain, theta,
                                       spec.coarse().n_offsets, spec.gauss_order)
    err_lhs = abs(lhs - lhs_c) + _FLOOR_EPS * (ls + 1.0)
    err_rhs = abs(rhs - rhs_c) + _FLOOR_EPS * (rs + 1.0)
    if abs(rhs - rhs_c) > max(0.4 * abs(rhs), 1e3):
        raise NonIntegrablePairing(
            f"boundary pairing does not settle under refinement: {rhs!r} vs {rhs_c!r}"
        )
    return IbpReport(theta, lhs, rhs, err_lhs, err_rhs, flags,
                     spec.n_offsets, spec.gauss_order)


@dataclass(frozen=True)
class PairedBoundaryField:
    """G+ and G- values of one field over the atoms of one direction."""

    theta: Direction
    points: np.ndarray
    plus: np.ndarray
    minus: np.ndarray
    weights: np.ndarray
    lengths: np.ndarray

    def inner_plus(self, other: "PairedBoundaryField") -> float:
        return float(np.sum(self.weights * self.plus * other.plus))

    def inner_minus(self, other: "PairedBoundaryField") -> float:
        return float(np.sum(self.weights * self.minus * other.minus))


def paired_boundary_field(fld: ScalarField, domain: Domain, theta: Direction,
                          spec: QuadratureSpec | None = None) -> PairedBoundaryField:
    """G+- = (a + b +- (a - b) / length) / 2 from exit trace a, entry trace b."""
    spec = spec or QuadratureSpec()
    grid = chord_grid(domain, theta, spec.n_offsets)
    a, b = chord_trace_values(fld, grid, spec.gauss_order)
    diff = (a - b) / grid.lengths
    return PairedBoundaryField(
        theta=theta,
        points=grid.endpoint_plus,
        plus=0.5 * (a + b + diff),
        minus=0.5 * (a + b - diff),
        weights=grid.weights,
        lengths=grid.lengths,
    )


@dataclass(frozen=True)
class PairedIdentityReport:
    theta: Direction
    volume_pairing: float
    bracket: float
    err_volume: float
    err_bracket: float

    @property
    def residual(self) -> float:
        return abs(self.volume_pairing - self.bracket)

    def passes(self, factor: float = 3.0) -> bool:
        return self.residual <= factor * (self.err_volume + self.err_bracket)


def paired_identity(u: ScalarField, v: ScalarField, domain: Domain,
                    theta: Direction,
                    spec: QuadratureSpec | None = None) -> PairedIdentityReport:
    """<G+u, G+v> - <G-u, G-v> against the volume pairing of u and v."""
    spec = spec or QuadratureSpec()

    def bracket_at(s: QuadratureSpec) -> float:
        gu = paired_boundary_field(u, domain, theta, s)
        gv = paired_boundary_field(v, domain, theta, s)
        return gu.inner_plus(gv) - gu.inner_minus(gv)

    lhs, _, ls, _, _ = _ibp_sides(u, v, domain, theta,
                                  spec.n_offsets, spec.gauss_order)
    lhs_c, _, _, _, _ = _ibp_sides(u, v, domain, theta,
                                   spec.coarse().n_offsets, spec.gauss_order)
    bracket = bracket_at(spec)
    bracket_c = bracket_at(spec.coarse())
    return PairedIdentityReport(
        theta=theta,
        volume_pairing=lhs,
        bracket=bracket,
        err_volume=abs(lhs - lhs_c) + _FLOOR_EPS * (ls + 1.0),
        err_bracket=abs(bracket - bracket_c) + _FLOOR_EPS * (abs(bracket) + 1.0),
    )


# ---------------------------------------------------------------------------
# Cantor-boundary limit functionals


def _stage_mean(fld: ScalarField, n: int, height: float, order: int) -> float:
    """Average of interval averages of the field at one height.

    Intervals are the 2**n surviving middle-third intervals extended by
    half the interval length on both sides.
    """
    a, b = _cantor.level_intervals(n)
    y = 0.5 * (3.0 ** (-n))
    lo = a - y
    hi = b + y
    x, w = _gauss.nodes(order)
    mids = lo[:, None] + (x[None, :] + 1.0) * 0.5 * (hi - lo)[:, None]
    pts = np.empty((mids.size, 2))
    pts[:, 0] = mids.reshape(-1)
    pts[:, 1] = height
    vals = np.asarray(fld.eval_many(pts), dtype=float).reshape(mids.shape)
    if not np.all(np.isfinite(vals)):
        raise ValidationError("field not finite on a stage interval")
    # Normalizing by the weight sum computed with the same matmul kernel
    # keeps constant fields exact: each row becomes x / x.
    means = (vals @ w) / (np.ones_like(vals) @ w)
    return float(np.mean(means))


def nu_value(fld: ScalarField, n: int, order: int = 8, mirror: bool = False) -> float:
    """Stage-n functional: interval averages at height 3**-n / 2.

    With mirror=True the field is sampled at the reflected height, which
    composes the field with the vertical flip.
    """
    if n < 0:
        raise ValidationError("stage must be nonnegative")
    y = 0.5 * (3.0 ** (-n))
    return _stage_mean(fld, n, -y if mirror else y, order)


@dataclass(frozen=True)
class NuSequence:
    values: np.ndarray
    increments: np.ndarray
    increment_bounds: np.ndarray
    h1_norm: float
    limit_estimate: float
    tail_bound: float

    @property
    def bounds_hold(self) -> bool:
        return bool(np.all(self.increments <= self.increment_bounds + 1e-12))


def nu_sequence(fld: ScalarField, n_max: int, h1_norm_value: float,
                order: int = 8) -> NuSequence:
    """Stages 0..n_max with increment bounds and a limit enclosure."""
    if n_max < 1:
        raise ValidationError("n_max must be at least 1")
    values = np.array([nu_value(fld, n, order) for n in range(n_max + 1)])
    increments = np.abs(np.diff(values))
    stages = np.arange(n_max)
    bounds = 2.0 ** ((1.0 - stages) / 2.0) * h1_norm_value
    tail = 2.0 ** ((1.0 - n_max) / 2.0) * h1_norm_value / (1.0 - 2.0 ** (-0.5))
    return NuSequence(
        values=values,
        increments=increments,
        increment_bounds=bounds,
        h1_norm=h1_norm_value,
        limit_estimate=float(values[-1]),
        tail_bound=float(tail),
    )


def mirror_gap(fld: ScalarField, n: int, order: int = 8) -> float:
    """Stage-n gap between the field and its vertical reflection."""
    return nu_value(fld, n, order) - nu_value(fld, n, order, mirror=True)


# ---------------------------------------------------------------------------
# Variational residuals


@dataclass(frozen=True)
class VariationalReport:
    residuals: list
    max_residual: float
    max_error: float

    def passes(self, factor: float = 3.0) -> bool:
        return all(
            abs(r.value) <= factor * r.error for r in self.residuals
        )


def variational_residual(fld: ScalarField, domain: Domain, tests,
                         spec: QuadratureSpec | None = None) -> VariationalReport:
    """Gradient pairings of a candidate against compactly supported tests.

    Each residual is the volume integral of grad(u) . grad(v); a field
    solving the homogeneous problem annihilates every admissible test.
    """
    spec = spec or QuadratureSpec()
    radii = [
        t.params["r"] for t in tests
        if isinstance(getattr(t, "params", None), dict) and "r" in t.params
    ]
    # Test supports are typically far smaller than a chord, so the chords
    # are panelled down to the support scale.
    panel = min(radii) / 8.0 if radii else domain.diameter / 64.0
    out = []
    for test in tests:
        def integrand(pts, _t=test):
            return np.sum(fld.grad_many(pts) * _t.grad_many(pts), axis=1)

        out.append(volume_integral(domain, integrand, spec, panel=panel))
    return VariationalReport(
        residuals=out,
        max_residual=max((abs(r.value) for r in out), default=0.0),
        max_error=max((r.error for r in out), default=0.0),
    )


def _support_inside(domain: Domain, cx: float, cy: float, r: float) -> bool:
    ang = np.linspace(0.0, 2.0 * np.pi, 33)[:-1]
    ok = True
    for rho in (r, 0.5 * r):
        ring = np.column_stack([cx + rho * np.cos(ang), cy + rho * np.sin(ang)])
        ok = ok and bool(np.all(domain.contains_many(ring)))
    return ok and domain.contains((cx, cy))


def bump_tests(domain: Domain, count: int = 16) -> list[ScalarField]:
    """Compactly supported smooth tests with support verified inside.

    For the mirrored cone union the bumps sit inside individual cones on
    both sides; for other planar domains a bounding-box grid is filtered
    by membership of the support ring.
    """
    if domain.dim != 2:
        raise ValidationError("bump tests are planar")
    cands: list[tuple[float, float, float]] = []
    if domain.kind == "bicone":
        radius = 0.15
        for a in (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0):
            for h in (0.45, 0.75):
                for sgn in (1.0, -1.0):
                    cands.append((a, sgn * h, radius))
    else:
        lo, hi = domain.bbox
        side = int(np.ceil(np.sqrt(count)))
        radius = 0.4 * float(min(hi - lo)) / side
        xs = lo[0] + (np.arange(side) + 0.5) * (hi[0] - lo[0]) / side
        ys = lo[1] + (np.arange(side) + 0.5) * (hi[1] - lo[1]) / side
        for cx in xs:
            for cy in ys:
                cands.append((float(cx), float(cy), radius))
    tests = []
    for cx, cy, r in cands:
        if len(tests) >= count:
            break
        if _support_inside(domain, cx, cy, r):
            tests.append(get_field("bump", cx=cx, cy=cy, r=r))
    if len(tests) < count:
        raise ValidationError(
            f"could only place {len(tests)} of {count} test bumps inside {domain.kind}"
        )
    return tests
