"""Directional traces at chord exit points.

Along a single chord ]alpha, beta[ the trace at the exit endpoint is the
chord average of u + (s - alpha) du/dtheta, and the trace at the entry
endpoint is the chord average of u - (beta - s) du/dtheta.  For u smooth
up to the boundary both averages collapse to the boundary values; for u
merely square integrable with a square integrable chord derivative they
are the canonical representatives, and one set of Gauss nodes per chord
evaluates both at once.

Omnidirectional consistency asks whether traces taken along different
directions agree where the directions share boundary points.  Shared
points are found by recomputing chords (never by accidental coincidence
of atoms): a probe point from one direction's atoms is reachable in
another direction exactly when the slice through it has a chord exiting
there.  A finite direction family can only ever refute agreement, so a
clean report says "not refuted", not "proved".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _gauss
from .errors import (
    DivergentChordIntegral,
    InsufficientOverlap,
    NotDirectionalBoundary,
    ValidationError,
)
from .geometry import Direction, Domain, slice_lines
from .measure import measure_atoms
from .quadrature import (
    IntegralResult,
    QuadratureSpec,
    chord_grid,
    norm_theta,
    volume_integral,
)


def _match_radius(domain: Domain) -> float:
    return 1e-6 * max(domain.diameter, 1.0)


def chord_trace_values(fld, grid, order: int):
    """Exit and entry traces for every chord of a grid.

    Returns (gamma_plus, gamma_minus), each of shape (n_chords,).
    """
    if grid.n_chords == 0:
        return np.zeros(0), np.zeros(0)
    pts, s, w = grid.gauss_points(order)
    flat = pts.reshape(-1, pts.shape[-1])
    u = np.asarray(fld.eval_many(flat), dtype=float).reshape(s.shape)
    du = np.asarray(fld.dderiv_many(flat, grid.theta), dtype=float).reshape(s.shape)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(du))):
        raise DivergentChordIntegral(
            "chord integrand not finite at a quadrature node"
        )
    rise = s - grid.alpha[:, None]
    fall = grid.beta[:, None] - s
    gplus = 0.5 * ((u + rise * du) @ w)
    gminus = 0.5 * ((u - fall * du) @ w)
    return gplus, gminus


@dataclass(frozen=True)
class TraceField:
    """Traces of one field over all atoms of one directional measure."""

    theta: Direction
    points: np.ndarray
    values: np.ndarray
    opposite_values: np.ndarray
    opposite: np.ndarray
    weights: np.ndarray
    lengths: np.ndarray
    offsets: np.ndarray
    dt: float
    n_offsets: int
    gauss_order: int
    flagged_offsets: int

    @property
    def n_atoms(self) -> int:
        return self.points.shape[0]

    def norm_sq(self) -> float:
        return float(np.sum(self.weights * self.values**2))

    def pair_sum_sq(self) -> float:
        return float(np.sum(self.weights * (self.values + self.opposite_values) ** 2))

    def diff_quotient_sq(self) -> float:
        quot = (self.values - self.opposite_values) / self.lengths
        return float(np.sum(self.weights * quot**2))

    def to_rows(self) -> np.ndarray:
        return np.column_stack([
            self.offsets,
            self.points,
            self.values,
            self.lengths,
            self.opposite,
            self.opposite_values,
        ])

    def row_header(self) -> list[str]:
        d = self.points.shape[1]
        names = ["offset"]
        names += [f"z{i+1}" for i in range(d)]
        names += ["trace", "length"]
        names += [f"zhat{i+1}" for i in range(d)]
        names += ["opposite_trace"]
        return names


def trace_field(fld, domain: Domain, theta: Direction,
                spec: QuadratureSpec | None = None) -> TraceField:
    spec = spec or QuadratureSpec()
    grid = chord_grid(domain, theta, spec.n_offsets)
    gplus, gminus = chord_trace_values(fld, grid, spec.gauss_order)
    return TraceField(
        theta=theta,
        points=grid.endpoint_plus,
        values=gplus,
        opposite_values=gminus,
        opposite=grid.endpoint_minus,
        weights=grid.weights,
        lengths=grid.lengths,
        offsets=grid.t,
        dt=grid.dt,
        n_offsets=spec.n_offsets,
        gauss_order=spec.gauss_order,
        flagged_offsets=grid.flagged_offsets,
    )


def trace_norm_sq(fld, domain: Domain, theta: Direction,
                  spec: QuadratureSpec | None = None) -> IntegralResult:
    """Boundary L2 norm squared of the trace, with refinement error."""
    spec = spec or QuadratureSpec()
    fine = trace_field(fld, domain, theta, spec)
    coarse = trace_field(fld, domain, theta, spec.coarse())
    value = fine.norm_sq()
    scale = float(np.sum(np.abs(fine.weights * fine.values**2)))
    error = abs(value - coarse.norm_sq()) + 32.0 * np.finfo(float).eps * (scale + 1.0)
    return IntegralResult(value, error, fine.flagged_offsets,
                          spec.n_offsets, spec.gauss_order, method="trace_norm_sq")


def _single_chord(domain: Domain, theta: Direction, z: np.ndarray):
    """The chord whose exit endpoint is z, as (t, alpha, beta)."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if domain.dim == 1:
        t = 0.0
        perp = np.zeros(1)
    else:
        perp = theta.perp_vector
        t = float(z @ perp)
    rows, _ = slice_lines(domain, theta, np.array([t]))
    segs = rows[0]
    if segs.shape[0]:
        exits = t * perp[None, :] + segs[:, 1:2] * theta.vector[None, :]
        dist = np.linalg.norm(exits - z[None, :], axis=1)
        k = int(np.argmin(dist))
        if dist[k] <= _match_radius(domain):
            return t, float(segs[k, 0]), float(segs[k, 1])
    raise NotDirectionalBoundary(
        f"{z} is not an exit point for direction {theta.vector}"
    )


def directional_trace(fld, domain: Domain, theta: Direction, z,
                      order: int = 16) -> float:
    """Trace of the field at one boundary point, along one direction."""
    t, a, b = _single_chord(domain, theta, np.asarray(z, dtype=float))
    x, w = _gauss.nodes(order)
    s = a + (x + 1.0) * 0.5 * (b - a)
    perp = np.zeros(domain.dim) if domain.dim == 1 else theta.perp_vector
    pts = t * perp[None, :] + s[:, None] * theta.vector[None, :]
    u = np.asarray(fld.eval_many(pts), dtype=float)
    du = np.asarray(fld.dderiv_many(pts, theta), dtype=float)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(du))):
        raise DivergentChordIntegral("chord integrand not finite")
    return float(0.5 * np.sum(w * (u + (s - a) * du)))


def lebesgue_average(fld, domain: Domain, theta: Direction, z, eps: float,
                     order: int = 16) -> float:
    """Average of the field over the last eps of the chord into z."""
    if eps <= 0.0:
        raise ValidationError("eps must be positive")
    t, a, b = _single_chord(domain, theta, np.asarray(z, dtype=float))
    h = min(eps, b - a)
    x, w = _gauss.nodes(order)
    back = (x + 1.0) * 0.5 * h
    perp = np.zeros(domain.dim) if domain.dim == 1 else theta.perp_vector
    pts = t * perp[None, :] + (b - back)[:, None] * theta.vector[None, :]
    u = np.asarray(fld.eval_many(pts), dtype=float)
    return float(0.5 * np.sum(w * u))


@dataclass(frozen=True)
class LebesgueCheck:
    eps: float
    deviation_sq: float
    bound: float
    error: float


def lebesgue_comparison(fld, domain: Domain, theta: Direction, eps: float,
                        spec: QuadratureSpec | None = None) -> LebesgueCheck:
    """Boundary L2 gap between the trace and its depth-eps averages.

    The gap integral is bounded by eps times the diameter times the
    squared chord-derivative norm.
    """
    spec = spec or QuadratureSpec()

    def gap_sq(n_offsets: int) -> float:
        grid = chord_grid(domain, theta, n_offsets)
        if grid.n_chords == 0:
            return 0.0
        gplus, _ = chord_trace_values(fld, grid, spec.gauss_order)
        x, w = _gauss.nodes(spec.gauss_order)
        h = np.minimum(eps, grid.lengths)
        back = (x[None, :] + 1.0) * 0.5 * h[:, None]
        s = grid.beta[:, None] - back
        pts = grid.base[:, None, :] + s[..., None] * grid.theta.vector
        u = np.asarray(fld.eval_many(pts.reshape(-1, pts.shape[-1])), dtype=float)
        means = 0.5 * (u.reshape(s.shape) @ w)
        return float(np.sum(grid.weights * (gplus - means) ** 2))

    value = gap_sq(spec.n_offsets)
    coarse = gap_sq(spec.coarse().n_offsets)
    error = abs(value - coarse) + 32.0 * np.finfo(float).eps * (abs(value) + 1.0)

    def dsq(pts):
        return fld.dderiv_many(pts, theta) ** 2

    dnorm = volume_integral(domain, dsq, spec, theta).value
    bound = eps * domain.diameter * dnorm
    return LebesgueCheck(eps, value, bound, error)


@dataclass(frozen=True)
class TraceInequalityReport:
    """Boundary norms of one field against its directional volume norm."""

    theta: Direction
    trace_sq: float
    pair_sum_sq: float
    diff_quotient_sq: float
    norm_theta_sq: float
    diameter: float
    error: float

    @property
    def trace_bound(self) -> float:
        return 2.0 * max(1.0, self.diameter**2) * self.norm_theta_sq

    @property
    def pair_sum_bound(self) -> float:
        return 4.0 * max(1.0, self.diameter**2) * self.norm_theta_sq

    @property
    def diff_quotient_bound(self) -> float:
        return self.norm_theta_sq

    @property
    def slacks(self) -> tuple[float, float, float]:
        return (
            self.trace_bound - self.trace_sq,
            self.pair_sum_bound - self.pair_sum_sq,
            self.diff_quotient_bound - self.diff_quotient_sq,
        )

    @property
    def holds(self) -> bool:
        margin = 3.0 * self.error
        return all(s >= -margin for s in self.slacks)


def trace_inequalities(fld, domain: Domain, theta: Direction,
                       spec: QuadratureSpec | None = None) -> TraceInequalityReport:
    spec = spec or QuadratureSpec()
    fine = trace_field(fld, domain, theta, spec)
    coarse = trace_field(fld, domain, theta, spec.coarse())
    nrm = norm_theta(fld, domain, theta, spec)
    nrm_c = norm_theta(fld, domain, theta, spec.coarse())
    error = (
        abs(fine.norm_sq() - coarse.norm_sq())
        + abs(fine.pair_sum_sq() - coarse.pair_sum_sq())
        + abs(fine.diff_quotient_sq() - coarse.diff_quotient_sq())
        + abs(nrm**2 - nrm_c**2)
        + 1e-12 * (1.0 + nrm**2)
    )
    return TraceInequalityReport(
        theta=theta,
        trace_sq=fine.norm_sq(),
        pair_sum_sq=fine.pair_sum_sq(),
        diff_quotient_sq=fine.diff_quotient_sq(),
        norm_theta_sq=nrm**2,
        diameter=domain.diameter,
        error=error,
    )


@dataclass(frozen=True)
class ConsistencyWitness:
    point: np.ndarray
    values: dict
    spread: float


@dataclass(frozen=True)
class ConsistencyReport:
    verdict: str
    tolerance: float
    max_spread: float
    disagreement_mass: float
    probed_mass: float
    n_probes: int
    n_shared: int
    transient_conflations: int = 0
    witnesses: list = field(default_factory=list)
    note: str = (
        "finite direction sample: 'in' means agreement was not refuted "
        "at this tolerance, not that it was proved"
    )

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "max_spread": self.max_spread,
            "disagreement_mass": self.disagreement_mass,
            "probed_mass": self.probed_mass,
            "n_probes": self.n_probes,
            "n_shared": self.n_shared,
            "transient_conflations": self.transient_conflations,
            "witnesses": [
                {
                    "point": list(map(float, w.point)),
                    "values": {k: float(v) for k, v in w.values.items()},
                    "spread": float(w.spread),
                }
                for w in self.witnesses
            ],
            "note": self.note,
        }


def _batched_traces(fld, domain: Domain, theta: Direction, probes: np.ndarray,
                    order: int, r_match: float) -> np.ndarray:
    """Trace of the field at each probe along theta, NaN when unreachable.

    Reachability is decided by slicing the domain through each probe and
    demanding a chord that exits there.
    """
    n = probes.shape[0]
    out = np.full(n, np.nan)
    if domain.dim == 1:
        ts = np.zeros(n)
        perp = np.zeros(1)
    else:
        perp = theta.perp_vector
        ts = probes @ perp
    rows, flags = slice_lines(domain, theta, ts)
    x, w = _gauss.nodes(order)
    vec = theta.vector
    for i in range(n):
        if flags[i]:
            continue
        segs = rows[i]
        if not segs.shape[0]:
            continue
        exits = ts[i] * perp[None, :] + segs[:, 1:2] * vec[None, :]
        dist = np.linalg.norm(exits - probes[i][None, :], axis=1)
        k = int(np.argmin(dist))
        if dist[k] > r_match:
            continue
        a, b = float(segs[k, 0]), float(segs[k, 1])
        s = a + (x + 1.0) * 0.5 * (b - a)
        pts = ts[i] * perp[None, :] + s[:, None] * vec[None, :]
        u = np.asarray(fld.eval_many(pts), dtype=float)
        du = np.asarray(fld.dderiv_many(pts, theta), dtype=float)
        if np.all(np.isfinite(u)) and np.all(np.isfinite(du)):
            out[i] = 0.5 * np.sum(w * (u + (s - a) * du))
    return out


def _jittered_probes(domain: Domain, theta: Direction, points: np.ndarray,
                     offsets: np.ndarray, dt: float) -> np.ndarray:
    """Exit points near the given atoms on slightly shifted offset lines.

    Each input atom yields two probe points, one per shifted offset; rows
    are NaN when the shifted line carries no usable chord.
    """
    n = points.shape[0]
    out = np.full((2 * n, points.shape[1]), np.nan)
    if n == 0:
        return out
    shifts = np.array([-dt / 3.0, dt / 3.0])
    ts = (offsets[:, None] + shifts[None, :]).reshape(-1)
    rows, flags = slice_lines(domain, theta, ts)
    vec = theta.vector
    if domain.dim == 1:
        perp = np.zeros(1)
    else:
        perp = theta.perp_vector
    for i in range(2 * n):
        if flags[i]:
            continue
        segs = rows[i]
        if not segs.shape[0]:
            continue
        exits = ts[i] * perp[None, :] + segs[:, 1:2] * vec[None, :]
        base = points[i // 2]
        dist = np.linalg.norm(exits - base[None, :], axis=1)
        out[i] = exits[int(np.argmin(dist))]
    return out


def consistency_report(fld, domain: Domain, directions,
                       spec: QuadratureSpec | None = None,
                       tolerance: float | None = None,
                       mass_tolerance: float = 1e-6,
                       probes_per_direction: int = 160) -> ConsistencyReport:
    """Cross-direction agreement of traces at shared boundary points.

    A disagreement counts toward the reported mass only when it persists
    at perturbed offsets.  Exit points of different directions can land
    within the matching radius without being the same boundary point;
    such coincidences carry no measure and vanish under perturbation,
    while a genuine trace mismatch survives it.
    """
    spec = spec or QuadratureSpec()
    directions = list(directions)
    if len(directions) < 2:
        raise ValidationError("need at least two directions")
    r_match = _match_radius(domain)

    probe_pts = []
    probe_wts = []
    probe_src = []
    probe_off = []
    probe_dt = []
    for idx, theta in enumerate(directions):
        mu = measure_atoms(domain, theta, spec)
        if mu.n_atoms == 0:
            continue
        stride = max(1, mu.n_atoms // probes_per_direction)
        sel = np.arange(0, mu.n_atoms, stride)
        probe_pts.append(mu.points[sel])
        probe_wts.append(mu.weights[sel])
        probe_src.append(np.full(sel.size, idx))
        probe_off.append(mu.offsets[sel])
        probe_dt.append(np.full(sel.size, mu.dt))
    if not probe_pts:
        raise InsufficientOverlap("no boundary atoms to probe")
    probes = np.concatenate(probe_pts)
    weights = np.concatenate(probe_wts)
    sources = np.concatenate(probe_src)
    offsets = np.concatenate(probe_off)
    dts = np.concatenate(probe_dt)

    values = np.full((probes.shape[0], len(directions)), np.nan)
    for j, theta in enumerate(directions):
        values[:, j] = _batched_traces(fld, domain, theta, probes,
                                       spec.gauss_order, r_match)

    reach = np.isfinite(values)
    shared = reach.sum(axis=1) >= 2
    if not np.any(shared):
        raise InsufficientOverlap(
            "no probed boundary point was reachable from two directions"
        )

    if tolerance is None:
        # Ten times the measure-mass refinement error, a crude but
        # configuration-independent scale for quadrature noise.
        errs = []
        for theta in directions:
            fine = measure_atoms(domain, theta, spec)
            coarse = measure_atoms(domain, theta, spec.coarse())
            errs.append(abs(fine.total_mass() - coarse.total_mass()))
        tolerance = 10.0 * max(max(errs), 1e-12)

    spreads = np.zeros(probes.shape[0])
    vals = np.where(reach, values, np.nan)
    with np.errstate(invalid="ignore"):
        spreads[shared] = (
            np.nanmax(vals[shared], axis=1) - np.nanmin(vals[shared], axis=1)
        )
    bad = shared & (spreads > tolerance)

    persistent = bad.copy()
    n_transient = 0
    bad_idx = np.nonzero(bad)[0]
    if bad_idx.size:
        jit_pts = {}
        for idx in bad_idx:
            key = int(sources[idx])
            jit_pts.setdefault(key, []).append(idx)
        jittered = np.full((2 * bad_idx.size, probes.shape[1]), np.nan)
        row_of = {int(i): 2 * k for k, i in enumerate(bad_idx)}
        for src, idxs in jit_pts.items():
            idxs = np.asarray(idxs)
            jp = _jittered_probes(domain, directions[src], probes[idxs],
                                  offsets[idxs], float(dts[idxs[0]]))
            for k, i in enumerate(idxs):
                jittered[row_of[int(i)] : row_of[int(i)] + 2] = jp[2 * k : 2 * k + 2]

        ok = np.all(np.isfinite(jittered), axis=1)
        jvalues = np.full((jittered.shape[0], len(directions)), np.nan)
        if np.any(ok):
            for j, theta in enumerate(directions):
                jvalues[ok, j] = _batched_traces(
                    fld, domain, theta, jittered[ok], spec.gauss_order, r_match
                )
        with np.errstate(invalid="ignore"):
            jreach = np.isfinite(jvalues).sum(axis=1)
            jspread = np.where(
                jreach >= 2,
                np.nanmax(jvalues, axis=1) - np.nanmin(jvalues, axis=1),
                0.0,
            )
        for i in bad_idx:
            r = row_of[int(i)]
            if not (jspread[r] > tolerance and jspread[r + 1] > tolerance):
                persistent[i] = False
                n_transient += 1

    probed_mass = float(np.sum(weights[shared]))
    disagreement = (
        float(np.sum(weights[persistent]) / probed_mass) if probed_mass else 0.0
    )

    order = np.argsort(spreads)[::-1]
    pool = persistent if np.any(persistent) else shared
    witnesses = []
    for i in order:
        if len(witnesses) >= 8:
            break
        if not pool[i]:
            continue
        witnesses.append(ConsistencyWitness(
            point=probes[i].copy(),
            values={
                ",".join(f"{c:+.6f}" for c in directions[j].vector):
                    float(values[i, j])
                for j in np.nonzero(reach[i])[0]
            },
            spread=float(spreads[i]),
        ))

    return ConsistencyReport(
        verdict="out" if disagreement > mass_tolerance else "in",
        tolerance=float(tolerance),
        max_spread=float(np.max(spreads[shared])),
        disagreement_mass=disagreement,
        probed_mass=probed_mass,
        n_probes=int(probes.shape[0]),
        n_shared=int(np.count_nonzero(shared)),
        transient_conflations=n_transient,
        witnesses=witnesses,
    )
