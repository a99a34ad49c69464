"""Command line front end.

Every subcommand writes its results as files under --out (default the
working directory) and prints the file names it wrote.  Outputs are
byte-identical across runs with the same configuration: file names and
row orders are deterministic, floats are serialized with repr, and each
file embeds the package version and a hash of the configuration that
produced it.

Exit codes: 0 on success, 2 for invalid configuration, 3 when a checked
invariant fails beyond tolerance (or a computation cannot be completed
reliably).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, calculus, fields, fractal, oned, trace
from .errors import (
    DirtraceError,
    InvalidRatio,
    NotInH1tr,
    OverlappingGaps,
    UnknownName,
    ValidationError,
)
from .geometry import Direction, direction_table
from .measure import measure_atoms, total_mass_result
from .quadrature import QuadratureSpec, h1_norm

_CONFIG_ERRORS = (ValidationError, UnknownName, InvalidRatio, OverlappingGaps)


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _np_default(obj):
    # results dicts mix plain values with numpy scalars from the reports
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_json(path: Path, config: dict, results: dict) -> None:
    payload = {
        "version": __version__,
        "config": config,
        "config_hash": _config_hash(config),
        "results": results,
    }
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2, default=_np_default) + "\n"
    )
    print(path)


def _write_csv(path: Path, config: dict, header: list[str], rows) -> None:
    lines = [f"# dirtrace {__version__} config {_config_hash(config)}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(repr(float(x)) for x in row))
    path.write_text("\n".join(lines) + "\n")
    print(path)


def _spec_from(args) -> QuadratureSpec:
    return QuadratureSpec(
        n_offsets=args.ny,
        gauss_order=args.gauss,
        mc_samples=args.mc_samples,
        seed=args.seed,
    )


def _domain_from(args):
    params = {}
    for key in ("ratio", "level", "scheme"):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    return fractal.named_domain(args.domain, **params)


def _direction_from(args, dim: int) -> Direction:
    if getattr(args, "angle", None) is not None:
        if dim == 1:
            raise ValidationError("--angle is only meaningful in dimension two")
        return Direction.from_angle(args.angle)
    index = args.theta or 0
    if dim == 1:
        if index not in (0, 1):
            raise ValidationError("1d direction index must be 0 (+1) or 1 (-1)")
        return Direction([1.0] if index == 0 else [-1.0])
    table = direction_table(args.directions)
    if not (0 <= index < len(table)):
        raise ValidationError(
            f"direction index {index} outside table of {len(table)}"
        )
    return table[index]


def _common_config(args, **extra) -> dict:
    cfg = {
        "command": args.command,
        "ny": args.ny,
        "gauss": args.gauss,
        "seed": args.seed,
    }
    cfg.update(extra)
    return cfg


def _cmd_measure(args) -> int:
    domain = _domain_from(args)
    theta = _direction_from(args, domain.dim)
    spec = _spec_from(args)
    mu = measure_atoms(domain, theta, spec)
    res = total_mass_result(domain, theta, spec)
    config = _common_config(args, domain=args.domain,
                            theta=list(map(float, theta.vector)))
    tag = _config_hash(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / f"measure_{tag}.csv", config, mu.row_header(), mu.to_rows())

    results = {
        "total_mass": res.value,
        "error": res.error,
        "flags": res.flags,
        "n_atoms": mu.n_atoms,
    }
    code = 0
    if domain.volume is not None:
        tol = args.tolerance if args.tolerance is not None else 10.0 * res.error + 1e-9
        results["volume"] = domain.volume
        results["mass_matches_volume"] = abs(res.value - domain.volume) <= tol
        if not results["mass_matches_volume"]:
            code = 3
    _write_json(out / f"measure_{tag}.json", config, results)
    return code


def _cmd_trace(args) -> int:
    domain = _domain_from(args)
    theta = _direction_from(args, domain.dim)
    spec = _spec_from(args)
    fld = fields.parse_field(args.field)
    tf = trace.trace_field(fld, domain, theta, spec)
    report = trace.trace_inequalities(fld, domain, theta, spec)
    config = _common_config(args, domain=args.domain, field=args.field,
                            theta=list(map(float, theta.vector)))
    tag = _config_hash(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / f"trace_{tag}.csv", config, tf.row_header(), tf.to_rows())
    results = {
        "trace_norm_sq": report.trace_sq,
        "pair_sum_sq": report.pair_sum_sq,
        "diff_quotient_sq": report.diff_quotient_sq,
        "norm_theta_sq": report.norm_theta_sq,
        "bounds": {
            "trace": report.trace_bound,
            "pair_sum": report.pair_sum_bound,
            "diff_quotient": report.diff_quotient_bound,
        },
        "slacks": list(report.slacks),
        "error": report.error,
        "holds": report.holds,
    }
    _write_json(out / f"trace_{tag}.json", config, results)
    return 0 if report.holds else 3


def _cmd_ibp(args) -> int:
    domain = _domain_from(args)
    theta = _direction_from(args, domain.dim)
    spec = _spec_from(args)
    u = fields.parse_field(args.u)
    v = fields.parse_field(args.v)
    report = calculus.integration_by_parts(u, v, domain, theta, spec)
    tol = args.tolerance
    if tol is None:
        tol = max(3.0 * (report.err_lhs + report.err_rhs), 1e-12)
    config = _common_config(args, domain=args.domain, u=args.u, v=args.v,
                            theta=list(map(float, theta.vector)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = report.to_json()
    results["tolerance"] = tol
    results["within_tolerance"] = report.residual <= tol
    _write_json(out / f"ibp_{_config_hash(config)}.json", config, results)
    return 0 if report.residual <= tol else 3


def _cmd_lebesgue(args) -> int:
    domain = _domain_from(args)
    theta = _direction_from(args, domain.dim)
    spec = _spec_from(args)
    fld = fields.parse_field(args.field)
    checks = [trace.lebesgue_comparison(fld, domain, theta, eps, spec)
              for eps in args.eps]
    config = _common_config(args, domain=args.domain, field=args.field,
                            theta=list(map(float, theta.vector)), eps=args.eps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ok = all(c.deviation_sq <= c.bound + 3.0 * c.error for c in checks)
    results = {
        "checks": [
            {
                "eps": c.eps,
                "deviation_sq": c.deviation_sq,
                "bound": c.bound,
                "error": c.error,
            }
            for c in checks
        ],
        "within_bound": ok,
    }
    _write_json(out / f"lebesgue_{_config_hash(config)}.json", config, results)
    return 0 if ok else 3


def _cmd_nu(args) -> int:
    domain = _domain_from(args)
    spec = _spec_from(args)
    fld = fields.parse_field(args.field)
    levels = args.levels
    rows = []
    for n in range(levels + 1):
        y = 0.5 * 3.0 ** (-n)
        upper = calculus.nu_value(fld, n, spec.gauss_order)
        lower = calculus.nu_value(fld, n, spec.gauss_order, mirror=True)
        rows.append((n, y, upper, lower, upper - lower))
    h1 = h1_norm(fld, domain, spec)
    seq = calculus.nu_sequence(fld, levels, h1, spec.gauss_order) if levels >= 1 else None
    config = _common_config(args, domain=args.domain, field=args.field,
                            levels=levels)
    tag = _config_hash(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / f"nu_{tag}.csv", config,
               ["n", "y_n", "nu", "nu_mirror", "gap"], rows)
    results = {
        "h1_norm": h1,
        "values": [r[2] for r in rows],
        "gaps": [r[4] for r in rows],
    }
    code = 0
    if seq is not None:
        results["increments"] = list(map(float, seq.increments))
        results["increment_bounds"] = list(map(float, seq.increment_bounds))
        results["limit_estimate"] = seq.limit_estimate
        results["tail_bound"] = seq.tail_bound
        results["bounds_hold"] = seq.bounds_hold
        if fld.smooth and not seq.bounds_hold:
            code = 3
    _write_json(out / f"nu_{tag}.json", config, results)
    return code


def _cmd_staircase(args) -> int:
    gaps = fractal.cantor_gaps(args.ratio, args.level, args.scheme)
    levels = fractal.staircase_levels(gaps, args.alpha, args.beta, args.pmax,
                                      margin=args.margin)
    stair = levels[-1]
    sups = [fractal.sup_difference(levels[p], levels[p + 1])
            for p in range(len(levels) - 1)]
    bounds = [2.0 ** (-1 - p) for p in range(len(sups))]
    values = stair.breakpoints[:, 1]
    monotone = bool(np.all(np.diff(values) >= 0.0))
    endpoints_exact = values[0] == 0.0 and values[-1] == 1.0
    ok = monotone and endpoints_exact and all(
        s <= b + 1e-15 for s, b in zip(sups, bounds)
    )
    config = _common_config(args, ratio=args.ratio, level=args.level,
                            scheme=args.scheme, pmax=args.pmax,
                            alpha=args.alpha, beta=args.beta,
                            margin=args.margin)
    tag = _config_hash(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / f"staircase_{tag}.csv", config, ["t", "value"],
               stair.to_rows())
    _write_json(out / f"staircase_{tag}.json", config, {
        "segments": stair.segment_count,
        "sup_steps": sups,
        "sup_bounds": bounds,
        "monotone": monotone,
        "endpoints_exact": endpoints_exact,
        "holds": ok,
    })
    return 0 if ok else 3


def _cmd_oned(args) -> int:
    domain = _domain_from(args)
    if domain.dim != 1:
        raise ValidationError("the oned command needs a one-dimensional domain")
    fld = fields.parse_field(args.field)
    u = oned.PiecewiseH1.from_field(fld, domain.intervals)
    report = oned.membership_report(u)
    results = {
        "verdict": report.verdict,
        "isolated_points": list(map(float, report.isolated)),
        "witnesses": [
            {"point": w.point, "left": w.left, "right": w.right}
            for w in report.witnesses
        ],
        "approximations": [],
    }
    if report.verdict == "in":
        for n in args.n:
            res = oned.continuous_approximation(u, n, args.truncation)
            results["approximations"].append({
                "n": n,
                "distance": res.distance,
                "unselected_length": res.unselected_length,
                "selected_count": int(res.selected.size),
                "truncation": res.truncation,
            })
    config = _common_config(args, domain=args.domain, field=args.field,
                            n=list(args.n))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / f"oned_{_config_hash(config)}.json", config, results)
    return 0


def _cmd_consistency(args) -> int:
    domain = _domain_from(args)
    spec = _spec_from(args)
    fld = fields.parse_field(args.field)
    if domain.dim == 1:
        directions = [Direction([1.0]), Direction([-1.0])]
    else:
        directions = direction_table(args.directions)
    report = trace.consistency_report(fld, domain, directions, spec,
                                      tolerance=args.tolerance)
    config = _common_config(args, domain=args.domain, field=args.field,
                            directions=args.directions)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / f"consistency_{_config_hash(config)}.json", config,
                report.to_json())
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--ny", type=int, default=4096, help="offset grid size")
    p.add_argument("--gauss", type=int, default=8, choices=(4, 8, 16))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mc-samples", type=int, default=20000)
    p.add_argument("--tolerance", type=float, default=None)


def _add_domain(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--domain", required=required,
                   help=f"one of: {', '.join(fractal.DOMAIN_NAMES)}")
    p.add_argument("--ratio", type=float, default=None)
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--scheme", default=None, choices=("third", "rho"))


def _add_direction(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta", type=int, default=None,
                   help="index into the direction table")
    p.add_argument("--angle", type=float, default=None,
                   help="direction angle in radians (overrides --theta)")
    p.add_argument("--directions", type=int, default=16,
                   help="size of the direction table")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dirtrace",
        description="directional boundary measures, traces and their calculus",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="directional boundary measure atoms")
    _add_domain(p)
    _add_direction(p)
    _add_common(p)
    p.set_defaults(func=_cmd_measure)

    p = sub.add_parser("trace", help="trace field and trace inequalities")
    _add_domain(p)
    _add_direction(p)
    p.add_argument("--field", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("ibp", help="chord-paired integration by parts")
    _add_domain(p)
    _add_direction(p)
    p.add_argument("--u", required=True)
    p.add_argument("--v", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_ibp)

    p = sub.add_parser("lebesgue", help="trace versus chord averages")
    _add_domain(p)
    _add_direction(p)
    p.add_argument("--field", required=True)
    p.add_argument("--eps", type=float, nargs="+",
                   default=[0.1, 0.01, 0.001])
    _add_common(p)
    p.set_defaults(func=_cmd_lebesgue)

    p = sub.add_parser("nu", help="Cantor-boundary stage functionals")
    _add_domain(p)
    p.add_argument("--field", required=True)
    p.add_argument("--levels", type=int, default=8)
    _add_common(p)
    p.set_defaults(func=_cmd_nu)

    p = sub.add_parser("staircase", help="devil staircase construction")
    p.add_argument("--ratio", type=float, default=1.0 / 3.0)
    p.add_argument("--level", type=int, default=10)
    p.add_argument("--scheme", default="third", choices=("third", "rho"))
    p.add_argument("--pmax", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--margin", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=_cmd_staircase)

    p = sub.add_parser("oned", help="1d membership and continuous approximation")
    _add_domain(p)
    p.add_argument("--field", required=True)
    p.add_argument("--n", type=int, nargs="+", default=[4, 6, 8, 10])
    p.add_argument("--truncation", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_oned)

    p = sub.add_parser("consistency", help="cross-direction trace agreement")
    _add_domain(p)
    p.add_argument("--field", required=True)
    p.add_argument("--directions", type=int, default=8)
    _add_common(p)
    p.set_defaults(func=_cmd_consistency)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags, 0 on --help/--version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NotInH1tr as exc:
        print(f"membership refuted: {exc}", file=sys.stderr)
        return 3
    except DirtraceError as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
