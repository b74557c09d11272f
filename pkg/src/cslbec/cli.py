"""Command-line front end.

Subcommands cover geometry factors, forward variances, exclusion bounds and
curves, repetition counts, the built-in scenario table, the stochastic
oracle and estimator calibration.  Grids/sweeps are emitted as CSV, single
structured results as JSON.  Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import core, dynamics, geometry, inference, oracles
from .scenarios import SCENARIOS

DEFAULT_SEED = 42


def emit_csv(rows, schema, path=None):
    """Write rows as RFC-4180-style CSV with LF endings.

    Floats are rendered with 9 significant digits so the output is both
    byte-stable across runs and lossless enough to reload for analysis.
    """

    def fmt(x):
        if isinstance(x, float):
            if math.isnan(x):
                return "nan"
            return f"{x:.9g}"
        return str(x)

    out = sys.stdout if path is None else open(path, "w", newline="",
                                               encoding="utf-8")
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(schema)
        for row in rows:
            writer.writerow([fmt(x) for x in row])
    finally:
        if path is not None:
            out.close()


def _emit_json(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def _parse_grid(text: str, linear: bool) -> np.ndarray:
    try:
        lo, hi, pts = text.split(":")
        lo, hi, pts = float(lo), float(hi), int(pts)
    except ValueError as exc:
        raise core.SpecError(
            f"grid must be min:max:points, got {text!r}"
        ) from exc
    if not (lo < hi and pts >= 2):
        raise core.SpecError("grid requires min < max and points >= 2")
    if linear:
        return np.linspace(lo, hi, pts)
    if lo <= 0:
        raise core.SpecError("log-spaced grid requires positive min")
    return np.geomspace(lo, hi, pts)


def _resolve(args):
    """Spec, mode and working rc from --scenario or --spec (+ overrides)."""
    if getattr(args, "scenario", None):
        if args.scenario not in SCENARIOS:
            raise core.SpecError(
                f"unknown scenario {args.scenario!r}; "
                f"available: {', '.join(sorted(SCENARIOS))}"
            )
        sc = SCENARIOS[args.scenario]
        spec, mode, rc, lambda_min = sc.spec, sc.mode, sc.rc, sc.lambda_min
    elif getattr(args, "spec", None):
        spec = core.load_spec(args.spec)
        mode, rc, lambda_min = None, None, None
    else:
        raise core.SpecError("either --scenario or --spec is required")

    if getattr(args, "mode", None):
        mode = args.mode
    if mode is None:
        if isinstance(spec.geometry, core.MziGeometry):
            mode = "mzi"
        else:
            mode = "swi_echo" if spec.protocol.echo else "swi_plain"
    if getattr(args, "rc_m", None) is not None:
        rc = args.rc_m
    if getattr(args, "lambda_min_hz", None) is not None:
        lambda_min = args.lambda_min_hz

    violations = core.validate(spec)
    if violations:
        raise core.SpecError("; ".join(violations))
    return spec, mode, rc, lambda_min


def _cmd_geometry(args):
    spec, _, _, _ = _resolve(args)
    grid = _parse_grid(args.rc, args.linear)
    if isinstance(spec.geometry, core.MziGeometry):
        overlaps = geometry.overlap_mzi(spec.geometry)
    else:
        overlaps = geometry.overlap_swi(spec.geometry)
    rows = []
    for rc in grid:
        closed = geometry.f_closed(spec.geometry, rc)
        quad = geometry.f_quadrature(overlaps, rc)
        rows.append((rc, closed.f_p, closed.f_s, quad.f_p, quad.f_s))
    emit_csv(rows, ["rc_m", "f_p", "f_s", "f_p_quadrature", "f_s_quadrature"],
             args.out)
    return 0


def _cmd_variance(args):
    spec, _, rc, _ = _resolve(args)
    if rc is None or args.lambda_hz is None:
        raise core.SpecError("variance requires --lambda-hz and --rc-m")
    point = core.CslPoint(lam=args.lambda_hz, rc=rc)
    moments = dynamics.phase_variance(spec, point)
    _emit_json({
        "sigma_phi_sq": moments.variance,
        "xi_t_sq": spec.state.n_atoms * moments.variance,
        "visibility": dynamics.visibility(spec, point),
        "valid": moments.valid,
    }, args.out)
    return 0


def _cmd_bound(args):
    spec, mode, rc, _ = _resolve(args)
    if rc is None:
        raise core.SpecError("bound requires --rc-m (or a scenario)")
    lam = inference.lambda_bound(spec, rc, mode, fp_cap_one=args.fp_cap_one)
    _emit_json({"lambda_bound_hz": lam, "rc_m": rc, "mode": mode}, args.out)
    return 0


def _cmd_curve(args):
    spec, mode, _, _ = _resolve(args)
    grid = _parse_grid(args.rc, args.linear)
    curve = inference.exclusion_curve(spec, mode, grid,
                                      fp_cap_one=args.fp_cap_one)
    rows = list(zip(curve.rc.tolist(), curve.lambda_bound.tolist()))
    emit_csv(rows, ["rc_m", "lambda_bound_hz"], args.out)
    return 0


def _cmd_repetitions(args):
    spec, mode, rc, lambda_min = _resolve(args)
    if rc is None:
        raise core.SpecError("repetitions requires --rc-m (or a scenario)")
    est = inference.repetitions(spec, rc, mode, lambda_min=lambda_min,
                                delta=args.delta, fp_cap_one=args.fp_cap_one)
    _emit_json({
        "fisher_info": est.fisher_info,
        "k": est.k,
        "k_1_5": est.k_inflated,
        "delta": est.delta,
        "lambda_min_hz": est.lambda_min,
        "mode": mode,
        "rc_m": rc,
    }, args.out)
    return 0


def _cmd_table1(args):
    rows = inference.table1(delta=args.delta, fp_cap_one=not args.no_fp_cap)
    table = []
    for name, sc, est in rows:
        table.append((name, sc.spec.state.n_atoms, sc.spec.state.xi0,
                      sc.spec.protocol.t, est.lambda_min, est.k,
                      est.k_inflated))
    header = ["scenario", "N", "xi0", "t_s", "lambda_min_hz", "k", "k_1_5"]
    widths = [12, 12, 6, 6, 14, 7, 7]
    line = "".join(h.ljust(w) for h, w in zip(header, widths))
    print(line)
    print("-" * len(line))
    for row in table:
        print("".join(
            (f"{x:.3g}" if isinstance(x, float) else str(x)).ljust(w)
            for x, w in zip(row, widths)
        ))
    if args.csv:
        emit_csv(table, header, args.csv)
    return 0


def _cmd_simulate(args):
    spec, _, rc, _ = _resolve(args)
    if rc is None or args.lambda_hz is None:
        raise core.SpecError("simulate requires --lambda-hz and --rc-m")
    point = core.CslPoint(lam=args.lambda_hz, rc=rc)
    analytic = dynamics.phase_variance(spec, point).variance
    mc = oracles.sde_sample(spec, point, n_traj=args.n_traj,
                            n_steps=args.n_steps, seed=args.seed)
    _emit_json({
        "analytic_variance": analytic,
        "mc_variance": mc.variance,
        "mc_stderr": mc.stderr_variance,
        "z_score": (mc.variance - analytic) / mc.stderr_variance,
    }, args.out)
    return 0


def _cmd_calibrate(args):
    spec, mode, rc, lambda_min = _resolve(args)
    if rc is None or lambda_min is None:
        raise core.SpecError(
            "calibrate requires --rc-m and --lambda-min-hz (or a scenario)"
        )
    if args.k is None:
        est = inference.repetitions(spec, rc, mode, lambda_min=lambda_min,
                                    delta=args.delta,
                                    fp_cap_one=args.fp_cap_one)
        k = est.k
    else:
        k = args.k
    res = inference.calibrate_estimator(
        spec, rc, mode, lambda_true=lambda_min, k=k, seed=args.seed,
        n_meta=args.n_meta, fp_cap_one=args.fp_cap_one)
    _emit_json({
        "lambda_hat_mean_hz": res.lambda_hat_mean,
        "lambda_hat_spread_hz": res.lambda_hat_spread,
        "spread_stderr_hz": res.spread_stderr,
        "cr_floor_hz": res.cr_floor,
        "relative_spread": res.lambda_hat_spread / lambda_min,
        "k": res.k,
        "n_meta": res.n_meta,
    }, args.out)
    return 0


def _cmd_scenarios(args):
    listing = {}
    for name, sc in SCENARIOS.items():
        listing[name] = {
            "mode": sc.mode,
            "rc_m": sc.rc,
            "lambda_min_hz": sc.lambda_min,
            "spec": core.spec_to_dict(sc.spec),
        }
    _emit_json(listing, args.out)
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="cslbec",
        description="Collapse-model exclusion bounds from two-mode BEC "
                    "interferometry",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", choices=sorted(SCENARIOS))
        p.add_argument("--spec", help="experiment spec JSON file")
        p.add_argument("--out", help="output file (default: stdout)")

    def add_point(p):
        p.add_argument("--lambda-hz", type=float, dest="lambda_hz")
        p.add_argument("--rc-m", type=float, dest="rc_m")

    def add_mode(p):
        p.add_argument("--mode", choices=inference.MODES)
        p.add_argument("--fp-cap-one", action="store_true",
                       help="set f_P = 1 (MZI plateau value)")

    p = sub.add_parser("geometry", help="geometry factors on an rc grid")
    add_common(p)
    p.add_argument("--rc", required=True, help="grid as min:max:points")
    p.add_argument("--linear", action="store_true")
    p.set_defaults(func=_cmd_geometry)

    p = sub.add_parser("variance", help="forward phase variance at a point")
    add_common(p)
    add_point(p)
    p.set_defaults(func=_cmd_variance)

    p = sub.add_parser("bound", help="exclusion bound lambda(rc)")
    add_common(p)
    add_point(p)
    add_mode(p)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("curve", help="exclusion curve over an rc grid")
    add_common(p)
    add_mode(p)
    p.add_argument("--rc", required=True, help="grid as min:max:points")
    p.add_argument("--linear", action="store_true")
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser("repetitions", help="required measurement repetitions")
    add_common(p)
    add_point(p)
    add_mode(p)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--lambda-min-hz", type=float, dest="lambda_min_hz")
    p.set_defaults(func=_cmd_repetitions)

    p = sub.add_parser("table1", help="repetition counts for all scenarios")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--no-fp-cap", action="store_true",
                   help="use closed-form f_P instead of the plateau cap")
    p.add_argument("--csv", help="also write the table as CSV")
    p.set_defaults(func=_cmd_table1)

    p = sub.add_parser("simulate", help="stochastic oracle vs analytics")
    add_common(p)
    add_point(p)
    p.add_argument("--n-traj", type=int, default=10_000)
    p.add_argument("--n-steps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("calibrate", help="Monte Carlo estimator calibration")
    add_common(p)
    add_point(p)
    add_mode(p)
    p.add_argument("--lambda-min-hz", type=float, dest="lambda_min_hz")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--k", type=int)
    p.add_argument("--n-meta", type=int, default=500)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("scenarios", help="list built-in scenarios")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_scenarios)

    return parser


def run(argv=None) -> int:
    # CSLBEC_THREADS bounds any worker pool; all current paths are
    # single-threaded, so it only caps numpy-level threading intent.
    os.environ.setdefault("CSLBEC_THREADS", "1")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (core.SpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (geometry.QuadratureError, oracles.PositivityError,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
