"""Command-line interface: ``dfdreg <group> <command>``.

Grid functions and systems are passed as ``.npz`` containers (see
:mod:`dfdreg.io`); reports are printed as JSON.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import bench as bench_mod
from . import io as dio
from .analysis import delta_star, density_check, lower_bound
from .dfd import picard_solve, regularize, verify_dfd
from .filters import (check_assumption_A2, check_assumption_B, check_assumption_C, parse_filter)
from .frames import estimate_frame_bounds, parseval_defect
from .grid import Grid
from .heat import HeatOperator, MeyerWavelet, build_band_dfd, build_wvd, forward
from .param import MorozovConfig, a_priori_alpha, discrepancy, morozov_solve
from .source import parse_phi


def _emit(obj):
    print(json.dumps(bench_mod._json_safe(obj), indent=2, sort_keys=True))


# frames ---------------------------------------------------------------------

def _frames_inspect(args):
    fmt = dio.container_format(args.file)
    if fmt == "dfd":
        s = dio.load_system(args.file)
        frame = s.v if args.which == "v" else s.u
    else:
        frame = dio.load_frame(args.file)
    rec = (frame.bound_lower, frame.bound_upper)
    A, B = estimate_frame_bounds(frame) if args.estimate or not all(rec) else rec
    rng = np.random.default_rng(args.seed)
    defect = None
    if frame.tight_constant is not None:
        x = frame.grid.random(rng, frame.support)
        defect = parseval_defect(frame, x)
    _emit({"labels": len(frame), "n": frame.grid.n, "L": frame.grid.L,
           "blocks": len(frame.blocks), "bound_lower": A, "bound_upper": B,
           "recorded_bounds": list(rec), "tight": frame.tight_constant is not None,
           "tight_constant": frame.tight_constant,
           "minimal": "unknown" if frame.minimal_flag is None else frame.minimal_flag,
           "parseval_defect": defect, "truncation": frame.truncation})
    return 0


# filters --------------------------------------------------------------------

def _filters_check(args):
    f = parse_filter(args.filter)
    phi = parse_phi(args.phi)
    c = check_assumption_C(f)
    g1, g2, a2 = check_assumption_A2(f, phi)
    b = check_assumption_B(f)
    ok = c["passed"] and a2["passed"]
    _emit({"filter": f.kind, "phi": phi.spec, "C": c, "A2": {"gamma1": g1, "gamma2": g2, **a2},
           "B": b, "passed": ok, "morozov_ready": bool(ok and b["passed"])})
    return 0 if ok else 1


# heat -----------------------------------------------------------------------

def _heat_forward(args):
    x, extra = dio.load_gridfunction(args.input)
    op = HeatOperator(args.gamma, args.T, x.grid)
    y = forward(op, x)
    dio.save_gridfunction(args.output, y, gamma=args.gamma, T=args.T, source=str(args.input))
    _emit({"output": args.output, "input_norm": x.norm(), "output_norm": y.norm()})
    return 0


def _heat_build(args):
    t0 = time.perf_counter()
    grid = Grid(args.n, args.L)
    op = HeatOperator(args.gamma, args.T, grid)
    if args.gamma < 1:
        sys_ = build_wvd(op, MeyerWavelet(), (args.j_min, args.j_max))
    else:
        sys_ = build_band_dfd(op, MeyerWavelet(), (args.j_min, args.j_max), args.N_max)
    dio.save_system(args.output, sys_)
    _emit({"output": args.output, "kind": sys_.kind, "labels": len(sys_.kappa),
           "u_bounds": sys_.bounds("u"), "v_bounds": sys_.bounds("v"),
           "seconds": time.perf_counter() - t0})
    return 0


# dfd ------------------------------------------------------------------------

def _dfd_verify(args):
    s = dio.load_system(args.system)
    if s.operator is None:
        raise SystemExit("system container carries no operator")
    rep = verify_dfd(s.operator, s, tol=args.tol)
    rep.pop("residuals", None)
    _emit(rep)
    return 0 if rep["passed"] else 1


def _dfd_solve(args):
    s = dio.load_system(args.system)
    y, _ = dio.load_gridfunction(args.data)
    x = picard_solve(s, y)
    dio.save_gridfunction(args.output, x, method="picard")
    _emit({"output": args.output, "norm": x.norm()})
    return 0


def _dfd_regularize(args):
    s = dio.load_system(args.system)
    y, extra = dio.load_gridfunction(args.data)
    f = parse_filter(args.filter)
    x = regularize(s, f, args.alpha, y)
    meta = {"alpha": args.alpha, "filter": args.filter, "delta": extra.get("delta", args.delta),
            "seed": extra.get("seed", args.seed), "phi": args.phi}
    dio.save_gridfunction(args.output, x, **meta)
    _emit({"output": args.output, "norm": x.norm(), **meta})
    return 0


# param ----------------------------------------------------------------------

def _param_apriori(args):
    phi = parse_phi(args.phi)
    a_v = args.a_v
    if args.system:
        a_v = dio.load_system(args.system).bounds("v")[0]
    alpha = a_priori_alpha(phi, args.delta, args.E, a_v)
    _emit({"alpha": alpha, "residual": None, "iterations": 0,
           "constants_used": {"A_v": a_v, "E": args.E, "delta": args.delta, "phi": phi.spec}})
    return 0


def _param_morozov(args):
    s = dio.load_system(args.system)
    y, _ = dio.load_gridfunction(args.data)
    f = parse_filter(args.filter)
    cfg = MorozovConfig.for_system(s, f, tau=args.tau, tol=args.tol)
    alpha, info = morozov_solve(s, f, cfg, y, args.delta, full_output=True)
    _emit({"alpha": alpha, "residual": info["residual"], "iterations": info["iterations"],
           "discrepancy": discrepancy(s, f, alpha, y),
           "constants_used": {"tau": cfg.tau, "B_v": cfg.b_v, "A_v": cfg.a_v_lower, "rho": cfg.rho,
                              "target": info["target"], "delta": args.delta}})
    return 0


# analysis -------------------------------------------------------------------

def _analysis_lowerbound(args):
    phi = parse_phi(args.phi)
    lb = lower_bound(phi, args.E, args.delta, args.u_sup, args.v_inf, args.beta)
    _emit({"lower_bound": lb, "phi": phi.spec, "E": args.E, "delta": args.delta,
           "u_sup": args.u_sup, "v_inf": args.v_inf, "beta": args.beta})
    return 0


def _analysis_density(args):
    if args.system:
        s = dio.load_system(args.system)
        phi = parse_phi(args.phi)
        v_inf = math.sqrt(s.bounds("v")[0])
        ds = delta_star(s, phi, args.E, v_inf)
    else:
        ds = np.array([float(t) for t in args.delta_stars.split(",")])
    rep = density_check(ds, args.beta, args.delta0)
    out = rep.to_dict()
    if not args.full:
        out.pop("delta_stars")
    _emit(out)
    return 0 if rep.covered else 1


# bench ----------------------------------------------------------------------

def _report_table(table, written):
    _emit({"slope": table.slope, "slope_ci": table.slope_ci, "pass_flags": table.pass_flags,
           "warnings": table.warnings, "written": written})
    return 0 if all(table.pass_flags.values()) else 1


def _bench_run(args):
    cfg = bench_mod.ExperimentConfig.from_file(args.config)
    if args.out_dir:
        cfg.out_dir = args.out_dir
    table = bench_mod.run_experiment(cfg)
    return _report_table(table, bench_mod.emit_outputs(table, bench_mod.default_paths(cfg)))


def _bench_toy(args):
    t0 = time.perf_counter()
    cfg = bench_mod.toy_config(quick=args.quick, seed=args.seed, out_dir=args.out_dir)
    table = bench_mod.run_experiment(cfg)
    written = bench_mod.emit_outputs(table, bench_mod.default_paths(cfg))
    table.pass_flags["runtime"] = bool(not args.quick or time.perf_counter() - t0 < 10.0)
    return _report_table(table, written)


# parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dfdreg", description="Regularization by diagonal frame decomposition")
    groups = p.add_subparsers(dest="group", required=True)

    g = groups.add_parser("frames").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("inspect", help="print bounds and tightness diagnostics")
    c.add_argument("file")
    c.add_argument("--which", choices=["u", "v"], default="u")
    c.add_argument("--estimate", action="store_true", help="re-estimate bounds numerically")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=_frames_inspect)

    g = groups.add_parser("filters").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("check", help="assumption report for a filter and index function")
    c.add_argument("--filter", default="tikhonov")
    c.add_argument("--phi", default="poly:p=2")
    c.set_defaults(func=_filters_check)

    g = groups.add_parser("heat").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("forward", help="apply the forward heat map to a grid function")
    c.add_argument("--gamma", type=float, default=0.5)
    c.add_argument("--T", type=float, default=1.0)
    c.add_argument("--input", required=True)
    c.add_argument("--output", required=True)
    c.set_defaults(func=_heat_forward)
    c = g.add_parser("build-dfd", help="construct and save a DFD system")
    c.add_argument("--gamma", type=float, default=0.5)
    c.add_argument("--T", type=float, default=1.0)
    c.add_argument("--n", type=int, default=4096)
    c.add_argument("--L", type=float, default=32.0)
    c.add_argument("--j-min", dest="j_min", type=int, default=0)
    c.add_argument("--j-max", dest="j_max", type=int, default=None)
    c.add_argument("--N-max", dest="N_max", type=int, default=40)
    c.add_argument("--output", required=True)
    c.set_defaults(func=_heat_build)

    g = groups.add_parser("dfd").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("verify", help="check K* v = kappa u")
    c.add_argument("system")
    c.add_argument("--tol", type=float, default=1e-8)
    c.set_defaults(func=_dfd_verify)
    c = g.add_parser("solve", help="Picard (pseudo-inverse) solution")
    c.add_argument("system")
    c.add_argument("--data", required=True)
    c.add_argument("--output", required=True)
    c.set_defaults(func=_dfd_solve)
    c = g.add_parser("regularize", help="filtered DFD solution")
    c.add_argument("system")
    c.add_argument("--data", required=True)
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--filter", default="tikhonov")
    c.add_argument("--phi", default=None)
    c.add_argument("--delta", type=float, default=None)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--output", required=True)
    c.set_defaults(func=_dfd_regularize)

    g = groups.add_parser("param").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("apriori", help="a priori regularization parameter")
    c.add_argument("--phi", default="poly:p=2")
    c.add_argument("--delta", type=float, required=True)
    c.add_argument("--E", type=float, default=1.0)
    c.add_argument("--a-v", dest="a_v", type=float, default=1.0)
    c.add_argument("--system", default=None, help="take A_v from a saved system")
    c.set_defaults(func=_param_apriori)
    c = g.add_parser("morozov", help="discrepancy principle")
    c.add_argument("system")
    c.add_argument("--data", required=True)
    c.add_argument("--delta", type=float, required=True)
    c.add_argument("--tau", type=float, default=1.5)
    c.add_argument("--filter", default="tikhonov")
    c.add_argument("--tol", type=float, default=1e-12)
    c.set_defaults(func=_param_morozov)

    g = groups.add_parser("analysis").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("lowerbound", help="worst-case lower bound")
    c.add_argument("--phi", default="poly:p=2")
    c.add_argument("--E", type=float, default=1.0)
    c.add_argument("--delta", type=float, required=True)
    c.add_argument("--u-sup", dest="u_sup", type=float, default=1.0)
    c.add_argument("--v-inf", dest="v_inf", type=float, default=1.0)
    c.add_argument("--beta", type=float, required=True)
    c.set_defaults(func=_analysis_lowerbound)
    c = g.add_parser("density", help="coverage of (0, delta0] by the delta* intervals")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--system")
    src.add_argument("--delta-stars", dest="delta_stars", help="comma-separated values")
    c.add_argument("--phi", default="poly:p=2")
    c.add_argument("--E", type=float, default=1.0)
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--delta0", type=float, required=True)
    c.add_argument("--full", action="store_true", help="include the delta* list")
    c.set_defaults(func=_analysis_density)

    g = groups.add_parser("bench").add_subparsers(dest="cmd", required=True)
    c = g.add_parser("run", help="convergence-rate experiment from a TOML config")
    c.add_argument("--config", required=True)
    c.add_argument("--out-dir", dest="out_dir", default=None)
    c.set_defaults(func=_bench_run)
    c = g.add_parser("toy", help="diagonal toy smoke run")
    c.add_argument("--quick", action="store_true")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out-dir", dest="out_dir", default="bench_out")
    c.set_defaults(func=_bench_toy)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "j_max", 0) is None:
        args.j_max = 5 if args.gamma < 1 else 1
    return int(args.func(args) or 0)


if __name__ == "__main__":
    sys.exit(main())
