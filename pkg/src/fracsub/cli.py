"""Command-line interface: ``fracsub <subcommand> ...``.

Exit codes: 0 on success, 2 for invalid parameters, 3 when a numerical
accuracy check fails or an ensemble runs out of memory (diagnostics go to
stderr as JSON; completed paths are kept in ``ensemble_partial.csv``).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .ctrw_engine import CtrwSpec, JumpLaw, WaitingLaw
from .errors import AccuracyError, ParameterError
from .harness import (
    EnsembleInterrupted,
    RunConfig,
    analytic_cdf,
    compare_to_analytic,
    ctrw_limit_study,
    ks_distance,
    ks_threshold,
    reproduce_figures,
    run_ensemble,
)
from .paths import RefinementLevel, path_streams, subordinated_path, write_path_csv
from .stable_laws import StableLaw
from .subordination import DiffusionParams, green_function_fourier, subordinate_density


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(target, header, rows):
    """Comma-separated, header row, floats with 17 significant digits."""
    if target is None:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows([[_fmt(v) for v in r] for r in rows])
        return
    Path(target).parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([[_fmt(v) for v in r] for r in rows])


def write_json(target, obj):
    Path(target).parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def write_gnuplot(target, csv_name, columns, title, xlabel, ylabel, style="steps"):
    """Plain-text gnuplot script plotting columns of a CSV file."""
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "plot " + ", \\\n     ".join(f"'{csv_name}' using {x}:{y} with {style}" for x, y in columns),
        "",
    ]
    Path(target).write_text("\n".join(lines))


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _tag(t):
    return ("%g" % t).replace("+", "")


def _params(args):
    return DiffusionParams(args.alpha, args.theta, args.beta)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_density(args):
    params = _params(args)
    x = np.linspace(args.xmin, args.xmax, args.points)
    cols, header = [x], ["x"]
    if args.method in ("subordination", "both"):
        cols.append(subordinate_density(params, x, args.t).values)
        header.append("u_subordination")
    if args.method in ("fourier", "both"):
        cols.append(green_function_fourier(params, x, args.t).values)
        header.append("u_fourier")
    rows = list(zip(*cols))
    gap = float(np.max(np.abs(cols[1] - cols[2]))) if args.method == "both" else None
    if args.out is None:
        write_csv(None, header, rows)
        if gap is not None:
            print("sup_norm_gap,%.17g" % gap, file=sys.stderr)
        return 0
    out = Path(args.out)
    write_csv(out / "densities" / "density.csv", header, rows)
    plotting.plot_densities(x, dict(zip(header[1:], cols[1:])), out / "density.png",
                            title=f"alpha={args.alpha:g} theta={args.theta:g} beta={args.beta:g} t={args.t:g}")
    write_gnuplot(out / "density.gp", "densities/density.csv",
                  [(1, j + 2) for j in range(len(cols) - 1)], "u(x,t)", "x", "u", style="lines")
    if gap is not None:
        print("sup_norm_gap,%.17g" % gap)
    return 0


def cmd_simulate(args):
    params = _params(args)
    cfg = RunConfig(params, args.n_paths, args.n_steps, args.tau_star, args.seed,
                    tuple(args.t), args.xmin, args.xmax, args.points, args.out)
    out = Path(args.out)
    write_json(out / "config.json", cfg.to_dict())
    level = RefinementLevel(args.tau_star)
    for i in range(min(args.save_paths, args.n_paths)):
        path = subordinated_path(params, args.n_steps, level, path_streams(args.seed, i))
        (out / "paths").mkdir(parents=True, exist_ok=True)
        write_path_csv(path, out / "paths" / f"path_{i:05d}.csv")
        if i == 0:
            plotting.plot_staircase(path.epochs, path.values, out / "path_00000.png",
                                    title="subordinated path", xlabel="t", ylabel="x")
    times = cfg.observation_times
    try:
        ens = run_ensemble(cfg, workers=args.workers)
    except EnsembleInterrupted as exc:
        write_csv(out / "ensemble_partial.csv", ["index"] + [f"x_t{_tag(t)}" for t in times],
                  [[i] + list(row) for i, row in enumerate(exc.partial)])
        raise
    write_csv(out / "ensemble.csv", ["index"] + [f"x_t{_tag(t)}" for t in times],
              [[i] + [ens[t][i] for t in times] for i in range(cfg.n_paths)])
    reports = []
    for t in times:
        rep = compare_to_analytic(ens[t], params, t, cfg.x_grid)
        extra = rep.extra
        name = f"density_t{_tag(t)}.csv"
        write_csv(out / "densities" / name, ["x", "u_analytic", "u_empirical"],
                  list(zip(extra["grid"], extra["u_analytic"], extra["u_empirical"])))
        plotting.plot_densities(extra["grid"], {"analytic": extra["u_analytic"],
                                                "empirical": extra["u_empirical"]},
                                out / f"density_t{_tag(t)}.png", title=f"t = {t:g}")
        d = rep.to_dict()
        d["extra"] = {"cdf_at_grid_ends": extra["cdf_at_grid_ends"]}
        reports.append(d)
        print("t=%s ks=%.6f threshold=%.6f gap=%.6f" % (_tag(t), rep.ks_distance,
                                                         rep.ks_threshold, rep.sup_norm_density_gap))
    write_json(out / "report.json", {"reports": reports})
    write_gnuplot(out / "plot.gp", "densities/" + f"density_t{_tag(times[0])}.csv",
                  [(1, 2), (1, 3)], f"u(x,{times[0]:g})", "x", "u", style="lines")
    return 0


def cmd_convergence(args):
    params = _params(args)
    cdf, tag = analytic_cdf(params, args.t)
    rows = []
    for tau in args.tau_list:
        cfg = RunConfig(params, args.n_paths, 256, tau, args.seed, (args.t,))
        vals = run_ensemble(cfg, workers=args.workers)[args.t]
        rows.append([tau, args.n_paths, ks_distance(vals, cdf), ks_threshold(args.n_paths)])
    header = ["tau_star", "n_paths", "ks_distance", "ks_threshold"]
    if args.out is None:
        write_csv(None, header, rows)
        return 0
    out = Path(args.out)
    write_csv(out / "convergence.csv", header, rows)
    plotting.plot_series([r[0] for r in rows], {"KS": [r[2] for r in rows],
                                               "threshold": [r[3] for r in rows]},
                         out / "convergence.png", title=f"reference: {tag}",
                         xlabel="tau_star", ylabel="KS distance")
    write_gnuplot(out / "convergence.gp", "convergence.csv", [(1, 3)], "KS vs tau_star",
                  "tau_star", "KS", style="linespoints")
    return 0


def _limit_spec(args):
    if args.waiting == "exp":
        waiting, beta = WaitingLaw.exponential(args.rate), 1.0
    elif args.waiting == "ml":
        waiting, beta = WaitingLaw.mittag_leffler(args.beta), args.beta
    else:
        waiting, beta = WaitingLaw.extremal_stable(args.beta), args.beta
    if args.alpha == 2.0:
        jump = JumpLaw.gaussian(2.0)
    else:
        jump = JumpLaw.stable_law(StableLaw(args.alpha, args.theta))
    return CtrwSpec(waiting, jump), DiffusionParams(args.alpha, args.theta, beta)


def cmd_ctrw_limit(args):
    spec, params = _limit_spec(args)
    rows = [[r["tau"], r["h"], r["rho"], r["gap"]] for r in ctrw_limit_study(spec, params, args.tau_list)]
    header = ["tau", "h", "rho", "gap"]
    if args.out is None:
        write_csv(None, header, rows)
        return 0
    out = Path(args.out)
    write_csv(out / "ctrw_limit.csv", header, rows)
    plotting.plot_series([r[0] for r in rows], {"gap": [r[3] for r in rows]}, out / "ctrw_limit.png",
                         title=f"{args.waiting} waiting times", xlabel="tau", ylabel="transform gap")
    return 0


_FIG_LABELS = {1: ("operational_time", "physical_time", "t_*", "t"),
               2: ("operational_time", "x", "t_*", "x"),
               3: ("physical_time", "x", "t", "x")}
_CSV_COLUMNS = {"operational_time": 2, "physical_time": 3, "x": 4}


def cmd_figures(args):
    data = reproduce_figures(args.figure, args.side, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"fig{args.figure}_{args.side}"
    p = data.path
    ops = p.operational_time
    phys = p.values if args.figure == 1 else (p.epochs if args.figure == 3 else np.full(len(p), math.nan))
    xval = p.values if args.figure != 1 else np.full(len(p), math.nan)
    write_csv(out / f"{stem}.csv", ["index", "operational_time", "physical_time", "x"],
              [[i, ops[i], phys[i], xval[i]] for i in range(len(p))])
    xc, yc, xl, yl = _FIG_LABELS[args.figure]
    write_gnuplot(out / f"{stem}.gp", f"{stem}.csv", [(_CSV_COLUMNS[xc], _CSV_COLUMNS[yc])],
                  f"figure {args.figure} {args.side}", xl, yl)
    xs = {"operational_time": ops, "physical_time": phys, "x": xval}
    prm = data.params
    plotting.plot_staircase(xs[xc], xs[yc], out / f"{stem}.png",
                            title=f"alpha={prm.alpha:g}, beta={prm.beta:g}", xlabel=xl, ylabel=yl)
    write_json(out / f"{stem}_checks.json", data.checks)
    print(out / f"{stem}.csv")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_params(p, beta_required=True):
    p.add_argument("--alpha", type=float, required=beta_required,
                   default=None if beta_required else 2.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--beta", type=float, required=beta_required, default=None if beta_required else 0.9)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracsub", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="analytic u(x, t) on a grid")
    _add_params(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--xmin", type=float, default=-10.0)
    p.add_argument("--xmax", type=float, default=10.0)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--method", choices=["subordination", "fourier", "both"], default="both")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("simulate-paths", help="ensemble of subordinated paths")
    _add_params(p)
    p.add_argument("--n-steps", type=int, default=1000)
    p.add_argument("--tau-star", type=float, default=0.01)
    p.add_argument("--n-paths", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--t", type=_float_list, default=[1.0], help="observation times, comma-separated")
    p.add_argument("--xmin", type=float, default=-10.0)
    p.add_argument("--xmax", type=float, default=10.0)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--save-paths", type=int, default=3, help="number of full paths written as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("convergence", help="ensemble KS distance against tau_star")
    _add_params(p)
    p.add_argument("--tau-list", type=_float_list, default=[1e-1, 1e-2, 1e-3])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-paths", type=int, default=10000)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("ctrw-limit", help="Montroll-Weiss gap to the diffusion limit")
    p.add_argument("--waiting", choices=["exp", "ml", "stable"], required=True)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--tau-list", type=_float_list, default=[1e-1, 1e-2, 1e-3])
    _add_params(p, beta_required=False)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ctrw_limit)

    p = sub.add_parser("reproduce-figures", help="path data for the leading, parent or subordinated walk")
    p.add_argument("--figure", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--side", choices=["left", "right"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="figures")
    p.set_defaults(func=cmd_figures)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, NotImplementedError) as exc:
        print(json.dumps({"error": str(exc), "kind": type(exc).__name__}), file=sys.stderr)
        return 2
    except AccuracyError as exc:
        print(json.dumps(exc.diagnostics, sort_keys=True, default=_json_default), file=sys.stderr)
        return 3
    except EnsembleInterrupted as exc:
        print(json.dumps({"error": str(exc), "completed_paths": exc.completed}), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
