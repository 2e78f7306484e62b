"""Command-line entry point.

Every subcommand emits a JSON document embedding the package version, the
seed, the parsed configuration, and a SHA-256 digest of that configuration
(the timestamp field is excluded from the digest), so identical runs are
byte-identical up to the timestamp line.  CSV output prints floats with 9
significant digits for diffable regression artifacts.

Exit codes: 0 success, 1 domain error (bad values, unreadable inputs),
2 usage error.
"""

import argparse
import csv
import datetime
import hashlib
import itertools
import json
import os
import sys

import numpy as np

from . import __version__
from .analysis import (capacity_lower_bound, contour_grid, db_to_r,
                       fidelity_gaussian_approx, fidelity_no_qec,
                       fidelity_with_qec, threshold_diagonal,
                       two_mode_optimum)
from .concat import CodePlan, evaluate_plan
from .gaussian import GaussianChannel
from .memory import memory_sigmas, memory_sigmas_asymptotic
from .montecarlo import mc_fidelity, mc_residual, pit_chi2
from .optimize import (optimize_full, optimize_gains_global,
                       optimize_gains_greedy, sample_generator)
from .reduction import reduce_channel, verify_reduction


def _float_list(text):
    vals = [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    if not vals:
        raise ValueError("expected a comma-separated list of numbers")
    return vals


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return str(obj)


def _envelope(args, payload):
    # output destinations are plumbing, not experiment configuration
    skip = ("func", "out", "out_dir")
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    blob = json.dumps(cfg, sort_keys=True, default=_json_default)
    return {"version": __version__,
            "seed": getattr(args, "seed", None),
            "config": cfg,
            "config_sha256": hashlib.sha256(blob.encode("utf-8")).hexdigest(),
            "timestamp": datetime.datetime.now(
                datetime.timezone.utc).isoformat(),
            "result": payload}


def _emit_json(args, payload):
    text = json.dumps(_envelope(args, payload), indent=2, sort_keys=True,
                      default=_json_default)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _fmt_cell(x):
    if isinstance(x, (float, np.floating)):
        return "%.9g" % x
    return str(x)


def _emit_csv(args, header, rows):
    out = getattr(args, "out", None)
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_cell(x) for x in row])
    finally:
        if out:
            fh.close()


def _write_csv_file(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_cell(x) for x in row])


def cmd_reduce(args):
    with open(args.infile) as fh:
        channel = GaussianChannel.from_json_dict(json.load(fh))
    res = reduce_channel(channel)
    payload = res.to_json_dict()
    payload["residual"] = payload["residual_error"]
    payload["verify_max_abs"] = verify_reduction(channel, res)
    _emit_json(args, payload)
    return 0


def cmd_two_mode(args):
    if args.optimize:
        gain, _ = two_mode_optimum(args.code, args.sigma1, args.sigma2,
                                   args.sr_slope)
    else:
        gain = args.gain
    plan = CodePlan(args.code, (args.sigma1, args.sigma2), (gain,))
    report = evaluate_plan(plan, sr_slope=args.sr_slope)
    payload = report.to_json_dict()
    payload["gain"] = gain
    payload["optimized"] = bool(args.optimize)
    _emit_json(args, payload)
    return 0


def cmd_concat(args):
    plan = CodePlan(args.code, _float_list(args.sigmas),
                    _float_list(args.gains),
                    _int_list(args.perm) if args.perm else None)
    report = evaluate_plan(plan, eps=args.eps, max_terms=args.max_terms,
                           sr_slope=args.sr_slope)
    _emit_json(args, report.to_json_dict(include_mixtures=args.dump_mixtures))
    return 0


def _optimize_report(args, sigmas):
    single = None
    if args.perms in ("identity", "reverse"):
        n = len(sigmas)
        single = tuple(range(1, n + 1)) if args.perms == "identity" \
            else tuple(range(n, 0, -1))
    elif args.perms != "all":
        perms = [tuple(int(k) for k in p.split(","))
                 for p in args.perms.split(";") if p.strip()]
        if len(perms) == 1:
            single = perms[0]
        else:
            return optimize_full(args.code, sigmas, perms, jobs=args.jobs,
                                 sr_slope=args.sr_slope, seed=args.seed,
                                 sigma_threshold=args.sigma_threshold)
    if args.perms == "all":
        return optimize_full(args.code, sigmas, "all", jobs=args.jobs,
                             sr_slope=args.sr_slope, seed=args.seed,
                             sigma_threshold=args.sigma_threshold)
    if args.strategy == "greedy":
        plan, value = optimize_gains_greedy(args.code, sigmas, single,
                                            sr_slope=args.sr_slope)
    else:
        plan, value = optimize_gains_global(args.code, sigmas, single,
                                            sr_slope=args.sr_slope,
                                            seed=args.seed)
    entry = {"permutation": list(plan.permutation),
             "gains": list(plan.gains), "sigma_L": value}
    return {"family": args.code, "sigmas": list(sigmas),
            "used_modes": list(range(1, len(sigmas) + 1)),
            "dropped_modes": [], "sr_slope": args.sr_slope,
            "results": [entry], "best": entry}


def cmd_optimize(args):
    sigmas = _float_list(args.sigmas)
    report = _optimize_report(args, sigmas)
    report["strategy"] = args.strategy
    if args.format == "csv":
        floor = min(report["sigmas"][i - 1] for i in report["used_modes"])
        rows = [(i + 1, " ".join(str(k) for k in r["permutation"]),
                 " ".join("%.9g" % g for g in r["gains"]),
                 r["sigma_L"], r["sigma_L"] / floor)
                for i, r in enumerate(report["results"])]
        _emit_csv(args, ["rank", "permutation", "gains", "sigma_L", "ratio"],
                  rows)
    else:
        _emit_json(args, report)
    return 0


def cmd_memory(args):
    sigmas, order = memory_sigmas(args.n, args.mu, args.kappa)
    asym, _ = memory_sigmas_asymptotic(args.n, args.mu, args.kappa)
    payload = {"n": args.n, "mu": args.mu, "kappa": args.kappa,
               "sigmas": sigmas.tolist(),
               "branch_order": [int(k) for k in order],
               "asymptotic_sigmas": asym.tolist()}
    if args.plan:
        threshold = None if args.keep_all else \
            threshold_diagonal(args.plan, sr_slope=args.sr_slope)
        payload["sigma_threshold"] = threshold
        payload["optimize"] = optimize_full(
            args.plan, sigmas.tolist(), "all", jobs=args.jobs,
            sr_slope=args.sr_slope, seed=args.seed,
            sigma_threshold=threshold)
    _emit_json(args, payload)
    return 0


def cmd_bound(args):
    _emit_json(args, capacity_lower_bound(_float_list(args.sigmas)))
    return 0


def cmd_threshold(args):
    value = threshold_diagonal(args.code, tol=args.tol,
                               sr_slope=args.sr_slope)
    _emit_json(args, {"family": args.code, "sigma_threshold": value})
    return 0


def cmd_contour(args):
    grid = contour_grid(args.code, args.min, args.max, args.res,
                        args.sr_slope)
    if args.format == "json":
        _emit_json(args, grid)
        return 0
    rows = []
    for i, a in enumerate(grid["sigma1"]):
        for j, b in enumerate(grid["sigma2"]):
            rows.append((a, b, grid["ratio"][i, j], grid["gain"][i, j]))
    _emit_csv(args, ["sigma1", "sigma2", "ratio", "G"], rows)
    return 0


def cmd_fidelity(args):
    if args.sigma2 is None:
        args.sigma2 = args.sigma1
    r = db_to_r(args.db)
    payload = {"db": args.db, "r": r,
               "f_no_qec": fidelity_no_qec(r, args.sigma1)}
    if not args.no_qec:
        if args.gain is not None:
            gain = args.gain
        else:
            gain, _ = two_mode_optimum(args.code, args.sigma1, args.sigma2,
                                       args.sr_slope)
        plan = CodePlan(args.code, (args.sigma1, args.sigma2), (gain,))
        report = evaluate_plan(plan, sr_slope=args.sr_slope)
        payload.update({
            "gain": gain, "sigma_L": report.sigma_L,
            "f_qec": fidelity_with_qec(r, report.mixture_q,
                                       report.mixture_p),
            "f_gaussian_approx": fidelity_gaussian_approx(r, report.sigma_L),
        })
        payload["improvement"] = payload["f_qec"] - payload["f_no_qec"]
    _emit_json(args, payload)
    return 0


def cmd_mc(args):
    with open(args.plan) as fh:
        plan = CodePlan.from_json_dict(json.load(fh))
    samples = int(float(args.samples))
    keep = min(samples, 1_000_000) if args.pit else 0
    stats = mc_residual(plan, samples, seed=args.seed,
                        chunk=int(float(args.chunk)),
                        sr_slope=args.sr_slope, return_samples=keep)
    sq = stats.pop("samples_q", None)
    sp = stats.pop("samples_p", None)
    report = evaluate_plan(plan, sr_slope=args.sr_slope)
    stats["analytic_sigma_L"] = report.sigma_L
    stats["analytic_var_q"] = report.mixture_q.variance()
    stats["analytic_var_p"] = report.mixture_p.variance()
    if args.pit:
        stats["pit_q"] = pit_chi2(report.mixture_q, sq)
        stats["pit_p"] = pit_chi2(report.mixture_p, sp)
    if args.fidelity_db is not None:
        stats["fidelity"] = mc_fidelity(plan, db_to_r(args.fidelity_db),
                                        samples, seed=args.seed,
                                        chunk=int(float(args.chunk)),
                                        sr_slope=args.sr_slope)
    _emit_json(args, stats)
    return 0


def _manifest(args, tag, files, notes):
    doc = _envelope(args, {"figure": tag, "files": files, "notes": notes})
    path = os.path.join(args.out_dir, "%s_manifest.json" % tag)
    with open(path, "w") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True,
                            default=_json_default) + "\n")
    for name in files + [os.path.basename(path)]:
        print(name)


def _fig3(args):
    files = []
    for family in ("tms", "sr"):
        grid = contour_grid(family, 0.01, 1.0, 33)
        rows = []
        for i, a in enumerate(grid["sigma1"]):
            for j, b in enumerate(grid["sigma2"]):
                rows.append((a, b, grid["ratio"][i, j], grid["gain"][i, j]))
        name = "fig3_%s.csv" % family
        _write_csv_file(os.path.join(args.out_dir, name),
                        ["sigma1", "sigma2", "ratio", "G"], rows)
        files.append(name)
    _manifest(args, "fig3", files,
              "improvement ratio sigma_L_opt / min(sigma1, sigma2) on a "
              "log grid; ratio < 1 marks useful correction")


def _fig4(args):
    rows = []
    cases = [("tms", 2), ("tms", 3), ("tms", 4), ("sr", 2)]
    for family, n in cases:
        draws = sample_generator("wide", n, 24, seed=args.seed + n)
        for sig in draws:
            _, value = optimize_gains_global(family, sig, starts=8,
                                             max_evals=1600, seed=args.seed)
            sigma_bar = float(np.exp(np.mean(np.log(sig))))
            bound = capacity_lower_bound(sig)["sigma_exact"] \
                if np.all(sig < 1) else float("nan")
            rows.append((family, n, sigma_bar, value, bound))
    name = "fig4_scatter.csv"
    _write_csv_file(os.path.join(args.out_dir, name),
                    ["family", "n", "sigma_bar", "sigma_L_opt",
                     "bound_sigma"], rows)
    _manifest(args, "fig4", [name],
              "optimized residual STD vs geometric-mean channel STD; "
              "log-log slope approaches the mode count for small noise")


def _fig5(args):
    rows = []
    for family in ("tms", "sr"):
        for n in (2, 3, 4):
            draws = sample_generator("realistic", n, 16, seed=args.seed + n)
            ratios = []
            for sig in draws:
                _, value = optimize_gains_global(family, sig, starts=8,
                                                 max_evals=1600,
                                                 seed=args.seed)
                ratios.append(value / sig.min())
            ratios = np.array(ratios)
            rows.append((family, n, len(ratios), ratios.mean(),
                         ratios.min(), ratios.max()))
    name = "fig5_ratios.csv"
    _write_csv_file(os.path.join(args.out_dir, name),
                    ["family", "n", "count", "mean_ratio", "min_ratio",
                     "max_ratio"], rows)
    _manifest(args, "fig5", [name],
              "ensemble statistics of sigma_L_opt / min(sigma) for random "
              "channel draws in the realistic noise band")


def _fig7(args):
    sigmas, _ = memory_sigmas(6, 0.9, 0.8)
    threshold = threshold_diagonal("tms")
    report = optimize_full("tms", sigmas.tolist(), "all", jobs=args.jobs,
                           seed=args.seed, sigma_threshold=threshold)
    by_perm = {tuple(r["permutation"]): r for r in report["results"]}
    floor = min(sigmas[i - 1] for i in report["used_modes"])
    best = min(r["sigma_L"] for r in report["results"])
    rows = []
    for idx, perm in enumerate(
            sorted(itertools.permutations(range(1, 6))), start=1):
        r = by_perm[perm]
        rows.append((idx, " ".join(str(k) for k in perm), r["sigma_L"],
                     r["sigma_L"] / floor, r["sigma_L"] / best))
    name = "fig7_permutations.csv"
    _write_csv_file(os.path.join(args.out_dir, name),
                    ["lex_index", "permutation", "sigma_L", "ratio",
                     "ratio_to_best"], rows)
    _manifest(args, "fig7", [name],
              "five-mode ordering sweep for the correlated-loss cascade "
              "(n=6, mu=0.9, kappa=0.8, noisiest mode dropped); rows in "
              "lexicographic order of the ordering")


def _fig8(args):
    r = db_to_r(20.0)
    axis = np.geomspace(0.03, 0.45, 15)
    rows = []
    for a in axis:
        for b in axis:
            gain, _ = two_mode_optimum("tms", a, b)
            plan = CodePlan("tms", (a, b), (gain,))
            rep = evaluate_plan(plan)
            f0 = fidelity_no_qec(r, a)
            fq = fidelity_with_qec(r, rep.mixture_q, rep.mixture_p)
            rows.append((a, b, f0, fq,
                         fidelity_gaussian_approx(r, rep.sigma_L), fq - f0))
    name = "fig8_fidelity.csv"
    _write_csv_file(os.path.join(args.out_dir, name),
                    ["sigma1", "sigma2", "f_no_qec", "f_qec",
                     "f_gaussian_approx", "improvement"], rows)
    _manifest(args, "fig8", [name],
              "transmission fidelity for a 20 dB squeezed input with and "
              "without one layer of correction; improvement > 0 marks the "
              "useful region")


def cmd_figures(args):
    os.makedirs(args.out_dir, exist_ok=True)
    {"fig3": _fig3, "fig4": _fig4, "fig5": _fig5,
     "fig7": _fig7, "fig8": _fig8}[args.which](args)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gkpec",
        description="Design and evaluate GKP-stabilized Gaussian codes on "
                    "noisy bosonic channels.")
    parser.add_argument("--version", action="version", version=__version__)

    def common():
        # a fresh parent per subcommand: argparse parents share action
        # objects, so a set_defaults on one subparser would otherwise leak
        par = argparse.ArgumentParser(add_help=False)
        par.add_argument("--seed", type=int,
                         default=int(os.environ.get("GKPEC_SEED", "12345")),
                         help="RNG seed (GKPEC_SEED overrides the default)")
        par.add_argument("--jobs", type=int, default=1,
                         help="worker processes for sweeps")
        par.add_argument("--out", default=None, help="output file path")
        par.add_argument("--format", choices=("json", "csv"),
                         default="json")
        par.add_argument("--sr-slope", choices=("mle", "simplified"),
                         default="mle",
                         help="sr estimator slope convention")
        return par

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", parents=[common()],
                       help="reduce a Gaussian channel to effective noise "
                            "channels")
    p.add_argument("--in", dest="infile", required=True,
                   help="channel JSON {n, T, N, d}")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("two-mode", parents=[common()],
                       help="evaluate or optimize one two-mode layer")
    p.add_argument("--code", choices=("tms", "sr"), required=True)
    p.add_argument("--sigma1", type=float, required=True,
                   help="data-slot channel STD")
    p.add_argument("--sigma2", type=float, required=True,
                   help="ancilla-slot channel STD")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--gain", type=float)
    group.add_argument("--optimize", action="store_true")
    p.set_defaults(func=cmd_two_mode)

    p = sub.add_parser("concat", parents=[common()],
                       help="evaluate a layered plan")
    p.add_argument("--code", choices=("tms", "sr"), required=True)
    p.add_argument("--sigmas", required=True, help="comma-separated STDs")
    p.add_argument("--gains", required=True, help="comma-separated gains")
    p.add_argument("--perm", default=None, help="comma-separated ordering")
    p.add_argument("--eps", type=float, default=1e-12)
    p.add_argument("--max-terms", type=int, default=4000)
    p.add_argument("--dump-mixtures", action="store_true")
    p.set_defaults(func=cmd_concat)

    p = sub.add_parser("optimize", parents=[common()],
                       help="optimize gains and orderings")
    p.add_argument("--code", choices=("tms", "sr"), required=True)
    p.add_argument("--sigmas", required=True)
    p.add_argument("--strategy", choices=("global", "greedy"),
                   default="global")
    p.add_argument("--perms", default="identity",
                   help='"identity", "reverse", "all", or explicit '
                        '"1,2,3;3,2,1"')
    p.add_argument("--sigma-threshold", type=float, default=None,
                   help="drop modes at or above this STD before the sweep")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("memory", parents=[common()],
                       help="effective noise of the correlated-loss cascade")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--plan", choices=("tms", "sr"), default=None,
                   help="also sweep orderings for this family")
    p.add_argument("--keep-all", action="store_true",
                   help="keep modes above the family threshold")
    p.set_defaults(func=cmd_memory)

    p = sub.add_parser("bound", parents=[common()],
                       help="capacity-based residual noise floor")
    p.add_argument("--sigmas", required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("threshold", parents=[common()],
                       help="equal-noise correction threshold")
    p.add_argument("--code", choices=("tms", "sr"), required=True)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("contour", parents=[common()],
                       help="improvement-ratio grid over STD pairs")
    p.add_argument("--code", choices=("tms", "sr"), required=True)
    p.add_argument("--min", type=float, required=True)
    p.add_argument("--max", type=float, required=True)
    p.add_argument("--res", type=int, required=True)
    p.set_defaults(func=cmd_contour, format="csv")

    p = sub.add_parser("fidelity", parents=[common()],
                       help="transmission fidelity for a squeezed input")
    p.add_argument("--db", type=float, required=True)
    p.add_argument("--sigma1", type=float, required=True)
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--code", choices=("tms", "sr"), default="tms")
    p.add_argument("--gain", type=float, default=None,
                   help="layer gain (optimized when omitted)")
    p.add_argument("--no-qec", action="store_true",
                   help="report only the direct-transmission fidelity")
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("mc", parents=[common()],
                       help="Monte Carlo statistics for a stored plan")
    p.add_argument("--plan", required=True, help="plan JSON path")
    p.add_argument("--samples", default="1e6")
    p.add_argument("--chunk", default="1e6")
    p.add_argument("--pit", action="store_true",
                   help="add chi-square goodness-of-fit against the "
                        "analytic mixtures")
    p.add_argument("--fidelity-db", type=float, default=None,
                   help="also sample fidelity at this squeezing level")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("figures", parents=[common()],
                       help="emit figure data tables as CSV")
    p.add_argument("which", choices=("fig3", "fig4", "fig5", "fig7", "fig8"))
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_figures)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
