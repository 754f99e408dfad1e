"""Command-line front end: ``adoptmatch {gen,solve,experiment,sweep,validate}``.

All tables are written as UTF-8 CSV with a fixed header; richer output
(thresholds, utilities, correspondences) goes to JSON sidecars.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import Relation, check_theorem1, pareto_compare
from .equilibrium import DEFAULT_EPSILON, DEFAULT_MAX_ITER, Side, solve_equilibrium
from .gen import BASE_CASE, PAPER_INSTANCES, generate_instance, paper_instance
from .model import Instance, Regime, StrategyProfile, validate_instance
from .montecarlo import simulate_utility
from .strategies import induce_profile
from .utilities import utilities, welfare

log = logging.getLogger("adoptmatch")

MANIFEST = "manifest.csv"
MANIFEST_HEADER = ["file", "n", "m", "lambda", "seed", "delta_C", "delta_F", "kappa_C", "kappa_F", "p"]
SOLVE_HEADER = [
    "instance", "regime", "side", "avg_overall", "avg_child", "avg_family",
    "iterations", "converged", "pairs",
]
EXPERIMENT_HEADER = ["instance", "lambda", "seed"] + SOLVE_HEADER[1:]
SUMMARY_HEADER = ["regime", "side", "metric", "mean", "stderr", "count"]
SWEEP_HEADER = [
    "param", "value", "instance", "regime", "side", "avg_overall", "avg_child", "avg_family",
    "mutual_pairs", "threshold_gap", "converged",
]
SWEEP_SUMMARY_HEADER = ["param", "value", "regime", "side", "metric", "mean", "ci_low", "ci_high", "count"]
VALIDATE_HEADER = ["agent", "analytic", "simulated", "stderr", "bias_bound", "tolerance", "pass"]

BOOTSTRAP_RESAMPLES = 10_000
SWEEP_PARAMS = ("kappa", "delta", "p", "lambda")


# -- helpers ---------------------------------------------------------------


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _regimes(text: str) -> list:
    try:
        return [Regime(x.strip().upper()) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"regimes must be drawn from fs,cs; got {text!r}")


def _sides(text: str) -> list:
    try:
        return [Side(x.strip().lower()) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"sides must be drawn from co,fo; got {text!r}")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path, header, rows) -> None:
    out = sys.stdout if path in (None, "-") else open(path, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[h]) for h in header])
    finally:
        if out is not sys.stdout:
            out.close()


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _jobs(args) -> int:
    env = os.environ.get("ADOPTMATCH_JOBS")
    jobs = int(env) if env else args.jobs
    return max(1, jobs)


def _map(fn, items, jobs):
    if jobs == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _add_params(p: argparse.ArgumentParser, defaults: bool) -> None:
    g = p.add_argument_group("model parameters")
    dflt = (lambda k: BASE_CASE[k]) if defaults else (lambda k: None)
    g.add_argument("--delta", type=float, help="sets both discount factors")
    g.add_argument("--kappa", type=float, help="sets both search costs")
    g.add_argument("--delta-c", dest="delta_C", type=float, default=dflt("delta_C"))
    g.add_argument("--delta-f", dest="delta_F", type=float, default=dflt("delta_F"))
    g.add_argument("--kappa-c", dest="kappa_C", type=float, default=dflt("kappa_C"))
    g.add_argument("--kappa-f", dest="kappa_F", type=float, default=dflt("kappa_F"))
    g.add_argument("--p", type=float, default=dflt("p"), help="match success probability")


def _param_overrides(args) -> dict:
    out = {k: getattr(args, k) for k in ("delta_C", "delta_F", "kappa_C", "kappa_F", "p")}
    if args.delta is not None:
        out["delta_C"] = out["delta_F"] = args.delta
    if args.kappa is not None:
        out["kappa_C"] = out["kappa_F"] = args.kappa
    return {k: v for k, v in out.items() if v is not None}


def _read_manifest(directory: Path) -> list:
    path = directory / MANIFEST
    if not path.is_file():
        raise SystemExit(f"error: no {MANIFEST} in {directory}; run `adoptmatch gen` first")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise SystemExit(f"error: {path} lists no instances")
    for r in rows:
        if not (directory / r["file"]).is_file():
            raise SystemExit(f"error: missing instance {directory / r['file']}")
    return rows


def _welfare_row(inst: Instance, res) -> dict:
    w = welfare(inst, res.utilities)
    return {
        "regime": res.regime.value,
        "side": res.side.value,
        "avg_overall": w.avg_overall,
        "avg_child": w.avg_child,
        "avg_family": w.avg_family,
        "iterations": res.iterations,
        "converged": res.converged,
        "pairs": len(res.correspondence),
    }


def _mean_se(xs):
    xs = np.asarray(xs, dtype=float)
    if len(xs) < 2:
        return float(xs.mean()) if len(xs) else math.nan, math.nan
    return float(xs.mean()), float(xs.std(ddof=1) / math.sqrt(len(xs)))


def bootstrap_ci(xs, rng: np.random.Generator, resamples: int = BOOTSTRAP_RESAMPLES, level: float = 0.95):
    """Percentile bootstrap interval for the mean."""
    xs = np.asarray(xs, dtype=float)
    if len(xs) == 0:
        return math.nan, math.nan
    idx = rng.integers(0, len(xs), size=(resamples, len(xs)))
    means = xs[idx].mean(axis=1)
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [a, 1.0 - a])
    return float(lo), float(hi)


# -- gen ---------------------------------------------------------------------


def cmd_gen(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = _param_overrides(args)
    rows = []
    for lam in args.lambdas:
        for seed in range(args.seed_start, args.seed_start + args.seeds):
            inst = generate_instance(args.n, args.m, lam, seed, **params)
            name = f"inst_n{args.n}_m{args.m}_l{lam:g}_s{seed:04d}.json"
            inst.save(out / name)
            rows.append({"file": name, "n": args.n, "m": args.m, "lambda": lam, "seed": seed, **params})
    _write_csv(out / MANIFEST, MANIFEST_HEADER, rows)
    log.info("wrote %d instances to %s", len(rows), out)
    return 0


# -- solve -------------------------------------------------------------------


def _load_instance(args) -> tuple:
    if args.example:
        return paper_instance(args.example), args.example
    try:
        return Instance.load(args.instance), str(args.instance)
    except (OSError, ValueError, KeyError) as exc:
        raise SystemExit(f"error: cannot read instance {args.instance}: {exc}")


def cmd_solve(args) -> int:
    inst, label = _load_instance(args)
    report = validate_instance(inst)
    if not report.ok:
        log.warning("instance violates assumptions: %s", "; ".join(report.violations))
    rows, sidecar = [], {"instance": label, "results": []}
    for regime in args.regimes:
        for side in args.sides:
            res = solve_equilibrium(inst, regime, side, args.epsilon, args.max_iter)
            if not res.converged:
                log.warning("%s did not converge after %d iterations", res.label, res.iterations)
            rows.append({"instance": label, **_welfare_row(inst, res)})
            sidecar["results"].append(res.to_dict())
    _write_csv(args.out, SOLVE_HEADER, rows)
    json_path = args.json or (args.out + ".json" if args.out not in (None, "-") else None)
    if json_path:
        _write_json(json_path, sidecar)
    return 0


# -- experiment --------------------------------------------------------------


def _experiment_one(task):
    path, meta, epsilon, max_iter = task
    inst = Instance.load(path)
    res = {
        (r, sd): solve_equilibrium(inst, r, sd, epsilon, max_iter)
        for r in (Regime.CS, Regime.FS)
        for sd in (Side.CHILD_OPTIMAL, Side.FAMILY_OPTIMAL)
    }
    rows = [{"instance": meta["file"], "lambda": meta["lambda"], "seed": meta["seed"], **_welfare_row(inst, x)}
            for x in res.values()]
    violations = []
    for fs_side in Side:
        for cs_side in Side:
            chk = check_theorem1(inst, res[(Regime.FS, fs_side)], res[(Regime.CS, cs_side)])
            if chk.violation:
                violations.append({"fs_side": fs_side.value, "cs_side": cs_side.value,
                                   "fs_better": [str(a) for a in chk.fs_better], **chk.detail})
    fs_over_cs = sum(
        pareto_compare(res[(Regime.FS, a)].utilities, res[(Regime.CS, b)].utilities).relation is Relation.LEFT
        for a in Side for b in Side
    )
    fo = pareto_compare(res[(Regime.CS, Side.FAMILY_OPTIMAL)].utilities, res[(Regime.FS, Side.FAMILY_OPTIMAL)].utilities)
    differs = {
        r.value: res[(r, Side.CHILD_OPTIMAL)].correspondence.pairs != res[(r, Side.FAMILY_OPTIMAL)].correspondence.pairs
        for r in Regime
    }
    return {
        "rows": rows,
        "violations": violations,
        "fs_over_cs": fs_over_cs,
        "cs_improves_fs_fo": fo.relation is Relation.LEFT,
        "co_ne_fo": differs,
    }


def cmd_experiment(args) -> int:
    directory = Path(args.instances)
    manifest = _read_manifest(directory)
    tasks = [(str(directory / m["file"]), m, args.epsilon, args.max_iter) for m in manifest]
    results = _map(_experiment_one, tasks, _jobs(args))

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [r for res in results for r in res["rows"]]
    _write_csv(out / "per_instance.csv", EXPERIMENT_HEADER, rows)

    summary = []
    for regime in (Regime.CS, Regime.FS):
        for side in (Side.FAMILY_OPTIMAL, Side.CHILD_OPTIMAL):
            sel = [r for r in rows if r["regime"] == regime.value and r["side"] == side.value]
            for metric in ("avg_overall", "avg_child", "avg_family"):
                mean, se = _mean_se([r[metric] for r in sel])
                summary.append({"regime": regime.value, "side": side.value, "metric": metric,
                                "mean": mean, "stderr": se, "count": len(sel)})
    _write_csv(out / "summary.csv", SUMMARY_HEADER, summary)

    violations = [v for res in results for v in res["violations"]]
    counts = {
        "instances": len(results),
        "co_ne_fo": {r.value: sum(res["co_ne_fo"][r.value] for res in results) for r in Regime},
        "fo_cse_pareto_improves_fo_fse": sum(res["cs_improves_fs_fo"] for res in results),
        "fse_pareto_improves_cse": sum(res["fs_over_cs"] for res in results),
        "theorem1_violations": len(violations),
        "not_converged": sum(not r["converged"] for r in rows),
    }
    _write_json(out / "summary.json", {"counts": counts, "summary": summary, "violations": violations})
    for s in summary:
        if s["side"] == "fo":
            print(f"fo-{s['regime']}E {s['metric']:<12} {s['mean']:.4f} +- {s['stderr']:.4f}")
    print(json.dumps(counts, sort_keys=True))
    if violations:
        log.error("%d Pareto-theorem violations; details in %s", len(violations), out / "summary.json")
        return 1
    return 0


# -- sweep -------------------------------------------------------------------


def _sweep_instance(inst: Instance, meta: dict, param: str, value: float) -> Instance:
    if param == "lambda":
        return generate_instance(
            int(meta["n"]), int(meta["m"]), value, int(meta["seed"]),
            **{k: getattr(inst, k) for k in ("delta_C", "delta_F", "kappa_C", "kappa_F", "p")},
        )
    if param == "kappa":
        return inst.replace(kappa=value)
    if param == "delta":
        return inst.replace(delta=value)
    return inst.replace(p=value)


def _sweep_one(task):
    path, meta, param, value, sides, epsilon, max_iter = task
    inst = _sweep_instance(Instance.load(path), meta, param, value)
    rows = []
    for side in sides:
        res = {r: solve_equilibrium(inst, r, side, epsilon, max_iter) for r in (Regime.CS, Regime.FS)}
        # FS vs CS utilities at the profiles both regimes induce from the CS equilibrium thresholds
        y = res[Regime.CS].thresholds
        u_fs = utilities(inst, induce_profile(inst, y, Regime.FS), Regime.FS)
        u_cs = utilities(inst, induce_profile(inst, y, Regime.CS), Regime.CS)
        gap = float(np.max(np.abs(u_fs.as_vector() - u_cs.as_vector())))
        for regime, r in res.items():
            w = welfare(inst, r.utilities)
            rows.append({
                "param": param, "value": value, "instance": meta["file"], "regime": regime.value,
                "side": side.value, "avg_overall": w.avg_overall, "avg_child": w.avg_child,
                "avg_family": w.avg_family, "mutual_pairs": len(r.correspondence),
                "threshold_gap": gap, "converged": r.converged,
            })
    return rows


def cmd_sweep(args) -> int:
    directory = Path(args.instances)
    manifest = _read_manifest(directory)
    if args.param == "lambda":
        # one instance per seed; the mixing weight is regenerated
        seen, uniq = set(), []
        for m in manifest:
            if m["seed"] not in seen:
                seen.add(m["seed"])
                uniq.append(m)
        manifest = uniq
    tasks = [
        (str(directory / m["file"]), m, args.param, v, args.sides, args.epsilon, args.max_iter)
        for v in args.values
        for m in manifest
    ]
    rows = [r for chunk in _map(_sweep_one, tasks, _jobs(args)) for r in chunk]
    _write_csv(args.out, SWEEP_HEADER, rows)

    rng = np.random.default_rng(args.boot_seed)
    summary = []
    for v in args.values:
        for side in args.sides:
            for regime in (Regime.CS, Regime.FS):
                sel = [r for r in rows if r["value"] == v and r["regime"] == regime.value and r["side"] == side.value]
                for metric in ("avg_overall", "avg_child", "avg_family", "mutual_pairs", "threshold_gap"):
                    xs = [r[metric] for r in sel]
                    lo, hi = bootstrap_ci(xs, rng, args.resamples)
                    summary.append({"param": args.param, "value": v, "regime": regime.value,
                                    "side": side.value, "metric": metric, "mean": float(np.mean(xs)),
                                    "ci_low": lo, "ci_high": hi, "count": len(xs)})
    if args.summary:
        _write_csv(args.summary, SWEEP_SUMMARY_HEADER, summary)
    elif args.out not in (None, "-"):
        _write_csv(str(Path(args.out).with_suffix("")) + "_summary.csv", SWEEP_SUMMARY_HEADER, summary)
    return 0


# -- validate ----------------------------------------------------------------


def cmd_validate(args) -> int:
    inst, _ = _load_instance(args)
    if args.equilibrium:
        try:
            side_s, regime_s = args.equilibrium.lower().split("-")
            side, regime = Side(side_s), Regime(regime_s.upper())
        except ValueError:
            raise SystemExit(f"error: --equilibrium must look like fo-cs or co-fs, got {args.equilibrium!r}")
        s = solve_equilibrium(inst, regime, side).profile
    else:
        regime = args.regime
        try:
            with open(args.profile, encoding="utf-8") as fh:
                s = StrategyProfile.from_dict(json.load(fh))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise SystemExit(f"error: invalid profile file {args.profile}: {exc}")
        if s.shape != (inst.n, inst.m):
            raise SystemExit(f"error: profile shape {s.shape} does not match instance ({inst.n}, {inst.m})")
    u = utilities(inst, s, regime)
    rows, ok = [], True
    for i, agent in enumerate(inst.agents()):
        analytic = u.of(agent) + args.perturb
        est = simulate_utility(inst, s, regime, agent, args.runs, [args.seed, i])
        tol = 3.0 * est.stderr + est.truncation_bias_bound
        passed = abs(est.mean - analytic) <= tol
        ok &= passed
        rows.append({"agent": str(agent), "analytic": analytic, "simulated": est.mean, "stderr": est.stderr,
                     "bias_bound": est.truncation_bias_bound, "tolerance": tol, "pass": passed})
    _write_csv(args.out, VALIDATE_HEADER, rows)
    if not ok:
        log.error("simulation disagrees with the analytic utilities for at least one agent")
    return 0 if ok else 1


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adoptmatch", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate random instances and a manifest")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--lambda", dest="lambdas", type=_floats, required=True, help="comma-separated mixing weights")
    g.add_argument("--seeds", type=int, default=1, help="number of seeds per mixing weight")
    g.add_argument("--seed-start", type=int, default=0)
    g.add_argument("--out-dir", required=True)
    _add_params(g, defaults=True)
    g.set_defaults(func=cmd_gen)

    def solver_flags(p):
        p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
        p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)

    def instance_flags(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--instance", help="instance JSON file")
        src.add_argument("--example", choices=PAPER_INSTANCES, help="built-in example instance")

    s = sub.add_parser("solve", help="compute extremal equilibria of one instance")
    instance_flags(s)
    s.add_argument("--regimes", type=_regimes, default=[Regime.CS, Regime.FS])
    s.add_argument("--sides", type=_sides, default=[Side.CHILD_OPTIMAL, Side.FAMILY_OPTIMAL])
    solver_flags(s)
    s.add_argument("--out", default="-", help="CSV path (default stdout)")
    s.add_argument("--json", help="JSON sidecar path (default <out>.json)")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("experiment", help="all four equilibria over an instance set, with aggregates")
    e.add_argument("--instances", required=True, help="directory written by gen")
    e.add_argument("--out-dir", required=True)
    e.add_argument("--jobs", type=int, default=1)
    solver_flags(e)
    e.set_defaults(func=cmd_experiment)

    w = sub.add_parser("sweep", help="comparative statics over one parameter")
    w.add_argument("--instances", required=True)
    w.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    w.add_argument("--values", type=_floats, required=True)
    w.add_argument("--sides", type=_sides, default=[Side.FAMILY_OPTIMAL])
    w.add_argument("--out", default="-")
    w.add_argument("--summary", help="aggregate CSV path (default <out>_summary.csv)")
    w.add_argument("--boot-seed", type=int, default=0)
    w.add_argument("--resamples", type=int, default=BOOTSTRAP_RESAMPLES)
    w.add_argument("--jobs", type=int, default=1)
    solver_flags(w)
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", help="compare analytic utilities with simulation")
    instance_flags(v)
    prof = v.add_mutually_exclusive_group(required=True)
    prof.add_argument("--profile", help="strategy profile JSON")
    prof.add_argument("--equilibrium", help="solve first, e.g. fo-cs or co-fs")
    v.add_argument("--regime", type=lambda x: Regime(x.upper()), default=Regime.CS,
                   help="regime for --profile (fs or cs)")
    v.add_argument("--runs", type=int, default=100_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--perturb", type=float, default=0.0, help="shift analytic values (harness self-test)")
    v.add_argument("--out", default="-")
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "sweep" and args.param == "p" and any(not 0 < x < 1 for x in args.values):
        raise SystemExit("error: p values must lie in (0, 1)")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
