"""Experiment command line: dataset ingestion, solver comparisons,
spectral reports, theory verification, and sharing-fraction sweeps.

Subcommands: ``solve``, ``pcg``, ``spectra``, ``verify-theory``,
``sweep-alpha``, ``gen``.  Configuration comes from a JSON document whose
fields individual flags may override.  Exit codes: 0 ok, 1 usage error,
2 data error, 3 verification failure.  BLOCKPOOL_THREADS bounds the worker
threads used for independent verification sweeps.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import verify
from .admm import (SolverConfig, double_sweep_run, drap_admm_run,
                   drap_logistic_run, dual_cyclic_run, dual_distributed_run,
                   dual_rp_run, primal_distributed_logistic_run,
                   primal_distributed_run)
from .baselines import direct_ls, gradient_descent, newton_logistic, remap_01_labels
from .errors import BlockpoolError, NonNumericCell, ParseError, RaggedRows
from .generators import (GenSpec, gen_equal_blocks, gen_paper_example,
                         gen_pcg_construction, gen_random, gen_two_dominant)
from .model import MetricReport, Objective, absolute_loss, partition_rows
from .pcg import (build_global_precond, build_identity_precond,
                  build_local_precond, pcg_run, precond_condition_report)
from .sharing import allocate_pool_to_one_center, build_pool
from .spectral import build_Md, build_Mgd, build_Mp

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VERIFY = 3

#: iteration cap used by tol-stop mode unless the config overrides it
TOL_MODE_CAP = 200_000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting so we control exit codes."""

    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def ingest_csv(path, target_col=None, header=False, normalize=False, scale=None):
    """Load a rectangular numeric CSV into (X, y).

    The target column defaults to the last one.  ``scale`` multiplies every
    entry: a float, or ``sqrt_n`` / ``inv_sqrt_n`` for data-size-dependent
    rescaling; ``normalize`` divides X by its Frobenius norm afterwards.

    Raises
    ------
    ParseError, RaggedRows, NonNumericCell
        With 1-based line/column positions.
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line_no, record in enumerate(reader, start=1):
            if line_no == 1 and header:
                continue
            if not record or (len(record) == 1 and record[0].strip() == ""):
                continue
            if width is None:
                width = len(record)
                if width < 2:
                    raise ParseError(f"need at least 2 columns, got {width}", line_no)
            elif len(record) != width:
                raise RaggedRows(
                    f"row has {len(record)} fields, expected {width}", line_no)
            parsed = []
            for col_no, cell in enumerate(record, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise NonNumericCell(
                        f"cell {cell!r} is not numeric", line_no, col_no) from None
            rows.append(parsed)
    if not rows:
        raise ParseError("no data rows", 1)
    data = np.asarray(rows, dtype=float)
    n = data.shape[0]
    if scale is not None:
        if scale == "sqrt_n":
            data = data * np.sqrt(n)
        elif scale == "inv_sqrt_n":
            data = data / np.sqrt(n)
        else:
            data = data * float(scale)
    tcol = -1 if target_col is None else int(target_col)
    tcol = tcol % data.shape[1]
    y = data[:, tcol]
    X = np.delete(data, tcol, axis=1)
    if normalize:
        from .linalg import frobenius_normalize
        X = frobenius_normalize(X)
    return X, y


# ---------------------------------------------------------------------------
# Dataset / config plumbing
# ---------------------------------------------------------------------------

def _dataset_from_config(dcfg, b, partition, seed):
    if "csv" in dcfg:
        X, y = ingest_csv(dcfg["csv"],
                          target_col=dcfg.get("target_col"),
                          header=dcfg.get("header", False),
                          normalize=dcfg.get("normalize", False),
                          scale=dcfg.get("scale"))
        if dcfg.get("remap01_labels"):
            y = remap_01_labels(y)
        return partition_rows(X, y, b, strategy=partition, seed=seed)
    name = dcfg.get("generator")
    if name is None:
        raise UsageError("dataset config needs either 'csv' or 'generator'")
    return dataset_from_generator(name, dcfg, default_seed=seed)


def dataset_from_generator(name, params, default_seed=0):
    """Build a PartitionedDataset from a generator name and its parameters."""
    seed = int(params.get("seed", default_seed))
    if name == "paper_example":
        return gen_paper_example(params.get("which", "scenario_one"))
    if name == "pcg_construction":
        return gen_pcg_construction(float(params.get("epsilon", 0.1)),
                                    int(params.get("s", 1000)), seed=seed)
    if name == "pcg_ordering":
        return verify.pcg_ordering_dataset(seed=seed)
    spec = GenSpec(b=int(params.get("b", 4)),
                   p=int(params.get("p", 10)),
                   rows_per_block=int(params.get("rows_per_block", 100)),
                   seed=seed,
                   target_spectrum=params.get("target_spectrum"),
                   noise_sigma=float(params.get("noise_sigma", 0.05)))
    if name == "equal_blocks":
        return gen_equal_blocks(spec)
    if name == "two_dominant":
        return gen_two_dominant(spec, float(params.get("rho_p", 0.05)))
    if name == "random":
        return gen_random(spec, dist=params.get("dist", "gaussian"),
                          offset=float(params.get("offset", 0.0)),
                          normalize=params.get("normalize", False))
    raise UsageError(f"unknown generator {name!r}")


def _fmt(x):
    return f"{float(x):.17g}"


def _write_csv(path, headers, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def _thread_count():
    try:
        return max(1, int(os.environ.get("BLOCKPOOL_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# solve: run an experiment config
# ---------------------------------------------------------------------------

LS_ALGORITHMS = ("primal_distributed", "dual_distributed", "cyclic", "rp",
                 "double_sweep", "drap", "primal_distributed_share",
                 "cyclic_share", "rp_share", "double_sweep_share",
                 "gradient_descent")
LOGISTIC_ALGORITHMS = ("primal_logistic", "drap_logistic", "gradient_descent",
                       "newton")
SHARING_ALGORITHMS = ("drap", "drap_logistic", "primal_distributed_share",
                      "cyclic_share", "rp_share", "double_sweep_share")


def _stop_to_config(stop, algo_cfg):
    mode = stop.get("mode", "fixed_iters")
    if mode == "fixed_iters":
        return int(stop.get("iterations", 200)), 0.0, None
    if mode == "tol":
        return int(stop.get("max_iters", TOL_MODE_CAP)), float(stop["tol"]), None
    if mode == "fixed_time":
        return int(stop.get("max_iters", TOL_MODE_CAP)), 0.0, float(stop["seconds"])
    raise UsageError(f"unknown stop mode {mode!r}")


def run_experiment(cfg):
    """Execute one experiment config; returns the JSON-ready report dict."""
    seed = int(cfg.get("seed", 0))
    b = int(cfg.get("b", 4))
    partition = cfg.get("partition", "contiguous")
    ds = _dataset_from_config(cfg["dataset"], b, partition, seed)
    obj = Objective(kind=cfg.get("objective", {}).get("kind", "least_squares"),
                    alpha=float(cfg.get("objective", {}).get("alpha", 0.0)))
    algorithms = cfg.get("algorithms")
    if not algorithms:
        raise UsageError("config lists no algorithms")
    names = [a["name"] for a in algorithms]
    alpha_percent = cfg.get("alpha_percent")
    plan = None
    if any(name in SHARING_ALGORITHMS for name in names):
        if alpha_percent is None:
            raise UsageError("alpha_percent is required by sharing algorithms")
        plan = build_pool(ds, float(alpha_percent), seed=seed)
    stop = cfg.get("stop", {"mode": "fixed_iters", "iterations": 200})

    if obj.is_logistic:
        if cfg.get("oracle") == "ground_truth" and "beta_star" in cfg:
            beta_star = np.asarray(cfg["beta_star"], dtype=float)
        else:
            beta_star = newton_logistic(ds.X, ds.y, alpha=obj.alpha)
    else:
        beta_star = direct_ls(ds.X, ds.y, alpha=obj.alpha)

    rows, timings, traces, betas = [], {}, {}, {}
    for algo in algorithms:
        name = algo["name"]
        max_iters, tol, budget = _stop_to_config(stop, algo)
        scfg = SolverConfig(rho=float(algo.get("rho", 1.0)), max_iters=max_iters,
                            tol=tol, seed=seed, record_trace=cfg.get("traces", False),
                            time_budget=budget)
        run = _dispatch(name, ds, obj, scfg, plan, beta_star, algo)
        al = absolute_loss(run.beta, beta_star)
        residual = run.trace["residual"][-1] if run.trace.get("residual") else 0.0
        rows.append(MetricReport(algorithm=name, absolute_loss=al,
                                 relative_residual=float(residual),
                                 iterations=run.iterations,
                                 wall_time=run.wall_time,
                                 converged=run.converged))
        timings[name] = run.wall_time
        betas[name] = [float(v) for v in run.beta]
        if cfg.get("traces"):
            traces[name] = run.trace
    report = {
        "config": {k: v for k, v in cfg.items() if k != "output_dir"},
        "results": [{"algorithm": r.algorithm, "absolute_loss": r.absolute_loss,
                     "relative_residual": r.relative_residual,
                     "iterations": r.iterations, "converged": r.converged,
                     "beta": betas[r.algorithm]} for r in rows],
        "timings": timings,
    }
    return report, rows, traces


def _dispatch(name, ds, obj, scfg, plan, beta_star, algo):
    if name in SHARING_ALGORITHMS and plan is None:
        raise UsageError(f"{name} needs a sharing plan")
    shared_ds = None
    if name.endswith("_share"):
        shared_ds = allocate_pool_to_one_center(ds, plan, int(algo.get("target", 0)))
    if name == "primal_distributed":
        return primal_distributed_run(ds, obj, scfg, beta_star=beta_star)
    if name == "primal_distributed_share":
        return primal_distributed_run(shared_ds, obj, scfg, beta_star=beta_star)
    if name == "dual_distributed":
        return dual_distributed_run(ds, scfg, beta_star=beta_star)
    if name == "cyclic":
        return dual_cyclic_run(ds, scfg, beta_star=beta_star)
    if name == "cyclic_share":
        return dual_cyclic_run(shared_ds, scfg, beta_star=beta_star)
    if name == "rp":
        return dual_rp_run(ds, scfg, beta_star=beta_star)
    if name == "rp_share":
        return dual_rp_run(shared_ds, scfg, beta_star=beta_star)
    if name == "double_sweep":
        return double_sweep_run(ds, scfg, beta_star=beta_star)
    if name == "double_sweep_share":
        return double_sweep_run(shared_ds, scfg, beta_star=beta_star)
    if name == "drap":
        return drap_admm_run(ds, plan, scfg, beta_star=beta_star)
    if name == "drap_logistic":
        return drap_logistic_run(ds, plan, scfg, beta_star=beta_star)
    if name == "primal_logistic":
        return primal_distributed_logistic_run(ds, scfg, beta_star=beta_star,
                                               alpha=obj.alpha)
    if name == "gradient_descent":
        res = gradient_descent(ds, obj, rho=algo.get("rho"),
                               max_iters=scfg.max_iters, tol=scfg.tol,
                               beta_star=beta_star,
                               backtracking=algo.get("backtracking", False),
                               time_budget=scfg.time_budget)
        from .admm import SolverRun
        return SolverRun(algorithm=name, config={}, beta=res["beta"],
                         iterations=res["iterations"], converged=res["converged"],
                         trace=res["trace"], wall_time=res["wall_time"])
    if name == "newton":
        from .admm import SolverRun
        t0 = time.perf_counter()
        beta, trail = newton_logistic(ds.X, ds.y, alpha=obj.alpha, tol=1e-10,
                                      max_iters=scfg.max_iters, return_trace=True,
                                      strict=False)
        return SolverRun(algorithm=name, config={}, beta=beta,
                         iterations=len(trail) - 1, converged=True, trace={},
                         wall_time=time.perf_counter() - t0)
    raise UsageError(f"unknown algorithm {name!r}")


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _load_config(args, required=True):
    cfg = {}
    if getattr(args, "config", None):
        cfg = json.loads(Path(args.config).read_text())
    elif required:
        raise UsageError("--config FILE is required")
    return cfg


def _cmd_solve(args):
    cfg = _load_config(args)
    for key in ("seed", "b", "alpha_percent"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    if args.traces:
        cfg["traces"] = True
    out_dir = Path(args.out or cfg.get("output_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    report, rows, traces = run_experiment(cfg)
    _write_csv(out_dir / "results.csv",
               ["algorithm", "absolute_loss", "relative_residual",
                "iterations", "wall_time", "converged"],
               [[r.algorithm, r.absolute_loss, r.relative_residual,
                 r.iterations, r.wall_time, str(r.converged)] for r in rows])
    (out_dir / "results.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    for name, trace in traces.items():
        series = [k for k in ("al", "beta_change", "residual") if trace.get(k)]
        length = len(trace[series[0]]) if series else 0
        _write_csv(out_dir / f"trace_{name}.csv", ["iteration"] + series,
                   [[str(i + 1)] + [trace[s][i] for s in series] for i in range(length)])
    for r in rows:
        print(f"{r.algorithm}: AL={r.absolute_loss:.6e} iters={r.iterations} "
              f"time={r.wall_time:.3f}s converged={r.converged}")
    return EXIT_OK


def _cmd_pcg(args):
    cfg = _load_config(args)
    seed = int(cfg.get("seed", 0))
    ds = _dataset_from_config(cfg["dataset"], int(cfg.get("b", 2)),
                              cfg.get("partition", "contiguous"), seed)
    kind = args.precond or cfg.get("preconditioner", "identity")
    if kind == "identity":
        pre = build_identity_precond(ds)
    elif kind == "local":
        pre = build_local_precond(ds)
    elif kind == "global":
        plan = build_pool(ds, float(cfg.get("alpha_percent", 5.0)), seed=seed)
        pre = build_global_precond(ds, plan, variant=cfg.get("variant", "pooled"))
    else:
        raise UsageError(f"unknown preconditioner {kind!r}")
    beta, trace = pcg_run(ds, pre, tol=float(cfg.get("tol", 1e-8)),
                          max_iters=cfg.get("max_iters"),
                          alpha=float(cfg.get("objective", {}).get("alpha", 0.0)))
    out_dir = Path(args.out or cfg.get("output_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / f"pcg_{kind}.csv", ["iteration", "relative_residual"],
               [[str(i), r] for i, r in enumerate(trace.residuals)])
    kappa = precond_condition_report(ds, pre) if args.kappa else None
    summary = {"preconditioner": kind, "iterations": trace.iterations,
               "converged": trace.converged,
               "final_residual": trace.residuals[-1],
               "kappa": kappa}
    (out_dir / f"pcg_{kind}.json").write_text(json.dumps(summary, indent=2))
    print(f"pcg[{kind}]: iters={trace.iterations} converged={trace.converged}"
          + (f" kappa={kappa:.6g}" if kappa is not None else ""))
    return EXIT_OK


def _cmd_spectra(args):
    cfg = _load_config(args)
    seed = int(cfg.get("seed", 0))
    ds = _dataset_from_config(cfg["dataset"], int(cfg.get("b", 4)),
                              cfg.get("partition", "contiguous"), seed)
    from .model import block_grams
    grams = block_grams(ds, theorem_mode=cfg.get("theorem_mode", False))
    rho = float(cfg.get("rho", 1.0))
    out = {
        "b": ds.b, "p": ds.p, "rho": rho,
        "qbar": grams.qbar, "qmin": grams.qmin, "q1": grams.q1, "q2": grams.q2,
        "radius_Mp": build_Mp(grams, rho).radius,
        "radius_Md": build_Md(grams, 1.0 / rho).radius,
        "radius_Mgd": build_Mgd(grams.global_gram, rho).radius,
    }
    if ds.b <= 6:
        from .spectral import build_Mc, rp_expected_map
        out["radius_Mc"] = build_Mc(grams, rho).radius
        out["radius_RpExpected"] = rp_expected_map(grams, rho).radius
    text = json.dumps(out, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK


def _cmd_verify(args):
    suites = args.suite or list(verify.SUITES)
    if "all" in suites:
        suites = list(verify.SUITES)
    bad = [s for s in suites if s not in verify.SUITES]
    if bad:
        raise UsageError(f"unknown suites: {bad}; choose from {verify.SUITES}")
    workers = min(_thread_count(), len(suites))
    results = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {s: pool.submit(verify.verify_theory, s, args.seed, args.trials)
                    for s in suites}
            for s, fut in futs.items():
                results[s] = fut.result()
    else:
        for s in suites:
            results[s] = verify.verify_theory(s, args.seed, args.trials)
    ok = all(r["pass"] for r in results.values())
    report = {"seed": args.seed, "trials": args.trials, "pass": ok,
              "suites": results}
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True))
    for s in suites:
        r = results[s]
        print(f"{s}: {'PASS' if r['pass'] else 'FAIL'} "
              f"({len(r['checks'])} checks, {len(r['violations'])} violations)")
    return EXIT_OK if ok else EXIT_VERIFY


def _cmd_sweep_alpha(args):
    """Iterations-to-tolerance versus shared fraction.

    alpha = 0 runs the no-sharing distributed baseline; positive alphas run
    the pool-reassembling solver on the same data and tolerance.
    """
    cfg = _load_config(args)
    seed = int(cfg.get("seed", 0))
    b = int(cfg.get("b", 4))
    ds = _dataset_from_config(cfg["dataset"], b, cfg.get("partition", "contiguous"), seed)
    tol = float(cfg.get("tol", 1e-6))
    rho = float(cfg.get("rho", 1.0))
    max_iters = int(cfg.get("max_iters", 100_000))
    alphas = [float(a) for a in (args.alphas or cfg.get("alphas", [0, 1, 2, 5, 10]))]
    beta_star = direct_ls(ds.X, ds.y)
    pairs = []
    for a in alphas:
        scfg = SolverConfig(rho=rho, max_iters=max_iters, tol=tol, seed=seed,
                            record_trace=False)
        if a == 0.0:
            run = primal_distributed_run(ds, Objective(), scfg, beta_star=beta_star)
        else:
            plan = build_pool(ds, a, seed=seed)
            run = drap_admm_run(ds, plan, scfg, beta_star=beta_star)
        pairs.append((a, run.iterations if run.converged else None))
        print(f"alpha={a:g}%: iterations={pairs[-1][1]}")
    out_dir = Path(args.out or cfg.get("output_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "alpha_sweep.csv", ["alpha_percent", "iterations_to_tol"],
               [[a, -1 if it is None else it] for a, it in pairs])
    (out_dir / "alpha_sweep.json").write_text(json.dumps(
        {"tol": tol, "rho": rho, "pairs": pairs}, indent=2))
    return EXIT_OK


def _cmd_gen(args):
    params = json.loads(args.params) if args.params else {}
    ds = dataset_from_generator(args.generator, params, default_seed=args.seed or 0)
    out = Path(args.out or f"{args.generator}.csv")
    data = np.column_stack([ds.X, ds.y])
    _write_csv(out, [f"x{j}" for j in range(ds.p)] + ["y"], data.tolist())
    meta = {"generator": args.generator, "params": params,
            "n": ds.n, "p": ds.p, "b": ds.b,
            "blocks": [ix.tolist() for ix in ds.blocks]}
    out.with_suffix(".json").write_text(json.dumps(meta, indent=2))
    print(f"wrote {out} ({ds.n} rows, {ds.p} features, {ds.b} blocks)")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="blockpool",
                     description="Distributed solvers with a shared data pool")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="run a solver-comparison experiment")
    sp.add_argument("--config", required=False)
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--b", type=int)
    sp.add_argument("--alpha-percent", dest="alpha_percent", type=float)
    sp.add_argument("--traces", action="store_true")
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("pcg", help="run preconditioned conjugate gradient")
    sp.add_argument("--config", required=False)
    sp.add_argument("--precond", choices=["identity", "local", "global"])
    sp.add_argument("--kappa", action="store_true",
                    help="also report the preconditioned condition number")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_pcg)

    sp = sub.add_parser("spectra", help="build iteration maps and report radii")
    sp.add_argument("--config", required=False)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_spectra)

    sp = sub.add_parser("verify-theory", help="numeric verification sweeps")
    sp.add_argument("--suite", action="append",
                    help="suite name (repeatable) or 'all'")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("sweep-alpha", help="iterations-to-tol vs shared fraction")
    sp.add_argument("--config", required=False)
    sp.add_argument("--alphas", type=float, nargs="*")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_sweep_alpha)

    sp = sub.add_parser("gen", help="emit a generated dataset as CSV")
    sp.add_argument("generator",
                    choices=["equal_blocks", "two_dominant", "paper_example",
                             "pcg_construction", "pcg_ordering", "random"])
    sp.add_argument("--params", help="generator parameters as a JSON object")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_gen)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BlockpoolError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
