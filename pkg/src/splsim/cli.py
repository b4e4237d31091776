"""Command-line front end: generate, prioritize, coverage, evaluate, rerun.

Exit codes: 0 ok, 2 usage, 3 model parse error, 4 inconsistent model,
5 suite/model mismatch, 6 exact enumeration refused, 7 sampling stalled.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import statistics
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .coverage import (DEFAULT_BUDGET, SCHEMA_VERSION, CoverageReport, check_budget,
                       coverage_curve, estimate_coverage, exact_coverage)
from .errors import (EnumerationBudgetExceeded, InconsistentModelError, ParseError,
                     SamplingStalledError, SuiteMismatchError)
from .feature_model import FeatureModel, Product, generate_random_model, load_model
from .generation import TRACE_COLUMNS, SearchConfig, search_generate, unpredictable_generate
from .prioritization import area_under_curve, prioritize
from .sat import TSetValidator

EXIT_USAGE, EXIT_PARSE, EXIT_INCONSISTENT, EXIT_MISMATCH, EXIT_BUDGET, EXIT_STALLED = 2, 3, 4, 5, 6, 7
OUT_ENV = "SPLSIM_OUT"
MODEL_SUFFIXES = {".cnf": "dimacs", ".dimacs": "dimacs", ".json": "native", ".tree": "tree"}


class UsageError(Exception):
    pass


# --- file helpers -----------------------------------------------------------

def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def products_csv(fm: FeatureModel, products) -> str:
    rows = [list(fm.features)]
    rows.extend([int(s) for s in p.signs] for p in products)
    return _csv_text(rows)


def read_products_csv(path, fm: FeatureModel) -> list[Product]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SuiteMismatchError(f"{path}: missing header row")
    if tuple(rows[0]) != fm.features:
        raise SuiteMismatchError(f"{path}: header does not match the model's feature names")
    products = []
    for k, row in enumerate(rows[1:]):
        if len(row) != fm.n or any(v not in ("0", "1") for v in row):
            raise SuiteMismatchError(f"{path}: row {k + 2} is not {fm.n} values of 0/1", k)
        products.append(Product(tuple(v == "1" for v in row)))
    return products


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


TIMING_COLUMNS = {"trace.csv": ["elapsed_ms"], "results.csv": ["runtime_s"]}


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "splsim-out")


def _manifest(command, argv, args, started, outputs, reproducible) -> dict:
    model = None
    if getattr(args, "model", None):
        model = {"path": str(Path(args.model).resolve()), "format": args.format}
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "splsim",
        "version": __version__,
        "command": command,
        "argv": argv,
        "model": model,
        "params": {k: v for k, v in vars(args).items() if k not in ("func", "out")},
        "seed": getattr(args, "seed", None),
        "reproducible": reproducible,
        "outputs": outputs,
        "started": started,
        "finished": _now(),
        "trace_schema_version": SCHEMA_VERSION,
        # wall-clock columns; everything else in the outputs is seed-determined
        "timing_columns": {k: v for k, v in TIMING_COLUMNS.items() if k in outputs},
    }


def _canonical_argv(command, args, flags) -> list[str]:
    """Rebuild a flag list (paths made absolute, --out dropped) for reruns."""
    argv = [command]
    for flag, dest, kind in flags:
        value = getattr(args, dest)
        if value is None or value is False:
            continue
        if kind == "path":
            value = str(Path(value).resolve())
        if value is True:
            argv.append(flag)
        else:
            argv += [flag, str(value)]
    return argv


def _finish(out: Path, files: dict[str, str], manifest: dict) -> None:
    for name, text in files.items():
        _atomic_write(out / name, text)
    _atomic_write(out / "manifest.json", _json_text(manifest))


def _load(args) -> FeatureModel:
    fmt = args.format
    if fmt is None:
        fmt = MODEL_SUFFIXES.get(Path(args.model).suffix, "dimacs")
        args.format = fmt
    return load_model(args.model, fmt)


# --- commands ---------------------------------------------------------------

GENERATE_FLAGS = [("--model", "model", "path"), ("--format", "format", None),
                  ("--products", "products", None), ("--strategy", "strategy", None),
                  ("--budget-seconds", "budget_seconds", None), ("--iterations", "iterations", None),
                  ("--prioritizer", "prioritizer", None), ("--seed", "seed", None)]


def cmd_generate(args) -> int:
    started = _now()
    fm = _load(args)
    argv = _canonical_argv("generate", args, GENERATE_FLAGS)
    files = {}
    if args.strategy == "unpredictable":
        products = unpredictable_generate(fm, args.products, args.seed)
        reproducible = True
    else:
        if args.budget_seconds is None and args.iterations is None:
            args.budget_seconds = 60.0
        cfg = SearchConfig(m=args.products, budget_seconds=args.budget_seconds,
                           iterations=args.iterations, seed=args.seed,
                           prioritizer=args.prioritizer)
        suite, trace = search_generate(fm, cfg)
        products = list(suite)
        reproducible = cfg.reproducible
        files["trace.csv"] = _csv_text([TRACE_COLUMNS, *trace.rows()])
    files["products.csv"] = products_csv(fm, products)
    _finish(_out_dir(args), files,
            _manifest("generate", argv, args, started, sorted(files), reproducible))
    return 0


PRIORITIZE_FLAGS = [("--model", "model", "path"), ("--format", "format", None),
                    ("--suite", "suite", "path"), ("--algorithm", "algorithm", None),
                    ("--seed", "seed", None)]


def cmd_prioritize(args) -> int:
    started = _now()
    fm = _load(args)
    argv = _canonical_argv("prioritize", args, PRIORITIZE_FLAGS)
    suite = read_products_csv(args.suite, fm)
    ordered = prioritize(suite, args.algorithm, args.seed)
    files = {"products.csv": products_csv(fm, ordered)}
    _finish(_out_dir(args), files, _manifest("prioritize", argv, args, started, sorted(files), True))
    return 0


COVERAGE_FLAGS = [("--model", "model", "path"), ("--format", "format", None),
                  ("--suite", "suite", "path"), ("--t", "t", None), ("--mode", "mode", None),
                  ("--samples", "samples", None), ("--seed", "seed", None),
                  ("--estimator", "estimator", None), ("--budget", "budget", None),
                  ("--curve", "curve", None)]


def cmd_coverage(args) -> int:
    started = _now()
    fm = _load(args)
    argv = _canonical_argv("coverage", args, COVERAGE_FLAGS)
    suite = read_products_csv(args.suite, fm)
    if not suite:
        raise UsageError("the suite is empty")
    validator = TSetValidator(fm, suite)
    try:
        if args.mode == "exact":
            report = exact_coverage(fm, suite, args.t, args.budget, validator)
        else:
            report = estimate_coverage(fm, suite, args.t, args.samples, args.seed,
                                       args.estimator, validator)
    except EnumerationBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("try: splsim coverage --model {} --suite {} --t {} --mode sampled --samples {} --seed {}"
              .format(args.model, args.suite, args.t, args.samples, args.seed), file=sys.stderr)
        return EXIT_BUDGET
    doc = report.to_dict()
    files = {"report.csv": _csv_text([CoverageReport.FIELDS, report.csv_row()])}
    if args.curve:
        curve = coverage_curve(fm, suite, args.t, args.mode, args.samples, args.seed,
                               args.budget, validator)
        doc["auc"] = area_under_curve(curve)
        files["curve.csv"] = _csv_text([("prefix", "coverage"),
                                        *((k, repr(c)) for k, c in enumerate(curve, start=1))])
    files["report.json"] = _json_text(doc)
    sys.stdout.write(files["report.json"])
    _finish(_out_dir(args), files, _manifest("coverage", argv, args, started, sorted(files), True))
    return 0


EVALUATE_FLAGS = [("--models", "models", "path"), ("--random-models", "random_models", None),
                  ("--density", "density", None), ("--t", "t", None),
                  ("--strategies", "strategies", None), ("--prioritizers", "prioritizers", None),
                  ("--repeats", "repeats", None), ("--products", "products", None),
                  ("--iterations", "iterations", None), ("--budget-seconds", "budget_seconds", None),
                  ("--samples", "samples", None), ("--budget", "budget", None),
                  ("--seed", "seed", None)]

RESULT_COLUMNS = ("model", "n_features", "strategy", "t", "repeats", "seeds", "coverage_method",
                  "coverage_mean", "coverage_std", "auc_random", "auc_greedy", "auc_near_optimal",
                  "runtime_s", "search_ge_unpredictable", "auc_ordered")


def _evaluate_model(job):
    name, fm, opts = job
    rows = []
    suites = {}
    for strategy in opts["strategies"]:
        runs = []
        for r in range(opts["repeats"]):
            seed = opts["seed"] + r
            t0 = time.perf_counter()
            if strategy == "unpredictable":
                products = unpredictable_generate(fm, opts["products"], seed)
            else:
                cfg = SearchConfig(m=opts["products"], budget_seconds=opts["budget_seconds"],
                                   iterations=opts["iterations"], seed=seed)
                products = list(search_generate(fm, cfg)[0])
            runs.append((seed, products, time.perf_counter() - t0))
        suites[strategy] = runs
    validator = TSetValidator(fm)
    for strategy in opts["strategies"]:
        for t in opts["t"]:
            covs = []
            aucs = {p: [] for p in ("random", "greedy", "near_optimal")}
            method = "exact"
            for seed, products, _ in suites[strategy]:
                try:
                    check_budget(fm.n, t, opts["budget"])
                    mode = "exact"
                except EnumerationBudgetExceeded:
                    mode = method = "sampled"
                for p in products:
                    validator.add_witness(p.signs)
                if mode == "exact":
                    covs.append(exact_coverage(fm, products, t, opts["budget"], validator).coverage)
                else:
                    covs.append(estimate_coverage(fm, products, t, opts["samples"], seed,
                                                  validator=validator).coverage)
                for prio in opts["prioritizers"]:
                    seeds = range(seed, seed + 10) if prio == "random" else [seed]
                    vals = [area_under_curve(coverage_curve(
                        fm, prioritize(products, prio, s), t, mode, opts["samples"], seed,
                        opts["budget"], validator)) for s in seeds]
                    aucs[prio].append(statistics.fmean(vals))
            rows.append({
                "model": name, "n_features": fm.n, "strategy": strategy, "t": t,
                "repeats": len(covs), "seeds": " ".join(str(s) for s, _, _ in suites[strategy]),
                "coverage_method": method, "coverage_mean": statistics.fmean(covs),
                "coverage_std": statistics.pstdev(covs),
                **{f"auc_{p}": statistics.fmean(v) if v else None for p, v in aucs.items()},
                "runtime_s": statistics.fmean(r for _, _, r in suites[strategy]),
            })
    return rows


def _summary(rows) -> dict:
    def mean(key, subset=rows):
        vals = [r[key] for r in subset if r[key] is not None]
        return statistics.fmean(vals) if vals else None

    by_strategy = {}
    for r in rows:
        by_strategy.setdefault(r["strategy"], []).append(r)
    cov = {s: mean("coverage_mean", rs) for s, rs in by_strategy.items()}
    auc = {p: mean(f"auc_{p}") for p in ("random", "greedy", "near_optimal")}
    ge = None
    if "search" in cov and "unpredictable" in cov:
        ge = int(cov["search"] >= cov["unpredictable"])
    present = [auc[p] for p in ("random", "greedy", "near_optimal") if auc[p] is not None]
    ordered = int(all(a <= b for a, b in zip(present, present[1:]))) if len(present) > 1 else None
    return {"coverage_by_strategy": cov, "auc": auc, "search_ge_unpredictable": ge,
            "auc_ordered": ordered}


def _fmt(v):
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def cmd_evaluate(args) -> int:
    started = _now()
    argv = _canonical_argv("evaluate", args, EVALUATE_FLAGS)
    models: list[tuple[str, FeatureModel]] = []
    if args.models:
        paths = sorted(p for p in Path(args.models).iterdir() if p.suffix in MODEL_SUFFIXES)
        for p in paths:
            models.append((p.name, load_model(p, MODEL_SUFFIXES[p.suffix])))
    if args.random_models:
        try:
            count, size, seed = (int(x) for x in args.random_models.split(","))
        except ValueError:
            raise UsageError("--random-models expects N,SIZE,SEED") from None
        for k in range(count):
            models.append((f"random-{size}-{seed + k}",
                           generate_random_model(size, args.density, seed + k)))
    if not models:
        raise UsageError("no models to evaluate")
    if args.budget_seconds is None and args.iterations is None:
        args.iterations = 1000
    opts = {
        "strategies": [s.strip() for s in args.strategies.split(",")],
        "prioritizers": [p.strip().replace("-", "_") for p in args.prioritizers.split(",") if p.strip()],
        "t": [int(x) for x in args.t.split(",")],
        "repeats": args.repeats, "products": args.products, "seed": args.seed,
        "iterations": args.iterations, "budget_seconds": args.budget_seconds,
        "samples": args.samples, "budget": args.budget,
    }
    for s in opts["strategies"]:
        if s not in ("search", "unpredictable"):
            raise UsageError(f"unknown strategy {s!r}")
    for p in opts["prioritizers"]:
        if p not in ("random", "greedy", "near_optimal"):
            raise UsageError(f"unknown prioritizer {p!r}")
    jobs = [(name, fm, opts) for name, fm in models]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_evaluate_model, jobs))
    else:
        results = [_evaluate_model(j) for j in jobs]
    rows = sorted((r for rs in results for r in rs),
                  key=lambda r: (r["model"], r["strategy"], r["t"]))
    summary = _summary(rows)
    summary_row = {c: None for c in RESULT_COLUMNS}
    summary_row.update({
        "model": "__summary__", "strategy": "all", "t": "all",
        "repeats": sum(r["repeats"] for r in rows),
        "coverage_mean": statistics.fmean(r["coverage_mean"] for r in rows),
        **{f"auc_{p}": v for p, v in summary["auc"].items()},
        "search_ge_unpredictable": summary["search_ge_unpredictable"],
        "auc_ordered": summary["auc_ordered"],
    })
    table = [RESULT_COLUMNS] + [[_fmt(r.get(c)) for c in RESULT_COLUMNS] for r in rows + [summary_row]]
    files = {"results.csv": _csv_text(table), "summary.json": _json_text(summary)}
    _finish(_out_dir(args), files,
            _manifest("evaluate", argv, args, started, sorted(files), args.budget_seconds is None))
    return 0


def cmd_rerun(args) -> int:
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    argv = list(manifest["argv"])
    if args.out:
        argv += ["--out", args.out]
    return main(argv)


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"splsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def model_flags(p):
        p.add_argument("--model", required=True, help="model file")
        p.add_argument("--format", choices=("dimacs", "native", "tree"),
                       help="model format (default: from the file suffix)")
        p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./splsim-out)")

    g = sub.add_parser("generate", help="generate a prioritized suite")
    model_flags(g)
    g.add_argument("--products", type=int, required=True)
    g.add_argument("--strategy", choices=("search", "unpredictable"), default="search")
    budget = g.add_mutually_exclusive_group()
    budget.add_argument("--budget-seconds", type=float)
    budget.add_argument("--iterations", type=int)
    g.add_argument("--prioritizer", choices=("greedy", "near-optimal"), default="near-optimal")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("prioritize", help="order an existing suite")
    model_flags(p)
    p.add_argument("--suite", required=True, help="products.csv")
    p.add_argument("--algorithm", choices=("greedy", "near-optimal", "random"), default="near-optimal")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_prioritize)

    c = sub.add_parser("coverage", help="measure t-wise coverage of a suite")
    model_flags(c)
    c.add_argument("--suite", required=True, help="products.csv")
    c.add_argument("--t", type=int, default=2)
    c.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    c.add_argument("--samples", type=int, default=100_000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--estimator", choices=("uniform", "covered"), default="uniform")
    c.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="exact-mode validity-check budget")
    c.add_argument("--curve", action="store_true", help="also write curve.csv and the AUC")
    c.set_defaults(func=cmd_coverage)

    e = sub.add_parser("evaluate", help="run a generation/prioritization experiment")
    e.add_argument("--models", help="directory of model files")
    e.add_argument("--random-models", help="N,SIZE,SEED")
    e.add_argument("--density", type=float, default=1.0, help="clause density of random models")
    e.add_argument("--t", default="2", help="comma-separated strengths")
    e.add_argument("--strategies", default="search,unpredictable")
    e.add_argument("--prioritizers", default="random,greedy,near-optimal")
    e.add_argument("--repeats", type=int, default=1)
    e.add_argument("--products", type=int, default=10)
    budget = e.add_mutually_exclusive_group()
    budget.add_argument("--budget-seconds", type=float)
    budget.add_argument("--iterations", type=int)
    e.add_argument("--samples", type=int, default=10_000)
    e.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("rerun", help="repeat a run recorded in a manifest")
    r.add_argument("manifest")
    r.add_argument("--out")
    r.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, FileNotFoundError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InconsistentModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except SuiteMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except EnumerationBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except SamplingStalledError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STALLED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
