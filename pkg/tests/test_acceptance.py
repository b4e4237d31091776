"""End-to-end acceptance checks. Each test prints one PASS/FAIL line.

Run alone with:  pytest tests/test_acceptance.py -s
"""

import json
import random
import statistics
import time
from fractions import Fraction

import pytest
from scipy.stats import spearmanr

from splsim import (Product, SearchConfig, area_under_curve, coverage_curve, estimate_coverage,
                    estimate_valid_tsets, exact_coverage, exact_valid_tsets, fitness,
                    generate_random_model, greedy_prioritize, is_valid_product, jaccard_distance,
                    near_optimal_prioritize, random_prioritize, search_generate, serialize_dimacs,
                    unpredictable_generate)
from splsim.cli import main

from conftest import P1, P2, P3, small_models
from oracles import covered_tsets, valid_products, valid_tsets
from test_cli import strip_timing


@pytest.fixture
def verdict(capsys):
    def say(number, title, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
        assert ok, detail
    return say


def test_c1_worked_example(verdict):
    exact = {(0, 1): Fraction(2, 3), (0, 2): Fraction(2, 5), (1, 2): Fraction(6, 7)}
    suite = [P1, P2, P3]
    errs = [abs(jaccard_distance(suite[i], suite[j]) - float(v)) for (i, j), v in exact.items()]
    errs.append(abs(fitness(suite) - float(sum(exact.values()))))
    verdict(1, "worked-example distances and fitness", max(errs) <= 1e-9,
            f"max error {max(errs):.2e}, fitness {fitness(suite):.4f}")


def test_c2_exact_oracle(verdict):
    models = small_models(50, seed=2024, n_range=(2, 10))
    bad = 0
    for k, fm in enumerate(models):
        products = valid_products(fm.n, fm.clauses)
        rng = random.Random(k)
        suite = rng.sample(products, rng.randint(1, min(len(products), 6)))
        for t in (2, 3):
            if t > fm.n:
                continue
            truth = valid_tsets(fm.n, fm.clauses, t)
            rep = exact_coverage(fm, [Product(s) for s in suite], t)
            ok = (exact_valid_tsets(fm, t) == len(truth) and rep.total_valid == len(truth)
                  and rep.covered == len(covered_tsets(suite, t)))
            bad += not ok
    verdict(2, "exact counts equal brute force", bad == 0, f"{bad} mismatches over 50 models, t=2,3")


def test_c3_estimator_calibration(verdict):
    hits_valid = hits_cov = 0
    for k in range(20):
        fm = generate_random_model(8, 1.0, 3000 + k)
        est = estimate_valid_tsets(fm, 2, 10_000, k)
        hits_valid += abs(est.estimate - exact_valid_tsets(fm, 2)) <= 3 * est.std_error
        suite = unpredictable_generate(fm, 3, k)
        rep = estimate_coverage(fm, suite, 2, 10_000, k)
        hits_cov += abs(rep.coverage - exact_coverage(fm, suite, 2).coverage) <= 3 * rep.std_error
    verdict(3, "sampled estimates within 3 standard errors", hits_valid >= 18 and hits_cov >= 18,
            f"valid t-sets {hits_valid}/20, coverage {hits_cov}/20")


def test_c4_monotone_and_valid(verdict):
    problems = 0
    for seed in range(100):
        fm = generate_random_model(20, 1.0, 4000 + seed)
        suite, trace = search_generate(fm, SearchConfig(m=6, iterations=60, seed=seed))
        problems += not all(is_valid_product(fm, p) for p in suite)
        problems += any(r.accepted and not r.fitness_after > r.fitness_before for r in trace.records)
        problems += trace.final_fitness < trace.initial_fitness
    verdict(4, "search accepts only strict gains and emits valid products", problems == 0,
            f"{problems} violations over 100 runs")


def test_c5_search_beats_unpredictable(verdict):
    cs, cu = [], []
    for k in range(20):
        fm = generate_random_model(50, 1.0, 5000 + k)
        suite, _ = search_generate(fm, SearchConfig(m=10, iterations=2000, seed=k, trace=False))
        cs.append(exact_coverage(fm, list(suite), 2).coverage)
        cu.append(exact_coverage(fm, unpredictable_generate(fm, 10, k), 2).coverage)
    wins = sum(a > b for a, b in zip(cs, cu))
    ok = statistics.fmean(cs) >= statistics.fmean(cu) and wins >= 12
    verdict(5, "search coverage >= unpredictable coverage", ok,
            f"means {statistics.fmean(cs):.4f} vs {statistics.fmean(cu):.4f}, strict wins {wins}/20")


def test_c6_prioritization_ordering(verdict):
    R, G, N = [], [], []
    for k in range(20):
        fm = generate_random_model(30, 1.0, 6000 + k)
        dissimilar = unpredictable_generate(fm, 20, k)
        # the similar half: copies of one product
        suite = dissimilar + [dissimilar[0]] * 20
        random.Random(k).shuffle(suite)
        auc = lambda ordered: area_under_curve(coverage_curve(fm, list(ordered), 2))
        R.append(statistics.fmean(auc(random_prioritize(suite, s)) for s in range(10)))
        G.append(auc(greedy_prioritize(suite)))
        N.append(auc(near_optimal_prioritize(suite)))
    r, g, n = statistics.fmean(R), statistics.fmean(G), statistics.fmean(N)
    verdict(6, "AUC random <= greedy <= near-optimal", r <= g <= n and n > r,
            f"random {r:.3f}, greedy {g:.3f}, near-optimal {n:.3f}")


def test_c7_fitness_tracks_coverage(verdict):
    fm = generate_random_model(30, 1.0, 7000)
    f, c = [], []
    for k in range(30):
        suite = unpredictable_generate(fm, 10, k)
        f.append(fitness(suite))
        c.append(exact_coverage(fm, suite, 2).coverage)
    rho = spearmanr(f, c).statistic
    verdict(7, "Spearman(fitness, coverage) > 0.5", rho > 0.5, f"rho {rho:.3f}")


@pytest.mark.slow
def test_c8_scalability(verdict):
    wins, lines = 0, []
    t0 = time.perf_counter()
    for k in range(10):
        fm = generate_random_model(1000, 1.0, 8000 + k)
        suite, _ = search_generate(fm, SearchConfig(m=50, budget_seconds=60, seed=k, trace=False))
        cs = estimate_coverage(fm, list(suite), 2, 100_000, k).coverage
        cu = estimate_coverage(fm, unpredictable_generate(fm, 50, k), 2, 100_000, k).coverage
        wins += cs >= cu
        lines.append(f"{cs:.4f}/{cu:.4f}")
    verdict(8, "1000 features: search >= unpredictable sampled coverage", wins >= 7,
            f"{wins}/10 runs, {time.perf_counter() - t0:.0f}s, " + " ".join(lines))


def test_c9_rerun_determinism(verdict, tmp_path):
    model = tmp_path / "m.cnf"
    model.write_text(serialize_dimacs(generate_random_model(15, 1.0, 9)))
    base = tmp_path / "base"
    assert main(["generate", "--model", str(model), "--products", "6", "--iterations", "50",
                 "--seed", "4", "--out", str(base)]) == 0
    suite = str(base / "products.csv")
    runs = [
        ["generate", "--model", str(model), "--products", "8", "--iterations", "100", "--seed", "1"],
        ["generate", "--model", str(model), "--products", "8", "--strategy", "unpredictable"],
        ["prioritize", "--model", str(model), "--suite", suite, "--algorithm", "near-optimal"],
        ["prioritize", "--model", str(model), "--suite", suite, "--algorithm", "random", "--seed", "9"],
        ["coverage", "--model", str(model), "--suite", suite, "--t", "3", "--curve"],
        ["coverage", "--model", str(model), "--suite", suite, "--mode", "sampled",
         "--samples", "5000", "--seed", "2", "--curve"],
        ["coverage", "--model", str(model), "--suite", suite, "--mode", "sampled",
         "--estimator", "covered", "--samples", "5000"],
        ["evaluate", "--random-models", "2,10,3", "--products", "4", "--iterations", "30",
         "--t", "2,3"],
    ]
    differing = []
    for k, argv in enumerate(runs):
        first, second = tmp_path / f"a{k}", tmp_path / f"b{k}"
        assert main(argv + ["--out", str(first)]) == 0
        assert main(["rerun", str(first / "manifest.json"), "--out", str(second)]) == 0
        manifest = json.loads((first / "manifest.json").read_text())
        for name in manifest["outputs"]:
            cols = manifest["timing_columns"].get(name, [])
            if strip_timing((first / name).read_bytes(), cols) != \
                    strip_timing((second / name).read_bytes(), cols):
                differing.append(f"{argv[0]}:{name}")
    verdict(9, "reruns reproduce outputs", not differing,
            f"{len(runs)} commands, differing: {differing or 'none'}")
