"""Exact and sampled t-wise coverage.

A t-set is keyed by its feature indices in ascending order plus a bit code
of its polarities (bit j set when the j-th feature is selected). Exact
counts walk every feature combination; sampled estimates draw t-sets of
distinct literals uniformly from the C(2n, t) universe.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import (EnumerationBudgetExceeded, ModelError, SamplingStalledError,
                     SuiteMismatchError)
from .feature_model import FeatureModel, Product, TSet, is_valid_product, suite_matrix
from .sat import TSetValidator

DEFAULT_BUDGET = 10**7
SCHEMA_VERSION = 1
_BATCH = 4096


@dataclass
class CoverageReport:
    t: int
    covered: float
    total_valid: float
    coverage: float
    method: str  # "exact", "sampled" or "sampled-covered"
    sample_size: int | None = None
    seed: int | None = None
    std_error: float | None = None

    FIELDS = ("t", "covered", "total_valid", "coverage", "method",
              "sample_size", "seed", "std_error")

    def to_dict(self) -> dict:
        d = {"schema_version": SCHEMA_VERSION}
        d.update(asdict(self))
        return d

    def csv_row(self) -> list[str]:
        row = []
        for name in self.FIELDS:
            v = getattr(self, name)
            row.append("" if v is None else repr(v) if isinstance(v, float) else str(v))
        return row


@dataclass
class ValidTSetEstimate:
    t: int
    estimate: float
    valid: int
    samples: int
    universe: int
    std_error: float
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def _check_t(n, t):
    if not 2 <= t <= n:
        raise ModelError(f"t={t} outside 2..{n}")


def check_budget(n: int, t: int, budget: int = DEFAULT_BUDGET) -> None:
    need = math.comb(n, t) * 2**t
    if need > budget:
        raise EnumerationBudgetExceeded(
            f"exact {t}-wise enumeration over {n} features needs {need} validity checks "
            f"(budget {budget}); use the sampled estimator instead")


def check_suite(fm: FeatureModel, suite: Sequence[Product]) -> np.ndarray:
    for k, p in enumerate(suite):
        if p.n != fm.n:
            raise SuiteMismatchError(f"product {k} has {p.n} features, model has {fm.n}", k)
        if not is_valid_product(fm, p):
            raise SuiteMismatchError(f"product {k} violates the model", k)
    return suite_matrix(list(suite), fm.n)


def tsets_of_product(p: Product, t: int) -> Iterator[TSet]:
    _check_t(p.n, t)
    lits = p.literals()
    for combo in itertools.combinations(lits, t):
        yield TSet(combo)


def _combo_chunks(n, t, rows_per_chunk):
    it = itertools.combinations(range(n), t)
    while True:
        block = list(itertools.islice(it, rows_per_chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int64)


def _codes(X: np.ndarray, combos: np.ndarray) -> np.ndarray:
    """(rows of X, combos) matrix of polarity codes."""
    weights = 1 << np.arange(combos.shape[1], dtype=np.int64)
    return (X[:, combos].astype(np.int64) * weights).sum(axis=-1)


def exact_valid_tsets(fm: FeatureModel, t: int, budget: int = DEFAULT_BUDGET,
                      validator: TSetValidator | None = None) -> int:
    """Number of valid t-sets, by checking every canonical t-set."""
    _check_t(fm.n, t)
    check_budget(fm.n, t, budget)
    validator = validator or TSetValidator(fm)
    if not validator.solver.ok:
        return 0
    width = 1 << t
    total = 0
    for combos in _combo_chunks(fm.n, t, 20000):
        start = 0
        while start < len(combos):
            W = validator.witness_matrix
            step = max(1, 2_000_000 // max(1, len(W) * t))
            part = combos[start:start + step]
            start += step
            present = np.zeros((len(part), width), dtype=bool)
            if len(W):
                codes = _codes(W, part)
                cols = np.broadcast_to(np.arange(len(part)), codes.shape)
                present[cols, codes] = True
            total += int(present.sum())
            for ci, code in np.argwhere(~present):
                lits = tuple(int(f) + 1 if (code >> j) & 1 else -(int(f) + 1)
                             for j, f in enumerate(part[ci]))
                if validator.is_valid(lits):
                    total += 1
    return total


def _prefix_gains(X: np.ndarray, t: int) -> np.ndarray:
    """Number of t-sets each row adds to the union of the rows before it."""
    m, n = X.shape
    gains = np.zeros(m, dtype=np.int64)
    if m == 0:
        return gains
    width = 1 << t
    for combos in _combo_chunks(n, t, max(1, 2_000_000 // max(1, m * t))):
        codes = _codes(X, combos)
        seen = np.zeros((len(combos), width), dtype=bool)
        cols = np.arange(len(combos))
        for i in range(m):
            fresh = ~seen[cols, codes[i]]
            gains[i] += int(fresh.sum())
            seen[cols, codes[i]] = True
    return gains


def exact_coverage(fm: FeatureModel, suite: Sequence[Product], t: int,
                   budget: int = DEFAULT_BUDGET,
                   validator: TSetValidator | None = None) -> CoverageReport:
    _check_t(fm.n, t)
    check_budget(fm.n, t, budget)
    X = check_suite(fm, suite)
    validator = validator or TSetValidator(fm, suite)
    total = exact_valid_tsets(fm, t, budget, validator)
    covered = int(_prefix_gains(X, t).sum())
    return CoverageReport(t, covered, total, covered / total if total else 0.0, "exact")


def redundant_products(fm: FeatureModel, suite: Sequence[Product], t: int,
                       budget: int = DEFAULT_BUDGET) -> list[bool]:
    """For each product, whether dropping it leaves the exact coverage unchanged."""
    _check_t(fm.n, t)
    check_budget(fm.n, t, budget)
    X = check_suite(fm, suite)
    m = len(X)
    redundant = np.ones(m, dtype=bool)
    if m == 0:
        return []
    width = 1 << t
    for combos in _combo_chunks(fm.n, t, max(1, 2_000_000 // max(1, m * t))):
        codes = _codes(X, combos)
        counts = np.zeros((len(combos), width), dtype=np.int64)
        cols = np.arange(len(combos))
        for i in range(m):
            np.add.at(counts, (cols, codes[i]), 1)
        for i in range(m):
            redundant[i] &= bool(np.all(counts[cols, codes[i]] >= 2))
    return [bool(r) for r in redundant]


# --- sampling ---------------------------------------------------------------

def _distinct_rows(rng: np.random.Generator, count: int, high: int, t: int) -> np.ndarray:
    """count rows of t distinct integers in [0, high), each row uniform."""
    rows = rng.integers(0, high, size=(count, t))
    while True:
        srt = np.sort(rows, axis=1)
        bad = np.flatnonzero(np.any(srt[:, 1:] == srt[:, :-1], axis=1))
        if len(bad) == 0:
            return rows
        rows[bad] = rng.integers(0, high, size=(len(bad), t))


def _draw_literal_sets(rng, count, n, t):
    lits = _distinct_rows(rng, count, 2 * n, t)
    return lits // 2, (lits % 2) == 1


def estimate_valid_tsets(fm: FeatureModel, t: int, samples: int, seed: int,
                         validator: TSetValidator | None = None) -> ValidTSetEstimate:
    """Estimate #valid t-sets as (valid fraction of uniform draws) * C(2n, t).

    A draw holding both polarities of one feature counts as invalid.
    """
    _check_t(fm.n, t)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    validator = validator or TSetValidator(fm)
    rng = np.random.default_rng(seed)
    valid = 0
    left = samples
    while left:
        size = min(_BATCH, left)
        feats, signs = _draw_literal_sets(rng, size, fm.n, t)
        valid += int(validator.check_batch(feats, signs).sum())
        left -= size
    universe = math.comb(2 * fm.n, t)
    p = valid / samples
    return ValidTSetEstimate(t, p * universe, valid, samples, universe,
                             universe * math.sqrt(p * (1 - p) / samples), seed)


def sample_valid_tsets(fm: FeatureModel, t: int, samples: int, seed: int,
                       validator: TSetValidator | None = None,
                       min_valid_rate: float = 1e-3, stall_draws: int = 100_000):
    """Uniform sample of valid t-sets by rejection.

    Returns (feats, signs, draws): 0-based feature indices and polarities of
    the kept t-sets, and the number of draws consumed. Draws are generated
    serially from *seed*, so the sample depends on nothing else.
    """
    _check_t(fm.n, t)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    validator = validator or TSetValidator(fm)
    rng = np.random.default_rng(seed)
    kept_f, kept_s = [], []
    have = draws = 0
    while have < samples:
        feats, signs = _draw_literal_sets(rng, _BATCH, fm.n, t)
        ok = validator.check_batch(feats, signs)
        idx = np.flatnonzero(ok)
        need = samples - have
        if len(idx) >= need:
            idx = idx[:need]
            draws += int(idx[-1]) + 1
        else:
            draws += _BATCH
        kept_f.append(feats[idx])
        kept_s.append(signs[idx])
        have += len(idx)
        if have < samples and draws >= stall_draws and have / draws < min_valid_rate:
            raise SamplingStalledError(
                f"only {have} valid {t}-sets in {draws} draws; use exact mode")
    return np.concatenate(kept_f), np.concatenate(kept_s), draws


def first_cover(X: np.ndarray, feats: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Index of the first row of X exhibiting each t-set (len(X) when none does)."""
    m = len(X)
    first = np.full(len(feats), m, dtype=np.int64)
    for i in range(m - 1, -1, -1):
        hit = np.all(X[i][feats] == signs, axis=1)
        first[hit] = i
    return first


def estimate_coverage(fm: FeatureModel, suite: Sequence[Product], t: int, samples: int,
                      seed: int, method: str = "uniform",
                      validator: TSetValidator | None = None) -> CoverageReport:
    """Sampled t-wise coverage.

    ``uniform`` (default) samples valid t-sets uniformly and reports the
    covered fraction. ``covered`` samples from the t-sets the suite exhibits,
    estimates the size of their union, and divides by estimate_valid_tsets.
    """
    _check_t(fm.n, t)
    if not suite:
        raise ValueError("suite must not be empty")
    X = check_suite(fm, suite)
    validator = validator or TSetValidator(fm, suite)
    if method == "uniform":
        feats, signs, draws = sample_valid_tsets(fm, t, samples, seed, validator)
        hit = first_cover(X, feats, signs) < len(X)
        c = float(hit.mean())
        total = samples / draws * math.comb(2 * fm.n, t)
        return CoverageReport(t, c * total, total, c, "sampled", samples, seed,
                              math.sqrt(c * (1 - c) / samples))
    if method == "covered":
        rng = np.random.default_rng(seed)
        rows = rng.integers(0, len(X), size=samples)
        feats = _distinct_rows(rng, samples, fm.n, t)
        signs = X[rows[:, None], feats]
        mult = np.zeros(samples, dtype=np.int64)
        for row in X:
            mult += np.all(row[feats] == signs, axis=1)
        inv = 1.0 / mult
        per_pair = len(X) * math.comb(fm.n, t)
        union = per_pair * float(inv.mean())
        union_se = per_pair * float(inv.std(ddof=1)) / math.sqrt(samples) if samples > 1 else 0.0
        valid = estimate_valid_tsets(fm, t, samples, seed, validator)
        c = min(1.0, union / valid.estimate) if valid.estimate else 0.0
        rel = math.hypot(union_se / union, valid.std_error / valid.estimate) if valid.estimate else 0.0
        return CoverageReport(t, union, valid.estimate, c, "sampled-covered", samples, seed, c * rel)
    raise ValueError(f"unknown estimator {method!r}")


def coverage_curve(fm: FeatureModel, ordered: Sequence[Product], t: int, mode: str = "exact",
                   samples: int = 10_000, seed: int = 0, budget: int = DEFAULT_BUDGET,
                   validator: TSetValidator | None = None) -> list[float]:
    """Coverage of each prefix (1..m products) of an ordered suite."""
    ordered = list(ordered)
    _check_t(fm.n, t)
    X = check_suite(fm, ordered)
    validator = validator or TSetValidator(fm, ordered)
    if mode == "exact":
        check_budget(fm.n, t, budget)
        total = exact_valid_tsets(fm, t, budget, validator)
        cum = np.cumsum(_prefix_gains(X, t))
        return [float(c) / total if total else 0.0 for c in cum]
    if mode == "sampled":
        feats, signs, _ = sample_valid_tsets(fm, t, samples, seed, validator)
        first = first_cover(X, feats, signs)
        counts = np.bincount(first, minlength=len(X) + 1)[:len(X)]
        return [float(c) / samples for c in np.cumsum(counts)]
    raise ValueError(f"unknown coverage mode {mode!r}")
