"""Suite generation: unpredictable sampling and the similarity-driven (1+1) search."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .feature_model import FeatureModel, Product
from .prioritization import PrioritizedSuite, greedy_order, near_optimal_order
from .sat import SamplerSession
from .similarity import agreement_matrix, distances_of, exact_distance, fitness_from_matrix

TRACE_COLUMNS = ("iteration", "elapsed_ms", "fitness", "accepted")

_ORDERS = {"greedy": greedy_order, "near_optimal": near_optimal_order}


@dataclass
class SearchConfig:
    m: int
    budget_seconds: float | None = None
    iterations: int | None = None
    seed: int = 0
    prioritizer: str = "near_optimal"
    trace: bool = True
    max_redraws: int = 1000

    def __post_init__(self):
        self.prioritizer = self.prioritizer.replace("-", "_")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.budget_seconds is None and self.iterations is None:
            raise ValueError("a time budget or an iteration cap is required")
        if self.budget_seconds is not None and self.budget_seconds <= 0:
            raise ValueError("budget_seconds must be positive")
        if self.iterations is not None and self.iterations <= 0:
            raise ValueError("iterations must be positive")
        if self.prioritizer not in _ORDERS:
            raise ValueError(f"unknown prioritizer {self.prioritizer!r}")

    @property
    def reproducible(self) -> bool:
        return self.budget_seconds is None


@dataclass
class TraceRecord:
    iteration: int
    fitness_before: float
    fitness_after: float
    accepted: bool
    elapsed: float


@dataclass
class SearchTrace:
    records: list[TraceRecord] = field(default_factory=list)
    initial_fitness: float = 0.0
    reproducible: bool = True

    @property
    def final_fitness(self) -> float:
        return self.records[-1].fitness_after if self.records else self.initial_fitness

    def rows(self):
        for r in self.records:
            yield (r.iteration, f"{r.elapsed * 1000:.3f}", repr(r.fitness_after), int(r.accepted))


def unpredictable_generate(fm: FeatureModel, m: int, seed: int) -> list[Product]:
    session = SamplerSession(fm, seed)
    return [session.next() for _ in range(m)]


def _exact_row_sum(A, n, row):
    return sum((exact_distance(int(a), n) for k, a in enumerate(A[row]) if k != row),
               Fraction(0))


def _worst(A, D, n, order):
    """Member with the smallest summed distance to the others; the latest in *order* on ties."""
    sums = D.sum(axis=1)
    low = sums.min()
    tied = np.flatnonzero(sums <= low + 1e-9 * max(1.0, low))
    if len(tied) == 1:
        return int(tied[0])
    exact = {int(k): _exact_row_sum(A, n, int(k)) for k in tied}
    best = min(exact.values())
    rank = {k: pos for pos, k in enumerate(order())}
    return max((k for k, v in exact.items() if v == best), key=rank.__getitem__)


def search_generate(fm: FeatureModel, cfg: SearchConfig) -> tuple[PrioritizedSuite, SearchTrace]:
    """(1+1) evolutionary search maximizing the pairwise Jaccard fitness.

    Each iteration tries to swap the weakest member for a fresh sampled
    product and keeps the swap only when fitness strictly increases.
    """
    start = time.perf_counter()
    deadline = None if cfg.budget_seconds is None else start + cfg.budget_seconds
    session = SamplerSession(fm, cfg.seed)
    suite = [session.next() for _ in range(cfg.m)]
    n = fm.n
    X = np.array([p.signs for p in suite], dtype=bool)
    A = agreement_matrix(X)
    D = distances_of(A, n)
    fitness = fitness_from_matrix(D)
    order_of = _ORDERS[cfg.prioritizer]
    trace = SearchTrace(initial_fitness=fitness, reproducible=cfg.reproducible)

    iteration = 0
    while True:
        if cfg.iterations is not None and iteration >= cfg.iterations:
            break
        if deadline is not None and time.perf_counter() >= deadline:
            break
        iteration += 1
        before = fitness
        accepted = False
        if cfg.m > 1:
            worst = _worst(A, D, n, lambda: order_of(A, n))
        else:
            worst = 0
        candidate = None
        for _ in range(cfg.max_redraws):
            p = session.next()
            if p.signs != suite[worst].signs:
                candidate = p
                break
        if candidate is not None and cfg.m > 1:
            x = np.array(candidate.signs, dtype=bool)
            a_new = (X == x).sum(axis=1)
            a_new[worst] = n
            d_new = 1.0 - a_new / (2 * n - a_new)
            d_new[worst] = 0.0
            delta = float(d_new.sum() - D[worst].sum())
            if abs(delta) < 1e-9:
                new_sum = sum((exact_distance(int(a), n) for k, a in enumerate(a_new) if k != worst),
                              Fraction(0))
                accepted = new_sum > _exact_row_sum(A, n, worst)
            else:
                accepted = delta > 0
            if accepted:
                suite[worst] = candidate
                X[worst] = x
                A[worst, :] = a_new
                A[:, worst] = a_new
                D[worst, :] = d_new
                D[:, worst] = d_new
                fitness = fitness_from_matrix(D)
        if cfg.trace:
            trace.records.append(TraceRecord(iteration, before, fitness, accepted,
                                             time.perf_counter() - start))
    final = order_of(A, n) if cfg.m > 1 else [0]
    return PrioritizedSuite(tuple(suite[k] for k in final), "search", cfg.seed), trace
