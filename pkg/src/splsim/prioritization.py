"""Similarity-driven orderings of a product set and their area-under-curve score."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .feature_model import Product, suite_matrix
from .similarity import agreement_matrix, distances_of, exact_distance

METHODS = ("greedy", "near_optimal", "random", "search", "unpredictable")


@dataclass(frozen=True)
class PrioritizedSuite:
    products: tuple[Product, ...]
    method: str
    seed: int | None = None

    def __len__(self):
        return len(self.products)

    def __iter__(self):
        return iter(self.products)

    def __getitem__(self, k):
        return self.products[k]


def _farthest_pair(A: np.ndarray, positions: Sequence[int]) -> tuple[int, int]:
    """Positions (i, j), i < j, of the max-distance pair; first in row-major order on ties.

    For a fixed width, distance grows as agreement shrinks, so the search is
    an exact integer argmin on the agreement matrix.
    """
    k = len(positions)
    sub = A[np.ix_(positions, positions)]
    masked = np.where(np.triu(np.ones((k, k), dtype=bool), 1), sub, np.iinfo(np.int64).max)
    i, j = divmod(int(np.argmin(masked)), k)
    return i, j


def _first_max(values: np.ndarray, exact) -> int:
    """Index of the first maximum; float near-ties are settled with exact arithmetic."""
    top = values.max()
    close = np.flatnonzero(values >= top - 1e-9 * max(1.0, abs(top)))
    if len(close) == 1:
        return int(close[0])
    exacts = [exact(int(i)) for i in close]
    best = max(exacts)
    return int(close[exacts.index(best)])


def greedy_order(A: np.ndarray, n: int) -> list[int]:
    remaining = list(range(len(A)))
    order = []
    while len(remaining) > 1:
        i, j = _farthest_pair(A, remaining)
        order += [remaining[i], remaining[j]]
        remaining = [r for pos, r in enumerate(remaining) if pos != i and pos != j]
    return order + remaining


def near_optimal_order(A: np.ndarray, n: int) -> list[int]:
    m = len(A)
    if m <= 1:
        return list(range(m))
    D = distances_of(A, n)
    i, j = _farthest_pair(A, list(range(m)))
    order = [i, j]
    remaining = [r for r in range(m) if r != i and r != j]
    sums = D[:, i] + D[:, j]
    while remaining:
        cand = np.array(remaining)

        def exact(pos, chosen=tuple(order)):
            c = remaining[pos]
            return sum((exact_distance(int(A[c, l]), n) for l in chosen), Fraction(0))

        pos = _first_max(sums[cand], exact)
        pick = remaining.pop(pos)
        order.append(pick)
        sums += D[:, pick]
    return order


def _apply(suite, order, method, seed=None):
    return PrioritizedSuite(tuple(suite[k] for k in order), method, seed)


def greedy_prioritize(suite: Sequence[Product]) -> PrioritizedSuite:
    """Repeatedly move the two most distant remaining products to the list."""
    suite = list(suite)
    if not suite:
        return PrioritizedSuite((), "greedy")
    X = suite_matrix(suite)
    return _apply(suite, greedy_order(agreement_matrix(X), X.shape[1]), "greedy")


def near_optimal_prioritize(suite: Sequence[Product]) -> PrioritizedSuite:
    """Start from the most distant pair, then add the product with the largest
    summed distance to everything already listed."""
    suite = list(suite)
    if not suite:
        return PrioritizedSuite((), "near_optimal")
    X = suite_matrix(suite)
    return _apply(suite, near_optimal_order(agreement_matrix(X), X.shape[1]), "near_optimal")


def random_prioritize(suite: Sequence[Product], seed: int) -> PrioritizedSuite:
    suite = list(suite)
    order = list(range(len(suite)))
    random.Random(seed).shuffle(order)
    return _apply(suite, order, "random", seed)


def prioritize(suite: Sequence[Product], algorithm: str, seed: int = 0) -> PrioritizedSuite:
    algorithm = algorithm.replace("-", "_")
    if algorithm == "greedy":
        return greedy_prioritize(suite)
    if algorithm == "near_optimal":
        return near_optimal_prioritize(suite)
    if algorithm == "random":
        return random_prioritize(suite, seed)
    raise ValueError(f"unknown prioritization algorithm {algorithm!r}")


def area_under_curve(curve: Sequence[float]) -> float:
    """Trapezoidal area under a coverage curve sampled at 1, 2, ..., k products."""
    values = [float(v) for v in curve]
    if not values:
        raise ValueError("coverage curve is empty")
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"coverage value {v} outside [0, 1]")
    return sum((values[i] + values[i + 1]) / 2 for i in range(len(values) - 1))
