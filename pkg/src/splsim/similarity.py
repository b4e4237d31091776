"""Jaccard distance between products and the pairwise-sum fitness of a suite.

A product is read as the set of its n signed literals. Two products agreeing
on ``a`` features share ``a`` literals and their union holds ``2n - a``, so
the distance is ``1 - a / (2n - a)``. Distances are increasing in
disagreement, which lets exact comparisons run on the integer ``a``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ModelError
from .feature_model import Product, suite_matrix


class DistanceCounter:
    """Counts distance evaluations; used to check the cost of fitness()."""

    def __init__(self):
        self.count = 0


counter = DistanceCounter()


def agreement(p: Product, q: Product) -> int:
    if p.n != q.n:
        raise ModelError(f"products have different lengths ({p.n} vs {q.n})")
    return sum(a == b for a, b in zip(p.signs, q.signs))


def distance_from_agreement(a, n):
    return 1.0 - a / (2 * n - a)


def exact_distance(a: int, n: int) -> Fraction:
    return 1 - Fraction(a, 2 * n - a)


def jaccard_distance(p: Product, q: Product) -> float:
    a = agreement(p, q)
    if p.n == 0:
        raise ModelError("distance is undefined for products over zero features")
    counter.count += 1
    return distance_from_agreement(a, p.n)


def jaccard_distance_sets(p: Product, q: Product) -> float:
    """Same distance computed literally on literal sets (reference version)."""
    sp, sq = set(p.literals()), set(q.literals())
    return 1.0 - len(sp & sq) / len(sp | sq)


def fitness(suite: Sequence[Product]) -> float:
    """Sum of Jaccard distances over all unordered pairs of the suite."""
    if len(suite) <= 1:
        return 0.0
    n = suite[0].n
    for k, p in enumerate(suite):
        if p.n != n:
            raise ModelError(f"product {k} has {p.n} features, expected {n}")
    total = 0.0
    for i in range(len(suite)):
        for j in range(i + 1, len(suite)):
            total += jaccard_distance(suite[i], suite[j])
    return total


def agreement_matrix(X: np.ndarray) -> np.ndarray:
    """Integer (m, m) matrix of agreeing features for a boolean suite matrix."""
    Xi = X.astype(np.int64)
    return Xi @ Xi.T + (1 - Xi) @ (1 - Xi).T


def distance_matrix(suite: Sequence[Product]) -> np.ndarray:
    X = suite_matrix(suite)
    if X.shape[1] == 0 and len(suite):
        raise ModelError("distance is undefined for products over zero features")
    if len(suite) == 0:
        return np.zeros((0, 0))
    return distances_of(agreement_matrix(X), X.shape[1])


def distances_of(A: np.ndarray, n: int) -> np.ndarray:
    D = 1.0 - A / (2 * n - A)
    np.fill_diagonal(D, 0.0)
    return D


def fitness_from_matrix(D: np.ndarray) -> float:
    return float(np.triu(D, 1).sum())
