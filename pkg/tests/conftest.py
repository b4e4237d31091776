import random

import pytest

from splsim import FeatureModel, Product, generate_random_model

# three-product, four-feature example suite
P1 = Product((True, True, True, False))
P2 = Product((True, True, False, True))
P3 = Product((True, False, True, False))


@pytest.fixture
def example3():
    return [P1, P2, P3]


@pytest.fixture
def free4():
    return FeatureModel(("f1", "f2", "f3", "f4"))


def random_cnf(n, n_clauses, seed):
    """Random clause set, possibly unsatisfiable (unlike generate_random_model)."""
    rng = random.Random(seed)
    clauses = []
    for _ in range(n_clauses):
        k = rng.randint(1, min(3, n))
        feats = rng.sample(range(1, n + 1), k)
        clauses.append(tuple(f if rng.random() < 0.5 else -f for f in feats))
    return FeatureModel(tuple(f"f{i}" for i in range(1, n + 1)), tuple(clauses))


def small_models(count, seed=0, n_range=(3, 10)):
    rng = random.Random(seed)
    out = []
    for k in range(count):
        n = rng.randint(*n_range)
        out.append(generate_random_model(n, rng.choice((0.3, 0.8, 1.5, 2.5)), seed * 1000 + k))
    return out
