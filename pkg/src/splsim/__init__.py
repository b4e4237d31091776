"""Similarity-driven generation and prioritization of t-wise test suites for feature models."""

__version__ = "0.1.0"

from .coverage import (CoverageReport, ValidTSetEstimate, coverage_curve, estimate_coverage,
                       estimate_valid_tsets, exact_coverage, exact_valid_tsets,
                       redundant_products, sample_valid_tsets, tsets_of_product)
from .errors import (ContradictoryAssumptionsError, EnumerationBudgetExceeded,
                     InconsistentModelError, ModelError, ParseError, SamplingStalledError,
                     SplsimError, SuiteMismatchError)
from .feature_model import (FeatureModel, FeatureTree, Group, Product, TreeNode, TSet,
                            compile_tree, generate_random_model, is_valid_product, load_model,
                            parse_dimacs, parse_native, parse_tree, serialize_dimacs,
                            serialize_native)
from .generation import (SearchConfig, SearchTrace, search_generate, unpredictable_generate)
from .prioritization import (PrioritizedSuite, area_under_curve, greedy_prioritize,
                             near_optimal_prioritize, prioritize, random_prioritize)
from .sat import SamplerSession, Solver, TSetValidator, is_valid_tset, next_unpredictable, solve
from .similarity import distance_matrix, fitness, jaccard_distance
