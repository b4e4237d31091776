import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splsim import (FeatureModel, ModelError, ParseError, Product, TSet, compile_tree,
                    generate_random_model, is_valid_product, parse_dimacs, parse_native,
                    parse_tree, serialize_dimacs, serialize_native, solve)
from splsim.feature_model import load_model

from conftest import random_cnf
from oracles import all_assignments, satisfies, tree_configurations, valid_products


class TestDimacs:
    def test_minimal(self):
        fm = parse_dimacs("p cnf 2 1\n1 2 0")
        assert fm.n == 2
        assert fm.features == ("f1", "f2")
        assert fm.clauses == ((1, 2),)

    def test_tautology_rejected(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_dimacs("p cnf 2 1\n1 -1 0")

    def test_example3_unconstrained_has_16_products(self):
        text = "c i 1 f1\nc i 2 f2\nc i 3 f3\nc i 4 f4\np cnf 4 0\n"
        fm = parse_dimacs(text)
        assert fm.n == 4 and fm.clauses == ()
        assert len(valid_products(fm.n, fm.clauses)) == 16
        assert sum(is_valid_product(fm, Product(s)) for s in all_assignments(4)) == 16

    def test_names_and_multiline_clauses(self):
        fm = parse_dimacs("c a comment\nc i 2 Radio\np cnf 3 2\n1 -2\n 3 0 -1 0\n")
        assert fm.features == ("f1", "Radio", "f3")
        assert fm.clauses == ((1, -2, 3), (-1,))

    @pytest.mark.parametrize("text, line", [
        ("p cnf x 1\n1 0", 1),
        ("p cnf 2 1\n1 3 0", 2),
        ("p cnf 2 2\n1 0\n0", 3),
        ("1 2 0\np cnf 2 1", 1),
        ("p cnf 2 1\n1 2", 2),
        ("p cnf 2 2\n1 2 0", 1),
    ])
    def test_errors_name_line(self, text, line):
        with pytest.raises(ParseError) as err:
            parse_dimacs(text)
        assert err.value.line == line

    def test_missing_header(self):
        with pytest.raises(ParseError, match="header"):
            parse_dimacs("c only comments\n")

    def test_roundtrip(self):
        fm = generate_random_model(12, 1.0, 3)
        assert parse_dimacs(serialize_dimacs(fm)) == fm


class TestNative:
    def test_simple(self):
        fm = parse_native('{"features":["a","b"],"clauses":[[1,2]]}')
        assert fm.features == ("a", "b")
        assert fm.clauses == ((1, 2),)

    def test_duplicate_name(self):
        with pytest.raises(ParseError, match="duplicate"):
            parse_native('{"features":["a","a"],"clauses":[]}')

    @pytest.mark.parametrize("text", [
        '{"features":["a"],"clauses":[[2]]}',
        '{"features":["a"],"clauses":[[0]]}',
        '{"features":["a"],"clauses":[[]]}',
        '{"features":["a"]',
        '["a"]',
        '{"features":["a"],"clauses":[[1]],"extra":1}',
    ])
    def test_rejects(self, text):
        with pytest.raises(ParseError):
            parse_native(text)

    def test_canonical_form(self):
        text = '{ "features" : ["a","b", "c"],\n "clauses":[[2, -1],[3]] }'
        assert serialize_native(parse_native(text)) == \
            '{"features": ["a", "b", "c"], "clauses": [[2, -1], [3]]}'

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 12), st.floats(0, 2), st.integers(0, 10**6))
    def test_roundtrip(self, n, density, seed):
        fm = generate_random_model(n, density, seed)
        text = serialize_native(fm)
        assert parse_native(text) == fm
        assert serialize_native(parse_native(text)) == text
        assert json.loads(text) == {"features": list(fm.features),
                                    "clauses": [list(c) for c in fm.clauses]}


class TestInvariants:
    def test_model_rejects_bad_clauses(self):
        with pytest.raises(ModelError):
            FeatureModel(("a",), ((2,),))
        with pytest.raises(ModelError):
            FeatureModel(("a", "b"), ((1, -1),))
        with pytest.raises(ModelError):
            FeatureModel(("a", ""), ())

    def test_tset_canonical(self):
        assert TSet((3, -1)).literals == (-1, 3)
        with pytest.raises(ModelError):
            TSet((2, -2))

    def test_product_literals(self):
        p = Product.from_literals([-2, 1, 3], 3)
        assert p.signs == (True, False, True)
        assert p.literals() == (1, -2, 3)
        with pytest.raises(ModelError):
            Product.from_literals([1, 2], 3)


class TestTree:
    def test_mandatory(self):
        fm = compile_tree(parse_tree("Root\n  m A\n"))
        assert valid_products(fm.n, fm.clauses) == [(True, True)]

    def test_optional(self):
        fm = compile_tree(parse_tree("Root\n  o A\n"))
        assert len(valid_products(fm.n, fm.clauses)) == 2

    def test_xor_group_of_three(self):
        fm = compile_tree(parse_tree("Root\n  g[1,1]\n    A\n    B\n    C\n"))
        expected = tree_configurations(["Root", "A", "B", "C"],
                                       {"A": "Root", "B": "Root", "C": "Root"},
                                       {"A": "grouped", "B": "grouped", "C": "grouped"},
                                       {"Root": [("xor", ["A", "B", "C"])]})
        assert len(expected) == 3
        assert set(valid_products(fm.n, fm.clauses)) == expected

    def test_full_example(self):
        text = """\
# car example
Car
  m Body
  o Radio
    o Tuner
  g[1,1]
    Gas
    Electric
  g[1,*]
    GPS
    Bluetooth
requires: GPS Radio
excludes: Electric Tuner
"""
        fm = compile_tree(parse_tree(text))
        names = list(fm.features)
        assert names[0] == "Car"
        parent = {"Body": "Car", "Radio": "Car", "Tuner": "Radio", "Gas": "Car",
                  "Electric": "Car", "GPS": "Car", "Bluetooth": "Car"}
        kind = {"Body": "mandatory", "Radio": "optional", "Tuner": "optional"}
        groups = {"Car": [("xor", ["Gas", "Electric"]), ("or", ["GPS", "Bluetooth"])]}
        expected = tree_configurations(names, parent, kind, groups,
                                       requires=[("GPS", "Radio")], excludes=[("Electric", "Tuner")])
        assert set(valid_products(fm.n, fm.clauses)) == expected

    @pytest.mark.parametrize("text", [
        "",
        "Root extra\n",
        "Root\n  m A\n  m A\n",
        "Root\n  x A\n",
        "Root\n  g[1,1]\n",
        "Root\nrequires: Root Nope\n",
        "Root\n  g[1,1]\n    m A\n",
    ])
    def test_rejects(self, text):
        with pytest.raises(ParseError):
            parse_tree(text)

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_random_trees_match_semantics(self, data):
        n = data.draw(st.integers(2, 12))
        names = [f"F{i}" for i in range(n)]
        parent, kind, groups = {}, {}, {}
        kids = {names[0]: []}
        for i in range(1, n):
            p = names[data.draw(st.integers(0, i - 1))]
            parent[names[i]] = p
            k = data.draw(st.sampled_from(["mandatory", "optional", "xor", "or"]))
            kids.setdefault(p, []).append((k, names[i]))
            kids[names[i]] = []
        # build text, grouping xor/or children of the same parent into one group each
        out = []

        def emit(name, depth):
            here = kids[name]
            for k, c in here:
                if k in ("mandatory", "optional"):
                    kind[c] = k
                    out.append("  " * depth + ("m " if k == "mandatory" else "o ") + c)
                    emit(c, depth + 1)
            for gk, marker in (("xor", "g[1,1]"), ("or", "g[1,*]")):
                members = [c for k, c in here if k == gk]
                if members:
                    groups.setdefault(name, []).append((gk, members))
                    out.append("  " * depth + marker)
                    for c in members:
                        kind[c] = "grouped"
                        out.append("  " * (depth + 1) + c)
                        emit(c, depth + 2)

        out.append(names[0])
        emit(names[0], 1)
        tree = parse_tree("\n".join(out))
        fm = compile_tree(tree)
        order = list(fm.features)
        expected = tree_configurations(order, parent, kind, groups)
        assert set(valid_products(fm.n, fm.clauses)) == expected


class TestRandomModels:
    def test_no_clauses_at_zero_density(self):
        fm = generate_random_model(10, 0, 7)
        assert fm.n == 10 and fm.clauses == ()

    def test_deterministic(self):
        assert generate_random_model(20, 1.2, 5) == generate_random_model(20, 1.2, 5)
        assert generate_random_model(20, 1.2, 5) != generate_random_model(20, 1.2, 6)

    def test_consistent(self):
        fm = generate_random_model(15, 0.3, 1)
        assert solve(fm) is not None
        assert all(2 <= len(c) <= 3 for c in fm.clauses)

    def test_dense_models_stay_consistent(self):
        for seed in range(10):
            fm = generate_random_model(8, 4.0, seed)
            assert len(fm.clauses) == 32
            assert valid_products(fm.n, fm.clauses)

    def test_bad_arguments(self):
        with pytest.raises(ModelError):
            generate_random_model(1, 0.5, 0)
        with pytest.raises(ModelError):
            generate_random_model(5, -1, 0)


class TestIsValidProduct:
    def test_empty_model(self):
        fm = FeatureModel(("a", "b", "c"))
        assert all(is_valid_product(fm, Product(s)) for s in all_assignments(3))

    def test_unit_clause(self):
        fm = FeatureModel(("a", "b"), ((1,),))
        assert not is_valid_product(fm, Product((False, True)))
        assert is_valid_product(fm, Product((True, False)))

    def test_length_mismatch(self):
        with pytest.raises(ModelError):
            is_valid_product(FeatureModel(("a", "b")), Product((True,)))

    @pytest.mark.parametrize("seed", range(20))
    def test_agrees_with_brute_force(self, seed):
        fm = random_cnf(2 + seed % 9, 3 + seed, seed)
        for signs in itertools.product((False, True), repeat=fm.n):
            assert is_valid_product(fm, Product(signs)) == satisfies(fm.clauses, signs)


def test_load_model_formats(tmp_path):
    (tmp_path / "m.cnf").write_text("p cnf 2 1\n1 2 0\n")
    (tmp_path / "m.json").write_text('{"features": ["a", "b"], "clauses": [[1, 2]]}')
    (tmp_path / "m.tree").write_text("a\n  o b\n")
    assert load_model(tmp_path / "m.cnf").clauses == ((1, 2),)
    assert load_model(tmp_path / "m.json").features == ("a", "b")
    assert load_model(tmp_path / "m.tree").clauses == ((1,), (-2, 1))
