"""Feature models as CNF constraint systems.

Features are numbered 1..n. A clause is a tuple of signed feature indices:
``+i`` means feature ``i`` is selected, ``-i`` means it is not.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InconsistentModelError, ModelError, ParseError


@dataclass(frozen=True)
class FeatureModel:
    features: tuple[str, ...]
    clauses: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        seen = set()
        for name in self.features:
            if not isinstance(name, str) or not name:
                raise ModelError(f"feature names must be non-empty strings, got {name!r}")
            if name in seen:
                raise ModelError(f"duplicate feature name {name!r}")
            seen.add(name)
        n = len(self.features)
        for k, clause in enumerate(self.clauses):
            _check_clause(clause, n, f"clause {k}")

    @property
    def n(self) -> int:
        return len(self.features)

    def index_of(self, name: str) -> int:
        """1-based index of the feature called *name*."""
        try:
            return self.features.index(name) + 1
        except ValueError:
            raise ModelError(f"unknown feature {name!r}") from None


def _check_clause(clause, n, where):
    if not clause:
        raise ModelError(f"{where}: empty clause")
    lits = set()
    for lit in clause:
        if not isinstance(lit, int) or isinstance(lit, bool) or lit == 0 or abs(lit) > n:
            raise ModelError(f"{where}: literal {lit!r} out of range 1..{n}")
        if -lit in lits:
            raise ModelError(f"{where}: tautological clause {list(clause)}")
        lits.add(lit)


@dataclass(frozen=True)
class Product:
    """Total assignment of a model's features; ``signs[i]`` is feature ``i+1``."""

    signs: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "signs", tuple(bool(s) for s in self.signs))

    @classmethod
    def from_literals(cls, literals: Iterable[int], n: int) -> "Product":
        signs: list[bool | None] = [None] * n
        for lit in literals:
            if lit == 0 or abs(lit) > n:
                raise ModelError(f"literal {lit} out of range 1..{n}")
            if signs[abs(lit) - 1] is not None:
                raise ModelError(f"feature {abs(lit)} assigned twice")
            signs[abs(lit) - 1] = lit > 0
        if any(s is None for s in signs):
            raise ModelError("product must assign every feature")
        return cls(tuple(signs))

    @property
    def n(self) -> int:
        return len(self.signs)

    def __len__(self):
        return len(self.signs)

    def literals(self) -> tuple[int, ...]:
        return tuple(i if s else -i for i, s in enumerate(self.signs, start=1))

    def complement(self) -> "Product":
        return Product(tuple(not s for s in self.signs))


@dataclass(frozen=True)
class TSet:
    """t signed literals over distinct features, kept sorted by feature index."""

    literals: tuple[int, ...]

    def __post_init__(self):
        lits = tuple(sorted(self.literals, key=abs))
        if any(l == 0 for l in lits):
            raise ModelError("t-set literals must be non-zero")
        feats = [abs(l) for l in lits]
        if len(set(feats)) != len(feats):
            raise ModelError(f"t-set {list(lits)} names a feature twice")
        object.__setattr__(self, "literals", lits)

    @property
    def t(self) -> int:
        return len(self.literals)

    def covered_by(self, p: Product) -> bool:
        return all(p.signs[abs(l) - 1] == (l > 0) for l in self.literals)


def check_tset(fm: FeatureModel, ts: TSet) -> None:
    if not 2 <= ts.t <= fm.n:
        raise ModelError(f"t={ts.t} outside 2..{fm.n}")
    if any(abs(l) > fm.n for l in ts.literals):
        raise ModelError(f"t-set {list(ts.literals)} out of range for {fm.n} features")


def is_valid_product(fm: FeatureModel, p: Product) -> bool:
    if p.n != fm.n:
        raise ModelError(f"product has {p.n} features, model has {fm.n}")
    signs = p.signs
    for clause in fm.clauses:
        for lit in clause:
            if signs[abs(lit) - 1] == (lit > 0):
                break
        else:
            return False
    return True


# --- DIMACS -----------------------------------------------------------------

def parse_dimacs(text: str) -> FeatureModel:
    n = m = None
    header_line = None
    names: dict[int, str] = {}
    clauses: list[tuple[int, ...]] = []
    clause_lines: list[int] = []
    current: list[int] = []
    start_line = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line[0] == "c":
            parts = line.split()
            if len(parts) >= 4 and parts[0] == "c" and parts[1] == "i":
                try:
                    idx = int(parts[2])
                except ValueError:
                    raise ParseError(f"bad feature index {parts[2]!r}", lineno) from None
                names[idx] = " ".join(parts[3:])
            continue
        if line[0] == "p":
            parts = line.split()
            if header_line is not None:
                raise ParseError("duplicate header", lineno)
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"malformed header {line!r}", lineno)
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError(f"malformed header {line!r}", lineno) from None
            if n < 0 or m < 0:
                raise ParseError(f"malformed header {line!r}", lineno)
            header_line = lineno
            continue
        if header_line is None:
            raise ParseError("clause before 'p cnf' header", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", lineno) from None
            if start_line is None:
                start_line = lineno
            if lit == 0:
                if not current:
                    raise ParseError("empty clause", lineno)
                clauses.append(tuple(current))
                clause_lines.append(start_line)
                current = []
                start_line = None
                continue
            if abs(lit) > n:
                raise ParseError(f"literal {lit} out of range 1..{n}", lineno)
            if -lit in current:
                raise ParseError(f"tautological clause containing {lit} and {-lit}", lineno)
            current.append(lit)

    if header_line is None:
        raise ParseError("missing 'p cnf' header")
    if current:
        raise ParseError("last clause not terminated by 0", start_line)
    if len(clauses) != m:
        raise ParseError(f"header declares {m} clauses, found {len(clauses)}", header_line)
    for idx in names:
        if not 1 <= idx <= n:
            raise ParseError(f"named variable {idx} out of range 1..{n}")
    features = [names.get(i, f"f{i}") for i in range(1, n + 1)]
    try:
        return FeatureModel(tuple(features), tuple(clauses))
    except ModelError as exc:
        raise ParseError(str(exc)) from None


def serialize_dimacs(fm: FeatureModel) -> str:
    lines = [f"c i {i} {name}" for i, name in enumerate(fm.features, start=1)]
    lines.append(f"p cnf {fm.n} {len(fm.clauses)}")
    lines.extend(" ".join(map(str, c)) + " 0" for c in fm.clauses)
    return "\n".join(lines) + "\n"


# --- native JSON format -----------------------------------------------------

def parse_native(text: str) -> FeatureModel:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"syntax error: {exc.msg}", exc.lineno) from None
    if not isinstance(obj, dict) or set(obj) != {"features", "clauses"}:
        raise ParseError('expected an object with exactly the keys "features" and "clauses"')
    features, clauses = obj["features"], obj["clauses"]
    if not isinstance(features, list) or not all(isinstance(f, str) for f in features):
        raise ParseError('"features" must be an array of strings')
    if not isinstance(clauses, list) or not all(isinstance(c, list) for c in clauses):
        raise ParseError('"clauses" must be an array of arrays')
    try:
        return FeatureModel(tuple(features), tuple(tuple(c) for c in clauses))
    except ModelError as exc:
        raise ParseError(str(exc)) from None


def serialize_native(fm: FeatureModel) -> str:
    obj = {"features": list(fm.features), "clauses": [list(c) for c in fm.clauses]}
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


# --- feature trees ----------------------------------------------------------

@dataclass
class TreeNode:
    name: str
    # (kind, node) with kind "mandatory" or "optional"
    children: list[tuple[str, "TreeNode"]] = field(default_factory=list)
    groups: list["Group"] = field(default_factory=list)


@dataclass
class Group:
    kind: str  # "or" | "xor"
    members: list[TreeNode] = field(default_factory=list)


@dataclass
class FeatureTree:
    root: TreeNode
    requires: list[tuple[str, str]] = field(default_factory=list)
    excludes: list[tuple[str, str]] = field(default_factory=list)

    def nodes(self) -> list[TreeNode]:
        """Pre-order traversal; this is the feature numbering of compile_tree."""
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            out.append(node)
            kids = [c for _, c in node.children]
            for g in node.groups:
                kids.extend(g.members)
            stack.extend(reversed(kids))
        return out


_GROUP_RE = re.compile(r"^g\[1,(1|\*)\]$")


def parse_tree(text: str) -> FeatureTree:
    """Parse the indented feature-tree format.

    The first line names the root. Children are ``m Name`` / ``o Name``;
    ``g[1,1]`` (xor) or ``g[1,*]`` (or) opens a group whose members are the
    bare names indented beneath it. ``requires: A B`` and ``excludes: A B``
    lines add cross-tree constraints. ``#`` starts a comment.
    """
    root = None
    # stack of (indent, container) where container is a TreeNode or Group
    stack: list[tuple[int, object]] = []
    requires, excludes = [], []
    names = set()

    def add_name(name, lineno):
        if name in names:
            raise ParseError(f"duplicate feature {name!r}", lineno)
        names.add(name)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip().expandtabs(4)
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip(" "))
        tokens = line.split()
        head = tokens[0]
        if head in ("requires:", "excludes:"):
            if len(tokens) != 3:
                raise ParseError(f"expected '{head} A B'", lineno)
            (requires if head == "requires:" else excludes).append((tokens[1], tokens[2]))
            continue
        if root is None:
            if len(tokens) != 1:
                raise ParseError("first line must be the root feature name", lineno)
            root = TreeNode(head)
            add_name(head, lineno)
            stack = [(indent, root)]
            continue
        while stack and stack[-1][0] >= indent:
            stack.pop()
        if not stack:
            raise ParseError("line is not indented under the root", lineno)
        parent = stack[-1][1]
        if _GROUP_RE.match(head):
            if len(tokens) != 1 or not isinstance(parent, TreeNode):
                raise ParseError("group marker must stand alone under a feature", lineno)
            group = Group("xor" if head.endswith("1]") else "or")
            parent.groups.append(group)
            stack.append((indent, group))
            continue
        if isinstance(parent, Group):
            if len(tokens) != 1:
                raise ParseError("group members are bare feature names", lineno)
            node = TreeNode(head)
            parent.members.append(node)
        else:
            if len(tokens) != 2 or head not in ("m", "o"):
                raise ParseError(f"expected 'm Name', 'o Name' or a group marker, got {line.strip()!r}", lineno)
            node = TreeNode(tokens[1])
            parent.children.append(("mandatory" if head == "m" else "optional", node))
        add_name(node.name, lineno)
        stack.append((indent, node))

    if root is None:
        raise ParseError("empty feature tree")
    for a, b in requires + excludes:
        for name in (a, b):
            if name not in names:
                raise ParseError(f"constraint names unknown feature {name!r}")
    for node in FeatureTree(root).nodes():
        for g in node.groups:
            if not g.members:
                raise ParseError(f"empty group under {node.name!r}")
    return FeatureTree(root, requires, excludes)


def compile_tree(tree: FeatureTree) -> FeatureModel:
    nodes = tree.nodes()
    index = {node.name: i for i, node in enumerate(nodes, start=1)}
    if len(index) != len(nodes):
        raise ModelError("feature names in a tree must be unique")
    clauses: list[tuple[int, ...]] = [(index[tree.root.name],)]
    for node in nodes:
        p = index[node.name]
        for kind, child in node.children:
            c = index[child.name]
            clauses.append((-c, p))
            if kind == "mandatory":
                clauses.append((-p, c))
        for group in node.groups:
            members = [index[mem.name] for mem in group.members]
            clauses.extend((-c, p) for c in members)
            clauses.append((-p, *members))
            if group.kind == "xor":
                for i, a in enumerate(members):
                    for b in members[i + 1:]:
                        clauses.append((-a, -b))
    for a, b in tree.requires:
        if a != b:
            clauses.append((-index[a], index[b]))
    for a, b in tree.excludes:
        ia, ib = index[a], index[b]
        clauses.append((-ia,) if ia == ib else (-ia, -ib))
    return FeatureModel(tuple(node.name for node in nodes), tuple(clauses))


# --- random models ----------------------------------------------------------

def generate_random_model(n: int, clause_density: float, seed: int,
                          max_retries: int = 200) -> FeatureModel:
    """Random consistent model with round(clause_density * n) clauses of 2 or 3 literals."""
    from .sat import Solver

    if n < 2:
        raise ModelError("random models need at least 2 features")
    if clause_density < 0:
        raise ModelError("clause density must be non-negative")
    rng = random.Random(seed)
    features = tuple(f"f{i}" for i in range(1, n + 1))

    def new_clause():
        k = 2 if n == 2 else rng.choice((2, 3))
        feats = rng.sample(range(1, n + 1), k)
        return tuple(f if rng.random() < 0.5 else -f for f in feats)

    clauses = [new_clause() for _ in range(round(clause_density * n))]
    for _ in range(max_retries + 1):
        if Solver(n, clauses).solve() is not None:
            return FeatureModel(features, tuple(clauses))
        # longest satisfiable prefix; the clause right after it is replaced
        lo, hi = 0, len(clauses) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if Solver(n, clauses[:mid]).solve() is not None:
                lo = mid
            else:
                hi = mid - 1
        clauses[lo] = new_clause()
    raise InconsistentModelError(
        f"no consistent model after {max_retries} clause replacements "
        f"(n={n}, density={clause_density})")


def load_model(path, fmt: str | None = None) -> FeatureModel:
    """Read a model file; *fmt* is dimacs, native or tree (guessed from the suffix if None)."""
    path = str(path)
    if fmt is None:
        if path.endswith((".cnf", ".dimacs")):
            fmt = "dimacs"
        elif path.endswith(".json"):
            fmt = "native"
        else:
            fmt = "tree"
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "dimacs":
        return parse_dimacs(text)
    if fmt == "native":
        return parse_native(text)
    if fmt == "tree":
        return compile_tree(parse_tree(text))
    raise ValueError(f"unknown model format {fmt!r}")


def suite_matrix(suite: Sequence[Product], n: int | None = None):
    """Stack a suite into an (m, n) boolean numpy array."""
    import numpy as np

    if n is None:
        n = suite[0].n if suite else 0
    for k, p in enumerate(suite):
        if p.n != n:
            raise ModelError(f"product {k} has {p.n} features, expected {n}")
    if not suite:
        return np.zeros((0, n), dtype=bool)
    return np.array([p.signs for p in suite], dtype=bool)
