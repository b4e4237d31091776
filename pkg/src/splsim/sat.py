"""Small CDCL solver with randomized branching, t-set validity and product sampling.

The solver is deliberately simple: two watched literals, first-UIP clause
learning and non-chronological backjumping, no restarts. Branching takes the
next unassigned variable of a per-call random permutation and a random
polarity, which is what makes successive products unpredictable.
"""

from __future__ import annotations

import random
from typing import Iterable, Sequence

import numpy as np

from .errors import ContradictoryAssumptionsError, InconsistentModelError, ModelError
from .feature_model import FeatureModel, Product, TSet, check_tset


class Solver:
    max_learnts = 4000

    def __init__(self, n: int, clauses: Iterable[Sequence[int]] = ()):
        self.n = n
        self.assign = [0] * (n + 1)  # 1 true, -1 false, 0 free
        self.level = [0] * (n + 1)
        self.reason: list[list[int] | None] = [None] * (n + 1)
        self.seen = [False] * (n + 1)
        self.watches: list[list[list[int]]] = [[] for _ in range(2 * n + 1)]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.clauses: list[list[int]] = []
        self.learnts: list[list[int]] = []
        self.ok = True
        self._pos = None
        self._ptr = 0
        for c in clauses:
            self.add_clause(c)

    def _value(self, lit):
        a = self.assign[lit] if lit > 0 else self.assign[-lit]
        return a if lit > 0 else -a

    def _enqueue(self, lit, reason):
        v = lit if lit > 0 else -lit
        self.assign[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def add_clause(self, clause: Sequence[int]) -> None:
        """Add a clause permanently. Only valid between solve() calls."""
        if not self.ok:
            return
        lits = list(dict.fromkeys(clause))
        present = set(lits)
        if any(-l in present for l in lits):
            return
        for l in lits:
            if l == 0 or abs(l) > self.n:
                raise ModelError(f"literal {l} out of range 1..{self.n}")
        if any(self._value(l) == 1 for l in lits):
            return
        lits = [l for l in lits if self._value(l) == 0]
        if not lits:
            self.ok = False
        elif len(lits) == 1:
            self._enqueue(lits[0], None)
            if self._propagate() is not None:
                self.ok = False
        else:
            self.clauses.append(lits)
            self._watch(lits)

    def _watch(self, c):
        n = self.n
        self.watches[c[0] + n].append(c)
        self.watches[c[1] + n].append(c)

    def _propagate(self):
        n = self.n
        assign = self.assign
        trail = self.trail
        watches = self.watches
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            false_lit = -p
            ws = watches[false_lit + n]
            kept = []
            k = 0
            end = len(ws)
            while k < end:
                c = ws[k]
                k += 1
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                fv = assign[first] if first > 0 else -assign[-first]
                if fv == 1:
                    kept.append(c)
                    continue
                for i in range(2, len(c)):
                    l = c[i]
                    if (assign[l] if l > 0 else -assign[-l]) != -1:
                        c[1] = l
                        c[i] = false_lit
                        watches[l + n].append(c)
                        break
                else:
                    kept.append(c)
                    if fv == -1:
                        kept.extend(ws[k:])
                        watches[false_lit + n] = kept
                        self.qhead = len(trail)
                        return c
                    self._enqueue(first, c)
            watches[false_lit + n] = kept
        return None

    def _cancel_until(self, lvl):
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        assign, reason, pos = self.assign, self.reason, self._pos
        ptr = self._ptr
        for lit in self.trail[start:]:
            v = lit if lit > 0 else -lit
            assign[v] = 0
            reason[v] = None
            if pos is not None and pos[v] < ptr:
                ptr = pos[v]
        self._ptr = ptr
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _analyze(self, confl):
        seen, level, trail, reason = self.seen, self.level, self.trail, self.reason
        cur = len(self.trail_lim)
        learnt = [0]
        counter = 0
        p = 0
        idx = len(trail) - 1
        clause = confl
        while True:
            for q in (clause if p == 0 else clause[1:]):
                v = q if q > 0 else -q
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    if level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(trail[idx])]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            v = abs(p)
            seen[v] = False
            counter -= 1
            if counter == 0:
                break
            clause = reason[v]
        learnt[0] = -p
        for q in learnt[1:]:
            seen[abs(q)] = False
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda i: level[abs(learnt[i])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[abs(learnt[1])]

    def _reduce_db(self):
        self.learnts = []
        self.watches = [[] for _ in range(2 * self.n + 1)]
        for c in self.clauses:
            self._watch(c)

    def solve(self, assumptions: Sequence[int] = (), rng: random.Random | None = None):
        """Return a satisfying assignment as a list of n bools, or None.

        None means unsatisfiable under *assumptions*; ``self.ok`` turns False
        only when the clause set itself is unsatisfiable.
        """
        if not self.ok:
            return None
        if rng is None:
            rng = random.Random(0)
        n = self.n
        if len(self.learnts) > self.max_learnts:
            self._reduce_db()
        order = list(range(1, n + 1))
        rng.shuffle(order)
        pos = [0] * (n + 1)
        for i, v in enumerate(order):
            pos[v] = i
        self._pos, self._ptr = pos, 0
        assign = self.assign
        assumptions = list(assumptions)
        try:
            while True:
                confl = self._propagate()
                if confl is not None:
                    if not self.trail_lim:
                        self.ok = False
                        return None
                    learnt, bt = self._analyze(confl)
                    self._cancel_until(bt)
                    if len(learnt) == 1:
                        self._enqueue(learnt[0], None)
                    else:
                        self.learnts.append(learnt)
                        self._watch(learnt)
                        self._enqueue(learnt[0], learnt)
                    continue
                lvl = len(self.trail_lim)
                if lvl < len(assumptions):
                    a = assumptions[lvl]
                    val = self._value(a)
                    if val == -1:
                        return None
                    self.trail_lim.append(len(self.trail))
                    if val == 0:
                        self._enqueue(a, None)
                    continue
                ptr = self._ptr
                while ptr < n and assign[order[ptr]] != 0:
                    ptr += 1
                self._ptr = ptr
                if ptr == n:
                    return [assign[v] > 0 for v in range(1, n + 1)]
                v = order[ptr]
                self.trail_lim.append(len(self.trail))
                self._enqueue(v if rng.getrandbits(1) else -v, None)
        finally:
            self._cancel_until(0)
            self._pos = None


def _check_assumptions(fm: FeatureModel, assumptions: Sequence[int]) -> list[int]:
    lits = list(assumptions)
    for l in lits:
        if not isinstance(l, int) or l == 0 or abs(l) > fm.n:
            raise ModelError(f"assumption {l!r} out of range 1..{fm.n}")
    present = set(lits)
    for l in lits:
        if -l in present:
            raise ContradictoryAssumptionsError(f"assumptions contain both {abs(l)} and {-abs(l)}")
    return lits


def solve(fm: FeatureModel, assumptions: Sequence[int] = (), seed: int = 0) -> Product | None:
    """A product of *fm* extending *assumptions*, or None when there is none."""
    lits = _check_assumptions(fm, assumptions)
    signs = Solver(fm.n, fm.clauses).solve(lits, random.Random(seed))
    return None if signs is None else Product(tuple(signs))


def is_valid_tset(fm: FeatureModel, ts: TSet) -> bool:
    check_tset(fm, ts)
    return Solver(fm.n, fm.clauses).solve(ts.literals) is not None


class TSetValidator:
    """Repeated validity checks against one model.

    Keeps a solver, a result cache and a pool of known valid products
    ("witnesses"): a t-set exhibited by any witness is valid without a
    solver call. Every solver success adds its product to the pool.
    """

    max_witnesses = 512

    def __init__(self, fm: FeatureModel, witnesses: Iterable[Product] = ()):
        self.model = fm
        self.solver = Solver(fm.n, fm.clauses)
        self.cache: dict[tuple[int, ...], bool] = {}
        self.solver_calls = 0
        self._rng = random.Random(0)
        self._witness_rows: list[tuple[bool, ...]] = []
        self._witness_set: set[tuple[bool, ...]] = set()
        self._matrix = None
        for p in witnesses:
            self.add_witness(p.signs)

    def add_witness(self, signs) -> None:
        signs = tuple(bool(s) for s in signs)
        if signs in self._witness_set or len(self._witness_rows) >= self.max_witnesses:
            return
        self._witness_set.add(signs)
        self._witness_rows.append(signs)
        self._matrix = None

    @property
    def witness_matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self._witness_rows:
                self._matrix = np.array(self._witness_rows, dtype=bool)
            else:
                self._matrix = np.zeros((0, self.model.n), dtype=bool)
        return self._matrix

    def _witnessed(self, lits) -> bool:
        for row in self._witness_rows:
            for l in lits:
                if row[abs(l) - 1] != (l > 0):
                    break
            else:
                return True
        return False

    def _sat_check(self, lits) -> bool:
        self.solver_calls += 1
        signs = self.solver.solve(lits, self._rng)
        if signs is None:
            return False
        self.add_witness(signs)
        return True

    def is_valid(self, literals: Sequence[int]) -> bool:
        """Validity of canonical, feature-distinct literals (no structural checks)."""
        key = tuple(literals)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        ok = self._witnessed(key) or self._sat_check(key)
        self.cache[key] = ok
        return ok

    def check_batch(self, feats: np.ndarray, signs: np.ndarray, chunk: int = 8192) -> np.ndarray:
        """Vectorized validity for rows of 0-based feature indices and polarities.

        Rows naming a feature twice are invalid.
        """
        feats = np.asarray(feats, dtype=np.int64)
        signs = np.asarray(signs, dtype=bool)
        count, t = feats.shape
        out = np.zeros(count, dtype=bool)
        srt = np.sort(feats, axis=1)
        distinct = np.all(srt[:, 1:] != srt[:, :-1], axis=1) if t > 1 else np.ones(count, bool)
        W = self.witness_matrix
        witnessed = np.zeros(count, dtype=bool)
        if len(W):
            for lo in range(0, count, chunk):
                f, s = feats[lo:lo + chunk], signs[lo:lo + chunk]
                hit = np.zeros(len(f), dtype=bool)
                for row in W:
                    hit |= np.all(row[f] == s, axis=1)
                witnessed[lo:lo + chunk] = hit
        out[distinct & witnessed] = True
        for i in np.flatnonzero(distinct & ~witnessed):
            order = np.argsort(feats[i], kind="stable")
            lits = tuple(int(f) + 1 if sg else -(int(f) + 1)
                         for f, sg in zip(feats[i][order], signs[i][order]))
            out[i] = self.is_valid(lits)
        return out


class SamplerSession:
    """Stream of valid products in randomized order, never repeating until exhausted.

    Products are drawn from the plain model first; only when a draw repeats
    an earlier one does the session consult a second solver carrying one
    blocking clause per emitted product. When that blocked formula is
    unsatisfiable every product has been seen and the session starts over.
    """

    def __init__(self, fm: FeatureModel, seed: int = 0):
        self.model = fm
        self.seed = seed
        self._rng = random.Random(seed)
        self._base = Solver(fm.n, fm.clauses)
        if self._base.solve() is None:
            raise InconsistentModelError("the model has no valid product")
        self._emitted: set[tuple[bool, ...]] = set()
        self._blocked: Solver | None = None
        self.emitted_count = 0
        self.reinitializations = 0

    @staticmethod
    def _blocking_clause(signs) -> list[int]:
        return [-(i + 1) if s else i + 1 for i, s in enumerate(signs)]

    def next(self) -> Product:
        signs = tuple(self._base.solve((), self._rng))
        if signs in self._emitted:
            if self._blocked is None:
                self._blocked = Solver(self.model.n, self.model.clauses)
                for seen in self._emitted:
                    self._blocked.add_clause(self._blocking_clause(seen))
            fresh = self._blocked.solve((), self._rng)
            if fresh is None:
                self._emitted.clear()
                self._blocked = None
                self.reinitializations += 1
            else:
                signs = tuple(fresh)
        self._emitted.add(signs)
        if self._blocked is not None:
            self._blocked.add_clause(self._blocking_clause(signs))
        self.emitted_count += 1
        return Product(signs)

    __next__ = next

    def __iter__(self):
        return self


def next_unpredictable(session: SamplerSession) -> Product:
    return session.next()
