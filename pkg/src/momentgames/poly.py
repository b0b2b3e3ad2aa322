"""Sparse multivariate polynomials over block-structured variables.

Coefficients are float64 and the term map is kept in canonical form: exact
zeros are dropped, equal monomials merged.  Values are immutable and all
operations are pure, so instances can be shared freely across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .blocks import BlockStructure, Mono, mono_degree, mono_mul, unit_mono, zero_mono


class StructureMismatch(ValueError):
    pass


class Polynomial:
    """Immutable sparse polynomial tied to a :class:`BlockStructure`."""

    __slots__ = ("structure", "terms", "_degree")

    def __init__(self, structure: BlockStructure, terms: dict[Mono, float] | None = None):
        self.structure = structure
        n = structure.num_vars
        clean: dict[Mono, float] = {}
        for mono, c in (terms or {}).items():
            if len(mono) != n:
                raise ValueError(f"monomial {mono} has wrong arity for {n} variables")
            c = float(c)
            if c != 0.0:
                clean[mono] = clean.get(mono, 0.0) + c
        # merging may cancel
        self.terms = {m: c for m, c in clean.items() if c != 0.0}
        self._degree = max((mono_degree(m) for m in self.terms), default=0)

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero(structure: BlockStructure) -> "Polynomial":
        return Polynomial(structure, {})

    @staticmethod
    def constant(structure: BlockStructure, c: float) -> "Polynomial":
        return Polynomial(structure, {zero_mono(structure.num_vars): c})

    @staticmethod
    def variable(structure: BlockStructure, v: int) -> "Polynomial":
        return Polynomial(structure, {unit_mono(structure.num_vars, v): 1.0})

    @staticmethod
    def monomial(structure: BlockStructure, mono: Mono, c: float = 1.0) -> "Polynomial":
        return Polynomial(structure, {tuple(mono): c})

    # -- basic queries -------------------------------------------------------

    @property
    def degree(self) -> int:
        return self._degree

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, mono: Mono) -> float:
        return self.terms.get(tuple(mono), 0.0)

    def sorted_terms(self) -> list[tuple[Mono, float]]:
        """Terms in lexicographic monomial order (deterministic iteration)."""
        return sorted(self.terms.items())

    def variables(self) -> set[int]:
        used = set()
        for m in self.terms:
            used.update(v for v, e in enumerate(m) if e)
        return used

    # -- arithmetic ----------------------------------------------------------

    def _check(self, other: "Polynomial"):
        if self.structure != other.structure:
            raise StructureMismatch("polynomials have different block structures")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.structure, other)
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0.0) + c
        return Polynomial(self.structure, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.structure, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.structure, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self.scale(float(other))
        self._check(other)
        out: dict[Mono, float] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                out[m] = out.get(m, 0.0) + c1 * c2
        return Polynomial(self.structure, out)

    __rmul__ = __mul__

    def scale(self, c: float) -> "Polynomial":
        if c == 0.0:
            return Polynomial.zero(self.structure)
        return Polynomial(self.structure, {m: c * v for m, v in self.terms.items()})

    def cleanup(self, tol: float = 1e-12) -> "Polynomial":
        """Drop terms below tol in absolute value (output hygiene only)."""
        return Polynomial(self.structure, {m: c for m, c in self.terms.items() if abs(c) > tol})

    # -- evaluation and calculus ---------------------------------------------

    def __call__(self, point) -> float:
        return self.eval(point)

    def eval(self, point) -> float:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.structure.num_vars,):
            raise ValueError(
                f"point has length {point.size}, expected {self.structure.num_vars}")
        total = 0.0
        for mono, c in self.sorted_terms():
            v = c
            for i, e in enumerate(mono):
                if e:
                    v *= point[i] ** e
            total += v
        return total

    def eval_batch(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at many points at once; points has shape (k, num_vars)."""
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[0])
        for mono, c in self.sorted_terms():
            v = np.full(points.shape[0], c)
            for i, e in enumerate(mono):
                if e:
                    v = v * points[:, i] ** e
            out += v
        return out

    def diff(self, v: int) -> "Polynomial":
        out: dict[Mono, float] = {}
        for mono, c in self.terms.items():
            e = mono[v]
            if e:
                m = list(mono)
                m[v] = e - 1
                m = tuple(m)
                out[m] = out.get(m, 0.0) + c * e
        return Polynomial(self.structure, out)

    def gradient(self) -> list["Polynomial"]:
        return [self.diff(v) for v in range(self.structure.num_vars)]

    def substitute(self, assignment: dict[int, float]) -> "Polynomial":
        """Freeze some variables at numeric values (partial evaluation)."""
        out: dict[Mono, float] = {}
        for mono, c in self.terms.items():
            v = c
            m = list(mono)
            for i, val in assignment.items():
                if m[i]:
                    v *= val ** m[i]
                    m[i] = 0
            m = tuple(m)
            out[m] = out.get(m, 0.0) + v
        return Polynomial(self.structure, out)

    # -- structure-aware operations -------------------------------------------

    def gradient_block(self, player: int, infoset: int) -> list["Polynomial"]:
        """Partial derivatives with respect to one infoset block."""
        sl = self.structure.block_slice(player, infoset)
        return [self.diff(v) for v in range(sl.start, sl.stop)]

    def hessian_block(self, player: int) -> "PolyMatrix":
        """Symmetric matrix of second partials over one player's variables."""
        sl = self.structure.player_slice(player)
        vs = list(range(sl.start, sl.stop))
        grads = [self.diff(v) for v in vs]
        n = len(vs)
        entries = [[None] * n for _ in range(n)]
        for a in range(n):
            for b in range(a, n):
                h = grads[a].diff(vs[b])
                entries[a][b] = h
                entries[b][a] = h
        return PolyMatrix(self.structure, entries, symmetric=True)

    def is_multiaffine(self) -> bool:
        """True when no monomial takes two powers from any single block."""
        slices = [sl for _, _, sl in self.structure.blocks()]
        for mono in self.terms:
            for sl in slices:
                if sum(mono[sl.start:sl.stop]) > 1:
                    return False
        return True

    # -- misc ------------------------------------------------------------------

    def __eq__(self, other):
        return (isinstance(other, Polynomial) and self.structure == other.structure
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.structure, tuple(self.sorted_terms())))

    def max_coeff_diff(self, other: "Polynomial") -> float:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) for k in keys),
                   default=0.0)

    def __repr__(self):
        if not self.terms:
            return "<poly 0>"
        bits = []
        for mono, c in self.sorted_terms()[:8]:
            name = "*".join(f"x{v}^{e}" if e > 1 else f"x{v}"
                            for v, e in enumerate(mono) if e) or "1"
            bits.append(f"{c:+g}*{name}")
        more = "..." if len(self.terms) > 8 else ""
        return f"<poly {' '.join(bits)}{more}>"

    # -- JSON interchange --------------------------------------------------------

    def to_json_dict(self) -> dict:
        blocks = [list(p) for p in self.structure.sizes]
        terms = []
        for mono, c in self.sorted_terms():
            exps = {self.structure.var_key(v): e for v, e in enumerate(mono) if e}
            terms.append({"coeff": c, "exps": exps})
        return {"blocks": blocks, "terms": terms}

    @staticmethod
    def from_json_dict(data: dict) -> "Polynomial":
        structure = BlockStructure(tuple(tuple(int(m) for m in p) for p in data["blocks"]))
        n = structure.num_vars
        terms: dict[Mono, float] = {}
        for t in data["terms"]:
            mono = [0] * n
            for key, e in t.get("exps", {}).items():
                mono[structure.var_from_key(key)] = int(e)
            mono = tuple(mono)
            terms[mono] = terms.get(mono, 0.0) + float(t["coeff"])
        return Polynomial(structure, terms)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_json_dict(), **kw)

    @staticmethod
    def from_json(text: str) -> "Polynomial":
        return Polynomial.from_json_dict(json.loads(text))


@dataclass
class PolyMatrix:
    """Dense matrix of polynomials sharing one structure."""

    structure: BlockStructure
    entries: list[list[Polynomial]]
    symmetric: bool = False

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0]) if self.entries else 0

    def __getitem__(self, rc):
        r, c = rc
        return self.entries[r][c]

    def eval(self, point) -> np.ndarray:
        r, c = self.shape
        out = np.empty((r, c))
        for i in range(r):
            for j in range(c):
                out[i, j] = self.entries[i][j].eval(point)
        return out

    def check_symmetry(self) -> bool:
        r, c = self.shape
        if r != c:
            return False
        return all(self.entries[i][j] == self.entries[j][i]
                   for i in range(r) for j in range(i + 1, c))


def symmetrized_jacobian(utilities: list[Polynomial]) -> PolyMatrix:
    """Half-sum of the pseudo-gradient Jacobian and its transpose.

    The pseudo-gradient stacks each player's gradient of their own utility
    over their own variables; its Jacobian is then taken over all variables.
    """
    if not utilities:
        raise ValueError("need at least one utility")
    structure = utilities[0].structure
    if len(utilities) != structure.num_players:
        raise StructureMismatch("need exactly one utility per player")
    for u in utilities:
        if u.structure != structure:
            raise StructureMismatch("utilities have different block structures")
    n = structure.num_vars
    pseudo: list[Polynomial] = []
    for i, u in enumerate(utilities):
        sl = structure.player_slice(i)
        pseudo.extend(u.diff(v) for v in range(sl.start, sl.stop))
    entries = [[None] * n for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            e = (pseudo[a].diff(b) + pseudo[b].diff(a)).scale(0.5)
            entries[a][b] = e
            entries[b][a] = e
    return PolyMatrix(structure, entries, symmetric=True)


def add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q

def mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q

def eval_poly(p: Polynomial, point) -> float:
    return p.eval(point)
