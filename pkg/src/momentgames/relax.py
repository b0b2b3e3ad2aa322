"""Moment and sum-of-squares relaxations over products of simplices.

The moment side is posed with one free scalar per *reduced* moment: the
truncated equality ideal is preprocessed into rewrite rules

* ``x^2 - x = 0``  clips exponents to one (vertex-restricted sets), and
* each linear equality eliminates its highest-index variable by substitution
  (simplex block sums),

and every moment of degree <= 2d is expressed through the surviving basis.
Each rewrite step subtracts a constraint instance whose degree stays within
the truncation, so the emitted system spans exactly the mandated constraint
set: pinned moments plus the reduced residuals of every instantiated
equality.  Equalities that are not recognized as rules (for example KKT
complementarity) are instantiated against all monomial multipliers within
degree and kept as rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .blocks import (BlockStructure, Mono, mono_degree, mono_mul, monomials_upto,
                     unit_mono, zero_mono)
from .poly import Polynomial
from .sdp import LinExpr, SdpProblem, SdpSolution, SdpStatus, solve as sdp_solve


# ---------------------------------------------------------------------------
# semialgebraic descriptions
# ---------------------------------------------------------------------------

@dataclass
class SemiAlgebraicSet:
    """Basic closed set {g >= 0, h = 0} over a block structure."""

    structure: BlockStructure
    ineqs: list[Polynomial]
    eqs: list[Polynomial]
    archimedean_bound: float

    @property
    def d_constraints(self) -> int:
        """Half-degree of the constraint description (flatness offset)."""
        degs = [p.degree for p in self.ineqs] + [p.degree for p in self.eqs]
        return max((pdeg + 1) // 2 for pdeg in degs) if degs else 1

    def d0(self, objective: Polynomial) -> int:
        return max((objective.degree + 1) // 2, self.d_constraints, 1)

    def residuals_at(self, point) -> tuple[float, float]:
        """(largest g violation, largest |h|) at a point."""
        gv = max((max(0.0, -g.eval(point)) for g in self.ineqs), default=0.0)
        hv = max((abs(h.eval(point)) for h in self.eqs), default=0.0)
        return gv, hv

    def contains(self, point, tol: float = 1e-6) -> bool:
        gv, hv = self.residuals_at(point)
        return gv <= tol and hv <= tol


def _block_sum_minus_one(structure: BlockStructure, sl) -> Polynomial:
    n = structure.num_vars
    terms = {unit_mono(n, v): 1.0 for v in range(sl.start, sl.stop)}
    terms[zero_mono(n)] = -1.0
    return Polynomial(structure, terms)


def _norm_bound_poly(structure: BlockStructure, bound: float) -> Polynomial:
    n = structure.num_vars
    terms = {zero_mono(n): bound}
    for v in range(n):
        terms[unit_mono(n, v, 2)] = -1.0
    return Polynomial(structure, terms)


def simplex_set(structure: BlockStructure) -> SemiAlgebraicSet:
    """Product of simplices, with the redundant norm bound appended once."""
    n = structure.num_vars
    ineqs = [Polynomial.variable(structure, v) for v in range(n)]
    eqs = [_block_sum_minus_one(structure, sl) for _, _, sl in structure.blocks()]
    bound = float(structure.num_blocks)
    ineqs.append(_norm_bound_poly(structure, bound))
    return SemiAlgebraicSet(structure, ineqs, eqs, bound)


def vertex_restricted_set(structure: BlockStructure) -> SemiAlgebraicSet:
    """Pure-strategy profiles: block sums plus x(x-1) = 0, no inequalities."""
    n = structure.num_vars
    eqs = [_block_sum_minus_one(structure, sl) for _, _, sl in structure.blocks()]
    for v in range(n):
        eqs.append(Polynomial(structure, {unit_mono(n, v, 2): 1.0,
                                          unit_mono(n, v): -1.0}))
    return SemiAlgebraicSet(structure, [], eqs, float(structure.num_blocks))


def kkt_multipliers(utility: Polynomial, player: int, infoset: int
                    ) -> tuple[Polynomial, list[Polynomial]]:
    """Polynomial multipliers (nu, lambda) of the block simplex at a maximizer.

    Stationarity w - nu*1 + lambda = 0 with nu = mu.w gives lambda = nu*1 - w,
    which is nonnegative with x.lambda = 0 exactly at blockwise KKT points.
    """
    structure = utility.structure
    sl = structure.block_slice(player, infoset)
    w = [utility.diff(v) for v in range(sl.start, sl.stop)]
    nu = Polynomial.zero(structure)
    for v, wa in zip(range(sl.start, sl.stop), w):
        nu = nu + Polynomial.variable(structure, v) * wa
    lams = [nu - wa for wa in w]
    return nu, lams


def kkt_augmented_set(utilities: list[Polynomial],
                      structure: BlockStructure) -> SemiAlgebraicSet:
    """Simplex set plus eliminated-multiplier KKT inequalities and
    complementarity equalities for every player block."""
    if len(utilities) != structure.num_players:
        raise ValueError("need one utility per player")
    base = simplex_set(structure)
    ineqs = list(base.ineqs)
    eqs = list(base.eqs)
    for i, u in enumerate(utilities):
        if u.structure != structure:
            raise ValueError("utility structure mismatch")
        for j in range(structure.infoset_count(i)):
            sl = structure.block_slice(i, j)
            _, lams = kkt_multipliers(u, i, j)
            for v, lam in zip(range(sl.start, sl.stop), lams):
                if not lam.is_zero():
                    ineqs.append(lam)
                    comp = Polynomial.variable(structure, v) * lam
                    if not comp.is_zero():
                        eqs.append(comp)
    return SemiAlgebraicSet(structure, ineqs, eqs, base.archimedean_bound)


# -----------------------------------------------------------------------------
# truncated-ideal reduction of the moment variables
# -----------------------------------------------------------------------------

class MomentReduction:
    """Rewrite map sending any monomial to a combination of basis moments."""

    def __init__(self, structure: BlockStructure, eqs: list[Polynomial], two_d: int):
        self.structure = structure
        self.two_d = two_d
        n = structure.num_vars
        self.clip: set[int] = set()
        self.subst: dict[int, dict[Mono, float]] = {}
        self.subst_eqs: list[Polynomial] = []
        self.residual_eqs: list[Polynomial] = []
        claimed = set()
        for eq in eqs:
            terms = eq.sorted_terms()
            if self._is_clip(terms):
                v = next(i for i, e in enumerate(terms[-1][0]) if e)
                self.clip.add(v)
                continue
            if eq.degree == 1:
                # eliminate the highest-index variable with nonzero coefficient
                cand = max((v for m, _ in terms for v, e in enumerate(m) if e),
                           default=None)
                if cand is not None and cand not in claimed:
                    coef = eq.coefficient(unit_mono(n, cand))
                    rule: dict[Mono, float] = {}
                    for m, c in terms:
                        if m == unit_mono(n, cand):
                            continue
                        rule[m] = -c / coef
                    self.subst[cand] = rule
                    self.subst_eqs.append(eq)
                    claimed.add(cand)
                    continue
            self.residual_eqs.append(eq)
        self._memo: dict[Mono, dict[Mono, float]] = {}

    @staticmethod
    def _is_clip(terms) -> bool:
        if len(terms) != 2:
            return False
        (m1, c1), (m2, c2) = terms
        v1 = [v for v, e in enumerate(m1) if e]
        v2 = [v for v, e in enumerate(m2) if e]
        return (len(v1) == 1 and v1 == v2 and m1[v1[0]] == 1 and m2[v1[0]] == 2
                and abs(c1 + c2) < 1e-15)

    def reduce_mono(self, m: Mono) -> dict[Mono, float]:
        got = self._memo.get(m)
        if got is not None:
            return got
        for v in self.clip:
            if m[v] >= 2:
                m2 = list(m)
                m2[v] -= 1
                out = self.reduce_mono(tuple(m2))
                self._memo[m] = out
                return out
        for v, rule in self.subst.items():
            if m[v] >= 1:
                m2 = list(m)
                m2[v] -= 1
                base = self.reduce_mono(tuple(m2))
                out: dict[Mono, float] = {}
                for bm, bc in base.items():
                    for sm, sc in rule.items():
                        inner = self.reduce_mono(mono_mul(bm, sm))
                        for rm, rc in inner.items():
                            out[rm] = out.get(rm, 0.0) + bc * sc * rc
                out = {k: v2 for k, v2 in out.items() if v2 != 0.0}
                self._memo[m] = out
                return out
        out = {m: 1.0}
        self._memo[m] = out
        return out

    def reduce_terms(self, terms: dict[Mono, float]) -> dict[Mono, float]:
        out: dict[Mono, float] = {}
        for m, c in terms.items():
            for rm, rc in self.reduce_mono(m).items():
                v = out.get(rm, 0.0) + c * rc
                if v == 0.0:
                    out.pop(rm, None)
                else:
                    out[rm] = v
        return out

    def basis(self) -> list[Mono]:
        """Surviving moments: clipped, eliminated-variable-free, degree <= 2d."""
        out = []
        for m in monomials_upto(self.structure.num_vars, self.two_d):
            if any(m[v] for v in self.subst):
                continue
            if any(m[v] >= 2 for v in self.clip):
                continue
            out.append(m)
        return out

    def matrix_basis(self, order: int) -> list[Mono]:
        """Moment-matrix index monomials at a given order (clip-filtered)."""
        out = []
        for m in monomials_upto(self.structure.num_vars, order):
            if any(m[v] >= 2 for v in self.clip):
                continue
            out.append(m)
        return out


# -------------------------------------------------------------------------------
# moment vectors and matrices
# -------------------------------------------------------------------------------

class MomentVector:
    """Pseudo-moments indexed by monomials up to degree 2d."""

    def __init__(self, structure: BlockStructure, degree: int,
                 values: dict[Mono, float]):
        self.structure = structure
        self.degree = degree          # 2d
        self.values = values

    @staticmethod
    def dirac(structure: BlockStructure, point, degree: int) -> "MomentVector":
        point = np.asarray(point, dtype=float)
        vals = {}
        for m in monomials_upto(structure.num_vars, degree):
            v = 1.0
            for i, e in enumerate(m):
                if e:
                    v *= point[i] ** e
            vals[m] = v
        return MomentVector(structure, degree, vals)

    @staticmethod
    def mixture(structure: BlockStructure, points, weights, degree: int
                ) -> "MomentVector":
        vecs = [MomentVector.dirac(structure, p, degree) for p in points]
        vals = {}
        for m in monomials_upto(structure.num_vars, degree):
            vals[m] = sum(w * v.values[m] for w, v in zip(weights, vecs))
        return MomentVector(structure, degree, vals)

    def riesz(self, p: Polynomial) -> float:
        """L_y(p); requires deg(p) <= stored degree."""
        if p.degree > self.degree:
            raise ValueError(f"degree {p.degree} exceeds stored moments {self.degree}")
        return sum(c * self.values[m] for m, c in p.terms.items())

    def moment_matrix(self, order: int, generator: Polynomial | None = None,
                      basis: list[Mono] | None = None) -> "MomentMatrix":
        n = self.structure.num_vars
        if basis is None:
            basis = monomials_upto(n, order)
        dim = len(basis)
        M = np.empty((dim, dim))
        gterms = generator.terms if generator is not None else {zero_mono(n): 1.0}
        for a in range(dim):
            for b in range(a, dim):
                s = mono_mul(basis[a], basis[b])
                val = 0.0
                for gm, gc in gterms.items():
                    val += gc * self.values[mono_mul(s, gm)]
                M[a, b] = M[b, a] = val
        return MomentMatrix(order, generator, basis, M)

    def first_moments(self) -> np.ndarray:
        n = self.structure.num_vars
        return np.array([self.values[unit_mono(n, v)] for v in range(n)])


@dataclass
class MomentMatrix:
    """Localizing or plain moment matrix with rank diagnostics."""

    order: int
    generator: Polynomial | None
    basis: list[Mono]
    values: np.ndarray

    def numerical_rank(self, rel_tol: float = 1e-6) -> int:
        sv = np.linalg.svd(self.values, compute_uv=False)
        if sv.size == 0 or sv[0] <= 0:
            return 0
        return int(np.sum(sv > rel_tol * sv[0]))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.values + self.values.T)).min())


def flatness(y: MomentVector, d_k: int, reduction: MomentReduction | None = None,
             rank_tol: float = 1e-6, s_min: int | None = None) -> tuple[int, int] | None:
    """Smallest order s with rank M_s(y) = rank M_{s-d_k}(y), or None.

    Returns (s, rank).  Ranks use the relative singular-value threshold.
    """
    d = y.degree // 2
    lo = max(d_k, 1) if s_min is None else max(s_min, d_k, 1)
    mats: dict[int, int] = {}

    def rank_at(s: int) -> int:
        if s not in mats:
            basis = reduction.matrix_basis(s) if reduction is not None else None
            mats[s] = y.moment_matrix(s, basis=basis).numerical_rank(rank_tol)
        return mats[s]

    for s in range(lo, d + 1):
        if rank_at(s) == rank_at(s - d_k):
            return s, rank_at(s)
    return None


# ---------------------------------------------------------------------------------
# relaxation builders
# ---------------------------------------------------------------------------------

@dataclass
class MomentRelaxation:
    """Moment SDP of one objective over one set at one order, plus metadata."""

    problem: SdpProblem
    objective: Polynomial
    set: SemiAlgebraicSet
    order: int
    reduction: MomentReduction
    free_basis: list[Mono]
    block_bases: list[list[Mono]]
    block_gens: list[Polynomial | None]

    def moment_vector(self, sol: SdpSolution) -> MomentVector:
        idx = {m: i for i, m in enumerate(self.free_basis)}
        w = sol.frees
        vals: dict[Mono, float] = {}
        for m in monomials_upto(self.set.structure.num_vars, 2 * self.order):
            vals[m] = sum(c * w[idx[rm]] for rm, c in
                          self.reduction.reduce_mono(m).items())
        return MomentVector(self.set.structure, 2 * self.order, vals)

    def solve(self, tol: float = 1e-7, max_iter: int = 200) -> SdpSolution:
        return sdp_solve(self.problem, tol=tol, max_iter=max_iter)


def build_moment_relaxation(objective: Polynomial, sa_set: SemiAlgebraicSet,
                            d: int, sense: str = "max") -> MomentRelaxation:
    """Moment relaxation of optimizing ``objective`` over ``sa_set`` at order d."""
    structure = sa_set.structure
    d0 = sa_set.d0(objective)
    if d < d0:
        raise ValueError(f"order {d} below minimum order {d0}")
    n = structure.num_vars
    two_d = 2 * d
    red = MomentReduction(structure, sa_set.eqs, two_d)
    free_basis = red.basis()
    fidx = {m: i for i, m in enumerate(free_basis)}

    def expr_of(terms: dict[Mono, float]) -> dict[int, float]:
        out: dict[int, float] = {}
        for rm, rc in red.reduce_terms(terms).items():
            out[fidx[rm]] = out.get(fidx[rm], 0.0) + rc
        return out

    block_bases: list[list[Mono]] = [red.matrix_basis(d)]
    block_gens: list[Polynomial | None] = [None]
    for g in sa_set.ineqs:
        dg = d - (g.degree + 1) // 2
        block_bases.append(red.matrix_basis(dg))
        block_gens.append(g)

    constraints: list[tuple[LinExpr, float]] = []
    # pin every matrix entry to its reduced-moment expression
    for bidx, (basis, gen) in enumerate(zip(block_bases, block_gens)):
        gterms = gen.terms if gen is not None else {zero_mono(n): 1.0}
        for a in range(len(basis)):
            for b in range(a, len(basis)):
                prod = mono_mul(basis[a], basis[b])
                combo: dict[int, float] = {}
                for gm, gc in gterms.items():
                    for j, c in expr_of({mono_mul(prod, gm): gc}).items():
                        combo[j] = combo.get(j, 0.0) + c
                e = LinExpr().add_entry(bidx, a, b, 1.0)
                for j, c in combo.items():
                    e.add_free(j, -c)
                constraints.append((e, 0.0))

    # normalization L_y(1) = 1
    e0 = LinExpr()
    for j, c in expr_of({zero_mono(n): 1.0}).items():
        e0.add_free(j, c)
    constraints.append((e0, 1.0))

    # residual equality instances: clip rules reduce identically to zero and
    # are fully absorbed by the pinning rows; substitution rules reduce to
    # zero too unless clipping interferes, so only then are they instantiated
    residual_sources = list(red.residual_eqs)
    if red.clip:
        residual_sources += red.subst_eqs
    seen_rows: set[tuple] = set()
    for eq in residual_sources:
        room = two_d - eq.degree
        if room < 0:
            continue
        for q in monomials_upto(n, room):
            prod_terms: dict[Mono, float] = {}
            for m, c in eq.terms.items():
                mm = mono_mul(m, q)
                prod_terms[mm] = prod_terms.get(mm, 0.0) + c
            combo = expr_of(prod_terms)
            combo = {j: c for j, c in combo.items() if abs(c) > 1e-14}
            if not combo:
                continue
            scale = max(abs(c) for c in combo.values())
            keyn = tuple(sorted((j, round(c / scale, 12)) for j, c in combo.items()))
            if keyn in seen_rows:
                continue
            seen_rows.add(keyn)
            e = LinExpr(free_terms=dict(combo))
            constraints.append((e, 0.0))

    obj = LinExpr()
    for j, c in expr_of(objective.terms).items():
        obj.add_free(j, c)

    problem = SdpProblem(
        block_dims=[len(b) for b in block_bases],
        num_free=len(free_basis),
        objective=obj,
        constraints=constraints,
        sense=sense,
    )
    return MomentRelaxation(problem, objective, sa_set, d, red, free_basis,
                            block_bases, block_gens)


@dataclass
class SosRelaxation:
    problem: SdpProblem
    objective: Polynomial
    set: SemiAlgebraicSet
    order: int
    sense: str

    def value(self, sol: SdpSolution) -> float | None:
        if sol.objective is None:
            return None
        return sol.objective if self.sense == "max" else -sol.objective


def build_sos_relaxation(objective: Polynomial, sa_set: SemiAlgebraicSet,
                         d: int, sense: str = "max") -> SosRelaxation:
    """Putinar certificate search: bound - u in the truncated quadratic module.

    For maximization this is min t with t - u = sigma_0 + sum sigma_j g_j +
    sum p_k h_k; Gram blocks carry the sigmas, free scalars the p_k and t.
    Minimization bounds -u instead and negates the reported value.
    """
    structure = sa_set.structure
    if d < sa_set.d0(objective):
        raise ValueError(f"order {d} below minimum order {sa_set.d0(objective)}")
    n = structure.num_vars
    two_d = 2 * d
    target = objective if sense == "max" else -objective

    gram_bases = [monomials_upto(n, d)]
    gens: list[Polynomial | None] = [None]
    for g in sa_set.ineqs:
        gram_bases.append(monomials_upto(n, d - (g.degree + 1) // 2))
        gens.append(g)

    # free variables: t first, then the coefficients of each equality multiplier
    free_count = 1
    h_multipliers: list[tuple[Polynomial, list[Mono], int]] = []
    for h in sa_set.eqs:
        basisq = monomials_upto(n, two_d - h.degree)
        h_multipliers.append((h, basisq, free_count))
        free_count += len(basisq)

    # row per monomial m:  [sigma_0 + sum sigma_j g_j + sum p_k h_k]_m - t*[m=0]
    # equals  [-u]_m
    rows: dict[Mono, LinExpr] = {m: LinExpr() for m in monomials_upto(n, two_d)}
    for bidx, (basis, gen) in enumerate(zip(gram_bases, gens)):
        gterms = gen.terms if gen is not None else {zero_mono(n): 1.0}
        for a in range(len(basis)):
            for b in range(a, len(basis)):
                prod = mono_mul(basis[a], basis[b])
                w = 1.0 if a == b else 2.0
                for gm, gc in gterms.items():
                    rows[mono_mul(prod, gm)].add_entry(bidx, a, b, w * gc)
    for h, basisq, off in h_multipliers:
        for qi, q in enumerate(basisq):
            for hm, hc in h.terms.items():
                rows[mono_mul(q, hm)].add_free(off + qi, hc)
    rows[zero_mono(n)].add_free(0, -1.0)

    constraints = [(e, -target.terms.get(m, 0.0)) for m, e in rows.items()]
    obj = LinExpr().add_free(0, 1.0)
    problem = SdpProblem([len(b) for b in gram_bases], free_count, obj,
                         constraints, sense="min")
    return SosRelaxation(problem, objective, sa_set, d, sense)
