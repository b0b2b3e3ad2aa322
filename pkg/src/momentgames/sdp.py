"""Block semidefinite programming with a dense primal-dual interior-point solver.

Problems are stated in a single data model: PSD matrix blocks plus free
scalar variables, linear equality constraints over all of them, and a linear
objective.  Two constraint patterns are recognized at solve time:

* rows that each pin one block entry to an affine function of the free
  variables (the shape produced by moment relaxations): the solver works on
  the equivalent linear-matrix-inequality form whose Schur complement has one
  row per free variable;
* anything else is handled directly in primal form, one Schur row per
  constraint (the shape of sum-of-squares coefficient matching).

The engine is a homogeneous self-dual embedding with Nesterov-Todd scaling
and a Mehrotra predictor-corrector, so primal or dual infeasibility is
certified by a ray instead of by divergence.  The solver is deterministic:
fixed starting point, no randomized pivoting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp


class SdpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    SLOW_PROGRESS = "slow_progress"
    ITERATION_LIMIT = "iteration_limit"


class SdpError(ValueError):
    pass


@dataclass
class LinExpr:
    """Sparse linear functional over block entries and free scalars.

    A coefficient on block entry (blk, r, c) multiplies X_blk[r, c] of the
    symmetric block matrix; keys are normalized to r <= c.
    """

    entry_terms: dict[tuple[int, int, int], float] = field(default_factory=dict)
    free_terms: dict[int, float] = field(default_factory=dict)

    def add_entry(self, blk: int, r: int, c: int, coef: float) -> "LinExpr":
        if r > c:
            r, c = c, r
        key = (blk, r, c)
        v = self.entry_terms.get(key, 0.0) + float(coef)
        if v == 0.0:
            self.entry_terms.pop(key, None)
        else:
            self.entry_terms[key] = v
        return self

    def add_free(self, idx: int, coef: float) -> "LinExpr":
        v = self.free_terms.get(idx, 0.0) + float(coef)
        if v == 0.0:
            self.free_terms.pop(idx, None)
        else:
            self.free_terms[idx] = v
        return self

    def value(self, blocks: list[np.ndarray], frees: np.ndarray) -> float:
        total = 0.0
        for (b, r, c), k in self.entry_terms.items():
            total += k * blocks[b][r, c]
        for i, k in self.free_terms.items():
            total += k * frees[i]
        return total

    def copy(self) -> "LinExpr":
        return LinExpr(dict(self.entry_terms), dict(self.free_terms))


@dataclass
class SdpProblem:
    """min or max of a linear objective over PSD blocks, frees and equalities."""

    block_dims: list[int]
    num_free: int
    objective: LinExpr
    constraints: list[tuple[LinExpr, float]]
    sense: str = "min"          # 'min' | 'max'

    def validate(self) -> None:
        if self.sense not in ("min", "max"):
            raise SdpError(f"bad sense {self.sense!r}")
        if any(d < 1 for d in self.block_dims):
            raise SdpError("block dimensions must be >= 1")
        exprs = [self.objective] + [e for e, _ in self.constraints]
        for e in exprs:
            for (b, r, c) in e.entry_terms:
                if not (0 <= b < len(self.block_dims)):
                    raise SdpError(f"expression references unknown block {b}")
                if not (0 <= r <= c < self.block_dims[b]):
                    raise SdpError(f"entry ({r},{c}) outside block {b}")
            for i in e.free_terms:
                if not (0 <= i < self.num_free):
                    raise SdpError(f"expression references unknown free variable {i}")

    def dump_sparse(self) -> str:
        """Plain text debug format, one line per nonzero."""
        lines = [f"# blocks {self.block_dims} frees {self.num_free} sense {self.sense}"]
        def emit(tag, expr, rhs=None):
            for (b, r, c), v in sorted(expr.entry_terms.items()):
                lines.append(f"{tag} blk {b} {r} {c} {v:.17g}")
            for i, v in sorted(expr.free_terms.items()):
                lines.append(f"{tag} free {i} {v:.17g}")
            if rhs is not None:
                lines.append(f"{tag} rhs {rhs:.17g}")
        emit("obj", self.objective)
        for i, (e, rhs) in enumerate(self.constraints):
            emit(f"c{i}", e, rhs)
        return "\n".join(lines)


@dataclass
class SdpSolution:
    status: SdpStatus
    objective: float | None
    blocks: list[np.ndarray]
    frees: np.ndarray
    duals: np.ndarray
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    certificate: dict | None = None

    @property
    def optimal(self) -> bool:
        return self.status is SdpStatus.OPTIMAL


# ----------------------------------------------------------------------------
# internal conic core:  min <C,X> + cf.u  s.t. A(X) + F u = b, X >= 0 blocks
# ----------------------------------------------------------------------------

class _ConicData:
    def __init__(self, dims, A_blocks, F, b, C_blocks, c_free):
        self.dims = dims
        self.A = A_blocks            # list of csr (m, N_k^2)
        self.F = F                   # (m, p) ndarray
        self.b = np.asarray(b, dtype=float)
        self.C = C_blocks            # list of (N_k, N_k) ndarray
        self.cf = np.asarray(c_free, dtype=float)
        self.m = self.b.size
        self.p = self.cf.size
        self.nu = sum(dims)
        # dense stacks for Schur assembly when affordable
        self._stacks = []
        for k, N in enumerate(dims):
            if self.A[k].nnz and self.m * N * N <= 6e7:
                self._stacks.append(np.asarray(self.A[k].todense()).reshape(self.m, N, N))
            else:
                self._stacks.append(None)

    def apply_A(self, blocks) -> np.ndarray:
        out = np.zeros(self.m)
        for k, Ak in enumerate(self.A):
            if Ak.nnz:
                out += Ak @ blocks[k].reshape(-1)
        return out

    def apply_AT(self, y) -> list[np.ndarray]:
        out = []
        for k, N in enumerate(self.dims):
            if self.A[k].nnz:
                M = (y @ self.A[k]).reshape(N, N)
                out.append(0.5 * (M + M.T))
            else:
                out.append(np.zeros((N, N)))
        return out

    def inner_C(self, blocks) -> float:
        return sum(float(np.tensordot(self.C[k], blocks[k])) for k in range(len(self.dims)))

    def schur(self, R_list) -> np.ndarray:
        """H_ij = sum_k tr(A_ik W_k A_jk W_k) with W_k = R_k R_k^T."""
        H = np.zeros((self.m, self.m))
        for k, N in enumerate(self.dims):
            Ak = self.A[k]
            if not Ak.nnz:
                continue
            R = R_list[k]
            stack = self._stacks[k]
            if stack is not None:
                T = np.matmul(R.T, np.matmul(stack, R))
                flat = T.reshape(self.m, N * N)
                H += flat @ flat.T
            else:
                rows = [Ak.getrow(i) for i in range(self.m)]
                T = np.empty((self.m, N * N))
                for i, row in enumerate(rows):
                    M = row.toarray().reshape(N, N)
                    T[i] = (R.T @ M @ R).reshape(-1)
                H += T @ T.T
        return H


def _sym(M):
    return 0.5 * (M + M.T)


def _chol_psd(M, name):
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        # tiny shift keeps the iteration alive near the boundary
        w, V = np.linalg.eigh(_sym(M))
        w = np.maximum(w, 1e-14 * max(1.0, float(w.max(initial=1.0))))
        return np.linalg.cholesky((V * w) @ V.T)


def _nt_scaling(X, S):
    """R with R^-1 X R^-T = R^T S R = diag(lam)."""
    Lx = _chol_psd(X, "X")
    Ls = _chol_psd(S, "S")
    U, lam, Vt = np.linalg.svd(Ls.T @ Lx)
    lam = np.maximum(lam, 1e-150)
    sqrt_il = 1.0 / np.sqrt(lam)
    R = Lx @ Vt.T * sqrt_il
    Rinv = (U * sqrt_il).T @ Ls.T
    return R, Rinv, lam


def _max_step(M, L):
    """Largest a with M + a*D >= 0 given D in the metric of L L^T = M."""
    # caller passes the scaled direction L^-1 D L^-T directly
    w = np.linalg.eigvalsh(M)
    mn = w.min() if w.size else 0.0
    if mn >= 0:
        return np.inf
    return -1.0 / mn


class _CoreResult:
    def __init__(self, status, X, u, y, S, tau, kappa, iters, pres, dres, gap, pobj, dobj):
        self.status = status
        self.X, self.u, self.y, self.S = X, u, y, S
        self.tau, self.kappa = tau, kappa
        self.iterations = iters
        self.pres, self.dres, self.gap = pres, dres, gap
        self.pobj, self.dobj = pobj, dobj


def _solve_core(data: _ConicData, tol: float, max_iter: int,
                verbose: bool = False) -> _CoreResult:
    dims, m, p = data.dims, data.m, data.p
    nblk = len(dims)
    X = [np.eye(N) for N in dims]
    S = [np.eye(N) for N in dims]
    y = np.zeros(m)
    u = np.zeros(p)
    tau, kappa = 1.0, 1.0

    bnorm = 1.0 + np.linalg.norm(data.b)
    cnorm = 1.0 + math.sqrt(sum(float(np.sum(data.C[k] ** 2)) for k in range(nblk))
                            + float(np.sum(data.cf ** 2)))

    status = SdpStatus.ITERATION_LIMIT
    slow_count = 0
    prev_quality = None
    iters = 0
    pres = dres = gap = np.inf
    pobj = dobj = np.nan

    for iters in range(1, max_iter + 1):
        # residuals of the homogeneous model
        rp = data.apply_A(X) + (data.F @ u if p else 0.0) - data.b * tau
        ATy = data.apply_AT(y)
        rd = [-ATy[k] + data.C[k] * tau - S[k] for k in range(nblk)]
        rf = (-(data.F.T @ y) + data.cf * tau) if p else np.zeros(0)
        cx = data.inner_C(X) + (data.cf @ u if p else 0.0)
        by = data.b @ y
        rg = by - cx - kappa

        mu = (sum(float(np.tensordot(X[k], S[k])) for k in range(nblk)) + tau * kappa) \
            / (data.nu + 1)

        # convergence metrics on the de-homogenized iterate
        pobj = cx / tau
        dobj = by / tau
        pres = np.linalg.norm(data.apply_A(X) / tau + (data.F @ u / tau if p else 0.0)
                              - data.b) / bnorm
        d_mats = [data.C[k] - ATy[k] / tau - S[k] / tau for k in range(nblk)]
        dres_sq = sum(float(np.sum(Mk ** 2)) for Mk in d_mats)
        if p:
            dres_sq += float(np.sum((data.cf - data.F.T @ y / tau) ** 2))
        dres = math.sqrt(dres_sq) / cnorm
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))

        if verbose:
            print(f"  it {iters:3d} mu={mu:9.2e} pres={pres:9.2e} dres={dres:9.2e} "
                  f"gap={gap:9.2e} tau={tau:9.2e} kappa={kappa:9.2e}")
        if max(pres, dres, gap) <= tol:
            status = SdpStatus.OPTIMAL
            break

        # infeasibility certificates (tau -> 0 side of the embedding)
        if by > tol * max(1.0, np.linalg.norm(y)):
            yn = y / by
            Sn = [Sk / by for Sk in S]
            feas = math.sqrt(sum(float(np.sum((data.apply_AT(yn)[k] + Sn[k]) ** 2))
                                 for k in range(nblk))
                             + (float(np.sum((data.F.T @ yn) ** 2)) if p else 0.0))
            if feas <= tol * 10 and tau <= tol * max(1.0, kappa):
                status = SdpStatus.INFEASIBLE
                y = yn
                S = Sn
                break
        if cx < -tol * max(1.0, sum(float(np.abs(Xk).max()) for Xk in X)):
            scl = -1.0 / cx
            Xn = [Xk * scl for Xk in X]
            un = u * scl
            feas = np.linalg.norm(data.apply_A(Xn) + (data.F @ un if p else 0.0))
            if feas <= tol * 10 and tau <= tol * max(1.0, kappa):
                status = SdpStatus.UNBOUNDED
                X = Xn
                u = un
                break

        quality = max(pres, dres, gap)
        if prev_quality is not None and quality > (1.0 - 1e-3) * prev_quality:
            slow_count += 1
            if slow_count >= 10:
                status = SdpStatus.SLOW_PROGRESS
                break
        else:
            slow_count = 0
        prev_quality = quality

        # NT scalings
        Rs, Rinvs, lams = [], [], []
        for k in range(nblk):
            R, Rinv, lam = _nt_scaling(X[k], S[k])
            Rs.append(R)
            Rinvs.append(Rinv)
            lams.append(lam)

        H = data.schur(Rs)
        Hreg = H + np.eye(m) * (1e-12 * (1.0 + np.trace(H) / max(m, 1)))
        if p:
            K = np.block([[Hreg, data.F], [data.F.T, -1e-12 * np.eye(p)]])
        else:
            K = Hreg
        try:
            lu = sla.lu_factor(K)
        except Exception as exc:          # singular KKT: bail out with limit status
            status = SdpStatus.SLOW_PROGRESS
            break

        W = [Rs[k] @ Rs[k].T for k in range(nblk)]
        WCW = [W[k] @ data.C[k] @ W[k] for k in range(nblk)]
        a_c = data.apply_A(WCW)
        q_cc = data.inner_C(WCW)
        h_vec = data.b + a_c

        # constant column multiplying dtau
        rhs2 = np.concatenate([h_vec, data.cf]) if p else h_vec
        z2 = sla.lu_solve(lu, rhs2)

        def newton(sigma, rc_list, rk, scale_res):
            """One Newton solve; scale_res multiplies the linear residuals."""
            G = [Rs[k] @ (rc_list[k] * (2.0 / np.add.outer(lams[k], lams[k]))) @ Rs[k].T
                 for k in range(nblk)]
            WrdW = [W[k] @ rd[k] @ W[k] for k in range(nblk)]
            top = -scale_res * rp - data.apply_A(G) + scale_res * data.apply_A(WrdW)
            bot = scale_res * rf
            rhs1 = np.concatenate([top, bot]) if p else top
            z1 = sla.lu_solve(lu, rhs1)
            g_vec = np.concatenate([data.b - a_c, -data.cf]) if p else (data.b - a_c)
            num = (-scale_res * rg + data.inner_C(G)
                   - scale_res * sum(float(np.tensordot(data.C[k], WrdW[k]))
                                     for k in range(nblk))
                   + rk / tau) - g_vec @ z1
            den = g_vec @ z2 + q_cc + kappa / tau
            dtau = num / den if abs(den) > 1e-300 else 0.0
            zz = z1 + z2 * dtau
            dy = zz[:m]
            du = zz[m:] if p else np.zeros(0)
            ATdy = data.apply_AT(dy)
            dS = [-ATdy[k] + data.C[k] * dtau + scale_res * rd[k] for k in range(nblk)]
            dX = [G[k] - W[k] @ dS[k] @ W[k] for k in range(nblk)]
            dX = [_sym(D) for D in dX]
            dS = [_sym(D) for D in dS]
            dkappa = (rk - kappa * dtau) / tau
            return dX, du, dy, dS, dtau, dkappa

        def step_bound(dX, dS, dtau, dkappa):
            alpha = np.inf
            for k in range(nblk):
                Lx = _chol_psd(X[k], "X")
                M = sla.solve_triangular(Lx, dX[k], lower=True)
                M = sla.solve_triangular(Lx, M.T, lower=True)
                alpha = min(alpha, _max_step(_sym(M), None))
                Ls = _chol_psd(S[k], "S")
                M = sla.solve_triangular(Ls, dS[k], lower=True)
                M = sla.solve_triangular(Ls, M.T, lower=True)
                alpha = min(alpha, _max_step(_sym(M), None))
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkappa < 0:
                alpha = min(alpha, -kappa / dkappa)
            return alpha

        # predictor
        rc_aff = [-np.diag(lams[k] ** 2) for k in range(nblk)]
        aff = newton(0.0, rc_aff, -tau * kappa, 1.0)
        dXa, dua, dya, dSa, dtaua, dkappaa = aff
        alpha_aff = min(1.0, 0.98 * step_bound(dXa, dSa, dtaua, dkappaa))

        Xa = [X[k] + alpha_aff * dXa[k] for k in range(nblk)]
        Sa = [S[k] + alpha_aff * dSa[k] for k in range(nblk)]
        mu_aff = (sum(float(np.tensordot(Xa[k], Sa[k])) for k in range(nblk))
                  + (tau + alpha_aff * dtaua) * (kappa + alpha_aff * dkappaa)) / (data.nu + 1)
        sigma = min(1.0, max(1e-8, (max(mu_aff, 0.0) / mu) ** 3))

        # corrector
        rc = []
        for k in range(nblk):
            dXt = Rinvs[k] @ dXa[k] @ Rinvs[k].T
            dSt = Rs[k].T @ dSa[k] @ Rs[k]
            cross = 0.5 * (dXt @ dSt + dSt @ dXt)
            rc.append(sigma * mu * np.eye(dims[k]) - np.diag(lams[k] ** 2) - cross)
        rk = sigma * mu - tau * kappa - dtaua * dkappaa
        dX, du, dy, dS, dtau, dkappa = newton(sigma, rc, rk, 1.0 - sigma)

        alpha = min(1.0, 0.98 * step_bound(dX, dS, dtau, dkappa))
        if not np.isfinite(alpha) or alpha <= 1e-14:
            status = SdpStatus.SLOW_PROGRESS
            break

        X = [_sym(X[k] + alpha * dX[k]) for k in range(nblk)]
        S = [_sym(S[k] + alpha * dS[k]) for k in range(nblk)]
        y = y + alpha * dy
        u = u + alpha * du
        tau += alpha * dtau
        kappa += alpha * dkappa

    return _CoreResult(status, X, u, y, S, tau, kappa, iters, pres, dres, gap, pobj, dobj)


# -----------------------------------------------------------------------------
# public solve: orientation detection and mapping
# -----------------------------------------------------------------------------

def _sym_from_expr(expr: LinExpr, dims) -> list[np.ndarray]:
    mats = [np.zeros((N, N)) for N in dims]
    for (b, r, c), v in expr.entry_terms.items():
        if r == c:
            mats[b][r, r] += v
        else:
            mats[b][r, c] += v / 2.0
            mats[b][c, r] += v / 2.0
    return mats


def _detect_lmi(problem: SdpProblem):
    """Recognize rows pinning each block entry to an affine form of the frees.

    Returns (F0 blocks, Fj maps, leftover rows, row roles) or None.
    """
    dims = problem.block_dims
    defs: dict[tuple[int, int, int], tuple[int, LinExpr, float]] = {}
    leftovers: list[tuple[int, LinExpr, float]] = []
    for idx, (expr, rhs) in enumerate(problem.constraints):
        nent = len(expr.entry_terms)
        if nent == 0:
            leftovers.append((idx, expr, rhs))
        elif nent == 1:
            key = next(iter(expr.entry_terms))
            if key in defs:
                return None
            defs[key] = (idx, expr, rhs)
        else:
            return None
    needed = [(b, r, c) for b, N in enumerate(dims) for r in range(N) for c in range(r, N)]
    if set(defs) != set(needed):
        return None
    return defs, leftovers


def solve(problem: SdpProblem, tol: float = 1e-7, max_iter: int = 200) -> SdpSolution:
    """Solve an SdpProblem; statuses follow the homogeneous embedding."""
    if tol <= 0 or max_iter < 1:
        raise SdpError("tol must be positive and max_iter >= 1")
    problem.validate()
    if not problem.block_dims:
        raise SdpError("problem has no PSD blocks")
    detected = _detect_lmi(problem)
    if detected is not None and problem.num_free > 0:
        return _solve_lmi(problem, detected, tol, max_iter)
    return _solve_primal(problem, tol, max_iter)


def _solve_primal(problem: SdpProblem, tol, max_iter) -> SdpSolution:
    dims = problem.block_dims
    m = len(problem.constraints)
    p = problem.num_free
    sgn = 1.0 if problem.sense == "min" else -1.0

    C = _sym_from_expr(problem.objective, dims)
    C = [sgn * Ck for Ck in C]
    cf = np.zeros(p)
    for i, v in problem.objective.free_terms.items():
        cf[i] = sgn * v

    A_blocks = []
    for k, N in enumerate(dims):
        rows, cols, vals = [], [], []
        for i, (expr, _) in enumerate(problem.constraints):
            for (b, r, c), v in expr.entry_terms.items():
                if b != k:
                    continue
                if r == c:
                    rows.append(i); cols.append(r * N + c); vals.append(v)
                else:
                    rows.append(i); cols.append(r * N + c); vals.append(v / 2.0)
                    rows.append(i); cols.append(c * N + r); vals.append(v / 2.0)
        A_blocks.append(sp.csr_matrix((vals, (rows, cols)), shape=(m, N * N)))
    F = np.zeros((m, p))
    for i, (expr, _) in enumerate(problem.constraints):
        for j, v in expr.free_terms.items():
            F[i, j] = v
    b = np.array([rhs for _, rhs in problem.constraints], dtype=float)

    data = _ConicData(dims, A_blocks, F, b, C, cf)
    res = _solve_core(data, tol, max_iter)

    if res.status is SdpStatus.OPTIMAL:
        blocks = [_sym(Xk / res.tau) for Xk in res.X]
        frees = res.u / res.tau
        duals = sgn * res.y / res.tau
        obj = sgn * res.pobj
        return SdpSolution(res.status, obj, blocks, frees, duals,
                           res.pres, res.dres, res.gap, res.iterations)
    cert = None
    if res.status is SdpStatus.INFEASIBLE:
        cert = {"kind": "primal_infeasible", "y": sgn * res.y,
                "slack": [_sym(Sk) for Sk in res.S]}
    elif res.status is SdpStatus.UNBOUNDED:
        cert = {"kind": "dual_infeasible", "ray_blocks": [_sym(Xk) for Xk in res.X],
                "ray_frees": res.u}
    blocks = [_sym(Xk / max(res.tau, 1e-300)) for Xk in res.X]
    return SdpSolution(res.status, (sgn * res.pobj if res.status in
                                    (SdpStatus.SLOW_PROGRESS, SdpStatus.ITERATION_LIMIT)
                                    else None),
                       blocks, res.u / max(res.tau, 1e-300),
                       sgn * res.y / max(res.tau, 1e-300),
                       res.pres, res.dres, res.gap, res.iterations, cert)


def _solve_lmi(problem: SdpProblem, detected, tol, max_iter) -> SdpSolution:
    """Problem whose blocks are affine in the frees: solve the conic dual."""
    dims = problem.block_dims
    defs, leftovers = detected
    q = problem.num_free

    # block entry (b,r,c):  coef * X(brc) + free part = rhs  =>  X = (rhs - free)/coef
    F0 = [np.zeros((N, N)) for N in dims]
    Fj: list[dict[tuple[int, int], float]] = [dict() for _ in range(q)]  # per free var
    row_of_entry = {}
    coef_of_entry = {}
    for (bidx, r, c), (ridx, expr, rhs) in defs.items():
        coef = expr.entry_terms[(bidx, r, c)]
        row_of_entry[(bidx, r, c)] = ridx
        coef_of_entry[(bidx, r, c)] = coef
        const = rhs / coef
        F0[bidx][r, c] = const
        F0[bidx][c, r] = const
        for j, v in expr.free_terms.items():
            Fj[j][(bidx, r, c)] = -v / coef

    # objective in terms of frees only (substitute pinned entries)
    c_w = np.zeros(q)
    offset = 0.0
    for j, v in problem.objective.free_terms.items():
        c_w[j] += v
    for (bidx, r, c), v in problem.objective.entry_terms.items():
        const = F0[bidx][r, c]
        offset += v * const
        row = defs[(bidx, r, c)][1]
        coef = coef_of_entry[(bidx, r, c)]
        for j, fv in row.free_terms.items():
            c_w[j] += v * (-fv / coef)

    G_rows = []
    g_rhs = []
    leftover_idx = []
    for ridx, expr, rhs in leftovers:
        grow = np.zeros(q)
        for j, v in expr.free_terms.items():
            grow[j] = v
        G_rows.append(grow)
        g_rhs.append(rhs)
        leftover_idx.append(ridx)
    G = np.array(G_rows) if G_rows else np.zeros((0, q))
    g = np.array(g_rhs)

    # internal primal:  min <F0,Z> + g.v  s.t. <Fj,Z> - (G^T v)_j = -c_eff_j, Z >= 0
    # whose dual recovers w = -y with F0 + sum w F >= 0, G w = g, max c_eff.w
    maximize = problem.sense == "max"
    c_eff = c_w if maximize else -c_w

    A_blocks = []
    for k, N in enumerate(dims):
        rows, cols, vals = [], [], []
        for j in range(q):
            for (bidx, r, c), v in Fj[j].items():
                if bidx != k:
                    continue
                # rows act as <Fj, Z> with Fj the symmetric LMI coefficient matrix
                if r == c:
                    rows.append(j); cols.append(r * N + c); vals.append(v)
                else:
                    rows.append(j); cols.append(r * N + c); vals.append(v)
                    rows.append(j); cols.append(c * N + r); vals.append(v)
        A_blocks.append(sp.csr_matrix((vals, (rows, cols)), shape=(q, N * N)))
    F_int = -G.T if G.size else np.zeros((q, len(leftovers)))
    b_int = -c_eff

    data = _ConicData(dims, A_blocks, F_int, b_int, F0, g)
    res = _solve_core(data, tol, max_iter)

    def fill_blocks(w):
        out = [F0[k].copy() for k in range(len(dims))]
        for j in range(q):
            wj = w[j]
            if wj == 0.0:
                continue
            for (bidx, r, c), v in Fj[j].items():
                out[bidx][r, c] += wj * v
                if r != c:
                    out[bidx][c, r] += wj * v
        return out

    ncons = len(problem.constraints)
    if res.status is SdpStatus.OPTIMAL:
        w = -res.y / res.tau
        blocks = fill_blocks(w)
        obj = float(c_w @ w) + offset
        # duals: entry-definition rows get the internal primal block values,
        # leftover equality rows get the internal free multipliers
        duals = np.zeros(ncons)
        Z = [_sym(Xk / res.tau) for Xk in res.X]
        vmult = res.u / res.tau
        for (bidx, r, c), ridx in row_of_entry.items():
            coef = coef_of_entry[(bidx, r, c)]
            w_entry = Z[bidx][r, c] * (1.0 if r == c else 2.0)
            duals[ridx] = w_entry / coef
        for i, ridx in enumerate(leftover_idx):
            duals[ridx] = vmult[i]
        return SdpSolution(res.status, obj, blocks, w, duals,
                           res.dres, res.pres, res.gap, res.iterations)

    cert = None
    status = res.status
    if res.status is SdpStatus.INFEASIBLE:
        # internal primal infeasible == user problem unbounded
        status = SdpStatus.UNBOUNDED
        cert = {"kind": "dual_infeasible", "y": res.y}
    elif res.status is SdpStatus.UNBOUNDED:
        # internal unbounded ray == certificate that the user LMI is infeasible
        status = SdpStatus.INFEASIBLE
        cert = {"kind": "primal_infeasible",
                "ray_blocks": [_sym(Xk) for Xk in res.X],
                "ray_frees": res.u}
    w = -res.y / max(res.tau, 1e-300)
    bound = float(c_w @ w) + offset if res.status in (SdpStatus.SLOW_PROGRESS,
                                                      SdpStatus.ITERATION_LIMIT) else None
    return SdpSolution(status, bound, fill_blocks(w), w, np.zeros(ncons),
                       res.dres, res.pres, res.gap, res.iterations, cert)


# ------------------------------------------------------------------------------
# independent certificate checking
# ------------------------------------------------------------------------------

@dataclass
class CertificateReport:
    ok: bool
    max_constraint_violation: float
    min_block_eigenvalue: float
    details: dict

    def __bool__(self):
        return self.ok


def check_certificate(problem: SdpProblem, sol: SdpSolution,
                      tol: float = 1e-7) -> CertificateReport:
    """Recompute residuals and eigenvalues; flag anything beyond 10*tol."""
    problem.validate()
    details: dict = {"status": sol.status.value}
    if sol.status is SdpStatus.OPTIMAL:
        viol = 0.0
        for expr, rhs in problem.constraints:
            viol = max(viol, abs(expr.value(sol.blocks, sol.frees) - rhs))
        mineig = min((float(np.linalg.eigvalsh(_sym(B)).min()) for B in sol.blocks),
                     default=0.0)
        scale = 1.0 + max((float(np.abs(B).max()) for B in sol.blocks), default=0.0)
        ok = viol <= 10 * tol * scale and mineig >= -10 * tol * scale
        details["objective"] = sol.objective
        return CertificateReport(ok, viol, mineig, details)
    if sol.status is SdpStatus.INFEASIBLE and sol.certificate:
        cert = sol.certificate
        if "y" in cert and "slack" in cert:
            y = cert["y"]
            by = sum(y[i] * rhs for i, (_, rhs) in enumerate(problem.constraints))
            details["certificate_value"] = float(by)
            mineig = min(float(np.linalg.eigvalsh(_sym(B)).min()) for B in cert["slack"])
            return CertificateReport(abs(by) > 0 and mineig >= -10 * tol, 0.0,
                                     mineig, details)
        if "ray_blocks" in cert:
            mineig = min((float(np.linalg.eigvalsh(_sym(B)).min())
                          for B in cert["ray_blocks"]), default=0.0)
            details["kind"] = cert.get("kind")
            return CertificateReport(mineig >= -10 * tol, 0.0, mineig, details)
    return CertificateReport(False, np.inf, -np.inf, details)
