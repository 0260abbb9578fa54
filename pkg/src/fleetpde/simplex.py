"""Bounded-variable revised simplex for small sparse linear programs.

Problems are stated as

    maximize    c @ x
    subject to  A[i] @ x  (=, <=, >=)  rhs[i]
                lb <= x <= ub

Internally every row gets a slack with bounds matching its sense, so the
working form is ``[A I] [x; s] = rhs`` with all variables boxed (possibly by
infinite bounds).  The basis inverse is kept as a dense matrix and updated by
rank-one pivots, with periodic refactorisation.  Pricing is Dantzig's rule on
the equilibrated problem; after a run of degenerate pivots it falls back to
Bland's rule until the objective moves again.

Phase 1 uses a single artificial column carrying the residual of the starting
point, so any starting basis (slack basis or a caller-supplied hint) can be
repaired without one artificial per row.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ValidationError

_dger = scipy.linalg.blas.get_blas_funcs("ger", dtype=np.float64)

EQ, LE, GE = "=", "<=", ">="
_SENSES = (EQ, LE, GE)

# nonbasic position codes
_BASIC, _AT_LB, _AT_UB, _FREE, _FIXED = 0, 1, 2, 3, 4


@dataclass
class LpProblem:
    """A maximisation LP with sparse rows.

    ``basis_hint`` optionally maps row numbers to column numbers that the
    solver should try to place in the starting basis.
    """

    c: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    col_names: list | None = None
    row_names: list | None = None
    basis_hint: dict | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = sp.csr_matrix(self.A, dtype=float)
        self.sense = np.asarray(self.sense, dtype="<U2")
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.validate()

    @classmethod
    def from_triples(cls, c, rows, cols, vals, sense, rhs, lb, ub, **kw):
        m, n = len(rhs), len(c)
        A = sp.coo_matrix((np.asarray(vals, float), (np.asarray(rows, int), np.asarray(cols, int))), shape=(m, n))
        return cls(c, A.tocsr(), sense, rhs, lb, ub, **kw)

    @property
    def n_cols(self):
        return self.c.shape[0]

    @property
    def n_rows(self):
        return self.rhs.shape[0]

    def validate(self):
        m, n = self.A.shape
        if self.c.shape != (n,) or self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValidationError(f"column arrays must have length {n}")
        if self.rhs.shape != (m,) or self.sense.shape != (m,):
            raise ValidationError(f"row arrays must have length {m}")
        bad = ~np.isin(self.sense, _SENSES)
        if bad.any():
            raise ValidationError(f"unknown row sense {self.sense[bad][0]!r}")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A.data)) and np.all(np.isfinite(self.rhs))):
            raise ValidationError("objective, matrix and rhs must be finite")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)) or np.any(self.lb > self.ub):
            raise ValidationError("variable bounds must satisfy lb <= ub")
        if np.any(self.lb == np.inf) or np.any(self.ub == -np.inf):
            raise ValidationError("lower bound +inf / upper bound -inf")

    def activity(self, x):
        return self.A @ x

    def max_violation(self, x):
        """Largest absolute violation of rows and bounds at ``x``."""
        act = self.A @ x
        r = act - self.rhs
        viol = np.where(self.sense == EQ, np.abs(r), np.where(self.sense == LE, np.maximum(r, 0), np.maximum(-r, 0)))
        vb = np.maximum(self.lb - x, 0).max(initial=0.0), np.maximum(x - self.ub, 0).max(initial=0.0)
        return max(viol.max(initial=0.0), *vb)


@dataclass
class LpSolution:
    status: str
    objective: float = float("nan")
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status == "optimal"


# ---------------------------------------------------------------------------
# presolve
# ---------------------------------------------------------------------------

@dataclass
class _Presolved:
    A: sp.csr_matrix
    c: np.ndarray
    sense: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    cols: np.ndarray          # surviving original column numbers
    rows: np.ndarray          # surviving original row numbers
    x_fixed: np.ndarray       # values for all original columns (valid where removed)
    infeasible: str | None = None


def _presolve(p: LpProblem, tol: float) -> _Presolved:
    A = p.A.tocsc()
    m, n = A.shape
    lb, ub, rhs = p.lb.copy(), p.ub.copy(), p.rhs.copy()
    col_on = np.ones(n, bool)
    row_on = np.ones(m, bool)
    x = np.zeros(n)
    infeasible = None
    Ar = p.A.tocsr()

    while True:
        changed = False
        fixed = col_on & (ub - lb <= 0)
        if fixed.any():
            vals = np.where(fixed, lb, 0.0)
            rhs -= A @ vals
            x[fixed] = lb[fixed]
            col_on &= ~fixed
            changed = True
        live = Ar.multiply(col_on[None, :]).tocsr()
        live.eliminate_zeros()
        counts = np.diff(live.indptr)
        empty = row_on & (counts == 0)
        for i in np.flatnonzero(empty):
            s, r = p.sense[i], rhs[i]
            if (s == EQ and abs(r) > tol * (1 + abs(p.rhs[i]))) or (s == LE and r < -tol) or (s == GE and r > tol):
                infeasible = f"row {i} empty after presolve but rhs {r:g} violates {s}"
        row_on &= ~empty
        for i in np.flatnonzero(row_on & (counts == 1)):
            j = live.indices[live.indptr[i]]
            a = live.data[live.indptr[i]]
            bound = rhs[i] / a
            s = p.sense[i]
            if s == EQ:
                lo_new, hi_new = bound, bound
            elif (s == LE) == (a > 0):
                lo_new, hi_new = -np.inf, bound
            else:
                lo_new, hi_new = bound, np.inf
            lb[j] = max(lb[j], lo_new)
            ub[j] = min(ub[j], hi_new)
            if lb[j] > ub[j]:
                if lb[j] - ub[j] <= tol * (1 + abs(lb[j])):
                    mid = 0.5 * (lb[j] + ub[j])
                    lb[j] = ub[j] = mid
                else:
                    infeasible = f"column {j} bounds crossed by singleton row {i}"
            row_on[i] = False
            changed = True
        if infeasible or not changed:
            break

    cols = np.flatnonzero(col_on)
    rows = np.flatnonzero(row_on)
    return _Presolved(
        A=p.A[rows][:, cols].tocsr(), c=p.c[cols], sense=p.sense[rows], rhs=rhs[rows],
        lb=lb[cols], ub=ub[cols], cols=cols, rows=rows, x_fixed=x, infeasible=infeasible,
    )


def _pow2(v):
    return np.exp2(np.round(np.log2(v)))


def _equilibrate(A: sp.csr_matrix, passes: int = 6):
    """Geometric-mean row/column scaling rounded to powers of two."""
    m, n = A.shape
    r = np.ones(m)
    s = np.ones(n)
    if A.nnz == 0:
        return r, s
    B = abs(A).tocsr().astype(float)
    for _ in range(passes):
        S = sp.diags(r) @ B @ sp.diags(s)
        S = S.tocsr()
        rmax = S.max(axis=1).toarray().ravel()
        rmin = _rowmin(S)
        ok = rmax > 0
        r[ok] /= np.sqrt(rmax[ok] * rmin[ok])
        S = (sp.diags(r) @ B @ sp.diags(s)).tocsc()
        cmax = S.max(axis=0).toarray().ravel()
        cmin = _rowmin(S.T.tocsr())
        ok = cmax > 0
        s[ok] /= np.sqrt(cmax[ok] * cmin[ok])
    return _pow2(r), _pow2(s)


def _rowmin(S: sp.csr_matrix):
    out = np.zeros(S.shape[0])
    nz = np.diff(S.indptr) > 0
    if nz.any():
        out[nz] = np.minimum.reduceat(S.data, S.indptr[:-1][nz])
    return out


# ---------------------------------------------------------------------------
# core simplex
# ---------------------------------------------------------------------------

class _Simplex:
    def __init__(self, A, b, cost, lb, ub, feas_tol, opt_tol, max_iter, refactor_every, bland_after):
        self.m, self.n_struct = A.shape
        m = self.m
        self.A = sp.hstack([A, sp.eye(m, format="csc")], format="csc")
        self._index_columns()
        self.b = b
        self.cost = cost
        self.lb = lb
        self.ub = ub
        self.ftol = feas_tol
        self.otol = opt_tol
        self.max_iter = max_iter
        self.refactor_every = refactor_every
        self.bland_after = bland_after
        self.iterations = 0
        self.bland_pivots = 0

    def _index_columns(self):
        self.A.sort_indices()
        self.AT = self.A.T.tocsr()
        self._ptr, self._idx, self._val = self.A.indptr, self.A.indices, self.A.data

    def column(self, q):
        a, b = self._ptr[q], self._ptr[q + 1]
        return self._idx[a:b], self._val[a:b]

    # -- basis bookkeeping -------------------------------------------------
    def _nonbasic_position(self, j):
        lo, hi = self.lb[j], self.ub[j]
        if lo == hi:
            return _FIXED, lo
        if np.isfinite(lo):
            return _AT_LB, lo
        if np.isfinite(hi):
            return _AT_UB, hi
        return _FREE, 0.0

    def refactor(self):
        B = self.A[:, self.head].tocsc()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", spla.MatrixRankWarning)
                lu = spla.splu(B, permc_spec="COLAMD")
        except (RuntimeError, spla.MatrixRankWarning) as exc:
            raise np.linalg.LinAlgError("singular basis") from exc
        udiag = np.abs(lu.U.diagonal())
        if udiag.min(initial=np.inf) < 1e-11 * max(1.0, np.abs(B.data).max(initial=0.0)):
            raise np.linalg.LinAlgError("singular basis")
        self.Binv = np.ascontiguousarray(lu.solve(np.eye(self.m)))
        nb = self.status != _BASIC
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.head] = self.Binv @ rhs
        if self.cost is not None:
            self.recompute_duals()

    def recompute_duals(self):
        y = self.cost[self.head] @ self.Binv
        self.d = self.cost - self.AT @ y
        self.d[self.head] = 0.0

    def start(self, hint_cols):
        m, ntot = self.m, self.A.shape[1]
        self.x = np.zeros(ntot)
        self.status = np.empty(ntot, dtype=np.int8)
        for j in range(ntot):
            self.status[j], self.x[j] = self._nonbasic_position(j)
        head = np.arange(self.n_struct, self.n_struct + m)
        if hint_cols is not None:
            for r, j in hint_cols.items():
                head[r] = j
        if len(set(head.tolist())) != m:
            head = np.arange(self.n_struct, self.n_struct + m)
        self.head = head
        self.status[head] = _BASIC
        try:
            self.refactor()
        except np.linalg.LinAlgError:
            for j in head:
                self.status[j], self.x[j] = self._nonbasic_position(j)
            self.head = np.arange(self.n_struct, self.n_struct + m)
            self.status[self.head] = _BASIC
            self.refactor()

    # -- phase 1 artificial ------------------------------------------------
    def add_artificial(self):
        """Clip basics into their boxes and absorb the residual in one column."""
        xb = self.x[self.head]
        clipped = np.clip(xb, self.lb[self.head], self.ub[self.head])
        if np.max(np.abs(clipped - xb), initial=0.0) <= self.ftol:
            return False
        self.x[self.head] = clipped
        resid = self.b - self.A @ self.x
        col = sp.csc_matrix(resid.reshape(-1, 1))
        self.A = sp.hstack([self.A, col], format="csc")
        self._index_columns()
        self.lb = np.append(self.lb, 0.0)
        self.ub = np.append(self.ub, 1.0)
        self.x = np.append(self.x, 1.0)
        self.status = np.append(self.status, np.int8(_AT_UB))
        self.art = self.A.shape[1] - 1
        return True

    # -- iterations --------------------------------------------------------
    def run(self, cost):
        self.cost = cost
        self.recompute_duals()
        degenerate = 0
        since_refactor = 0
        while True:
            if self.iterations >= self.max_iter:
                return "iteration_limit"
            bland = degenerate >= self.bland_after
            q, direction = self._price(bland)
            if q < 0:
                return "optimal"
            ci, cv = self.column(q)
            alpha = self.Binv[:, ci] @ cv
            r, theta, flip = self._ratio(q, direction, alpha, bland)
            if r is None and not flip:
                return "unbounded"
            self.iterations += 1
            if bland:
                self.bland_pivots += 1
            degenerate = degenerate + 1 if theta <= 1e-12 else 0
            step = theta * direction
            self.x[self.head] -= step * alpha
            self.x[q] += step
            if flip:
                self.status[q] = _AT_UB if direction > 0 else _AT_LB
                self.x[q] = self.ub[q] if direction > 0 else self.lb[q]
                continue
            leave = self.head[r]
            ar = alpha[r]
            lo, hi = self.lb[leave], self.ub[leave]
            if lo == hi:
                self.status[leave], self.x[leave] = _FIXED, lo
            elif direction * ar > 0:
                self.status[leave], self.x[leave] = _AT_LB, lo
            else:
                self.status[leave], self.x[leave] = _AT_UB, hi
            rho = self.Binv[r].copy()
            dq = self.d[q]
            # reduced-cost update along the pivot row
            self.d -= (dq / ar) * (self.AT @ rho)
            self.d[q] = 0.0
            self.head[r] = q
            self.status[q] = _BASIC
            piv = rho / ar
            alpha_r = alpha.copy()
            alpha_r[r] = 0.0
            # in-place rank-one update; the transpose is the Fortran view BLAS expects
            _dger(-1.0, piv, alpha_r, a=self.Binv.T, overwrite_a=True)
            self.Binv[r] = piv
            since_refactor += 1
            if since_refactor >= self.refactor_every:
                self.refactor()
                since_refactor = 0

    def _price(self, bland):
        d, st, tol = self.d, self.status, self.otol
        score = np.where(
            ((st == _AT_LB) & (d < -tol)) | ((st == _AT_UB) & (d > tol)) | ((st == _FREE) & (np.abs(d) > tol)),
            np.abs(d), 0.0,
        )
        if bland:
            cand = np.flatnonzero(score > 0)
            if cand.size == 0:
                return -1, 0
            q = int(cand[0])
        else:
            q = int(np.argmax(score))
            if score[q] <= 0:
                return -1, 0
        return q, (1 if d[q] < 0 else -1)

    def _ratio(self, q, direction, alpha, bland):
        head = self.head
        delta = direction * alpha
        xb = self.x[head]
        lbb, ubb = self.lb[head], self.ub[head]
        piv_tol = 1e-9
        dec = delta > piv_tol
        inc = delta < -piv_tol
        room = np.full(self.m, np.inf)
        room[dec] = xb[dec] - lbb[dec]
        room[inc] = ubb[inc] - xb[inc]
        mag = np.abs(delta)
        cand = (dec | inc) & np.isfinite(room)
        span = self.ub[q] - self.lb[q]
        if not cand.any():
            return None, (span if np.isfinite(span) else 0.0), bool(np.isfinite(span))
        idx = np.flatnonzero(cand)
        exact = np.maximum(room[idx], 0.0) / mag[idx]
        if bland:
            tmin = exact.min()
            ties = idx[exact <= tmin + 1e-12]
            r = int(ties[np.argmin(head[ties])])
            theta = float(tmin)
        else:
            tmax = ((np.maximum(room[idx], 0.0) + self.ftol) / mag[idx]).min()
            ok = exact <= tmax
            pick = idx[ok]
            r = int(pick[np.argmax(mag[pick])])
            theta = float(exact[ok][np.argmax(mag[pick])])
        if np.isfinite(span) and span <= theta:
            return None, float(span), True
        return r, theta, False

    def primal_infeasibility(self):
        x = self.x
        return max(np.maximum(self.lb - x, 0).max(initial=0.0), np.maximum(x - self.ub, 0).max(initial=0.0))


def solve(problem: LpProblem, feas_tol: float = 1e-7, opt_tol: float = 1e-9, *, presolve: bool = True,
          scale: bool = True, max_iter: int | None = None, refactor_every: int = 100,
          bland_after: int = 50, use_hint: bool = True) -> LpSolution:
    """Maximise ``problem`` and return an :class:`LpSolution`.

    Tolerances apply to the equilibrated problem.  The result is a pure
    function of the input arrays: pivot ties are broken by column index.
    """
    problem.validate()
    n = problem.n_cols
    if presolve:
        ps = _presolve(problem, feas_tol)
    else:
        ps = _Presolved(problem.A, problem.c, problem.sense, problem.rhs, problem.lb.copy(), problem.ub.copy(),
                        np.arange(n), np.arange(problem.n_rows), np.zeros(n))
    diag = {"rows": int(problem.n_rows), "cols": int(n), "presolved_rows": int(ps.rows.size),
            "presolved_cols": int(ps.cols.size)}
    if ps.infeasible:
        diag["reason"] = ps.infeasible
        return LpSolution("infeasible", diagnostics=diag)

    A = ps.A
    m, k = A.shape
    if scale and A.nnz:
        r, s = _equilibrate(A)
    else:
        r, s = np.ones(m), np.ones(k)
    As = (sp.diags(r) @ A @ sp.diags(s)).tocsc()
    bs = r * ps.rhs
    with np.errstate(divide="ignore", invalid="ignore"):
        lbs = ps.lb / s
        ubs = ps.ub / s
    cs = s * ps.c
    cnorm = np.abs(cs).max(initial=0.0)
    kappa = cnorm if cnorm > 0 else 1.0
    cost2 = -cs / kappa

    slack_lb = np.where(ps.sense == GE, -np.inf, 0.0)
    slack_ub = np.where(ps.sense == LE, np.inf, 0.0)
    lb_all = np.concatenate([lbs, slack_lb])
    ub_all = np.concatenate([ubs, slack_ub])

    hint = None
    if use_hint and problem.basis_hint:
        rpos = {int(rr): i for i, rr in enumerate(ps.rows)}
        cpos = {int(cc): j for j, cc in enumerate(ps.cols)}
        hint = {rpos[rr]: cpos[cc] for rr, cc in problem.basis_hint.items() if rr in rpos and cc in cpos}

    if max_iter is None:
        max_iter = 50 * (m + k) + 1000
    S = _Simplex(As, bs, None, lb_all, ub_all, feas_tol, opt_tol, max_iter, refactor_every, bland_after)
    if m == 0:
        # bounds only: each column sits at its best bound
        x_s = np.zeros(k)
        for j in range(k):
            if cost2[j] < 0:
                x_s[j] = ubs[j]
            elif cost2[j] > 0:
                x_s[j] = lbs[j]
            else:
                x_s[j] = lbs[j] if np.isfinite(lbs[j]) else (ubs[j] if np.isfinite(ubs[j]) else 0.0)
        if not np.all(np.isfinite(x_s)):
            return LpSolution("unbounded", diagnostics=diag)
        return _finish(problem, ps, s, r, x_s, None, kappa, 0, diag, presolve)

    try:
        S.start(hint)
    except np.linalg.LinAlgError:
        diag["reason"] = "singular starting basis"
        return LpSolution("numerical", diagnostics=diag)

    ntot = S.A.shape[1]
    phase1 = S.add_artificial()
    if phase1:
        c1 = np.zeros(S.A.shape[1])
        c1[S.art] = 1.0
        st = S.run(c1)
        diag["phase1_iterations"] = S.iterations
        if st != "optimal":
            diag["reason"] = f"phase 1 ended with {st}"
            return LpSolution("numerical" if st != "iteration_limit" else st, iterations=S.iterations, diagnostics=diag)
        if S.x[S.art] > feas_tol:
            diag["reason"] = f"phase 1 residual {S.x[S.art]:.3g}"
            return LpSolution("infeasible", iterations=S.iterations, diagnostics=diag)
        S.lb[S.art] = S.ub[S.art] = 0.0
        if S.status[S.art] != _BASIC:
            S.status[S.art] = _FIXED
        S.x[S.art] = 0.0
        c2 = np.append(np.concatenate([cost2, np.zeros(m)]), 0.0)
    else:
        c2 = np.concatenate([cost2, np.zeros(m)])

    st = S.run(c2)
    diag["bland_pivots"] = S.bland_pivots
    if st != "optimal":
        diag["reason"] = st
        return LpSolution(st, iterations=S.iterations, diagnostics=diag)
    S.refactor()
    S.recompute_duals()
    # one more pass in case refactorisation exposed residual reduced costs
    st = S.run(c2)
    if st != "optimal":
        diag["reason"] = f"post-refactor {st}"
        return LpSolution(st, iterations=S.iterations, diagnostics=diag)

    x_s = S.x[:k]
    y_s = S.cost[S.head] @ S.Binv
    duals = None
    if ps.rows.size == problem.n_rows:
        duals = -kappa * r * y_s
    diag["max_scaled_infeasibility"] = float(S.primal_infeasibility())
    return _finish(problem, ps, s, r, x_s, duals, kappa, S.iterations, diag, presolve)


def _finish(problem, ps, s, r, x_s, duals, kappa, iters, diag, presolve):
    x = ps.x_fixed.copy()
    x[ps.cols] = s * x_s
    # basics may sit a tolerance outside their box; bounds are exact, rows absorb the round-off
    x = np.clip(x, problem.lb, problem.ub)
    obj = float(problem.c @ x)
    viol = problem.max_violation(x)
    diag["max_violation"] = float(viol)
    scale_ref = 1.0 + max(np.abs(problem.rhs).max(initial=0.0), np.abs(x).max(initial=0.0))
    status = "optimal"
    if viol > 1e-6 * scale_ref:
        status = "numerical"
        diag["reason"] = f"solution violates constraints by {viol:.3g}"
    return LpSolution(status, obj, x, duals, iters, diag)
