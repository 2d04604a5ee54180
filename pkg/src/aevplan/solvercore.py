"""Deterministic MILP solving on top of interchangeable LP backends.

Two LP backends implement the same contract: a self-contained dense
two-phase simplex (Dantzig pricing, switching to Bland's rule after a run of
degenerate pivots) and a sparse adapter over scipy's HiGHS dual simplex.
``backend="auto"`` picks the dense one for small instances and HiGHS above
a size threshold, and retries with HiGHS if the dense solve errors out
(heavily degenerate instances can exhaust its pivot budget); tests
cross-check the two on shared instances.

Integer feasibility comes from an own branch-and-bound: best-bound node
selection, most-fractional branching, lowest-index tie-breaks everywhere,
and a round-up start heuristic.  Nothing depends on wall-clock time unless
an explicit time limit is set, so repeated runs take identical decisions.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import InputError
from .planmodel import SENSE_EQ, SENSE_GE, SENSE_LE

_RC_TOL = 1e-9        # reduced-cost optimality tolerance (scaled)
_PIVOT_TOL = 1e-10
_FEAS_TOL = 1e-7
_DEGENERATE_RUN = 100  # pivots without progress before switching to Bland
_REFRESH_EVERY = 256   # pivots between reduced-cost recomputations


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"       # incumbent found, limit hit before proof
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT = "limit"             # limit hit without an incumbent
    ERROR = "error"


@dataclass
class SolveOptions:
    rel_tol: float = 1e-6
    int_tol: float = 1e-6
    node_limit: int | None = None
    time_limit: float | None = None     # seconds; breaks determinism if set
    backend: str = "auto"               # "dense" | "highs" | "auto"
    dense_var_limit: int = 200


@dataclass
class SolveReport:
    status: SolveStatus
    objective: float | None = None
    best_bound: float | None = None
    rel_gap: float | None = None
    nodes: int = 0
    iterations: int = 0
    wall_time: float = 0.0
    message: str = ""


@dataclass
class LinearProgram:
    """Minimal standalone problem container (mainly for tests/benchmarks)."""

    objective: np.ndarray
    A: object                  # ndarray or scipy sparse
    senses: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=np.float64)
        self.rhs = np.asarray(self.rhs, dtype=np.float64)
        self.senses = np.asarray(self.senses, dtype=np.int8)
        self.lb = np.asarray(self.lb, dtype=np.float64)
        self.ub = np.asarray(self.ub, dtype=np.float64)
        if self.integrality is None:
            self.integrality = np.zeros(self.objective.shape[0], dtype=bool)


# ---------------------------------------------------------------------------
# dense two-phase simplex
# ---------------------------------------------------------------------------


def _dense_simplex(c, A, senses, b, lb, ub, max_iter=None):
    """Solve min c'x, rows with senses, lb <= x <= ub, on dense arrays.

    Returns (status, x, iterations).  Lower bounds are shifted out, finite
    upper bounds become explicit rows, fixed variables are eliminated.
    """
    m, n = A.shape
    if np.any(ub - lb < -1e-9):
        return SolveStatus.INFEASIBLE, None, 0
    shift = lb.copy()
    b2 = b - A @ shift
    span = ub - lb
    keep = span > 1e-12
    kept_idx = np.nonzero(keep)[0]
    Ak = A[:, kept_idx]
    ck = c[kept_idx]
    nk = kept_idx.shape[0]

    finite_ub = [
        (pos, span[j]) for pos, j in enumerate(kept_idx) if np.isfinite(span[j])
    ]
    extra = len(finite_ub)
    A2 = np.zeros((m + extra, nk))
    A2[:m] = Ak
    b3 = np.concatenate([b2, np.zeros(extra)])
    s2 = np.concatenate([senses, np.full(extra, SENSE_LE, dtype=np.int8)])
    for row, (pos, bound) in enumerate(finite_ub):
        A2[m + row, pos] = 1.0
        b3[m + row] = bound

    # normalize: rhs >= 0 (flip row sense when negating), then scale rows
    for i in range(A2.shape[0]):
        if b3[i] < 0:
            A2[i] = -A2[i]
            b3[i] = -b3[i]
            s2[i] = -int(s2[i])
        scale = np.max(np.abs(A2[i])) if np.any(A2[i]) else 1.0
        scale = max(scale, abs(b3[i]) / 1e6, 1e-12)
        A2[i] /= scale
        b3[i] /= scale

    m2 = A2.shape[0]
    n_slack = int(np.sum(s2 != SENSE_EQ))
    n_art = int(np.sum(s2 != SENSE_LE))
    ncols = nk + n_slack + n_art
    Tab = np.zeros((m2, ncols + 1))
    Tab[:, :nk] = A2
    Tab[:, -1] = b3
    basis = np.empty(m2, dtype=np.int64)
    slack_at = nk
    art_at = nk + n_slack
    art_start = nk + n_slack
    for i in range(m2):
        if s2[i] == SENSE_LE:
            Tab[i, slack_at] = 1.0
            basis[i] = slack_at
            slack_at += 1
        elif s2[i] == SENSE_GE:
            Tab[i, slack_at] = -1.0
            slack_at += 1
            Tab[i, art_at] = 1.0
            basis[i] = art_at
            art_at += 1
        else:
            Tab[i, art_at] = 1.0
            basis[i] = art_at
            art_at += 1

    if max_iter is None:
        max_iter = 2000 + 40 * (m2 + ncols)

    def run(objrow, allowed_cols, raw_cost):
        """Pivot until optimal/unbounded; returns (status, iterations).

        ``raw_cost`` is the untouched phase cost vector; the reduced-cost row
        is recomputed from it periodically so that update drift cannot
        accumulate over long degenerate pivot runs.
        """
        nonlocal Tab
        iters = 0
        bland = False
        stall = 0
        tol = _RC_TOL * max(1.0, np.max(np.abs(objrow[:-1])) if ncols else 1.0)
        while True:
            if iters and iters % _REFRESH_EVERY == 0:
                objrow[:] = raw_cost
                for i in range(m2):
                    cb = raw_cost[basis[i]]
                    if cb != 0.0:
                        objrow -= cb * Tab[i]
            red = objrow[:allowed_cols]
            if bland:
                negative = np.nonzero(red < -tol)[0]
                if negative.size == 0:
                    return SolveStatus.OPTIMAL, iters
                j = int(negative[0])
            else:
                j = int(np.argmin(red))
                if red[j] >= -tol:
                    return SolveStatus.OPTIMAL, iters
            col = Tab[:, j]
            positive = col > _PIVOT_TOL
            if not np.any(positive):
                return SolveStatus.UNBOUNDED, iters
            ratios = np.full(m2, np.inf)
            ratios[positive] = Tab[positive, -1] / col[positive]
            best = np.min(ratios)
            cand = np.nonzero(ratios <= best + 1e-12)[0]
            r = int(cand[np.argmin(basis[cand])])
            # pivot
            piv = Tab[r, j]
            Tab[r] /= piv
            colvals = Tab[:, j].copy()
            colvals[r] = 0.0
            Tab -= np.outer(colvals, Tab[r])
            gain = objrow[j] * Tab[r, -1]
            objrow -= objrow[j] * Tab[r]
            basis[r] = j
            iters += 1
            stall = stall + 1 if abs(gain) < 1e-12 else 0
            if stall > _DEGENERATE_RUN:
                bland = True
            if iters > max_iter:
                return SolveStatus.ERROR, iters
        # unreachable

    total_iters = 0
    if n_art:
        raw1 = np.zeros(ncols + 1)
        raw1[art_start:ncols] = 1.0
        objrow = raw1.copy()
        for i in range(m2):
            if basis[i] >= art_start:
                objrow -= Tab[i]
        status, it = run(objrow, art_start, raw1)
        total_iters += it
        if status is SolveStatus.ERROR:
            return status, None, total_iters
        if -objrow[-1] > _FEAS_TOL * max(1.0, np.max(b3) if m2 else 1.0):
            return SolveStatus.INFEASIBLE, None, total_iters
        # drive leftover artificials out of the basis (or drop their rows)
        drop_rows = []
        for i in range(m2):
            if basis[i] >= art_start:
                pivots = np.nonzero(np.abs(Tab[i, :art_start]) > 1e-9)[0]
                if pivots.size:
                    j = int(pivots[0])
                    piv = Tab[i, j]
                    Tab[i] /= piv
                    colvals = Tab[:, j].copy()
                    colvals[i] = 0.0
                    Tab -= np.outer(colvals, Tab[i])
                    basis[i] = j
                else:
                    drop_rows.append(i)
        if drop_rows:
            keep_rows = np.setdiff1d(np.arange(m2), drop_rows)
            Tab = Tab[keep_rows]
            basis = basis[keep_rows]
            m2 = Tab.shape[0]
    Tab = np.hstack([Tab[:, :art_start], Tab[:, -1:]])
    ncols = art_start

    c2 = np.zeros(ncols + 1)
    c2[:nk] = ck
    objrow = c2.copy()
    for i in range(m2):
        cb = c2[basis[i]]
        if cb != 0.0:
            objrow -= cb * Tab[i]
    status, it = run(objrow, ncols, c2)
    total_iters += it
    if status is not SolveStatus.OPTIMAL:
        return status, None, total_iters

    z = np.zeros(ncols)
    z[basis] = Tab[:, -1]
    x = shift.copy()
    x[kept_idx] += np.maximum(z[:nk], 0.0)
    return SolveStatus.OPTIMAL, x, total_iters


# ---------------------------------------------------------------------------
# backend dispatch
# ---------------------------------------------------------------------------


def _as_dense(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=np.float64)


def _pick_backend(problem, options: SolveOptions) -> str:
    if options.backend in ("dense", "highs"):
        return options.backend
    if options.backend != "auto":
        raise InputError(f"unknown backend {options.backend!r}")
    return "dense" if problem.objective.shape[0] <= options.dense_var_limit else "highs"


def _highs_matrices(problem):
    cache = getattr(problem, "_highs_cache", None)
    if cache is None:
        A = sp.csr_matrix(problem.A)
        senses = problem.senses
        le = senses == SENSE_LE
        ge = senses == SENSE_GE
        eq = senses == SENSE_EQ
        A_ub = sp.vstack([A[le], -A[ge]]).tocsr() if (le.any() or ge.any()) else None
        b_ub = (
            np.concatenate([problem.rhs[le], -problem.rhs[ge]])
            if A_ub is not None
            else None
        )
        A_eq = A[eq] if eq.any() else None
        b_eq = problem.rhs[eq] if eq.any() else None
        cache = (A_ub, b_ub, A_eq, b_eq)
        try:
            problem._highs_cache = cache
        except AttributeError:
            pass
    return cache


def _solve_dense_raw(problem, lb, ub):
    dense = getattr(problem, "_dense_cache", None)
    if dense is None:
        dense = _as_dense(problem.A)
        try:
            problem._dense_cache = dense
        except AttributeError:
            pass
    status, x, iters = _dense_simplex(
        problem.objective, dense, problem.senses, problem.rhs, lb, ub
    )
    return x, SolveReport(status=status, iterations=iters)


def _solve_highs_raw(problem, lb, ub):
    A_ub, b_ub, A_eq, b_eq = _highs_matrices(problem)
    res = linprog(
        problem.objective,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=np.column_stack([lb, ub]),
        method="highs-ds",
    )
    code = {
        0: SolveStatus.OPTIMAL,
        1: SolveStatus.LIMIT,
        2: SolveStatus.INFEASIBLE,
        3: SolveStatus.UNBOUNDED,
    }.get(res.status, SolveStatus.ERROR)
    x = res.x if code is SolveStatus.OPTIMAL else None
    return x, SolveReport(
        status=code,
        iterations=int(getattr(res, "nit", 0)),
        message=str(res.message),
    )


def _finalize_lp(problem, x, report, lb, ub, backend):
    """Clip solver noise off the bounds, then double-check feasibility."""
    if x is not None:
        x = np.minimum(np.maximum(x, lb), ub)
        worst = _worst_residual(problem, x)
        if worst > 1e-6:
            report.status = SolveStatus.ERROR
            report.message = f"residual {worst:.2e} after {backend} solve"
            x = None
        else:
            report.objective = float(problem.objective @ x)
            report.best_bound = report.objective
    return x, report


def solve_lp(problem, options: SolveOptions | None = None, lb=None, ub=None):
    """LP relaxation (integrality ignored); returns (values | None, report).

    Optional lb/ub arrays override the problem bounds, which is how
    branch-and-bound nodes and the oracle fix variables.  Under
    ``backend="auto"`` a dense-simplex failure (pivot budget exhausted on a
    heavily degenerate instance) falls back to HiGHS instead of erroring.
    """
    options = options or SolveOptions()
    lb = problem.lb if lb is None else lb
    ub = problem.ub if ub is None else ub
    t0 = time.perf_counter()
    backend = _pick_backend(problem, options)
    raw = _solve_dense_raw if backend == "dense" else _solve_highs_raw
    x, report = _finalize_lp(problem, *raw(problem, lb, ub), lb, ub, backend)
    if (
        x is None
        and report.status is SolveStatus.ERROR
        and backend == "dense"
        and options.backend == "auto"
    ):
        prev_iters = report.iterations
        x, report = _finalize_lp(
            problem, *_solve_highs_raw(problem, lb, ub), lb, ub, "highs"
        )
        report.iterations += prev_iters
        report.message = (report.message + " (after dense-backend failure)").strip()
    report.wall_time = time.perf_counter() - t0
    return x, report


def _worst_residual(problem, x) -> float:
    res = problem.A @ x - problem.rhs
    senses = problem.senses
    worst = 0.0
    scale = max(1.0, float(np.max(np.abs(problem.rhs))) if len(problem.rhs) else 1.0)
    for sense, r in zip(senses, res):
        if sense == SENSE_EQ:
            worst = max(worst, abs(r))
        elif sense == SENSE_GE:
            worst = max(worst, -r)
        else:
            worst = max(worst, r)
    return worst / scale


# ---------------------------------------------------------------------------
# integer layer
# ---------------------------------------------------------------------------


def round_up_heuristic(problem, lp_values, options: SolveOptions | None = None):
    """Ceil the integer variables of an LP solution; keep flows.

    Integer variables appear only on the covering side of >= rows, so the
    ceiling stays feasible whenever the LP solution was.  Returns
    (values, objective, gap_vs_lp) or None if the rounded point is (for
    pathological bound settings) infeasible.
    """
    options = options or SolveOptions()
    v = np.asarray(lp_values, dtype=np.float64).copy()
    ints = np.nonzero(problem.integrality)[0]
    v[ints] = np.ceil(v[ints] - options.int_tol)
    if np.any(v < problem.lb - 1e-9) or np.any(v > problem.ub + 1e-9):
        return None
    if _worst_residual(problem, v) > 1e-6:
        return None
    lp_obj = float(problem.objective @ np.asarray(lp_values))
    obj = float(problem.objective @ v)
    gap = (obj - lp_obj) / max(1e-12, abs(lp_obj))
    return v, obj, gap


def _fractional(values, ints, int_tol):
    """Indices (within ints) ordered by how fractional the value is."""
    vals = values[ints]
    dist = np.abs(vals - np.round(vals))
    worst = np.where(dist > int_tol)[0]
    return worst, dist


def solve_mip(problem, options: SolveOptions | None = None):
    """Branch-and-bound over the integer variables; returns (values, report).

    Deterministic: best-bound node selection with insertion-order
    tie-breaks, most-fractional branching with lowest-index tie-breaks.
    """
    options = options or SolveOptions()
    t0 = time.perf_counter()
    ints = np.nonzero(problem.integrality)[0]
    lb0 = problem.lb.astype(np.float64).copy()
    ub0 = problem.ub.astype(np.float64).copy()

    root_vals, root_rep = solve_lp(problem, options, lb0, ub0)
    nodes_done = 1
    iters = root_rep.iterations
    if root_vals is None:
        status = (
            root_rep.status
            if root_rep.status
            in (SolveStatus.INFEASIBLE, SolveStatus.UNBOUNDED, SolveStatus.ERROR)
            else SolveStatus.ERROR
        )
        return None, SolveReport(
            status=status,
            nodes=nodes_done,
            iterations=iters,
            wall_time=time.perf_counter() - t0,
            message=root_rep.message,
        )
    if ints.size == 0 or not _fractional(root_vals, ints, options.int_tol)[0].size:
        v = root_vals.copy()
        v[ints] = np.round(v[ints])
        obj = float(problem.objective @ v)
        return v, SolveReport(
            status=SolveStatus.OPTIMAL,
            objective=obj,
            best_bound=obj,
            rel_gap=0.0,
            nodes=nodes_done,
            iterations=iters,
            wall_time=time.perf_counter() - t0,
        )

    incumbent = None
    inc_obj = np.inf
    heur = round_up_heuristic(problem, root_vals, options)
    if heur is not None:
        incumbent, inc_obj = heur[0], heur[1]

    counter = itertools.count()
    root_obj = float(root_rep.objective)
    heap = [(root_obj, next(counter), lb0, ub0)]
    best_bound = root_obj
    limit_hit = False

    def done(bound) -> bool:
        return inc_obj - bound <= options.rel_tol * max(1.0, abs(inc_obj))

    while heap:
        bound, _, nlb, nub = heapq.heappop(heap)
        best_bound = bound
        if done(bound):
            break
        if options.node_limit is not None and nodes_done >= options.node_limit:
            limit_hit = True
            break
        if options.time_limit is not None and time.perf_counter() - t0 > options.time_limit:
            limit_hit = True
            break
        vals, rep = solve_lp(problem, options, nlb, nub)
        nodes_done += 1
        iters += rep.iterations
        if vals is None:
            continue
        obj = float(rep.objective)
        if done(obj):
            continue
        worst, dist = _fractional(vals, ints, options.int_tol)
        if not worst.size:
            v = vals.copy()
            v[ints] = np.round(v[ints])
            cand_obj = float(problem.objective @ v)
            if cand_obj < inc_obj:
                incumbent, inc_obj = v, cand_obj
            continue
        # most fractional; ties broken by lowest variable index
        frac_dist = np.abs(dist[worst] - 0.5)
        pick = worst[int(np.argmin(frac_dist))]
        j = int(ints[pick])
        v = vals[j]
        down_ub = nub.copy()
        down_ub[j] = np.floor(v)
        up_lb = nlb.copy()
        up_lb[j] = np.ceil(v)
        heapq.heappush(heap, (obj, next(counter), nlb, down_ub))
        heapq.heappush(heap, (obj, next(counter), up_lb, nub))
    else:
        best_bound = inc_obj if incumbent is not None else best_bound

    wall = time.perf_counter() - t0
    if incumbent is None:
        return None, SolveReport(
            status=SolveStatus.LIMIT if limit_hit else SolveStatus.INFEASIBLE,
            best_bound=best_bound,
            nodes=nodes_done,
            iterations=iters,
            wall_time=wall,
        )
    gap = (inc_obj - best_bound) / max(1.0, abs(inc_obj))
    proved = not limit_hit and gap <= options.rel_tol * (1.0 + 1e-9)
    return incumbent, SolveReport(
        status=SolveStatus.OPTIMAL if proved else SolveStatus.FEASIBLE,
        objective=inc_obj,
        best_bound=best_bound,
        rel_gap=max(0.0, gap),
        nodes=nodes_done,
        iterations=iters,
        wall_time=wall,
    )


def brute_force_oracle(problem, var_ranges, options: SolveOptions | None = None):
    """Exhaustive reference solve: enumerate integer assignments, LP the rest.

    ``var_ranges`` maps integer variable index -> inclusive (lo, hi).  Meant
    for tiny fixtures only; refuses more than 20,000 combinations.  Ties are
    broken toward the lexicographically smallest assignment, which makes the
    result reproducible.
    """
    options = options or SolveOptions()
    t0 = time.perf_counter()
    ints = [int(j) for j in np.nonzero(problem.integrality)[0]]
    missing = [j for j in ints if j not in var_ranges]
    if missing:
        raise InputError(f"no enumeration range for integer variables {missing}")
    spans = []
    total = 1
    for j in ints:
        lo, hi = var_ranges[j]
        if hi < lo:
            raise InputError(f"empty range for variable {j}")
        spans.append(range(int(lo), int(hi) + 1))
        total *= len(spans[-1])
    if total > 20_000:
        raise InputError(f"{total} assignments exceed the oracle's 20,000 cap")
    best_vals = None
    best_obj = np.inf
    lps = 0
    for combo in itertools.product(*spans):
        lb = problem.lb.copy()
        ub = problem.ub.copy()
        for j, val in zip(ints, combo):
            if val < problem.lb[j] - 1e-9 or val > problem.ub[j] + 1e-9:
                break
            lb[j] = ub[j] = float(val)
        else:
            vals, rep = solve_lp(problem, options, lb, ub)
            lps += 1
            if vals is not None and rep.objective < best_obj - 1e-9:
                best_vals = vals.copy()
                best_vals[ints] = combo
                best_obj = float(rep.objective)
    wall = time.perf_counter() - t0
    if best_vals is None:
        return None, SolveReport(
            status=SolveStatus.INFEASIBLE, nodes=lps, wall_time=wall
        )
    return best_vals, SolveReport(
        status=SolveStatus.OPTIMAL,
        objective=best_obj,
        best_bound=best_obj,
        rel_gap=0.0,
        nodes=lps,
        wall_time=wall,
    )
