"""Bounded-variable primal simplex and weighted-sum scalarization drivers.

The solver works on the box relaxation of an instance plus appended rows
(branching fixings, criteria-space bound rows, cuts).  Rows are normalized
to equalities with one slack each; slack bounds encode the sense.  A dense
full tableau is maintained: at desk scale (n <= ~120, m <= ~150) a pivot
is a single numpy rank-1 update, and warm starts across the lambda sweep
keep iteration counts low.
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from boblp.geometry import (
    LowerBoundSet,
    Point,
    ScalarDirection,
    _canonicalize,
    intersect_update,
    normalize_direction,
    segment_normal,
)
from boblp.model import SolutionVec, make_solution

FEAS_TOL = 1e-6
OPT_TOL = 1e-7
PIVOT_TOL = 1e-9

AT_LOWER, AT_UPPER, BASIC = 0, 1, 2

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class LpResult:
    status: str
    x: SolutionVec = None
    value: float = math.nan
    point: Point = None
    unique: bool = False
    basis: tuple = None


@dataclass
class LpModel:
    """An instance restricted by fixings and appended rows.

    extra_rows entries are (coeffs, sense, rhs) with coeffs of length n;
    they carry branching bounds z_k(x) <= u_k, cover cuts and scalarized
    hyperplane rows alike.
    """

    inst: object
    fixings: dict = field(default_factory=dict)
    extra_rows: list = field(default_factory=list)

    def with_fixing(self, j, v):
        fix = dict(self.fixings)
        fix[j] = int(v)
        return LpModel(self.inst, fix, list(self.extra_rows))

    def with_rows(self, rows):
        return LpModel(self.inst, dict(self.fixings), list(self.extra_rows) + list(rows))

    def free_variables(self):
        return [j for j in range(self.inst.n) if j not in self.fixings]

    def row_arrays(self):
        inst = self.inst
        if not self.extra_rows:
            return inst.A, list(inst.senses), inst.b
        A = np.vstack([inst.A] + [np.asarray(r[0], dtype=float).reshape(1, -1) for r in self.extra_rows])
        senses = list(inst.senses) + [r[1] for r in self.extra_rows]
        b = np.concatenate([inst.b, [float(r[2]) for r in self.extra_rows]])
        return A, senses, b


class Unbounded(RuntimeError):
    pass


class PivotLimit(RuntimeError):
    pass


class Simplex:
    """Dense two-phase primal simplex with individual variable bounds."""

    def __init__(self, A, senses, b, lower, upper, max_iter=20000):
        A = np.asarray(A, dtype=float)
        self.m, self.n = A.shape
        m, n = self.m, self.n
        self.max_iter = max_iter
        # slack bounds encode the row sense: a.x + s = b with
        # <= : s in [0, inf), >= : s in (-inf, 0], = : s pinned at 0
        slo = np.empty(m)
        shi = np.empty(m)
        for i, s in enumerate(senses):
            if s == "<=":
                slo[i], shi[i] = 0.0, math.inf
            elif s == ">=":
                slo[i], shi[i] = -math.inf, 0.0
            else:
                slo[i], shi[i] = 0.0, 0.0
        self.ncols = n + m
        self.Aeq = np.hstack([A, np.eye(m)])
        self.b = np.asarray(b, dtype=float).copy()
        self.lower = np.concatenate([lower, slo])
        self.upper = np.concatenate([upper, shi])
        self.art = np.zeros(self.ncols, dtype=bool)
        self.scale = max(1.0, float(np.abs(A).max(initial=0.0)), float(np.abs(self.b).max(initial=0.0)))
        self.T = None
        self.xb = None
        self.basis = None
        self.vstat = None

    # ----------------------------------------------------------- plumbing

    def _nonbasic_values(self):
        vals = np.where(self.vstat == AT_UPPER, self.upper, self.lower)
        vals[self.vstat == BASIC] = 0.0
        return vals

    def _all_values(self):
        vals = self._nonbasic_values()
        vals[self.basis] = self.xb
        return vals

    def _rebuild(self):
        """Refactorize the tableau and basic values from the basis."""
        B = self.Aeq[:, self.basis]
        try:
            self.T = np.linalg.solve(B, self.Aeq)
        except np.linalg.LinAlgError:
            return False
        vals = self._nonbasic_values()
        nb_mask = np.ones(self.ncols, dtype=bool)
        nb_mask[self.basis] = False
        rhs = self.b - self.Aeq[:, nb_mask] @ vals[nb_mask]
        self.xb = np.linalg.solve(B, rhs)
        return True

    def _cold_start(self):
        n, m = self.n, self.m
        self.basis = np.arange(n, n + m)
        self.vstat = np.full(self.ncols, AT_LOWER, dtype=np.int8)
        self.vstat[self.basis] = BASIC
        self.T = self.Aeq.copy()
        vals = self._nonbasic_values()
        self.xb = self.b - self.Aeq[:, :n] @ vals[:n]

    def _install_artificials(self):
        """Clamp infeasible basic slacks and cover residuals with artificials."""
        feas = FEAS_TOL * self.scale
        art_cols = []
        for i in range(self.m):
            j = self.basis[i]
            lo, hi = self.lower[j], self.upper[j]
            if self.xb[i] < lo - feas or self.xb[i] > hi + feas:
                clamp = lo if self.xb[i] < lo else hi
                resid = self.xb[i] - clamp
                self.vstat[j] = AT_LOWER if clamp == lo else AT_UPPER
                col = np.zeros((self.m, 1))
                col[i, 0] = 1.0 if resid > 0 else -1.0
                art_cols.append((i, col, abs(resid)))
        if not art_cols:
            return False
        k = len(art_cols)
        self.Aeq = np.hstack([self.Aeq] + [c for _, c, _ in art_cols])
        self.T = np.hstack([self.T] + [c for _, c, _ in art_cols])
        self.lower = np.concatenate([self.lower, np.zeros(k)])
        self.upper = np.concatenate([self.upper, np.full(k, math.inf)])
        self.art = np.concatenate([self.art, np.ones(k, dtype=bool)])
        self.vstat = np.concatenate([self.vstat, np.full(k, BASIC, dtype=np.int8)])
        for t, (i, col, resid) in enumerate(art_cols):
            self.basis[i] = self.ncols + t
            self.xb[i] = resid
            if col[i, 0] < 0:
                # keep T = B^{-1}Aeq: a -1 basic column flips its row
                self.T[i, :] *= -1.0
        self.ncols += k
        return True

    def _evict_artificials(self):
        """Pivot leftover artificials out of the basis; pin every artificial."""
        changed = False
        for i in range(self.m):
            j = self.basis[i]
            if not self.art[j]:
                continue
            row = self.T[i]
            candidates = np.where((~self.art[: self.ncols]) & (np.abs(row) > 1e-8))[0]
            candidates = [c for c in candidates if self.vstat[c] != BASIC]
            if candidates:
                # degenerate swap: the artificial sits at zero, so the basis
                # exchange moves no values
                self._pivot(i, candidates[0], 0.0)
                self.vstat[j] = AT_LOWER
                changed = True
        self.lower[self.art] = 0.0
        self.upper[self.art] = 0.0
        if changed:
            self._rebuild()

    def _pivot(self, r, j, t_unused):
        """Make column j basic in row r (values already moved by caller)."""
        piv = self.T[r, j]
        col = self.T[:, j].copy()
        Tr = self.T[r] / piv
        self.T -= np.outer(col, Tr)
        self.T[r] = Tr
        self.basis[r] = j
        self.vstat[j] = BASIC

    # --------------------------------------------------------------- core

    def _iterate(self, c):
        """Primal iterations for cost c until optimality. Returns False on stall."""
        m = self.m
        feas = FEAS_TOL * self.scale
        bland_after = 3 * (self.n + m)
        # bounds are immutable across iterations
        rng = self.upper - self.lower
        movable = rng > 0
        err_state = np.seterr(divide="ignore", invalid="ignore")
        try:
            return self._iterate_loop(c, m, feas, bland_after, rng, movable)
        finally:
            np.seterr(**err_state)

    def _iterate_loop(self, c, m, feas, bland_after, rng, movable):
        degenerate_streak = 0
        for it in range(self.max_iter):
            if it and it % 512 == 0:
                if not self._rebuild():
                    raise PivotLimit("basis became singular")
            d = c - c[self.basis] @ self.T
            can_move = (self.vstat != BASIC) & movable
            better = np.where(self.vstat == AT_LOWER, d < -OPT_TOL, d > OPT_TOL)
            cand = np.where(can_move & better)[0]
            if cand.size == 0:
                return True
            if degenerate_streak > bland_after:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if self.vstat[j] == AT_LOWER else -1.0
            alpha = self.T[:, j]
            beta = alpha * direction
            lo_b = self.lower[self.basis]
            hi_b = self.upper[self.basis]
            t_lo = np.where(beta > PIVOT_TOL, (self.xb - lo_b) / beta, math.inf)
            t_hi = np.where(beta < -PIVOT_TOL, (hi_b - self.xb) / (-beta), math.inf)
            t_lo = np.where(np.isfinite(lo_b), t_lo, math.inf)
            t_hi = np.where(np.isfinite(hi_b), t_hi, math.inf)
            t_rows = np.minimum(t_lo, t_hi)
            t_rows = np.maximum(t_rows, 0.0)
            t_own = rng[j]
            r = int(np.argmin(t_rows)) if m else -1
            t_star = t_rows[r] if m else math.inf
            if degenerate_streak > bland_after and m:
                near = np.where(t_rows <= t_star + 1e-12)[0]
                r = int(near[np.argmin(self.basis[near])])
                t_star = t_rows[r]
            if t_own <= t_star:
                if not math.isfinite(t_own):
                    raise Unbounded("improving ray")
                # bound flip: j moves across its range, basis unchanged
                self.xb = self.xb - t_own * beta
                self.vstat[j] = AT_UPPER if self.vstat[j] == AT_LOWER else AT_LOWER
                degenerate_streak = 0 if t_own > feas else degenerate_streak + 1
                continue
            if not math.isfinite(t_star):
                raise Unbounded("improving ray")
            enter_val = (self.lower[j] if direction > 0 else self.upper[j]) + t_star * direction
            leave = self.basis[r]
            hit_lower = t_lo[r] <= t_hi[r]
            self.xb = self.xb - t_star * beta
            self.xb[r] = enter_val
            self._pivot(r, j, t_star)
            self.vstat[leave] = AT_LOWER if hit_lower else AT_UPPER
            degenerate_streak = 0 if t_star > feas else degenerate_streak + 1
        raise PivotLimit(f"no convergence in {self.max_iter} pivots")

    def _phase1(self):
        feas = FEAS_TOL * self.scale
        if not self._install_artificials():
            return True
        c1 = np.zeros(self.ncols)
        c1[self.art] = 1.0
        self._iterate(c1)
        infeas = float(self.xb[self.art[self.basis]].sum()) if self.art[self.basis].any() else 0.0
        if infeas > feas:
            return False
        self._evict_artificials()
        return True

    def solve(self, c_struct, warm=None):
        """Minimize c_struct over structurals. Returns (status, x, value, unique, basis)."""
        started = False
        if warm is not None:
            basis, vstat = warm
            if (
                self.basis is not None
                and len(basis) == self.m
                and len(vstat) == self.ncols
                and tuple(self.basis) == tuple(basis)
                and tuple(self.vstat) == tuple(vstat)
            ):
                # warm state is this simplex's live state: tableau and basic
                # values are already consistent, no refactorization needed
                started = True
            elif len(vstat) <= self.ncols and len(basis) == self.m and all(v < self.ncols for v in basis):
                self.basis = np.array(basis, dtype=int)
                self.vstat = np.concatenate(
                    [np.array(vstat, dtype=np.int8), np.full(self.ncols - len(vstat), AT_LOWER, dtype=np.int8)]
                )
                if self._rebuild():
                    feas = FEAS_TOL * self.scale
                    ok = np.all(self.xb >= self.lower[self.basis] - feas) and np.all(
                        self.xb <= self.upper[self.basis] + feas
                    )
                    if ok:
                        started = True
        if not started:
            self._cold_start()
            if not self._phase1():
                return INFEASIBLE, None, math.nan, False, None
        c = np.zeros(self.ncols)
        c[: self.n] = c_struct
        self._iterate(c)
        vals = self._all_values()
        x = vals[: self.n]
        value = float(c_struct @ x)
        d = c - c[self.basis] @ self.T
        rng = self.upper - self.lower
        movable = (self.vstat != BASIC) & (rng > 0) & (~self.art)
        unique = bool(np.all(np.abs(d[movable]) > OPT_TOL)) if movable.any() else True
        basis_desc = (tuple(int(v) for v in self.basis), tuple(int(v) for v in self.vstat))
        return OPTIMAL, x, value, unique, basis_desc


def _build_simplex(model):
    inst = model.inst
    A, senses, b = model.row_arrays()
    lower = np.zeros(inst.n)
    upper = np.ones(inst.n)
    for j, v in model.fixings.items():
        lower[j] = upper[j] = float(v)
    return Simplex(A, senses, b, lower, upper)


def _result(inst, lam, status, x, value, unique, basis):
    if status != OPTIMAL:
        return LpResult(status=INFEASIBLE)
    sol = make_solution(x)
    y1 = float(inst.c1 @ np.asarray(sol.values))
    y2 = float(inst.c2 @ np.asarray(sol.values))
    return LpResult(OPTIMAL, sol, value, Point(y1, y2), unique, basis)


def solve_weighted(model, lam, lex_tiebreak=False, simplex=None, warm=None):
    """Minimize lam1*z1 + lam2*z2 over the relaxed model.

    With lex_tiebreak and an axis direction, a second solve minimizes the
    other objective holding the first at its optimum (within a relative
    1e-9 slack; larger slacks park the stage-2 vertex measurably off the
    frontier), so endpoint solves return lexicographic optima.
    """
    inst = model.inst
    lam = normalize_direction(lam[0], lam[1])
    sx = simplex if simplex is not None else _build_simplex(model)
    c = lam.l1 * inst.c1 + lam.l2 * inst.c2
    try:
        status, x, value, unique, basis = sx.solve(c, warm=warm)
    except Unbounded:
        raise AssertionError("weighted LP cannot be unbounded over the unit box")
    if status != OPTIMAL or not lex_tiebreak:
        return _result(inst, lam, status, x, value, unique, basis)
    if lam.l1 > OPT_TOL and lam.l2 > OPT_TOL:
        return _result(inst, lam, status, x, value, unique, basis)
    primary = inst.c1 if lam.l1 > lam.l2 else inst.c2
    secondary = inst.c2 if lam.l1 > lam.l2 else inst.c1
    cap = value + 1e-9 * (1.0 + abs(value))
    stage2 = model.with_rows([(primary, "<=", cap)])
    sx2 = _build_simplex(stage2)
    try:
        status2, x2, _, unique2, basis2 = sx2.solve(secondary)
    except Unbounded:
        raise AssertionError("weighted LP cannot be unbounded over the unit box")
    if status2 != OPTIMAL:  # numerically impossible, stage-1 optimum is feasible
        return _result(inst, lam, status, x, value, unique, basis)
    res = _result(inst, lam, status2, x2, math.nan, unique2, None)
    # the cap slack may park the stage-2 vertex just above the stage-1
    # optimum; report the proven optimum in the primary coordinate
    if lam.l1 > lam.l2:
        point = Point(min(res.point.y1, value), res.point.y2)
    else:
        point = Point(res.point.y1, min(res.point.y2, value))
    value2 = lam.l1 * point.y1 + lam.l2 * point.y2
    return LpResult(OPTIMAL, res.x, value2, point, res.unique, basis)


def _improvement_tol(level):
    return 1e-7 * (1.0 + abs(level))


def dichotomy_lbs(model, log=None):
    """Exact frontier of extreme supported points of the relaxation.

    Returns (LowerBoundSet, hits) where hits collects every (point, x)
    optimum observed, or (None, hits) when the model is infeasible.
    """
    hits = []
    sx = _build_simplex(model)
    left = solve_weighted(model, (1.0, 0.0), lex_tiebreak=True, simplex=sx)
    if left.status != OPTIMAL:
        return None, hits
    right = solve_weighted(model, (0.0, 1.0), lex_tiebreak=True, simplex=sx, warm=left.basis)
    if right.status != OPTIMAL:
        return None, hits
    # stage-2 slack cannot move an endpoint past the other axis optimum;
    # clamp so a flat frontier never reports a misordered pair
    lpt = Point(left.point.y1, max(left.point.y2, right.point.y2))
    rpt = Point(max(right.point.y1, left.point.y1), right.point.y2)
    hits.append((lpt, left.x))
    hits.append((rpt, right.x))
    pts = {lpt: left.x}
    pts.setdefault(rpt, right.x)
    scale = max(1.0, abs(lpt.y1), abs(lpt.y2), abs(rpt.y1), abs(rpt.y2))
    # chords narrower than the geometry tolerance are slack noise and would
    # hand segment_normal a degenerate direction
    eps = 1e-7 * (1.0 + scale)
    stack = []
    if rpt.y1 > lpt.y1 + eps and lpt.y2 > rpt.y2 + eps:
        stack.append((lpt, rpt))
    warm = right.basis
    solves = 0
    while stack:
        a, b = stack.pop()
        solves += 1
        if solves > 10000:
            raise PivotLimit("dichotomy failed to converge")
        lam = segment_normal(a, b)
        res = solve_weighted(model, lam, simplex=sx, warm=warm)
        if res.status != OPTIMAL:
            return None, hits
        warm = res.basis
        hits.append((res.point, res.x))
        level = lam.l1 * a.y1 + lam.l2 * a.y2
        got = lam.l1 * res.point.y1 + lam.l2 * res.point.y2
        if got < level - _improvement_tol(level):
            p = res.point
            pts.setdefault(p, res.x)
            if p.y1 > a.y1 + eps and p.y2 < a.y2 - eps:
                stack.append((a, p))
            if p.y1 < b.y1 - eps and p.y2 > b.y2 + eps:
                stack.append((p, b))
    if log is not None:
        log.extend(hits)
    points = list(pts.keys())
    sols = [pts[p] for p in points]
    cp, cs = _canonicalize(points, sols)
    return LowerBoundSet(cp, cs), hits


def _chord_directions(inherited, budget):
    """Normals of `budget` chords splitting the frontier at equal arc length."""
    pts = inherited.points
    if len(pts) < 2:
        return [ScalarDirection(i / (budget + 1.0), 1.0 - i / (budget + 1.0)) for i in range(1, budget + 1)]
    seg = [math.hypot(b.y1 - a.y1, b.y2 - a.y2) for a, b in zip(pts[:-1], pts[1:])]
    total = sum(seg)
    cum = [0.0]
    for s in seg:
        cum.append(cum[-1] + s)

    def at(dist):
        for i in range(len(seg)):
            if dist <= cum[i + 1] or i == len(seg) - 1:
                t = 0.0 if seg[i] == 0 else (dist - cum[i]) / seg[i]
                t = min(max(t, 0.0), 1.0)
                a, b = pts[i], pts[i + 1]
                return (a.y1 + t * (b.y1 - a.y1), a.y2 + t * (b.y2 - a.y2))
        return pts[-1]

    knots = [at(total * k / budget) for k in range(budget + 1)]
    dirs = []
    for a, b in zip(knots[:-1], knots[1:]):
        try:
            dirs.append(normalize_direction(a[1] - b[1], b[0] - a[0]))
        except ValueError:
            dirs.append(ScalarDirection(0.5, 0.5))
    return dirs


def budgeted_lbs(model, budget, strategy, inherited):
    """Fold at most `budget` weighted supports into a copy of `inherited`."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    hits = []
    lbs = inherited.copy()
    sx = _build_simplex(model)

    def fold(lam, res):
        nonlocal lbs
        hits.append((res.point, res.x))
        lbs, _ = intersect_update(lbs, lam, res.point, solution=res.x)

    if strategy == "equilibrate" or (strategy == "dichotomic" and budget == 1):
        warm = None
        for i in range(1, budget + 1):
            lam = ScalarDirection(i / (budget + 1.0), 1.0 - i / (budget + 1.0))
            res = solve_weighted(model, lam, simplex=sx, warm=warm)
            if res.status != OPTIMAL:
                return None, hits
            warm = res.basis
            fold(lam, res)
        return lbs, hits
    if strategy == "chordal":
        warm = None
        for lam in _chord_directions(inherited, budget):
            res = solve_weighted(model, lam, simplex=sx, warm=warm)
            if res.status != OPTIMAL:
                return None, hits
            warm = res.basis
            fold(lam, res)
        return lbs, hits
    if strategy != "dichotomic":
        raise ValueError(f"unknown strategy {strategy!r}")

    solves = 0
    left = solve_weighted(model, (1.0, 0.0), lex_tiebreak=True, simplex=sx)
    if left.status != OPTIMAL:
        return None, hits
    solves += 1
    fold(ScalarDirection(1.0, 0.0), left)
    if solves >= budget:
        return lbs, hits
    right = solve_weighted(model, (0.0, 1.0), lex_tiebreak=True, simplex=sx, warm=left.basis)
    if right.status != OPTIMAL:
        return None, hits
    solves += 1
    fold(ScalarDirection(0.0, 1.0), right)
    scale = max(1.0, abs(left.point.y1), abs(left.point.y2), abs(right.point.y1), abs(right.point.y2))
    eps = 1e-7 * (1.0 + scale)
    # best-first refinement of the fresh support structure, widest chord first
    heap = []
    counter = 0

    def push(a, b):
        nonlocal counter
        if a.y1 < b.y1 - eps and a.y2 > b.y2 + eps:
            length = math.hypot(b.y1 - a.y1, b.y2 - a.y2)
            heapq.heappush(heap, (-length, counter, a, b))
            counter += 1

    push(left.point, right.point)
    warm = right.basis
    while heap and solves < budget:
        _, _, a, b = heapq.heappop(heap)
        lam = segment_normal(a, b)
        res = solve_weighted(model, lam, simplex=sx, warm=warm)
        if res.status != OPTIMAL:
            return None, hits
        warm = res.basis
        solves += 1
        fold(lam, res)
        level = lam.l1 * a.y1 + lam.l2 * a.y2
        got = lam.l1 * res.point.y1 + lam.l2 * res.point.y2
        if got < level - _improvement_tol(level):
            push(a, res.point)
            push(res.point, b)
    return lbs, hits
