"""Budgeted single-objective binary solves and the scalarized bound sweep.

The built-in oracle solves min lam.z(x) over the binary solutions of an
LpModel: root LP, a few rounds of cover cuts, a rounding/repair/dive
heuristic, then best-bound branch and bound unless a node or time limit
says otherwise.  Whatever the stopping point, the weighted value of
`bound_point` is a valid lower bound on every binary solution, which is
what the sweep in isc_lbs folds into the node's frontier.
"""

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from time import perf_counter

import numpy as np

from boblp import diagnostics
from boblp.cuts import cover_separate_single
from boblp.geometry import (
    DegenerateSegmentError,
    LowerBoundSet,
    Point,
    intersect_update,
    normalize_direction,
)
from boblp.lp import INFEASIBLE, OPTIMAL, dichotomy_lbs, solve_weighted
from boblp.model import TOL_FEAS, TOL_INT, make_solution

LIMIT_REACHED = "limit-reached"

COVER_ROUNDS = 5


@dataclass(frozen=True)
class IlpLimits:
    node_limit: int = None
    time_limit: float = None

    def __post_init__(self):
        if self.node_limit is not None and self.node_limit < 0:
            raise ValueError("node_limit must be nonnegative")
        if self.time_limit is not None and self.time_limit < 0:
            raise ValueError("time_limit must be nonnegative")


@dataclass
class IlpOutcome:
    status: str
    incumbent: object = None
    bound_point: object = None
    incumbents_found: list = field(default_factory=list)
    bound_solution: object = None


def _feasibility_checker(model):
    inst = model.inst
    A, senses, b = model.row_arrays()
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
    fixed = list(model.fixings.items())

    def check(x):
        if np.any((np.abs(x) > TOL_INT) & (np.abs(x - 1.0) > TOL_INT)):
            return False
        for j, v in fixed:
            if abs(x[j] - v) > TOL_INT:
                return False
        lhs = A @ x
        for i, sense in enumerate(senses):
            if sense == "<=" and lhs[i] > b[i] + TOL_FEAS * scale:
                return False
            if sense == ">=" and lhs[i] < b[i] - TOL_FEAS * scale:
                return False
            if sense == "=" and abs(lhs[i] - b[i]) > TOL_FEAS * scale:
                return False
        return True

    return check


def _repair(A, senses, b, x, free, scale):
    """Greedy flips toward row feasibility, at most two passes over vars."""
    x = x.copy()
    for _ in range(2 * x.size):
        lhs = A @ x
        worst, wviol = None, TOL_FEAS * scale
        for i, sense in enumerate(senses):
            if sense == "<=":
                viol = lhs[i] - b[i]
            elif sense == ">=":
                viol = b[i] - lhs[i]
            else:
                viol = abs(lhs[i] - b[i])
            if viol > wviol:
                worst, wviol = i, viol
        if worst is None:
            return x
        i = worst
        over = senses[i] == "<=" or (senses[i] == "=" and (A[i] @ x) > b[i])
        if over:
            cand = [j for j in free if x[j] > 0.5 and A[i, j] > 0] + [
                j for j in free if x[j] < 0.5 and A[i, j] < 0
            ]
        else:
            cand = [j for j in free if x[j] < 0.5 and A[i, j] > 0] + [
                j for j in free if x[j] > 0.5 and A[i, j] < 0
            ]
        if not cand:
            return None
        j = max(cand, key=lambda j: abs(A[i, j]))
        x[j] = 1.0 - x[j]
    return None


def _root_heuristic(model, lam, root_x, check):
    """Round, repair, then dive on the fractional root solution."""
    found = []
    inst = model.inst
    xf = np.asarray(root_x.values, dtype=float)
    rounded = np.round(xf)
    if check(rounded):
        found.append(make_solution(rounded))
    else:
        A, senses, b = model.row_arrays()
        scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
        repaired = _repair(A, senses, b, rounded, model.free_variables(), scale)
        if repaired is not None and check(repaired):
            found.append(make_solution(repaired))
    cur = model
    x = xf
    for _ in range(inst.n):
        frac = np.abs(x - np.round(x))
        j = int(np.argmax(frac))
        if frac[j] <= TOL_INT:
            if check(np.round(x)):
                found.append(make_solution(np.round(x)))
            break
        v = int(round(x[j]))
        res = solve_weighted(cur.with_fixing(j, v), lam)
        if res.status != OPTIMAL:
            res = solve_weighted(cur.with_fixing(j, 1 - v), lam)
            if res.status != OPTIMAL:
                break
            v = 1 - v
        cur = cur.with_fixing(j, v)
        x = np.asarray(res.x.values, dtype=float)
        if res.x.integral:
            if check(np.asarray(res.x.values)):
                found.append(res.x)
            break
    uniq = []
    for sol in found:
        if all(sol.values != other.values for other in uniq):
            uniq.append(sol)
    return uniq


def _weighted_image(inst, values):
    arr = np.asarray(values, dtype=float)
    return Point(float(inst.c1 @ arr), float(inst.c2 @ arr))


def ilp_solve(model, lam, limits=None):
    """Scalarized binary solve honoring optional node and time limits.

    node_limit=0 stops after the cut-strengthened root, reporting the root
    image as bound_point; otherwise a best-bound search runs to optimality
    or to the first limit hit.  Axis directions are refined
    lexicographically so endpoint sweeps return proper lex optima.
    """
    direction = normalize_direction(lam[0], lam[1])
    out = _ilp_solve_impl(model, direction, limits)
    if out.bound_point is not None:
        diagnostics.emit_hyperplane(model, direction, out.bound_point)
    return out


def _ilp_solve_impl(model, lam, limits):
    limits = limits or IlpLimits()
    started = perf_counter()
    deadline = None if limits.time_limit is None else started + limits.time_limit
    inst = model.inst
    axis = lam.l1 <= 1e-12 or lam.l2 <= 1e-12
    check = _feasibility_checker(model)

    def timed_out():
        return deadline is not None and perf_counter() > deadline

    work = model
    root = solve_weighted(work, lam, lex_tiebreak=axis)
    if root.status != OPTIMAL:
        return IlpOutcome(INFEASIBLE)

    le_rows = [i for i in range(inst.m) if inst.senses[i] == "<="]
    seen_rows = set()
    for _ in range(COVER_ROUNDS):
        if root.x.integral or timed_out():
            break
        fresh = []
        for r in le_rows:
            cut = cover_separate_single(inst, r, root.x)
            if cut is not None and cut.key not in seen_rows:
                seen_rows.add(cut.key)
                fresh.append(cut)
        if not fresh:
            break
        work = work.with_rows([c.as_row() for c in fresh])
        nxt = solve_weighted(work, lam, lex_tiebreak=axis)
        if nxt.status != OPTIMAL:
            # cover cuts are valid for every binary solution, so an empty
            # cut LP certifies there is no binary solution at all
            return IlpOutcome(INFEASIBLE)
        root = nxt

    incumbents = []
    best = None
    best_val = math.inf

    def offer(sol):
        nonlocal best, best_val
        arr = np.asarray(sol.values, dtype=float)
        if not check(arr):
            return
        if all(sol.values != other.values for other in incumbents):
            incumbents.append(sol)
        val = float(lam.l1 * (inst.c1 @ arr) + lam.l2 * (inst.c2 @ arr))
        if val < best_val - 1e-12:
            best, best_val = sol, val

    if root.x.integral:
        offer(root.x)
    else:
        for sol in _root_heuristic(work, lam, root.x, check):
            offer(sol)

    if root.x.integral and best is not None:
        return IlpOutcome(OPTIMAL, best, _weighted_image(inst, best.values), incumbents, best)

    if limits.node_limit == 0 or timed_out():
        return IlpOutcome(
            LIMIT_REACHED, best, root.point, incumbents, root.x
        )

    # best-bound branch and bound over branching fixings
    tol = lambda v: 1e-9 * (1.0 + abs(v))
    counter = 0
    heap = [(root.value, counter, work, root)]
    explored = 0
    status = OPTIMAL
    bound_res = root
    while heap:
        bound, _, node_model, res = heapq.heappop(heap)
        bound_res = res
        if best is not None and bound >= best_val - tol(best_val):
            status = OPTIMAL
            break
        if timed_out() or (
            limits.node_limit is not None and explored >= limits.node_limit
        ):
            status = LIMIT_REACHED
            break
        explored += 1
        x = np.asarray(res.x.values, dtype=float)
        j = int(np.argmax(np.abs(x - np.round(x))))
        for v in (int(round(x[j])), 1 - int(round(x[j]))):
            child = node_model.with_fixing(j, v)
            sub = solve_weighted(child, lam)
            if sub.status != OPTIMAL:
                continue
            if best is not None and sub.value >= best_val - tol(best_val):
                continue
            if sub.x.integral:
                offer(sub.x)
            else:
                counter += 1
                heapq.heappush(heap, (sub.value, counter, child, sub))
    else:
        status = OPTIMAL

    if status == OPTIMAL:
        if best is None:
            return IlpOutcome(INFEASIBLE, incumbents_found=incumbents)
        return IlpOutcome(OPTIMAL, best, _weighted_image(inst, best.values), incumbents, best)
    return IlpOutcome(LIMIT_REACHED, best, bound_res.point, incumbents, bound_res.x)


def _pair_key(a, b):
    return (round(a.y1, 7), round(a.y2, 7), round(b.y1, 7), round(b.y2, 7))


def isc_lbs(model, limits=None, budget=None):
    """Dichotomic sweep of oracle bounds folded into one convex frontier.

    The returned region is the LP dichotomy frontier intersected with every
    hyperplane the budgeted oracle proves, so it dominates the plain LP
    frontier pointwise by construction.  The sweep itself recurses on the
    primal bound points: a pair spawns children when its perpendicular
    solve tightened the region or strictly improved on the chord.  Returns
    the frontier plus all integral solutions the oracle stumbled on, or
    (None, incumbents) when the model has no binary solution.
    """
    limits = limits or IlpLimits()
    incumbents = []

    def collect(out):
        for sol in out.incumbents_found:
            if all(sol.values != other.values for other in incumbents):
                incumbents.append(sol)

    lbs, _ = dichotomy_lbs(model)
    if lbs is None:
        return None, incumbents
    left = ilp_solve(model, (1.0, 0.0), limits)
    if left.status == INFEASIBLE:
        return None, incumbents
    collect(left)
    right = ilp_solve(model, (0.0, 1.0), limits)
    if right.status == INFEASIBLE:
        return None, incumbents
    collect(right)
    p_l, p_r = left.bound_point, right.bound_point
    lbs, _ = intersect_update(
        lbs, normalize_direction(1.0, 0.0), p_l, solution=left.bound_solution
    )
    lbs, _ = intersect_update(
        lbs, normalize_direction(0.0, 1.0), p_r, solution=right.bound_solution
    )
    scale = max(1.0, abs(p_l.y1) + abs(p_l.y2), abs(p_r.y1) + abs(p_r.y2))
    eps = 1e-7 * scale
    solves = 2
    cap = budget if budget is not None else 10000
    pairs = deque()
    seen = set()

    def push(a, b):
        if b.y1 <= a.y1 + eps or a.y2 <= b.y2 + eps:
            return
        key = _pair_key(a, b)
        if key not in seen:
            seen.add(key)
            pairs.append((a, b))

    push(p_l, p_r)
    while pairs and solves < cap:
        a, b = pairs.popleft()
        try:
            lam = normalize_direction(a.y2 - b.y2, b.y1 - a.y1)
        except (DegenerateSegmentError, ValueError):
            continue
        out = ilp_solve(model, lam, limits)
        solves += 1
        if out.status == INFEASIBLE:
            return None, incumbents
        collect(out)
        p = out.bound_point
        lbs, inserted = intersect_update(lbs, lam, p, solution=out.bound_solution)
        chord = lam.l1 * a.y1 + lam.l2 * a.y2
        got = lam.l1 * p.y1 + lam.l2 * p.y2
        if inserted or got < chord - 1e-7 * (1.0 + abs(chord)):
            push(a, p)
            push(p, b)
    return lbs, incumbents
