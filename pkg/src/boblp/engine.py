"""Bi-objective binary branch and cut: node lifecycle, fathoming, branching.

Nodes carry an LpModel holding their fixings plus any objective-space rows
from Pareto branching, a cut pool lineage, and the bound set inherited from
the parent.  Processing a node computes its lower bound set per the
configured algorithm, archives integral discoveries, then applies the three
fathoming rules in order: infeasibility, integrity, dominance.  Surviving
nodes branch either on corner points of the incumbent archive (extended
Pareto branching) or on the lowest-index free variable.

The dominance rule here is deliberately stronger than the bare local-nadir
comparison.  Fathoming is only allowed when the bound region provably holds
no point that could enter the archive or tie an archived point: the region
must stay clear of both archive extremes (otherwise better-or-equal points
in the outer strips survive) and must not contain any nadir or archived
point.  The same strip test gates Pareto branching, whose per-nadir children
only cover the staircase interior.
"""

import math
import random
from dataclasses import dataclass, field, replace
from time import perf_counter

from boblp import diagnostics
from boblp.cuts import CutPool, MpConfig, multipoint_cutting_plane
from boblp.geometry import (
    IncumbentArchive,
    dominance_test,
    intersect_lbs,
    local_nadirs,
    segment_normal,
    update_archive,
)
from boblp.lp import OPTIMAL, LpModel, budgeted_lbs, dichotomy_lbs, solve_weighted
from boblp.model import evaluate, is_feasible, make_solution
from boblp.oracle import IlpLimits, isc_lbs

ALGOS = ("bb", "bc-mp", "bc-isc", "bc-isc-mp", "cut-branch")
SELECT_RULES = ("depth", "breadth", "random")
LAMBDA_STRATEGIES = ("dichotomic", "equilibrate", "chordal")

OPEN = "open"
FATHOMED_INFEASIBLE = "fathomed-infeasible"
FATHOMED_INTEGRITY = "fathomed-integrity"
FATHOMED_DOMINANCE = "fathomed-dominance"
BRANCHED = "branched"

TOL = 1e-7
PROBE_TOL = 1e-6

# root rounds of support/cover materialization in cut&branch
ROOT_CUT_ROUNDS = 12


@dataclass(frozen=True)
class EngineConfig:
    """Knobs for one tree search; immutable so runs are reproducible."""

    algo: str = "bb"
    epb: bool = False
    lambda_budget: int = None
    lambda_strategy: str = "dichotomic"
    node_select: str = "breadth"
    time_limit: float = 3600.0
    seed: int = 0
    mp: MpConfig = field(default_factory=MpConfig)
    ilp_limits: IlpLimits = field(default_factory=lambda: IlpLimits(node_limit=0))

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.node_select not in SELECT_RULES:
            raise ValueError(f"unknown node selection rule {self.node_select!r}")
        if self.lambda_strategy not in LAMBDA_STRATEGIES:
            raise ValueError(f"unknown direction strategy {self.lambda_strategy!r}")
        if self.lambda_budget is not None and self.lambda_budget < 1:
            raise ValueError("lambda_budget must be at least 1")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


@dataclass
class SolveReport:
    ynd: list
    efficient: dict
    nodes_explored: int
    sp_cuts: int
    mp_cuts: int
    wall_time: float
    timed_out: bool


@dataclass
class Node:
    """One subproblem: the model already encodes fixings and bound rows."""

    id: int
    depth: int
    model: LpModel
    pool: CutPool
    parent: int = None
    objective_bounds: tuple = ()
    nadirs_seen: frozenset = frozenset()
    inherited: object = None
    lbs: object = None
    state: str = OPEN

    @property
    def fixings(self):
        return self.model.fixings


def _fingerprint(u):
    return (round(u[0], 7), round(u[1], 7))


def _solmap(hits):
    """Group LP hit solutions by their criteria point, dropping duplicates."""
    out = {}
    for p, x in hits or ():
        if x is None:
            continue
        bucket = out.setdefault(p, [])
        if all(x.values != other.values for other in bucket):
            bucket.append(x)
    return out


def _support_rows(inst, tight, base, tol=TOL):
    """Criteria-space rows for the faces of `tight` cutting into `base`.

    Every face of a valid bound region is a proven halfspace for the binary
    solutions, so each can enter the LP as an ordinary row.  Only faces that
    actually exclude part of `base`'s region are worth materializing.
    """
    rows = []
    scale = max(1.0, max(abs(v) for p in tight.points for v in p))
    eps = tol * scale
    if tight.first.y1 > base.first.y1 + eps:
        rows.append((inst.c1, ">=", tight.first.y1))
    if tight.last.y2 > base.last.y2 + eps:
        rows.append((inst.c2, ">=", tight.last.y2))
    for a, b in tight.segments():
        lam = segment_normal(a, b)
        level = lam.l1 * a.y1 + lam.l2 * a.y2
        reach = min(lam.l1 * p.y1 + lam.l2 * p.y2 for p in base.points)
        if reach < level - tol * (1.0 + abs(level)):
            rows.append((lam.l1 * inst.c1 + lam.l2 * inst.c2, ">=", level))
    return rows


class BranchAndCut:
    """Mutable search state for a single solve call."""

    def __init__(self, inst, cfg=None):
        self.inst = inst
        self.cfg = cfg if cfg is not None else EngineConfig()
        self.archive = IncumbentArchive()
        self.frontier = []
        self.rng = random.Random(self.cfg.seed)
        self.nodes_explored = 0
        self.sp_cuts = 0
        self.mp_cuts = 0
        self._ids = 0
        self._deadline = math.inf

    # ---------------- archive feeding ----------------

    def _archive_solution(self, sol):
        if __debug__:
            assert is_feasible(self.inst, sol)
        update_archive(self.archive, evaluate(self.inst, sol), [sol])

    def _archive_hits(self, hits):
        for _, x in hits or ():
            if x is None:
                continue
            if x.integral:
                self._archive_solution(x)
            else:
                self._round_and_archive(x)

    def _round_and_archive(self, x):
        """Push the fractional coordinates of an LP vertex to a common bit.

        A vertex of the relaxation has few fractional entries; rounding
        them all down (or all up) often lands on a feasible vector near
        the frontier, and seeding the archive with such incumbents is what
        lets dominance fathoming engage high in the tree.  Infeasible
        roundings are simply dropped.
        """
        vals = x.values
        for fill in (0.0, 1.0):
            cand = tuple(fill if 1e-6 < v < 1.0 - 1e-6 else round(v) for v in vals)
            sol = make_solution(cand)
            if is_feasible(self.inst, sol):
                self._archive_solution(sol)

    def _archive_solutions(self, sols):
        for x in sols or ():
            self._archive_solution(x)

    def _archive_lbs(self, lbs):
        for sol in lbs.solutions:
            if sol is not None and sol.integral:
                self._archive_solution(sol)

    # ---------------- bound computation ----------------

    def _lp_bounds(self, model, inherited):
        """Relaxation frontier: budgeted against the inherited set when asked."""
        cfg = self.cfg
        if cfg.lambda_budget is not None and inherited is not None:
            lbs, hits = budgeted_lbs(model, cfg.lambda_budget, cfg.lambda_strategy, inherited)
        else:
            lbs, hits = dichotomy_lbs(model)
        self._archive_hits(hits)
        return lbs, hits

    def _node_bounds(self, node):
        cfg = self.cfg
        if cfg.algo in ("bb", "cut-branch"):
            lbs, _ = self._lp_bounds(node.model, node.inherited)
            return lbs
        if cfg.algo == "bc-mp":
            lbs, hits = self._lp_bounds(node.model, node.inherited)
            if lbs is None:
                return None
            lbs, sp, mp = multipoint_cutting_plane(
                node, lbs, _solmap(hits), cfg.mp, node.pool,
                lambda m: self._lp_bounds(m, node.inherited)[0])
            self.sp_cuts += sp
            self.mp_cuts += mp
            return lbs
        # oracle-backed frontier; the root sweep is always exhaustive
        budget = None if node.depth == 0 else cfg.lambda_budget
        base, incumbents = isc_lbs(node.model, cfg.ilp_limits, budget=budget)
        self._archive_solutions(incumbents)
        if base is None:
            return None
        if node.inherited is not None:
            base = intersect_lbs(base, node.inherited)
        if cfg.algo == "bc-isc":
            return base

        def reopt(model):
            lp, _ = self._lp_bounds(model, node.inherited)
            if lp is None:
                return None
            # oracle hyperplanes stay valid under added cover rows
            return intersect_lbs(lp, base)

        lbs, sp, mp = multipoint_cutting_plane(node, base, {}, cfg.mp, node.pool, reopt)
        self.sp_cuts += sp
        self.mp_cuts += mp
        return lbs

    # ---------------- fathoming ----------------

    def _integrity(self, node, lbs):
        """Singleton bound whose unique LP solution is integral resolves the node.

        Uniqueness matters: a tied relaxation optimum may hide alternative
        binary solutions with the same image, and those must be found by
        branching, not discarded.
        """
        if not node.model.free_variables():
            # feasible with every variable pinned: the node is one point,
            # whatever shape an inherited or intersected bound set took
            probe = solve_weighted(node.model, (0.5, 0.5))
            if probe.status == OPTIMAL and probe.x is not None and probe.x.integral:
                self._archive_solution(probe.x)
            return True
        if len(lbs.points) != 1:
            return False
        v = lbs.points[0]
        probe = solve_weighted(node.model, (0.5, 0.5))
        if probe.status != OPTIMAL or not probe.unique:
            return False
        if probe.x is None or not probe.x.integral:
            return False
        scale = max(1.0, abs(v.y1), abs(v.y2))
        if abs(probe.point.y1 - v.y1) > PROBE_TOL * scale:
            return False
        if abs(probe.point.y2 - v.y2) > PROBE_TOL * scale:
            return False
        self._archive_solution(probe.x)
        return True

    def _strips_clear(self, lbs):
        """No bound-region point can improve on or tie an archive extreme.

        The left strip holds points at least as good as the best-y1 archive
        entry in the first coordinate; anything there is either a new
        nondominated point or an equivalent solution, so the node must stay
        alive.  Mirrored for the bottom strip.
        """
        pts = self.archive.points
        if not pts:
            return False
        first, last = lbs.first, lbs.last
        left, right = pts[0], pts[-1]
        scale = max(1.0, abs(first.y1), abs(first.y2), abs(last.y1), abs(last.y2),
                    abs(left.y1), abs(left.y2), abs(right.y1), abs(right.y2))
        eps = TOL * scale
        if first.y1 < left.y1 - eps:
            return False
        if abs(first.y1 - left.y1) <= eps and first.y2 <= left.y2 + eps:
            return False
        if last.y2 < right.y2 - eps:
            return False
        if abs(last.y2 - right.y2) <= eps and last.y1 <= right.y1 + eps:
            return False
        return True

    def _dominance(self, lbs):
        if not self._strips_clear(lbs):
            return False
        nadirs = local_nadirs(self.archive)
        if not dominance_test(lbs, nadirs):
            return False
        # region containment beats the segment test near axis-parallel
        # faces: any nadir or archived point inside the region means the
        # node may still produce a better or equivalent solution
        for u in nadirs:
            if lbs.contains(u):
                return False
        for p in self.archive.points:
            if lbs.contains(p):
                return False
        return True

    # ---------------- branching ----------------

    def _child(self, node, model, bounds, seen):
        self._ids += 1
        return Node(id=self._ids, depth=node.depth + 1, model=model,
                    pool=CutPool(parent=node.pool), parent=node.id,
                    objective_bounds=tuple(bounds), nadirs_seen=seen,
                    inherited=node.lbs)

    def branch(self, node):
        """Children partitioning the node's useful search region.

        Pareto branching spawns one child per local nadir of the archive,
        capping both objectives at the corner.  Those quadrants only cover
        the staircase interior, so the move is taken when the bound region
        stays clear of the archive extremes and none of the corners was
        already branched on upstream.  Otherwise: binary split on the
        lowest-index free variable.
        """
        if self.cfg.epb:
            nadirs = local_nadirs(self.archive)
            if nadirs and self._strips_clear(node.lbs):
                fps = frozenset(_fingerprint(u) for u in nadirs)
                if not (fps & node.nadirs_seen):
                    seen = node.nadirs_seen | fps
                    children = []
                    for u in nadirs:
                        rows = [(self.inst.c1, "<=", u.y1), (self.inst.c2, "<=", u.y2)]
                        bounds = node.objective_bounds + ((1, u.y1), (2, u.y2))
                        children.append(self._child(
                            node, node.model.with_rows(rows), bounds, seen))
                    return children
        free = node.model.free_variables()
        assert free, "all variables fixed yet node neither integral nor dominated"
        j = free[0]
        return [
            self._child(node, node.model.with_fixing(j, v),
                        node.objective_bounds, node.nadirs_seen)
            for v in (0, 1)
        ]

    # ---------------- main loop ----------------

    def select_node(self):
        frontier = self.frontier
        if self.cfg.node_select == "depth":
            return frontier.pop()
        if self.cfg.node_select == "breadth":
            return frontier.pop(0)
        return frontier.pop(self.rng.randrange(len(frontier)))

    def process_node(self, node):
        self.nodes_explored += 1
        # the parent frontier bounds the child's feasible images too, so a
        # child strictly dominated under it is fathomable before paying for
        # its own bound set; the test is monotone in region inclusion, hence
        # the disposition matches what the tighter set would have produced
        if node.inherited is not None and self._dominance(node.inherited):
            node.lbs = node.inherited
            node.state = FATHOMED_DOMINANCE
            return node.state
        lbs = self._node_bounds(node)
        node.lbs = lbs
        if lbs is None:
            node.state = FATHOMED_INFEASIBLE
            return node.state
        diagnostics.emit_node(node.model, lbs)
        self._archive_lbs(lbs)
        if self._integrity(node, lbs):
            node.state = FATHOMED_INTEGRITY
            return node.state
        if self._dominance(lbs):
            node.state = FATHOMED_DOMINANCE
            return node.state
        self.frontier.extend(self.branch(node))
        node.state = BRANCHED
        return node.state

    def _root_cuts(self, model, pool):
        """Cut&branch root loop: fold oracle faces and cover cuts into rows.

        Repeats until the relaxation frontier is supported by integral
        solutions everywhere, a round adds no row, or the round cap trips.
        Returns (model, pool, feasible).
        """
        holder = Node(id=-1, depth=0, model=model, pool=pool)
        for _ in range(ROOT_CUT_ROUNDS):
            if perf_counter() >= self._deadline:
                break
            lbs, hits = dichotomy_lbs(holder.model)
            self._archive_hits(hits)
            if lbs is None:
                return holder.model, holder.pool, False
            if all(s is not None and s.integral for s in lbs.solutions):
                break
            before = len(holder.model.extra_rows)
            tight, incumbents = isc_lbs(holder.model, self.cfg.ilp_limits)
            self._archive_solutions(incumbents)
            if tight is None:
                return holder.model, holder.pool, False
            rows = _support_rows(self.inst, tight, lbs)
            if rows:
                holder.model = holder.model.with_rows(rows)
            lbs, hits = dichotomy_lbs(holder.model)
            self._archive_hits(hits)
            if lbs is None:
                return holder.model, holder.pool, False

            def reopt(m):
                fresh, h = dichotomy_lbs(m)
                self._archive_hits(h)
                return fresh

            lbs, sp, mp = multipoint_cutting_plane(
                holder, lbs, _solmap(hits), self.cfg.mp, holder.pool, reopt)
            self.sp_cuts += sp
            self.mp_cuts += mp
            if lbs is None:
                return holder.model, holder.pool, False
            if len(holder.model.extra_rows) == before:
                break
        return holder.model, holder.pool, True

    def run(self):
        start = perf_counter()
        self._deadline = start + self.cfg.time_limit
        model = LpModel(self.inst)
        pool = CutPool()
        feasible = True
        if self.cfg.algo == "cut-branch":
            model, pool, feasible = self._root_cuts(model, pool)
        timed_out = False
        if feasible:
            self._ids = 0
            self.frontier = [Node(id=0, depth=0, model=model, pool=pool)]
            while self.frontier:
                if perf_counter() >= self._deadline:
                    timed_out = True
                    break
                self.process_node(self.select_node())
        return SolveReport(
            ynd=list(self.archive.points),
            efficient=self.archive.equiv(),
            nodes_explored=self.nodes_explored,
            sp_cuts=self.sp_cuts,
            mp_cuts=self.mp_cuts,
            wall_time=perf_counter() - start,
            timed_out=timed_out,
        )


def solve(inst, cfg=None):
    """Exact nondominated set and all efficient solutions of the instance."""
    return BranchAndCut(inst, cfg).run()


def cut_and_branch(inst, cfg=None):
    """Root-only cutting followed by a plain branch and bound tree."""
    cfg = EngineConfig(algo="cut-branch") if cfg is None else replace(cfg, algo="cut-branch")
    return BranchAndCut(inst, cfg).run()
