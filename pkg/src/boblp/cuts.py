"""Cover-inequality separation and the multi-point cutting loop.

Cover cuts are produced by the classical greedy generator, run either on a
single fractional solution or on the pointwise minimum of several targets at
once so that one inequality removes a whole stretch of the lower bound set.
Rows with negative coefficients are complemented before separation and the
cut is mapped back, so the appendable row may carry -1 entries.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from boblp import diagnostics

TOL_CUT = 1e-6

COVER = "cover"
OBJECTIVE_BOUND = "objective-bound"
OTHER = "other"

SINGLE_POINT = "single-point"
MULTI_POINT = "multi-point"
INHERITED = "inherited"


@dataclass(frozen=True, eq=False)
class LinearCut:
    """One valid inequality coeffs . x <= rhs with its canonical identity."""

    coeffs: np.ndarray
    rhs: float
    kind: str = COVER
    origin: str = SINGLE_POINT

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def key(self):
        """Stable identity: signed sorted support plus the plain-cover rhs."""
        support = tuple(
            (int(j), self.coeffs[j] > 0)
            for j in np.flatnonzero(np.abs(self.coeffs) > 1e-12)
        )
        flips = sum(1 for _, pos in support if not pos)
        return (self.kind, support, round(float(self.rhs) + flips, 9))

    def violation(self, values):
        return float(self.coeffs @ np.asarray(values, dtype=float)) - self.rhs

    def as_row(self):
        return (self.coeffs, "<=", float(self.rhs))


def make_cover_cut(n, cover, flipped, origin):
    """Cover inequality over `cover`, complement-mapped on `flipped` indices."""
    cover = sorted(int(j) for j in cover)
    flipped = frozenset(int(j) for j in flipped)
    coeffs = np.zeros(n)
    for j in cover:
        coeffs[j] = -1.0 if j in flipped else 1.0
    rhs = float(len(cover) - 1 - len(flipped))
    return LinearCut(coeffs, rhs, COVER, origin)


@dataclass
class CutPool:
    """Per-node store of canonical cuts with a walkable parent chain."""

    entries: dict = field(default_factory=dict)
    parent: "CutPool" = None

    def insert(self, cut):
        """Store the cut; returns False when the key is already known."""
        if pool_check(self, cut):
            return False
        self.entries[cut.key] = cut
        return True

    def lineage(self):
        """All cuts visible from this pool, nearest definition first."""
        seen = set()
        pool = self
        while pool is not None:
            for key, cut in pool.entries.items():
                if key not in seen:
                    seen.add(key)
                    yield cut
            pool = pool.parent


def pool_check(pool, cut):
    """True iff the canonical key exists in the pool or any ancestor."""
    key = cut.key
    while pool is not None:
        if key in pool.entries:
            return True
        pool = pool.parent
    return False


@dataclass(frozen=True)
class MpConfig:
    max_step: int = 3
    min_cut_fraction: float = 0.6
    max_rounds: int = 5

    def __post_init__(self):
        if self.max_step < 1:
            raise ValueError("max_step must be at least 1")
        if not 0.0 < self.min_cut_fraction <= 1.0:
            raise ValueError("min_cut_fraction must lie in (0, 1]")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")


def _complemented_row(inst, row):
    a = np.array(inst.A[row], dtype=float)
    neg = a < 0
    b = float(inst.b[row]) - float(a[neg].sum())
    return np.abs(a), b, neg


def _greedy_cover(a, b, xbar):
    """Indices sorted by decreasing xbar then coefficient, taken until > b."""
    cand = np.flatnonzero(a > 1e-12)
    if cand.size == 0 or a[cand].sum() <= b + 1e-7 * (1.0 + abs(b)):
        return None
    order = sorted(cand, key=lambda j: (-xbar[j], -a[j], j))
    cover, total = [], 0.0
    for j in order:
        cover.append(j)
        total += a[j]
        if total > b + 1e-7 * (1.0 + abs(b)):
            return cover
    return None


def cover_separate_multi(inst, row, targets, origin=None):
    """Greedy cover on the pointwise minimum of the complemented targets.

    The residual test sum(1 - min_t x_j) < 1 guarantees the returned cut is
    violated by every target simultaneously; with one target this is the
    classical single-point separator.
    """
    if inst.senses[row] != "<=":
        return None
    if not targets:
        return None
    a, b, neg = _complemented_row(inst, row)
    X = np.array([t.values for t in targets], dtype=float)
    Xc = np.where(neg, 1.0 - X, X)
    xbar = Xc.min(axis=0)
    cover = _greedy_cover(a, b, xbar)
    if cover is None:
        return None
    residual = float(np.sum(1.0 - xbar[cover]))
    if residual >= 1.0 - TOL_CUT:
        return None
    if origin is None:
        origin = SINGLE_POINT if len(targets) == 1 else MULTI_POINT
    flipped = [j for j in cover if neg[j]]
    cut = make_cover_cut(inst.n, cover, flipped, origin)
    diagnostics.emit_cut(inst, cut, targets)
    return cut


def cover_separate_single(inst, row, x):
    return cover_separate_multi(inst, row, [x], origin=SINGLE_POINT)


def _point_solutions(lbs, idx, solmap):
    # one witness per point: extra alternative optima only water down the
    # pointwise minimum that the aggregated separator works on
    sol = lbs.solutions[idx]
    if sol is not None:
        return [sol]
    if solmap:
        for extra in solmap.get(lbs.points[idx], ()):
            return [extra]
    return []


def _assert_cuts_valid(inst, cuts):
    # exhaustive revalidation, only worth running at debug scale
    if inst.n > 16:
        return
    from boblp.model import is_feasible

    for mask in range(1 << inst.n):
        x = np.array([(mask >> j) & 1 for j in range(inst.n)], dtype=float)
        if not is_feasible(inst, x):
            continue
        for cut in cuts:
            assert cut.violation(x) <= TOL_CUT, (
                f"cut {cut.key} removes the feasible solution {x}"
            )


def multipoint_cutting_plane(node, lbs, solmap, cfg, pool, reopt):
    """Sweep the LBS with shrinking windows, emitting aggregated cover cuts.

    Each window [l, r] tries to cut the solutions supporting both endpoint
    points at once; on success the sweep resumes one past the window's right
    endpoint, otherwise the window shrinks, down to adjacent pairs.  Windows
    stop short of the frontier's last point, so a singleton frontier is
    never separated.  Single-point separation runs as a fallback over the
    points, and only while no window has produced a cut for this node's
    frontier.  After every round the node model is reoptimized; the loop
    stops when a round cuts off less than cfg.min_cut_fraction of the
    points or after cfg.max_rounds rounds.  Returns (lbs or None on
    infeasibility, single-point count, multi-point count).
    """
    inst = node.model.inst
    rows = [i for i in range(inst.m) if inst.senses[i] == "<="]
    sp_count = 0
    mp_count = 0
    if not rows or lbs is None:
        return lbs, sp_count, mp_count

    # replay every pooled inequality missing from the node model first
    present = {
        (tuple(np.asarray(r[0], dtype=float)), r[1], float(r[2]))
        for r in node.model.extra_rows
    }
    replay = [
        inherited_copy(cut)
        for cut in pool.lineage()
        if (tuple(cut.coeffs), "<=", float(cut.rhs)) not in present
    ]
    if replay:
        node.model = node.model.with_rows([c.as_row() for c in replay])
        lbs = reopt(node.model)
        if lbs is None:
            if __debug__:
                _assert_cuts_valid(inst, replay)
            return None, sp_count, mp_count

    window_hit = False
    for _ in range(cfg.max_rounds):
        pts = lbs.points
        last = len(pts) - 1
        sols = [_point_solutions(lbs, i, solmap) for i in range(len(pts))]
        fresh = []
        l = 0
        while l < len(pts):
            hit = None
            for delta in range(cfg.max_step, 1, -1):
                r = l + delta - 1
                if r >= last:
                    # windows stop short of the frontier's last point
                    continue
                targets = list(sols[l]) + list(sols[r])
                if len(targets) < 2 or any(t.integral for t in targets):
                    continue
                for row in rows:
                    cut = cover_separate_multi(inst, row, targets, origin=MULTI_POINT)
                    if cut is not None and not pool_check(pool, cut):
                        hit = (cut, delta)
                        break
                if hit:
                    break
            if hit:
                cut, delta = hit
                pool.insert(cut)
                fresh.append(cut)
                mp_count += 1
                window_hit = True
                l += delta  # resume one past the window's right endpoint
            else:
                l += 1
        if not window_hit:
            # no window has produced anything for this frontier, so fall
            # back to cutting the points one at a time
            for i in range(last):
                slist = sols[i]
                if not slist or slist[0].integral:
                    continue
                for row in rows:
                    cut = cover_separate_multi(
                        inst, row, list(slist), origin=SINGLE_POINT
                    )
                    if cut is not None and not pool_check(pool, cut):
                        pool.insert(cut)
                        fresh.append(cut)
                        sp_count += 1
                        break
        if not fresh:
            break
        node.model = node.model.with_rows([c.as_row() for c in fresh])
        nxt = reopt(node.model)
        if nxt is None:
            if __debug__:
                _assert_cuts_valid(inst, fresh)
            return None, sp_count, mp_count
        removed = sum(
            1
            for slist in sols
            if any(c.violation(x.values) > TOL_CUT for c in fresh for x in slist)
        )
        lbs = nxt
        if removed < cfg.min_cut_fraction * len(pts) - 1e-12:
            break
    return lbs, sp_count, mp_count


def inherited_copy(cut):
    """Relabel a pooled cut as replayed ancestor material."""
    return replace(cut, origin=INHERITED)
