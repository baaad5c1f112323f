"""Criteria-space primitives: points, bound sets, archives, dominance.

All solvers in this package reason about a minimization problem with two
objectives.  A lower bound set is stored as the ordered vertex list of a
convex piecewise-linear frontier: y1 strictly increasing, y2 strictly
decreasing, slopes nonincreasing in steepness (the frontier is convex
toward the origin).  Two implicit rays complete the frontier, one vertical
ray going up from the first vertex and one horizontal ray going right from
the last vertex.  The region bounded below by the frontier, written here
as the "dominant" of the set, is frontier + R^2_>=.

The upper bound side is an archive of mutually nondominated feasible
points, each carrying the list of solutions known to attain it.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

TOL_GEOM = 1e-7


class Point(NamedTuple):
    y1: float
    y2: float


class ScalarDirection(NamedTuple):
    """Nonnegative weight vector for a weighted-sum scalarization."""

    l1: float
    l2: float


class DegenerateSegmentError(ValueError):
    pass


def normalize_direction(l1, l2):
    """Scale a nonnegative direction so the components sum to one."""
    if l1 < -TOL_GEOM or l2 < -TOL_GEOM:
        raise ValueError("direction components must be nonnegative")
    total = l1 + l2
    if total <= TOL_GEOM:
        raise ValueError("direction must have a positive component")
    return ScalarDirection(max(l1, 0.0) / total, max(l2, 0.0) / total)


def dominates(a, b, tol=TOL_GEOM):
    """True iff a dominates b: a <= b componentwise and a != b (within tol)."""
    if abs(a[0] - b[0]) <= tol and abs(a[1] - b[1]) <= tol:
        return False
    return a[0] <= b[0] + tol and a[1] <= b[1] + tol


def _scale(points):
    s = 1.0
    for p in points:
        s = max(s, abs(p[0]), abs(p[1]))
    return s


def _canonicalize(points, solutions, tol=TOL_GEOM):
    """Sort, deduplicate, restore strict monotonicity, prune collinear vertices.

    Keeps solution payloads aligned with surviving vertices; on a duplicate
    the entry that carries a solution wins.
    """
    order = sorted(range(len(points)), key=lambda i: (points[i][0], points[i][1]))
    pts, sols = [], []
    scale = _scale(points)
    eq = tol * scale
    for i in order:
        p, s = points[i], solutions[i]
        if pts and abs(p[0] - pts[-1][0]) <= eq and abs(p[1] - pts[-1][1]) <= eq:
            if sols[-1] is None and s is not None:
                sols[-1] = s
            continue
        pts.append(Point(float(p[0]), float(p[1])))
        sols.append(s)
    # enforce strictly decreasing y2 left to right; after the ascending sort a
    # violator has both coordinates >= its predecessor and is not on the frontier
    out_p, out_s = [], []
    for p, s in zip(pts, sols):
        if out_p and p[1] >= out_p[-1][1] - eq:
            continue
        out_p.append(p)
        out_s.append(s)
    # drop middle vertices of collinear triples; the region is unchanged
    changed = True
    while changed and len(out_p) >= 3:
        changed = False
        for i in range(1, len(out_p) - 1):
            a, b, c = out_p[i - 1], out_p[i], out_p[i + 1]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
            if abs(cross) <= tol * scale * max(1.0, scale):
                del out_p[i]
                del out_s[i]
                changed = True
                break
    return out_p, out_s


@dataclass
class LowerBoundSet:
    """Ordered convex frontier in criteria space with optional payloads.

    ``solutions[i]`` is the solver payload (an LP solution) attached to
    ``points[i]`` or None for vertices that arose from intersections.
    """

    points: list
    solutions: list = None

    def __post_init__(self):
        if self.solutions is None:
            self.solutions = [None] * len(self.points)
        if len(self.solutions) != len(self.points):
            raise ValueError("solutions must align with points")
        self.points = [Point(float(p[0]), float(p[1])) for p in self.points]

    def __len__(self):
        return len(self.points)

    @property
    def first(self):
        return self.points[0]

    @property
    def last(self):
        return self.points[-1]

    def copy(self):
        return LowerBoundSet(list(self.points), list(self.solutions))

    def segments(self):
        return list(zip(self.points[:-1], self.points[1:]))

    def height(self, y1):
        """Frontier height at abscissa y1; +inf left of the first vertex."""
        pts = self.points
        if y1 < pts[0][0] - TOL_GEOM * _scale(pts):
            return float("inf")
        if y1 >= pts[-1][0]:
            return pts[-1][1]
        for a, b in zip(pts[:-1], pts[1:]):
            if y1 <= b[0]:
                t = (y1 - a[0]) / (b[0] - a[0])
                return a[1] + t * (b[1] - a[1])
        return pts[-1][1]

    def contains(self, p, tol=TOL_GEOM):
        """Membership of p in the dominant region (frontier + R^2_>=)."""
        scale = max(_scale(self.points), abs(p[0]), abs(p[1]))
        if p[0] < self.points[0][0] - tol * scale:
            return False
        return p[1] >= self.height(p[0]) - tol * scale

    def validate(self, tol=TOL_GEOM):
        """Raise AssertionError if the frontier invariants are broken."""
        pts = self.points
        assert len(pts) >= 1, "empty lower bound set"
        scale = _scale(pts)
        for a, b in zip(pts[:-1], pts[1:]):
            assert a[0] < b[0], "y1 not strictly increasing"
            assert a[1] > b[1], "y2 not strictly decreasing"
        # convexity: slopes must become less steep (nondecreasing)
        for (a, b), (c, d) in zip(zip(pts[:-1], pts[1:]), zip(pts[1:-1], pts[2:])):
            s1 = (b[1] - a[1]) / (b[0] - a[0])
            s2 = (d[1] - c[1]) / (d[0] - c[0])
            assert s2 >= s1 - tol * max(1.0, scale), "frontier not convex"
        for i in range(1, len(pts) - 1):
            a, b, c = pts[i - 1], pts[i], pts[i + 1]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
            assert abs(cross) > tol * scale * max(1.0, scale), "collinear vertices survived"
        return True


def segment_normal(a, b):
    """Inward normal of the frontier segment from a to b, components summing to one."""
    if not (a[0] < b[0] and a[1] > b[1]):
        raise DegenerateSegmentError("segment endpoints must be strictly ordered")
    return normalize_direction(a[1] - b[1], b[0] - a[0])


class IncumbentArchive:
    """Nondominated archive of feasible criteria points with their solutions."""

    def __init__(self):
        self.points = []
        self.solution_lists = []

    def __len__(self):
        return len(self.points)

    def equiv(self):
        """Mapping from archived point to the list of solutions attaining it."""
        return {p: list(sols) for p, sols in zip(self.points, self.solution_lists)}

    def copy(self):
        fresh = IncumbentArchive()
        fresh.points = list(self.points)
        fresh.solution_lists = [list(s) for s in self.solution_lists]
        return fresh


def _same_solution(a, b):
    va = getattr(a, "values", a)
    vb = getattr(b, "values", b)
    if len(va) != len(vb):
        return False
    return all(x == y for x, y in zip(va, vb))


def update_archive(arch, y, xs, tol=TOL_GEOM):
    """Insert feasible point y with solutions xs, keeping the archive nondominated.

    Equal points merge their solution lists, a dominated candidate leaves the
    archive unchanged, and a dominating candidate evicts what it dominates.
    Returns the archive.
    """
    y = Point(float(y[0]), float(y[1]))
    scale = max(1.0, abs(y[0]), abs(y[1]))
    eq = tol * scale
    for i, p in enumerate(arch.points):
        if abs(p[0] - y[0]) <= eq and abs(p[1] - y[1]) <= eq:
            for x in xs:
                if not any(_same_solution(x, old) for old in arch.solution_lists[i]):
                    arch.solution_lists[i].append(x)
            return arch
    for p in arch.points:
        if dominates(p, y, tol):
            return arch
    keep_p, keep_s = [], []
    for p, sols in zip(arch.points, arch.solution_lists):
        if not dominates(y, p, tol):
            keep_p.append(p)
            keep_s.append(sols)
    keep_p.append(y)
    keep_s.append(list(xs))
    order = sorted(range(len(keep_p)), key=lambda i: (keep_p[i][0], keep_p[i][1]))
    arch.points = [keep_p[i] for i in order]
    arch.solution_lists = [keep_s[i] for i in order]
    return arch


def local_nadirs(arch):
    """Corner points between consecutive archive entries; empty for size <= 1."""
    pts = arch.points if isinstance(arch, IncumbentArchive) else list(arch)
    return [Point(b[0], a[1]) for a, b in zip(pts[:-1], pts[1:])]


def dominance_test(lbs, nadirs, tol=TOL_GEOM):
    """True iff no nadir sits strictly above any supporting segment of lbs.

    This is the conservative segment-wise check: a single pair (segment,
    nadir) with lam.u > lam.y already vetoes fathoming, even when the nadir
    lies outside the dominant region.  A one-point bound set degenerates to
    the componentwise test against that point.
    """
    pts = lbs.points if isinstance(lbs, LowerBoundSet) else list(lbs)
    if not nadirs:
        return True
    scale = max(_scale(pts), _scale(nadirs))
    if len(pts) == 1:
        p = pts[0]
        for u in nadirs:
            if u[0] >= p[0] - tol * scale and u[1] >= p[1] - tol * scale:
                return False
        return True
    for a, b in zip(pts[:-1], pts[1:]):
        lam = segment_normal(a, b)
        level = lam.l1 * a[0] + lam.l2 * a[1]
        for u in nadirs:
            if lam.l1 * u[0] + lam.l2 * u[1] > level + tol * scale:
                return False
    return True


def _strictly_below(lbs, y, tol=TOL_GEOM):
    """True iff y sits strictly under a supporting segment line of lbs.

    For a one-point set the test degenerates to y dominating that point.
    Deliberately segment-based rather than region-based: a point beyond the
    frontier's x-range but above every segment line is treated as foldable.
    """
    pts = lbs.points
    scale = max(_scale(pts), abs(y[0]), abs(y[1]), 1.0)
    eps = tol * scale
    if len(pts) == 1:
        p = pts[0]
        return (
            y[0] <= p[0] + eps
            and y[1] <= p[1] + eps
            and (y[0] < p[0] - eps or y[1] < p[1] - eps)
        )
    for a, b in zip(pts[:-1], pts[1:]):
        lam = segment_normal(a, b)
        if lam.l1 * y[0] + lam.l2 * y[1] < lam.l1 * a[0] + lam.l2 * a[1] - eps:
            return True
    return False


def _halfspace_cut(points, solutions, lam, level, tol=TOL_GEOM):
    """Intersect the dominant region with {p : lam.p >= level}.

    Returns the new (points, solutions, changed) triple.  The halfplane
    boundary is intersected with every frontier piece including both end
    rays; vertices falling strictly below the boundary are dropped.
    """
    l1, l2 = lam
    scale = max(_scale(points), abs(level), 1.0)
    eps = tol * scale
    vals = [l1 * p[0] + l2 * p[1] for p in points]
    if min(vals) >= level - eps:
        return list(points), list(solutions), False
    crossings = []
    first, last = points[0], points[-1]
    if l2 > tol:  # vertical end ray x = first.y1, y >= first.y2
        yy = (level - l1 * first[0]) / l2
        if yy >= first[1] - eps:
            crossings.append(Point(first[0], yy))
    if l1 > tol:  # horizontal end ray y = last.y2, x >= last.y1
        xx = (level - l2 * last[1]) / l1
        if xx >= last[0] - eps:
            crossings.append(Point(xx, last[1]))
    for a, b in zip(points[:-1], points[1:]):
        denom = l1 * (b[0] - a[0]) + l2 * (b[1] - a[1])
        if abs(denom) <= tol * scale:
            continue  # boundary parallel to this segment
        t = (level - (l1 * a[0] + l2 * a[1])) / denom
        if -tol <= t <= 1.0 + tol:
            t = min(max(t, 0.0), 1.0)
            crossings.append(Point(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
    keep_p = [p for p, v in zip(points, vals) if v >= level - eps]
    keep_s = [s for s, v in zip(solutions, vals) if v >= level - eps]
    keep_p.extend(crossings)
    keep_s.extend([None] * len(crossings))
    new_p, new_s = _canonicalize(keep_p, keep_s, tol)
    return new_p, new_s, True


def intersect_update(lbs, lam, y, solution=None, tol=TOL_GEOM):
    """Fold the supporting halfplane {p : lam.p >= lam.y} into lbs and insert y.

    If y lies strictly below the frontier of lbs the set is returned
    unchanged with inserted=False.  Otherwise the region is cut by the
    halfplane, boundary crossings become vertices, y is inserted, and the
    canonical frontier (no collinear triples) is returned with
    inserted=True.
    """
    lam = normalize_direction(lam[0], lam[1])
    y = Point(float(y[0]), float(y[1]))
    if _strictly_below(lbs, y, tol):
        return lbs, False
    level = lam.l1 * y[0] + lam.l2 * y[1]
    pts, sols, _ = _halfspace_cut(lbs.points, lbs.solutions, lam, level, tol)
    pts.append(y)
    sols.append(solution)
    pts, sols = _canonicalize(pts, sols, tol)
    return LowerBoundSet(pts, sols), True


def intersect_lbs(a, b, tol=TOL_GEOM):
    """Frontier of the intersection of the dominant regions of a and b.

    Folds every supporting halfplane of b (both end rays and each segment)
    into a copy of a.  Payloads of a survive where its vertices do.
    """
    pts = list(a.points)
    sols = list(a.solutions)
    bp = b.points
    pts, sols, _ = _halfspace_cut(pts, sols, ScalarDirection(1.0, 0.0), bp[0][0], tol)
    pts, sols, _ = _halfspace_cut(pts, sols, ScalarDirection(0.0, 1.0), bp[-1][1], tol)
    for u, v in zip(bp[:-1], bp[1:]):
        lam = segment_normal(u, v)
        level = lam.l1 * u[0] + lam.l2 * u[1]
        pts, sols, _ = _halfspace_cut(pts, sols, lam, level, tol)
    pts, sols = _canonicalize(pts, sols, tol)
    return LowerBoundSet(pts, sols)
