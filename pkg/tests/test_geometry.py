import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boblp.geometry import (
    DegenerateSegmentError,
    IncumbentArchive,
    LowerBoundSet,
    Point,
    dominance_test,
    dominates,
    intersect_lbs,
    intersect_update,
    local_nadirs,
    normalize_direction,
    segment_normal,
    update_archive,
)


def lbs(*pts):
    return LowerBoundSet([Point(*p) for p in pts])


def coords(s):
    return [(round(p.y1, 9), round(p.y2, 9)) for p in s.points]


class TestDominates:
    def test_strict(self):
        assert dominates((1, 2), (2, 3))

    def test_equal_points_do_not_dominate(self):
        assert not dominates((1, 2), (1, 2))

    def test_incomparable(self):
        assert not dominates((1, 3), (3, 1))
        assert not dominates((3, 1), (1, 3))

    def test_weak_one_coordinate(self):
        assert dominates((1, 2), (1, 3))


class TestArchive:
    def test_insert_between(self):
        arch = IncumbentArchive()
        update_archive(arch, (3, 5), [(0, 1)])
        update_archive(arch, (5, 2), [(1, 0)])
        update_archive(arch, (4, 4), [(1, 1)])
        assert arch.points == [(3, 5), (4, 4), (5, 2)]

    def test_equal_point_merges_solutions(self):
        arch = IncumbentArchive()
        update_archive(arch, (3, 5), [(0, 1)])
        update_archive(arch, (3, 5), [(1, 0)])
        assert arch.points == [(3, 5)]
        assert arch.equiv()[Point(3, 5)] == [(0, 1), (1, 0)]

    def test_equal_point_dedupes_identical_solution(self):
        arch = IncumbentArchive()
        update_archive(arch, (3, 5), [(0, 1)])
        update_archive(arch, (3, 5), [(0, 1)])
        assert arch.equiv()[Point(3, 5)] == [(0, 1)]

    def test_dominating_point_evicts(self):
        arch = IncumbentArchive()
        update_archive(arch, (3, 5), [(0, 1)])
        update_archive(arch, (4, 4), [(1, 1)])
        update_archive(arch, (3, 3), [(1, 0)])
        assert arch.points == [(3, 3)]

    def test_dominated_point_ignored(self):
        arch = IncumbentArchive()
        update_archive(arch, (3, 3), [(1, 0)])
        update_archive(arch, (4, 4), [(1, 1)])
        assert arch.points == [(3, 3)]

    @given(
        st.lists(
            st.tuples(st.integers(0, 12), st.integers(0, 12)),
            min_size=1,
            max_size=40,
        )
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_quadratic_filter(self, raw):
        arch = IncumbentArchive()
        for i, y in enumerate(raw):
            update_archive(arch, y, [("sol", i)])
        expected = sorted(
            {y for y in raw if not any(dominates(z, y) for z in raw)}
        )
        assert [(p.y1, p.y2) for p in arch.points] == [(float(a), float(b)) for a, b in expected]
        # every inserted solution survives under exactly its image point
        seen = [s for sols in arch.solution_lists for s in sols]
        keep = [("sol", i) for i, y in enumerate(raw) if not any(dominates(z, y) for z in raw)]
        assert sorted(seen) == sorted(keep)


class TestLocalNadirs:
    def test_three_points(self):
        arch = IncumbentArchive()
        for y in [(1, 5), (3, 3), (6, 1)]:
            update_archive(arch, y, [y])
        assert local_nadirs(arch) == [(3, 5), (6, 3)]

    def test_singleton_and_empty(self):
        arch = IncumbentArchive()
        assert local_nadirs(arch) == []
        update_archive(arch, (2, 2), [(0,)])
        assert local_nadirs(arch) == []


class TestSegmentNormal:
    def test_diagonal(self):
        assert segment_normal((0, 4), (4, 0)) == pytest.approx((0.5, 0.5))

    def test_shallow(self):
        lam = segment_normal((1, 6), (3, 5))
        assert lam == pytest.approx((1 / 3, 2 / 3))

    def test_degenerate(self):
        with pytest.raises(DegenerateSegmentError):
            segment_normal((0, 4), (0, 4))

    def test_normalized_direction_rejects_zero(self):
        with pytest.raises(ValueError):
            normalize_direction(0.0, 0.0)
        with pytest.raises(ValueError):
            normalize_direction(-1.0, 2.0)


class TestDominanceTest:
    def test_nadir_below_segment(self):
        assert dominance_test(lbs((0, 4), (4, 0)), [Point(1, 1)])

    def test_nadir_above_segment(self):
        assert not dominance_test(lbs((0, 4), (4, 0)), [Point(3, 3)])

    def test_singleton_componentwise(self):
        assert dominance_test(lbs((2, 2)), [Point(1, 1)])
        assert not dominance_test(lbs((2, 2)), [Point(3, 3)])

    def test_no_nadirs_vacuous(self):
        assert dominance_test(lbs((0, 4), (4, 0)), [])


class TestIntersectUpdate:
    def test_cut_through_segment_and_ray(self):
        # hyperplane 2*y1 + y2 = 7 crosses the up ray at (0,7) and the
        # segment at (3,1); the inserted (2,3) is collinear with those
        # crossings and gets pruned by canonicalization
        out, inserted = intersect_update(lbs((0, 4), (4, 0)), (2, 1), (2, 3))
        assert inserted
        assert coords(out) == [(0, 7), (3, 1), (4, 0)]
        out.validate()

    def test_point_below_frontier_skipped(self):
        base = lbs((0, 4), (4, 0))
        out, inserted = intersect_update(base, (1, 1), (1, 2))
        assert not inserted
        assert out is base

    def test_point_on_frontier_collinear_pruned(self):
        out, inserted = intersect_update(lbs((0, 4), (4, 0)), (1, 1), (2, 2))
        assert inserted
        assert coords(out) == [(0, 4), (4, 0)]

    def test_cut_right_ray(self):
        # vertical supporting line y1 = 2 clips the horizontal end ray
        out, inserted = intersect_update(lbs((0, 1)), (1, 0), (2, 1))
        assert inserted
        assert coords(out) == [(2, 1)]

    def test_singleton_dominating_point_skipped(self):
        base = lbs((0, 1))
        out, inserted = intersect_update(base, (1, 1), (-1, 0))
        assert not inserted
        assert out is base

    def test_singleton_incomparable_point_folds(self):
        # (2,0) neither dominates nor is dominated by (0,1); the fold keeps
        # the supporting-line semantics and may extend the region downward
        out, inserted = intersect_update(lbs((0, 1)), (1, 0), (2, 0))
        assert inserted
        assert coords(out) == [(2, 0)]

    def test_singleton_growth(self):
        # quadrant cut by p1+p2 >= 2; inserted (1,1) is collinear with the
        # two ray crossings and gets pruned
        out, inserted = intersect_update(lbs((0, 0)), (1, 1), (1, 1))
        assert inserted
        assert coords(out) == [(0, 2), (2, 0)]
        out.validate()


def _convex_lbs(xs, first_y, drops):
    """Build a strictly convex frontier from sorted xs and decreasing drops."""
    pts = [(float(xs[0]), float(first_y))]
    for (a, b), d in zip(zip(xs[:-1], xs[1:]), drops):
        pts.append((float(b), pts[-1][1] - d * (b - a)))
    return LowerBoundSet([Point(*p) for p in pts])


@st.composite
def lbs_strategy(draw):
    k = draw(st.integers(1, 6))
    xs = sorted(draw(st.sets(st.integers(-8, 8), min_size=k, max_size=k)))
    first_y = draw(st.integers(-5, 20))
    # strictly decreasing positive slopes keep the frontier convex and
    # free of collinear triples
    drops = sorted(
        draw(st.sets(st.sampled_from([0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0]),
                     min_size=k - 1, max_size=k - 1)),
        reverse=True,
    )
    return _convex_lbs(xs, first_y, drops)


class TestIntersectUpdateProperties:
    @given(
        lbs_strategy(),
        st.integers(1, 9),
        st.integers(1, 9),
        st.integers(-10, 10),
        st.integers(-10, 25),
    )
    @settings(max_examples=300, deadline=None)
    def test_invariants_hold(self, base, l1, l2, y1, y2):
        base.validate()
        out, inserted = intersect_update(base, (l1, l2), (y1, y2))
        out.validate()
        if not inserted:
            assert out is base

    @given(
        lbs_strategy(),
        st.integers(1, 9),
        st.integers(1, 9),
        st.integers(-10, 10),
        st.integers(-10, 25),
        st.lists(st.tuples(st.integers(-12, 12), st.integers(-12, 30)), max_size=12),
    )
    @settings(max_examples=300, deadline=None)
    def test_validity_preserved_for_supported_points(self, base, l1, l2, y1, y2, sample):
        """Points above the new supporting line keep their membership."""
        out, inserted = intersect_update(base, (l1, l2), (y1, y2))
        if not inserted:
            return
        lam = normalize_direction(l1, l2)
        level = lam.l1 * y1 + lam.l2 * y2
        for p in sample:
            supported = lam.l1 * p[0] + lam.l2 * p[1] >= level + 1e-6
            if supported and base.contains(p) and not out.contains(p, tol=1e-6):
                raise AssertionError(f"lost supported point {p}")

    @given(lbs_strategy(), st.lists(st.tuples(st.integers(-10, 10), st.integers(-10, 25)), max_size=8))
    @settings(max_examples=300, deadline=None)
    def test_dominance_true_implies_no_membership(self, base, nadirs):
        # push candidates well clear of the frontier so tolerance cannot blur
        # the implication being tested
        inside = [u for u in nadirs if base.contains(u, tol=1e-6)]
        clearly_inside = [
            u for u in inside if u[1] > base.height(u[0]) + 1e-3 and u[0] > base.first.y1 + 1e-3
        ]
        if dominance_test(base, nadirs):
            assert not clearly_inside


class TestIntersectLbs:
    def test_idempotent(self):
        a = lbs((0, 4), (4, 0))
        out = intersect_lbs(a, a)
        assert coords(out) == [(0, 4), (4, 0)]

    def test_nested_regions(self):
        a = lbs((0, 4), (4, 0))
        b = lbs((0, 10), (10, 0))
        assert coords(intersect_lbs(a, b)) == [(0, 10), (10, 0)]
        assert coords(intersect_lbs(b, a)) == [(0, 10), (10, 0)]

    def test_singletons(self):
        out = intersect_lbs(lbs((0, 0)), lbs((1, -1)))
        assert coords(out) == [(1, 0)]

    def test_partial_overlap(self):
        a = lbs((0, 4), (4, 0))
        b = lbs((2, 9), (3, -2))
        out = intersect_lbs(a, b)
        assert coords(out) == [(2, 9), (2.7, 1.3), (4, 0)]
        out.validate()

    @given(lbs_strategy(), lbs_strategy(), st.lists(st.tuples(st.integers(-12, 12), st.integers(-12, 30)), max_size=15))
    @settings(max_examples=200, deadline=None)
    def test_region_is_conjunction(self, a, b, sample):
        out = intersect_lbs(a, b)
        out.validate()
        for p in sample:
            both = a.contains(p, tol=1e-6) and b.contains(p, tol=1e-6)
            if both:
                assert out.contains(p, tol=1e-4)
            if out.contains(p, tol=-1e-4):
                # strictly inside the output must be inside both inputs
                assert a.contains(p, tol=1e-4) and b.contains(p, tol=1e-4)


class TestHeightAndContains:
    def test_height_interpolates(self):
        s = lbs((0, 4), (4, 0))
        assert s.height(2) == pytest.approx(2.0)
        assert s.height(6) == 0.0
        assert s.height(-1) == math.inf

    def test_contains_region(self):
        s = lbs((0, 4), (4, 0))
        assert s.contains((2, 2))
        assert s.contains((5, 0))
        assert s.contains((0, 9))
        assert not s.contains((1, 1))
        assert not s.contains((-1, 9))
