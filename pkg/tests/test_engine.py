"""Tests for the branch-and-cut tree: fathoming, branching, full solves."""

import gc
import weakref

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boblp.baselines import brute_force
from boblp.cuts import CutPool
from boblp.engine import (
    BRANCHED,
    FATHOMED_DOMINANCE,
    FATHOMED_INFEASIBLE,
    FATHOMED_INTEGRITY,
    BranchAndCut,
    EngineConfig,
    Node,
    SolveReport,
    cut_and_branch,
    solve,
)
from boblp.geometry import LowerBoundSet, Point, update_archive
from boblp.lp import LpModel
from boblp.model import Instance


def make_instance(c1, c2, A, senses, b):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return Instance(
        n=A.shape[1],
        m=A.shape[0],
        c1=np.asarray(c1, dtype=float),
        c2=np.asarray(c2, dtype=float),
        A=A,
        senses=tuple(senses),
        b=np.asarray(b, dtype=float),
    )


PACK = make_instance([-1, 0], [0, -1], [[1, 1]], ["<="], [1])
CONTRADICTORY = make_instance([1, 1], [1, 1], [[1, 0], [1, 0]], [">=", "<="], [1, 0])
FREE_ONE = make_instance([1], [-1], np.zeros((0, 1)), [], [])

ALL_ALGOS = ("bb", "bc-mp", "bc-isc", "bc-isc-mp", "cut-branch")


def ynd_tuples(report):
    return [tuple(p) for p in report.ynd]


def efficient_sets(report):
    return {tuple(p): sorted(s.values for s in sols) for p, sols in report.efficient.items()}


def fresh_root(inst):
    return Node(id=0, depth=0, model=LpModel(inst), pool=CutPool())


# ---------------------------------------------------------------------------
# configuration


def test_config_rejects_unknown_algo():
    with pytest.raises(ValueError):
        EngineConfig(algo="simplex")


def test_config_rejects_bad_selection_and_strategy():
    with pytest.raises(ValueError):
        EngineConfig(node_select="best")
    with pytest.raises(ValueError):
        EngineConfig(lambda_strategy="spread")


def test_config_rejects_nonpositive_budget_and_time():
    with pytest.raises(ValueError):
        EngineConfig(lambda_budget=0)
    with pytest.raises(ValueError):
        EngineConfig(time_limit=0.0)


# ---------------------------------------------------------------------------
# solve


def test_solve_two_variable_packing():
    report = solve(PACK)
    assert ynd_tuples(report) == [(-1.0, 0.0), (0.0, -1.0)]
    assert efficient_sets(report) == {
        (-1.0, 0.0): [(1.0, 0.0)],
        (0.0, -1.0): [(0.0, 1.0)],
    }


def test_solve_contradictory_rows_is_empty():
    report = solve(CONTRADICTORY)
    assert report.ynd == []
    assert report.efficient == {}


def test_solve_single_variable_unconstrained():
    report = solve(FREE_ONE)
    assert ynd_tuples(report) == [(0.0, 0.0), (1.0, -1.0)]
    assert efficient_sets(report) == {(0.0, 0.0): [(0.0,)], (1.0, -1.0): [(1.0,)]}


@pytest.mark.parametrize("algo", ALL_ALGOS)
@pytest.mark.parametrize("epb", [False, True])
def test_solve_every_algorithm_agrees(algo, epb):
    report = solve(PACK, EngineConfig(algo=algo, epb=epb))
    assert ynd_tuples(report) == [(-1.0, 0.0), (0.0, -1.0)]


def test_solve_collects_equivalent_solutions():
    twin = make_instance([-1, -1, 0], [0, 0, -1], [[1, 1, 1]], ["<="], [1])
    for cfg in (EngineConfig(), EngineConfig(epb=True), EngineConfig(algo="bc-isc")):
        report = solve(twin, cfg)
        eff = efficient_sets(report)
        assert eff[(-1.0, 0.0)] == [(0.0, 1.0, 0.0), (1.0, 0.0, 0.0)]
        assert eff[(0.0, -1.0)] == [(0.0, 0.0, 1.0)]


def test_report_fields_populated():
    report = solve(PACK)
    assert isinstance(report, SolveReport)
    assert report.nodes_explored >= 1
    assert report.wall_time >= 0.0
    assert report.timed_out is False
    assert report.sp_cuts == 0 and report.mp_cuts == 0


def test_tiny_time_limit_reports_timeout():
    report = solve(PACK, EngineConfig(time_limit=1e-9))
    assert report.timed_out is True
    assert report.nodes_explored == 0
    assert report.ynd == []


def test_random_selection_is_deterministic_per_seed():
    inst = make_instance([-2, -3, -1, -4], [-4, -1, -3, -2], [[3, 2, 4, 1]], ["<="], [5])
    cfg = EngineConfig(node_select="random", epb=True, seed=11)
    a = solve(inst, cfg)
    b = solve(inst, cfg)
    assert ynd_tuples(a) == ynd_tuples(b)
    assert a.nodes_explored == b.nodes_explored
    assert efficient_sets(a) == efficient_sets(b)


# ---------------------------------------------------------------------------
# process_node


def test_infeasible_fixings_fathom():
    eng = BranchAndCut(PACK, EngineConfig())
    node = fresh_root(PACK)
    node.model = node.model.with_fixing(0, 1).with_fixing(1, 1)
    assert eng.process_node(node) == FATHOMED_INFEASIBLE
    assert node.state == FATHOMED_INFEASIBLE
    assert eng.frontier == []


def test_singleton_integral_node_fathoms_and_archives():
    eng = BranchAndCut(PACK, EngineConfig())
    node = fresh_root(PACK)
    node.model = node.model.with_fixing(0, 1)
    assert eng.process_node(node) == FATHOMED_INTEGRITY
    assert [tuple(p) for p in eng.archive.points] == [(-1.0, 0.0)]
    assert eng.archive.solution_lists[0][0].values == (1.0, 0.0)


def test_dominated_bound_set_fathoms():
    # relaxation frontier is exactly {(0,4),(4,0)}; the preloaded archive
    # has local nadir (1,1), which sits below the chord
    inst = make_instance([4, 0], [0, 4], [[1, 1]], [">="], [1])
    eng = BranchAndCut(inst, EngineConfig())
    update_archive(eng.archive, Point(0.0, 1.0), [])
    update_archive(eng.archive, Point(1.0, 0.0), [])
    node = fresh_root(inst)
    assert eng.process_node(node) == FATHOMED_DOMINANCE
    assert [tuple(p) for p in eng.archive.points] == [(0.0, 1.0), (1.0, 0.0)]


def test_node_with_room_below_archive_branches():
    inst = make_instance([4, 0], [0, 4], [[1, 1]], [">="], [1])
    eng = BranchAndCut(inst, EngineConfig())
    update_archive(eng.archive, Point(2.0, 3.0), [])
    update_archive(eng.archive, Point(3.0, 2.0), [])
    node = fresh_root(inst)
    assert eng.process_node(node) == BRANCHED
    assert len(eng.frontier) == 2


# ---------------------------------------------------------------------------
# branch


def epb_engine(lbs_points):
    inst = make_instance([4, 0], [0, 4], [[1, 1]], [">="], [1])
    eng = BranchAndCut(inst, EngineConfig(epb=True))
    for p in (Point(0.0, 5.0), Point(3.0, 3.0), Point(6.0, 0.0)):
        update_archive(eng.archive, p, [])
    node = fresh_root(inst)
    node.lbs = LowerBoundSet([Point(*q) for q in lbs_points])
    return eng, node


def test_branch_pareto_children_per_unseen_nadir():
    eng, node = epb_engine([(1.0, 6.0), (7.0, 1.0)])
    children = eng.branch(node)
    assert len(children) == 2
    assert children[0].objective_bounds == ((1, 3.0), (2, 5.0))
    assert children[1].objective_bounds == ((1, 6.0), (2, 3.0))
    first_rows = children[0].model.extra_rows
    assert [(list(r[0]), r[1], r[2]) for r in first_rows] == [
        ([4.0, 0.0], "<=", 3.0),
        ([0.0, 4.0], "<=", 5.0),
    ]
    for child in children:
        assert child.model.fixings == node.model.fixings
        assert child.nadirs_seen == {(3.0, 5.0), (6.0, 3.0)}
        assert child.inherited is node.lbs
        assert child.pool.parent is node.pool


def test_branch_falls_back_when_a_nadir_was_seen():
    eng, node = epb_engine([(1.0, 6.0), (7.0, 1.0)])
    node.nadirs_seen = frozenset({(3.0, 5.0)})
    children = eng.branch(node)
    assert len(children) == 2
    assert children[0].model.fixings == {0: 0}
    assert children[1].model.fixings == {0: 1}
    assert all(c.nadirs_seen == node.nadirs_seen for c in children)


def test_branch_falls_back_when_bound_reaches_archive_strip():
    # frontier first point ties the best archived y1, so the left strip may
    # still hold an equivalent solution and quadrant children are unsafe
    eng, node = epb_engine([(0.0, 4.0), (7.0, 1.0)])
    children = eng.branch(node)
    assert [c.model.fixings for c in children] == [{0: 0}, {0: 1}]


def test_branch_without_epb_fixes_lowest_free_variable():
    inst = make_instance([4, 0], [0, 4], [[1, 1]], [">="], [1])
    eng = BranchAndCut(inst, EngineConfig())
    node = fresh_root(inst)
    node.model = node.model.with_fixing(0, 1)
    node.lbs = LowerBoundSet([Point(0.0, 0.0)])
    children = eng.branch(node)
    assert [c.model.fixings for c in children] == [{0: 1, 1: 0}, {0: 1, 1: 1}]
    assert all(c.depth == node.depth + 1 and c.parent == node.id for c in children)


# ---------------------------------------------------------------------------
# select_node


def label_nodes(eng, labels):
    eng.frontier = [
        Node(id=i, depth=0, model=LpModel(PACK), pool=CutPool())
        for i, _ in enumerate(labels)
    ]
    return {node.id: lab for node, lab in zip(eng.frontier, labels)}


def test_breadth_selection_is_fifo():
    eng = BranchAndCut(PACK, EngineConfig(node_select="breadth"))
    names = label_nodes(eng, "abc")
    assert names[eng.select_node().id] == "a"


def test_depth_selection_is_lifo():
    eng = BranchAndCut(PACK, EngineConfig(node_select="depth"))
    names = label_nodes(eng, "abc")
    assert names[eng.select_node().id] == "c"


def test_random_selection_reproducible():
    draws = []
    for _ in range(2):
        eng = BranchAndCut(PACK, EngineConfig(node_select="random", seed=5))
        label_nodes(eng, "abcdef")
        draws.append([eng.select_node().id for _ in range(6)])
    assert draws[0] == draws[1]
    assert sorted(draws[0]) == [0, 1, 2, 3, 4, 5]


# ---------------------------------------------------------------------------
# cut_and_branch


def test_cut_and_branch_integral_root_adds_no_cuts():
    report = cut_and_branch(PACK)
    assert ynd_tuples(report) == [(-1.0, 0.0), (0.0, -1.0)]
    assert report.sp_cuts == 0 and report.mp_cuts == 0


def test_cut_and_branch_fractional_root_gains_cover_cut():
    knap = make_instance([-3, -2, -1], [-1, -2, -3], [[2, 2, 2]], ["<="], [3])
    # a node budget of zero keeps the oracle faces loose, so integralizing
    # the root frontier is left to the cover sweep
    report = cut_and_branch(knap, EngineConfig(ilp_limits=IlpLimits(node_limit=0)))
    truth = brute_force(knap)
    assert ynd_tuples(report) == ynd_tuples(truth)
    assert efficient_sets(report) == efficient_sets(truth)
    assert report.sp_cuts + report.mp_cuts >= 1


def test_cut_and_branch_infeasible_is_empty():
    report = cut_and_branch(CONTRADICTORY)
    assert report.ynd == [] and report.nodes_explored == 0


def test_cut_and_branch_forces_algo_on_config():
    report = cut_and_branch(PACK, EngineConfig(algo="bb", epb=True))
    assert ynd_tuples(report) == [(-1.0, 0.0), (0.0, -1.0)]


# ---------------------------------------------------------------------------
# memory lifecycle


def test_processed_node_is_released():
    eng = BranchAndCut(PACK, EngineConfig())
    root = fresh_root(PACK)
    eng.frontier = [root]
    eng.process_node(eng.select_node())
    children = list(eng.frontier)
    assert children and all(c.inherited is root.lbs for c in children)
    ref = weakref.ref(root)
    del root
    gc.collect()
    assert ref() is None, "processed node still referenced by the engine"


# ---------------------------------------------------------------------------
# exactness properties


@st.composite
def small_instances(draw):
    n = draw(st.integers(min_value=2, max_value=6))
    m = draw(st.integers(min_value=1, max_value=3))
    ints = st.integers(min_value=-4, max_value=4)
    c1 = draw(st.lists(ints, min_size=n, max_size=n))
    c2 = draw(st.lists(ints, min_size=n, max_size=n))
    A = [draw(st.lists(st.integers(min_value=-3, max_value=3), min_size=n, max_size=n)) for _ in range(m)]
    senses = [draw(st.sampled_from(["<=", ">=", "="])) for _ in range(m)]
    b = draw(st.lists(st.integers(min_value=-2, max_value=5), min_size=m, max_size=m))
    return make_instance(c1, c2, A, senses, b)


@settings(max_examples=60, deadline=None)
@given(
    inst=small_instances(),
    algo=st.sampled_from(ALL_ALGOS),
    epb=st.booleans(),
    budget=st.sampled_from([None, 2, 3]),
)
def test_every_configuration_matches_brute_force(inst, algo, epb, budget):
    truth = brute_force(inst)
    report = solve(inst, EngineConfig(algo=algo, epb=epb, lambda_budget=budget))
    assert ynd_tuples(report) == ynd_tuples(truth)
    assert efficient_sets(report) == efficient_sets(truth)


@settings(max_examples=40, deadline=None)
@given(inst=small_instances(), select=st.sampled_from(["depth", "breadth", "random"]))
def test_pareto_branching_keeps_every_equivalent(inst, select):
    truth = brute_force(inst)
    report = solve(inst, EngineConfig(epb=True, node_select=select, seed=2))
    assert ynd_tuples(report) == ynd_tuples(truth)
    assert efficient_sets(report) == efficient_sets(truth)
