"""Reference algorithms: exhaustive Pareto enumeration and epsilon-constraint.

Both return the same report type as the tree search so harnesses can swap
them in.  The brute-force path is the ground truth for small instances; the
epsilon-constraint method scans the nondominated set with one exact
lexicographic solve per point and is the classic O(|Y_N|) baseline.
"""

from dataclasses import dataclass
from time import perf_counter

import numpy as np

from boblp.engine import SolveReport
from boblp.geometry import IncumbentArchive, update_archive
from boblp.lp import INFEASIBLE, LpModel
from boblp.model import SolutionVec, evaluate, is_feasible
from boblp.oracle import LIMIT_REACHED, IlpLimits, ilp_solve

BRUTE_MAX_VARS = 26
ENUM_CHUNK = 1 << 16


class InstanceTooLargeError(ValueError):
    pass


class NonIntegralObjectiveError(ValueError):
    pass


@dataclass(frozen=True)
class EpsilonConfig:
    delta: float = 1.0
    time_limit: float = 3600.0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


def _feasible_mask(inst, X):
    lhs = X @ inst.A.T
    ok = np.ones(len(X), dtype=bool)
    for i, sense in enumerate(inst.senses):
        if sense == "<=":
            ok &= lhs[:, i] <= inst.b[i] + 1e-6
        elif sense == ">=":
            ok &= lhs[:, i] >= inst.b[i] - 1e-6
        else:
            ok &= np.abs(lhs[:, i] - inst.b[i]) <= 1e-6
    return ok


def brute_force(inst):
    """Exact nondominated set by enumerating all binary vectors in chunks."""
    if inst.n > BRUTE_MAX_VARS:
        raise InstanceTooLargeError(f"{inst.n} variables exceed the 2^{BRUTE_MAX_VARS} enumeration cap")
    start = perf_counter()
    n = inst.n
    bits = np.arange(n)
    images = {}
    for lo in range(0, 1 << n, ENUM_CHUNK):
        hi = min(lo + ENUM_CHUNK, 1 << n)
        codes = np.arange(lo, hi, dtype=np.int64)
        X = ((codes[:, None] >> bits[None, :]) & 1).astype(float)
        keep = _feasible_mask(inst, X)
        X = X[keep]
        y1 = X @ inst.c1
        y2 = X @ inst.c2
        for row, a, b in zip(X, y1, y2):
            images.setdefault((float(a), float(b)), []).append(
                SolutionVec(tuple(float(v) for v in row), True))
    # single sorted scan: survivors strictly improve the best second
    # coordinate seen so far
    arch = IncumbentArchive()
    best = float("inf")
    for y in sorted(images):
        if y[1] < best:
            best = y[1]
            update_archive(arch, y, images[y])
    return SolveReport(
        ynd=list(arch.points),
        efficient=arch.equiv(),
        nodes_explored=0,
        sp_cuts=0,
        mp_cuts=0,
        wall_time=perf_counter() - start,
        timed_out=False,
    )


def epsilon_constraint(inst, cfg=None):
    """Scan of the nondominated set by capped lexicographic solves.

    Each round minimizes the first objective under a cap on the second,
    breaks the tie by minimizing the second, records the point, then lowers
    the cap below what was just achieved.  The round count lands on
    |Y_N| + 1 because the final cap admits nothing.  Only one solution per
    point is found; equivalent ones need the tree search.
    """
    cfg = cfg if cfg is not None else EpsilonConfig()
    if cfg.delta == 1.0 and not np.allclose(inst.c2, np.round(inst.c2)):
        raise NonIntegralObjectiveError(
            "second objective must be integral for the unit default step")
    start = perf_counter()
    deadline = start + cfg.time_limit
    arch = IncumbentArchive()
    cap = None
    rounds = 0
    timed_out = False
    while True:
        remaining = deadline - perf_counter()
        if remaining <= 0:
            timed_out = True
            break
        limits = IlpLimits(time_limit=remaining)
        model = LpModel(inst)
        if cap is not None:
            model = model.with_rows([(inst.c2, "<=", cap)])
        rounds += 1
        stage1 = ilp_solve(model, (1.0, 0.0), limits)
        if stage1.status == INFEASIBLE:
            break
        if stage1.status == LIMIT_REACHED or stage1.incumbent is None:
            timed_out = True
            break
        v1 = float(inst.c1 @ np.asarray(stage1.incumbent.values))
        stage2 = ilp_solve(model.with_rows([(inst.c1, "<=", v1)]), (0.0, 1.0), limits)
        if stage2.status == LIMIT_REACHED or stage2.incumbent is None:
            timed_out = True
            break
        best = stage2.incumbent
        if __debug__:
            assert is_feasible(inst, best)
        y = evaluate(inst, best)
        update_archive(arch, y, [best])
        cap = y.y2 - cfg.delta
    return SolveReport(
        ynd=list(arch.points),
        efficient=arch.equiv(),
        nodes_explored=rounds,
        sp_cuts=0,
        mp_cuts=0,
        wall_time=perf_counter() - start,
        timed_out=timed_out,
    )
