"""Problem data: instances, solutions, text IO and random generation.

An instance is min (c1.x, c2.x) over x in {0,1}^n subject to m linear rows
with senses <=, >= or =.  Generated families mirror common benchmark
recipes (knapsack, multi-demand multi-dimensional knapsack, set covering,
set partitioning, assignment, uncapacitated facility location) with the
second objective negatively correlated to the first.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from boblp.geometry import Point
from boblp.prng import SplitMix64

TOL_INT = 1e-6
TOL_FEAS = 1e-6

FAMILIES = (
    "knapsack",
    "mdm-knapsack",
    "set-covering",
    "set-partitioning",
    "assignment",
    "uflp",
)

SENSES = ("<=", ">=", "=")


class ParseError(ValueError):
    pass


class GenerationError(ValueError):
    pass


class SolutionVec(NamedTuple):
    """A (possibly fractional) assignment to the n binaries."""

    values: tuple
    integral: bool


def make_solution(values, tol=TOL_INT):
    vals = tuple(float(v) for v in values)
    integral = all(min(v, 1.0 - v) <= tol for v in vals)
    if integral:
        vals = tuple(0.0 if v < 0.5 else 1.0 for v in vals)
    return SolutionVec(vals, integral)


@dataclass(frozen=True)
class Instance:
    """Immutable bi-objective binary program."""

    n: int
    m: int
    c1: np.ndarray
    c2: np.ndarray
    A: np.ndarray
    senses: tuple
    b: np.ndarray
    name: str = "instance"

    def __post_init__(self):
        c1 = np.asarray(self.c1, dtype=float)
        c2 = np.asarray(self.c2, dtype=float)
        A = np.asarray(self.A, dtype=float).reshape(self.m, self.n) if self.m else np.zeros((0, self.n))
        b = np.asarray(self.b, dtype=float).reshape(self.m)
        if self.n < 1:
            raise ValueError("need at least one variable")
        if c1.shape != (self.n,) or c2.shape != (self.n,):
            raise ValueError("objective length mismatch")
        if A.shape != (self.m, self.n):
            raise ValueError("matrix shape mismatch")
        if len(self.senses) != self.m:
            raise ValueError("senses length mismatch")
        for s in self.senses:
            if s not in SENSES:
                raise ValueError(f"unknown sense {s!r}")
        for arr in (c1, c2, A, b):
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite coefficient")
            arr.setflags(write=False)
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "c2", c2)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "senses", tuple(self.senses))


def evaluate(inst, x):
    vals = np.asarray(getattr(x, "values", x), dtype=float)
    return Point(float(inst.c1 @ vals), float(inst.c2 @ vals))


def is_feasible(inst, x, tol=TOL_FEAS):
    if isinstance(x, SolutionVec):
        if not x.integral:
            raise ValueError("non-integral input")
        vals = np.asarray(x.values)
    else:
        vals = np.asarray(x, dtype=float)
        if np.any(np.minimum(vals, 1.0 - vals) > TOL_INT):
            raise ValueError("non-integral input")
        vals = np.round(vals)
    lhs = inst.A @ vals
    for i, s in enumerate(inst.senses):
        if s == "<=" and lhs[i] > inst.b[i] + tol:
            return False
        if s == ">=" and lhs[i] < inst.b[i] - tol:
            return False
        if s == "=" and abs(lhs[i] - inst.b[i]) > tol:
            return False
    return True


# ---------------------------------------------------------------- text IO

def _tokens(text):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line.split()


def _number(tok):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"bad numeric token {tok!r}")
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {tok!r}")
    return v


def parse_instance(text, name="instance"):
    """Parse the line-oriented text format.

    Line 1 holds ``n m``, lines 2-3 the two cost vectors, then m rows of
    n coefficients, a sense token and the right-hand side.  ``#`` starts
    a comment.
    """
    lines = list(_tokens(text))
    if not lines or len(lines[0]) != 2:
        raise ParseError("malformed header: expected 'n m'")
    try:
        n, m = int(lines[0][0]), int(lines[0][1])
    except ValueError:
        raise ParseError("malformed header: counts must be integers")
    if n < 1 or m < 0:
        raise ParseError("malformed header: need n >= 1, m >= 0")
    if len(lines) != 3 + m:
        raise ParseError(f"dimension mismatch: expected {3 + m} content lines, got {len(lines)}")
    if len(lines[1]) != n or len(lines[2]) != n:
        raise ParseError("dimension mismatch: objective rows must have n entries")
    c1 = [_number(t) for t in lines[1]]
    c2 = [_number(t) for t in lines[2]]
    A, senses, b = [], [], []
    for k in range(m):
        row = lines[3 + k]
        if len(row) != n + 2:
            raise ParseError(f"dimension mismatch in row {k + 1}: expected {n + 2} tokens")
        if row[n] not in SENSES:
            raise ParseError(f"unknown sense token {row[n]!r} in row {k + 1}")
        A.append([_number(t) for t in row[:n]])
        senses.append(row[n])
        b.append(_number(row[n + 1]))
    return Instance(n=n, m=m, c1=c1, c2=c2, A=np.array(A).reshape(m, n), senses=tuple(senses), b=b, name=name)


def _fmt(v):
    return str(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(float(v))


def serialize_instance(inst):
    out = [f"{inst.n} {inst.m}"]
    out.append(" ".join(_fmt(v) for v in inst.c1))
    out.append(" ".join(_fmt(v) for v in inst.c2))
    for i in range(inst.m):
        row = " ".join(_fmt(v) for v in inst.A[i])
        out.append(f"{row} {inst.senses[i]} {_fmt(inst.b[i])}")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------- generation

@dataclass(frozen=True)
class GeneratorConfig:
    family: str
    n: int
    seed: int
    target_rho: float = -0.92
    density_range: tuple = (0.10, 0.30)
    cost_range: tuple = (1, 100)
    capacity_ratio: float = 0.5
    knapsack_rows: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if not (-1.0 <= self.target_rho < 0.0):
            raise ValueError("target_rho must lie in [-1, 0)")
        lo, hi = self.density_range
        if not (0.0 < lo <= hi <= 1.0):
            raise ValueError("density_range must be ordered within (0, 1]")
        clo, chi = self.cost_range
        if not (1 <= clo <= chi):
            raise ValueError("cost_range must be ordered positive integers")
        if not (0.0 < self.capacity_ratio < 1.0):
            raise ValueError("capacity_ratio must lie in (0, 1)")
        if self.knapsack_rows < 1:
            raise ValueError("knapsack_rows must be at least 1")


def _uniform_costs(rng, n, lo=1, hi=100):
    return np.array([rng.randint(lo, hi) for _ in range(n)], dtype=float)


def _correlated_costs(rng, c1, rho, lo=1, hi=100):
    """Second objective with empirical Pearson correlation rho to c1.

    The noise vector is orthogonalized against the standardized first
    objective, so before rounding the sample correlation equals rho
    exactly; integer rounding into [lo, hi] perturbs it only slightly.
    """
    n = len(c1)
    if n < 3 or np.ptp(c1) == 0:
        return _uniform_costs(rng, n, lo, hi)
    z = (c1 - c1.mean()) / c1.std()
    for _ in range(100):
        eps = np.array([rng.normal() for _ in range(n)])
        eps -= eps.mean()
        eps -= (eps @ z) / (z @ z) * z
        norm = math.sqrt(float(eps @ eps) / n)
        if norm > 1e-9:
            break
    else:
        raise GenerationError("could not draw a noise vector independent of c1")
    w = rho * z + math.sqrt(1.0 - rho * rho) * (eps / norm)
    span = np.ptp(w)
    if span == 0:
        return np.full(n, float((lo + hi) // 2))
    scaled = lo + (hi - lo) * (w - w.min()) / span
    return np.round(scaled)


def _binary_row(rng, n, density_range):
    lo, hi = density_range
    for _ in range(100):
        density = lo + (hi - lo) * rng.random()
        row = np.array([1.0 if rng.random() < density else 0.0 for _ in range(n)])
        if row.any():
            return row
    raise GenerationError("could not draw a nonempty row in 100 tries")


def _gen_knapsack(rng, n, ratio=0.5, rows=1):
    A, b = [], []
    for _ in range(rows):
        a = _uniform_costs(rng, n)
        A.append(a)
        b.append(max(1.0, round(ratio * a.sum())))
    return n, np.vstack(A), ("<=",) * rows, b


def _gen_mdm_knapsack(rng, n):
    # a few <= capacity rows plus >= demand rows, in the style of
    # multi-demand multi-dimensional knapsack generators
    m_le = rng.randint(2, 4)
    m_ge = rng.randint(1, 2)
    A, senses, b = [], [], []
    for _ in range(m_le):
        a = _uniform_costs(rng, n)
        A.append(a)
        senses.append("<=")
        b.append(max(1.0, round(0.5 * a.sum())))
    for _ in range(m_ge):
        a = _uniform_costs(rng, n)
        A.append(a)
        senses.append(">=")
        b.append(max(1.0, round(0.25 * a.sum())))
    return n, np.vstack(A), tuple(senses), b


def _gen_set_system(rng, n, density_range, sense):
    m = rng.randint(max(1, n // 10), max(1, 3 * n // 10))
    rows = [_binary_row(rng, n, density_range) for _ in range(m)]
    return m, np.vstack(rows), (sense,) * m, [1.0] * m


def _gen_set_partitioning(rng, n, density_range):
    """Partitioning rows with a planted feasible column subset."""
    m = rng.randint(max(1, n // 10), max(1, 3 * n // 10))
    s = rng.randint(2, max(2, min(n, m + 1)))
    cols = list(range(n))
    for i in range(s):  # partial Fisher-Yates for the planted columns
        j = rng.randint(i, n - 1)
        cols[i], cols[j] = cols[j], cols[i]
    planted = cols[:s]
    A = np.zeros((m, n))
    for i in range(m):
        A[i, planted[rng.randint(0, s - 1)]] = 1.0
    lo, hi = density_range
    for j in range(n):
        if j in planted:
            continue
        density = lo + (hi - lo) * rng.random()
        for i in range(m):
            if rng.random() < density:
                A[i, j] = 1.0
    return m, A, ("=",) * m, [1.0] * m


def _gen_assignment(rng, n):
    k = max(2, math.isqrt(n))
    nn = k * k
    A = np.zeros((2 * k, nn))
    for i in range(k):
        A[i, i * k : (i + 1) * k] = 1.0  # agent i picks one task
        A[k + i, i::k] = 1.0  # task i taken by one agent
    return nn, 2 * k, A, ("=",) * (2 * k), [1.0] * (2 * k)


def _gen_uflp(rng, n):
    f = max(2, math.isqrt(n))
    g = max(1, (n - f) // f)
    nn = f + f * g
    rows, senses, b = [], [], []
    for j in range(g):  # every client assigned exactly once
        row = np.zeros(nn)
        row[f + j::g] = 1.0
        rows.append(row)
        senses.append("=")
        b.append(1.0)
    for i in range(f):  # assignment only to an open facility
        for j in range(g):
            row = np.zeros(nn)
            row[f + i * g + j] = 1.0
            row[i] = -1.0
            rows.append(row)
            senses.append("<=")
            b.append(0.0)
    return nn, len(rows), np.vstack(rows), tuple(senses), b


def generate(config):
    """Deterministically generate an instance of the configured family."""
    rng = SplitMix64(config.seed)
    fam = config.family
    if fam == "knapsack":
        nn, A, senses, b = _gen_knapsack(
            rng, config.n, config.capacity_ratio, config.knapsack_rows
        )
    elif fam == "mdm-knapsack":
        nn, A, senses, b = _gen_mdm_knapsack(rng, config.n)
    elif fam == "set-covering":
        nn = config.n
        m, A, senses, b = _gen_set_system(rng, nn, config.density_range, ">=")
    elif fam == "set-partitioning":
        nn = config.n
        m, A, senses, b = _gen_set_partitioning(rng, nn, config.density_range)
    elif fam == "assignment":
        nn, m, A, senses, b = _gen_assignment(rng, config.n)
    else:
        nn, m, A, senses, b = _gen_uflp(rng, config.n)
    clo, chi = config.cost_range
    c1 = _uniform_costs(rng, nn, clo, chi)
    c2 = _correlated_costs(rng, c1, config.target_rho, clo, chi)
    if fam == "knapsack":
        # profit selection written as minimization of negated profits;
        # positive costs under a pure <= row would make x = 0 optimal
        # for both objectives and the frontier a single point
        c1, c2 = -c1, -c2
    name = f"{fam}-n{nn}-s{config.seed}"
    return Instance(n=nn, m=len(b), c1=c1, c2=c2, A=A, senses=senses, b=b, name=name)
