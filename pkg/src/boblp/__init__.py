"""Exact solvers for bi-objective binary linear programs.

The package solves min (c1.x, c2.x) over binary x subject to linear rows,
returning the full nondominated point set together with every efficient
solution.  The main entry points are :func:`boblp.engine.solve` (criteria
space branch and bound with optional Pareto branching, cover cuts and
scalarized-ILP bound tightening), the baselines in :mod:`boblp.baselines`,
and the ``boblp`` command line tool.
"""

_EXPORTS = {
    "Instance": "boblp.model",
    "GeneratorConfig": "boblp.model",
    "generate": "boblp.model",
    "parse_instance": "boblp.model",
    "serialize_instance": "boblp.model",
    "Point": "boblp.geometry",
    "LowerBoundSet": "boblp.geometry",
    "IncumbentArchive": "boblp.geometry",
    "LinearCut": "boblp.cuts",
    "CutPool": "boblp.cuts",
    "MpConfig": "boblp.cuts",
    "IlpLimits": "boblp.oracle",
    "IlpOutcome": "boblp.oracle",
    "ilp_solve": "boblp.oracle",
    "isc_lbs": "boblp.oracle",
    "EngineConfig": "boblp.engine",
    "SolveReport": "boblp.engine",
    "solve": "boblp.engine",
    "cut_and_branch": "boblp.engine",
    "brute_force": "boblp.baselines",
    "epsilon_constraint": "boblp.baselines",
    "EpsilonConfig": "boblp.baselines",
}

__all__ = sorted(_EXPORTS)

__version__ = "0.1.0"


def __getattr__(name):
    # defer submodule imports so light users do not pay for the engine stack
    target = _EXPORTS.get(name)
    if target is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    import importlib

    return getattr(importlib.import_module(target), name)
