"""Optional in-process recording of solver artifacts for validation.

Hooks are inert unless a recorder is active, so regular runs pay a single
context-variable lookup per emission.  Recording is scoped with a context
manager, which keeps nested solves (oracle inside engine inside benchmark)
composable without global switches.
"""

import random
from contextlib import contextmanager
from contextvars import ContextVar

_ACTIVE = ContextVar("boblp_recorder", default=None)


class Recorder:
    """Collects emitted cuts, oracle hyperplanes, and sampled node bounds."""

    def __init__(self, node_cap=50, seed=0):
        self.cuts = []
        self.hyperplanes = []
        self.nodes = []
        self.node_cap = node_cap
        self.nodes_seen = 0
        self._rng = random.Random(seed)

    def add_cut(self, inst, cut, targets):
        self.cuts.append((inst, cut, list(targets)))

    def add_hyperplane(self, model, lam, point):
        self.hyperplanes.append((model, lam, point))

    def add_node(self, model, lbs):
        # reservoir sample, long sweeps keep bounded memory
        self.nodes_seen += 1
        if len(self.nodes) < self.node_cap:
            self.nodes.append((model, lbs))
            return
        k = self._rng.randrange(self.nodes_seen)
        if k < self.node_cap:
            self.nodes[k] = (model, lbs)


@contextmanager
def recording(rec):
    token = _ACTIVE.set(rec)
    try:
        yield rec
    finally:
        _ACTIVE.reset(token)


def emit_cut(inst, cut, targets):
    rec = _ACTIVE.get()
    if rec is not None:
        rec.add_cut(inst, cut, targets)


def emit_hyperplane(model, lam, point):
    rec = _ACTIVE.get()
    if rec is not None:
        rec.add_hyperplane(model, lam, point)


def emit_node(model, lbs):
    rec = _ACTIVE.get()
    if rec is not None:
        rec.add_node(model, lbs)
