"""Geometry, power arithmetic, and the network data model.

Agents live at fixed positions in the unit square.  A link between agents
i and j costs both of them ``|r_i - r_j| ** delta`` units of power, and each
agent carries a running power ledger P(i) that is maintained incrementally
(with compensated summation) and recomputed from scratch at every metrics
sample to bound floating-point drift.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

_EPS = np.finfo(np.float64).eps


class Kind(Enum):
    """Attachment kind of an agent (meaningful only under model B)."""

    LOCAL = "local"
    RANDOM = "random"


class LinkResult(Enum):
    """Outcome of an attempted link addition; rejections are normal control flow."""

    ADDED = "added"
    ALREADY_LINKED = "already_linked"
    BUDGET_EXCEEDED = "budget_exceeded"


class UnknownAgentError(KeyError):
    """Raised when an operation names an agent id that is not alive."""


class LedgerDriftError(AssertionError):
    """Incremental power ledger disagrees with a from-scratch recomputation."""


class ConfigError(ValueError):
    """Invalid simulation parameters or configuration input."""


def pair_power(a, b, delta):
    """Power cost of a direct link between positions ``a`` and ``b``.

    ``a`` and ``b`` are (x, y) pairs; the cost is the Euclidean distance
    raised to ``delta`` and is symmetric in its arguments.
    """
    d2 = (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2
    if delta == 2.0:
        return d2
    return d2 ** (delta / 2.0)


def analytic_degree_q0(n_agents, delta, p_min):
    """Mean-field estimate of the average degree for all-local attachment.

    Evaluates ``pi * N * ((2 + delta) * P_min / (2 * pi * N)) ** (2 / (2 + delta))``,
    the number of agents within reach of a power budget ``p_min`` at uniform
    density, ignoring churn and the upper budget cap.  Scales as
    ``N ** (delta / (2 + delta))``.
    """
    if n_agents <= 0 or delta < 0 or p_min < 0:
        raise ValueError("n_agents, delta, p_min must be positive")
    n = float(n_agents)
    return math.pi * n * ((2.0 + delta) * p_min / (2.0 * math.pi * n)) ** (2.0 / (2.0 + delta))


@dataclass(frozen=True)
class Agent:
    """Immutable view of one agent: identity, position, attachment kind."""

    id: int
    x: float
    y: float
    kind: Kind


@dataclass(frozen=True)
class Params:
    """Full experiment configuration for one simulation run."""

    n_agents: int
    delta: float = 2.0
    p_min: float = 1.0
    p_max: float = 2.0
    model: str = "A"
    q: float = 0.0
    seed: int = 0
    equil_steps: int = 100_000
    measure_steps: int = 100_000
    sample_interval: int = 100
    robustness_trials: int = 10

    def validate(self):
        if self.n_agents < 2:
            raise ConfigError("n_agents must be >= 2")
        if not (0.0 < self.p_min <= self.p_max):
            raise ConfigError("need 0 < p_min <= p_max")
        if not (0.0 <= self.q <= 1.0):
            raise ConfigError("q must lie in [0, 1]")
        if not (2.0 <= self.delta <= 4.0):
            raise ConfigError("delta must lie in [2, 4]")
        if self.model not in ("A", "B"):
            raise ConfigError("model must be 'A' or 'B'")
        if self.sample_interval < 1:
            raise ConfigError("sample_interval must be >= 1")
        if self.equil_steps < 0 or self.measure_steps < 0:
            raise ConfigError("step counts must be >= 0")
        if self.robustness_trials < 0:
            raise ConfigError("robustness_trials must be >= 0")
        return self


class Network:
    """Simple undirected graph over agents with per-edge power costs.

    Internally agents occupy integer slots (recycled on removal) backing numpy
    arrays, so hot paths and metrics can work vectorized; the public API is in
    terms of stable agent ids.  No self-loops, no parallel edges, and no link
    may push either endpoint's ledger above ``p_max``.
    """

    def __init__(self, capacity, delta=2.0, p_max=2.0):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.delta = float(delta)
        self.p_max = float(p_max)
        n = int(capacity)
        self.xs = np.zeros(n)
        self.ys = np.zeros(n)
        self.power = np.zeros(n)
        self._comp = np.zeros(n)  # compensation terms for the running ledger
        self.ids = np.full(n, -1, dtype=np.int64)
        self.kind_rand = np.zeros(n, dtype=bool)
        self.alive = np.zeros(n, dtype=bool)
        self.adj = [dict() for _ in range(n)]  # slot -> {other slot: edge index}
        self.slot_of = {}
        self._free = list(range(n - 1, -1, -1))
        self._next_id = 0
        ecap = 4 * n
        self.eu = np.full(ecap, -1, dtype=np.int64)
        self.ev = np.full(ecap, -1, dtype=np.int64)
        self.ep = np.zeros(ecap)
        self.erand = np.zeros(ecap, dtype=bool)
        self._edge_free = list(range(ecap - 1, -1, -1))
        self.n_edges = 0

    # -- agent bookkeeping ----------------------------------------------------

    @property
    def n_agents(self):
        return len(self.slot_of)

    def _slot(self, agent_id):
        try:
            return self.slot_of[agent_id]
        except KeyError:
            raise UnknownAgentError(agent_id) from None

    def agent(self, agent_id):
        s = self._slot(agent_id)
        kind = Kind.RANDOM if self.kind_rand[s] else Kind.LOCAL
        return Agent(agent_id, float(self.xs[s]), float(self.ys[s]), kind)

    def agent_ids(self):
        return sorted(self.slot_of)

    def neighbors(self, agent_id):
        s = self._slot(agent_id)
        return sorted(int(self.ids[t]) for t in self.adj[s])

    def edge_power(self, i, j):
        si, sj = self._slot(i), self._slot(j)
        e = self.adj[si].get(sj)
        if e is None:
            raise KeyError((i, j))
        return float(self.ep[e])

    def ledger(self, agent_id):
        s = self._slot(agent_id)
        return float(self.power[s] + self._comp[s])

    def add_agent(self, x, y, kind=Kind.LOCAL, agent_id=None):
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise ValueError("position outside the unit square")
        if not self._free:
            self._grow_agents()
        s = self._free.pop()
        if agent_id is None:
            agent_id = self._next_id
        elif agent_id in self.slot_of:
            raise ValueError(f"duplicate agent id {agent_id}")
        self._next_id = max(self._next_id, agent_id) + 1
        self.xs[s] = x
        self.ys[s] = y
        self.power[s] = 0.0
        self._comp[s] = 0.0
        self.ids[s] = agent_id
        self.kind_rand[s] = kind is Kind.RANDOM
        self.alive[s] = True
        self.slot_of[agent_id] = s
        return agent_id

    def remove_agent(self, agent_id):
        """Remove an agent and its incident edges; returns its former neighbors."""
        s = self._slot(agent_id)
        former = sorted(int(self.ids[t]) for t in self.adj[s])
        for t, e in list(self.adj[s].items()):
            del self.adj[t][s]
            self._power_add(t, -self.ep[e])
            if not self.adj[t]:
                self.power[t] = 0.0
                self._comp[t] = 0.0
            self._drop_edge(e)
        self.adj[s].clear()
        self.alive[s] = False
        self.ids[s] = -1
        self.power[s] = 0.0
        self._comp[s] = 0.0
        del self.slot_of[agent_id]
        self._free.append(s)
        return former

    def _grow_agents(self):
        old = len(self.xs)
        new = max(2 * old, 4)

        def grow(a, fill=0):
            out = np.full(new, fill, dtype=a.dtype)
            out[:old] = a
            return out

        self.xs, self.ys = grow(self.xs, 0.0), grow(self.ys, 0.0)
        self.power, self._comp = grow(self.power, 0.0), grow(self._comp, 0.0)
        self.ids = grow(self.ids, -1)
        self.kind_rand = grow(self.kind_rand, False)
        self.alive = grow(self.alive, False)
        self.adj.extend(dict() for _ in range(new - old))
        self._free.extend(range(new - 1, old - 1, -1))

    # -- links ----------------------------------------------------------------

    def _pp_slots(self, s, t):
        dx = self.xs[s] - self.xs[t]
        dy = self.ys[s] - self.ys[t]
        d2 = dx * dx + dy * dy
        if self.delta == 2.0:
            return d2
        return d2 ** (self.delta / 2.0)

    def add_link(self, i, j, random_origin=False):
        si, sj = self._slot(i), self._slot(j)
        if si == sj:
            raise ValueError("self-loop")
        return self._add_link_slots(si, sj, random_origin)

    def _add_link_slots(self, si, sj, random_origin):
        if sj in self.adj[si]:
            return LinkResult.ALREADY_LINKED
        p = self._pp_slots(si, sj)
        if self.power[si] + p > self.p_max or self.power[sj] + p > self.p_max:
            return LinkResult.BUDGET_EXCEEDED
        if not self._edge_free:
            self._grow_edges()
        e = self._edge_free.pop()
        self.eu[e], self.ev[e] = si, sj
        self.ep[e] = p
        self.erand[e] = random_origin
        self.adj[si][sj] = e
        self.adj[sj][si] = e
        self._power_add(si, p)
        self._power_add(sj, p)
        self.n_edges += 1
        return LinkResult.ADDED

    def _drop_edge(self, e):
        self.eu[e] = -1
        self.ev[e] = -1
        self.ep[e] = 0.0
        self._edge_free.append(e)
        self.n_edges -= 1

    def _grow_edges(self):
        old = len(self.eu)
        new = 2 * old
        for name, fill in (("eu", -1), ("ev", -1)):
            a = getattr(self, name)
            out = np.full(new, fill, dtype=a.dtype)
            out[:old] = a
            setattr(self, name, out)
        ep = np.zeros(new)
        ep[:old] = self.ep
        self.ep = ep
        er = np.zeros(new, dtype=bool)
        er[:old] = self.erand
        self.erand = er
        self._edge_free.extend(range(new - 1, old - 1, -1))

    def _power_add(self, s, x):
        # Neumaier compensated update keeps drift near one ulp between resets.
        p = self.power[s]
        t = p + x
        if abs(p) >= abs(x):
            self._comp[s] += (p - t) + x
        else:
            self._comp[s] += (x - t) + p
        self.power[s] = t

    # -- ledger verification ---------------------------------------------------

    def live_edges(self):
        """Live edge arrays (slot endpoints, power, random-origin flag)."""
        m = self.eu >= 0
        return self.eu[m], self.ev[m], self.ep[m], self.erand[m]

    def recompute_power(self):
        eu, ev, ep, _ = self.live_edges()
        n = len(self.xs)
        # bincount of an empty input yields int64; keep the ledger float
        out = np.bincount(eu, weights=ep, minlength=n).astype(np.float64)
        out += np.bincount(ev, weights=ep, minlength=n)
        return out

    def verify_ledger(self, reset=True):
        """Check the incremental ledger against a from-scratch recomputation.

        Tolerance is 10 machine epsilons relative to the recomputed value.
        On success (and with ``reset``) the ledger is replaced by the exact
        recomputation so drift cannot accumulate across samples.
        """
        rec = self.recompute_power()
        cur = self.power + self._comp
        bad = np.abs(cur - rec) > 10.0 * _EPS * rec
        bad &= self.alive
        if bad.any():
            s = int(np.flatnonzero(bad)[0])
            raise LedgerDriftError(
                f"agent {int(self.ids[s])}: ledger {cur[s]!r} vs recomputed {rec[s]!r}"
            )
        if reset:
            self.power = rec
            self._comp = np.zeros_like(rec)

    # -- matrix views ----------------------------------------------------------

    def slot_csr(self, weights=None):
        """Symmetric CSR adjacency over alive slots.

        Returns ``(matrix, slots)`` where ``slots`` maps matrix row -> slot.
        ``weights`` may be None (unit weights) or a 1d array per live edge.
        """
        from scipy.sparse import csr_matrix

        eu, ev, ep, _ = self.live_edges()
        if weights is None:
            w = np.ones(len(eu))
        else:
            w = weights
        if self.alive.all():
            n = len(self.xs)
            rows = np.concatenate([eu, ev])
            cols = np.concatenate([ev, eu])
            mat = csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(n, n))
            return mat, np.arange(n)
        slots = np.flatnonzero(self.alive)
        remap = np.full(len(self.xs), -1, dtype=np.int64)
        remap[slots] = np.arange(len(slots))
        rows = np.concatenate([remap[eu], remap[ev]])
        cols = np.concatenate([remap[ev], remap[eu]])
        n = len(slots)
        mat = csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(n, n))
        return mat, slots

    def check_invariants(self):
        """Structural self-check used by tests and long fuzz runs."""
        for s, nb in enumerate(self.adj):
            if not self.alive[s]:
                assert not nb, f"dead slot {s} has edges"
                continue
            for t, e in nb.items():
                assert self.alive[t], "edge to dead slot"
                assert self.adj[t].get(s) == e, "asymmetric adjacency"
                assert t != s, "self-loop"
        live = np.count_nonzero(self.eu >= 0)
        assert live == self.n_edges
        pw = self.power[self.alive]
        assert (pw <= self.p_max + 1e-12).all(), "budget exceeded"
