"""Uniform-grid spatial index over agent positions.

Supports the two candidate queries the attachment strategies need:
the nearest feasible partner (ring-by-ring expansion, exact) and a
uniformly random feasible partner (vectorized full scan).  Feasibility of
a partner j for agent i means: not already linked, and the new link fits
under both agents' upper power budgets.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

from .core import Network, UnknownAgentError


def _feasible(net, s, t, p):
    if t in net.adj[s]:
        return False
    if net.power[s] + p > net.p_max:
        return False
    return net.power[t] + p <= net.p_max


class GridIndex:
    """Square grid of side 1/ceil(sqrt(N)) over the unit square.

    Every living agent sits in exactly one cell.  The grid is sized once for
    the expected population (constant under churn) and maintained by
    insert/remove as agents come and go.
    """

    def __init__(self, net: Network, expected_n=None):
        n = expected_n if expected_n is not None else max(net.n_agents, 1)
        self.m = max(1, math.ceil(math.sqrt(n)))
        self.cell_size = 1.0 / self.m
        self.cells = [[] for _ in range(self.m * self.m)]
        self._cell_of = {}
        self.rebuild(net)

    def _cell_index(self, x, y):
        m = self.m
        cx = min(int(x * m), m - 1)
        cy = min(int(y * m), m - 1)
        return cx * m + cy

    def rebuild(self, net):
        for cell in self.cells:
            cell.clear()
        self._cell_of.clear()
        for s in np.flatnonzero(net.alive):
            self.insert(net, int(s))

    def insert(self, net, slot):
        c = self._cell_index(net.xs[slot], net.ys[slot])
        self.cells[c].append(slot)
        self._cell_of[slot] = c

    def remove(self, net, slot):
        c = self._cell_of.pop(slot)
        self.cells[c].remove(slot)

    def contents(self):
        """Set of (slot, cell) pairs; used by consistency tests."""
        return {(s, c) for s, c in self._cell_of.items()}

    # -- queries ---------------------------------------------------------------

    def _candidates(self, net, s):
        """Yield (d2, agent_id, slot) for all other agents in ascending
        (distance, id) order, expanding grid rings lazily.

        After ring r has been pushed, any unseen agent is at least r*cell_size
        away, so heap entries within that bound are safe to emit.
        """
        m, cs = self.m, self.cell_size
        x, y = net.xs[s], net.ys[s]
        cx = min(int(x * m), m - 1)
        cy = min(int(y * m), m - 1)
        heap = []

        def push_cell(ux, uy):
            if 0 <= ux < m and 0 <= uy < m:
                for t in self.cells[ux * m + uy]:
                    if t == s:
                        continue
                    dx = net.xs[t] - x
                    dy = net.ys[t] - y
                    heapq.heappush(heap, (dx * dx + dy * dy, int(net.ids[t]), t))

        for r in range(0, m + 1):
            if r == 0:
                push_cell(cx, cy)
            else:
                for ux in range(cx - r, cx + r + 1):
                    push_cell(ux, cy - r)
                    push_cell(ux, cy + r)
                for uy in range(cy - r + 1, cy + r):
                    push_cell(cx - r, uy)
                    push_cell(cx + r, uy)
            bound = (r * cs) ** 2
            while heap and heap[0][0] <= bound:
                yield heapq.heappop(heap)
        while heap:
            yield heapq.heappop(heap)

    def _power_of_d2(self, net, d2):
        if net.delta == 2.0:
            return d2
        return d2 ** (net.delta / 2.0)

    def _nearest_feasible_slot(self, net, s, stream=None):
        if stream is None:
            stream = self._candidates(net, s)
        for d2, _aid, t in stream:
            p = self._power_of_d2(net, d2)
            if _feasible(net, s, t, p):
                return t
        return None

    def nearest_feasible(self, net, agent_id):
        """Closest feasible partner of ``agent_id`` (ties to the smaller id)."""
        s = net._slot(agent_id)
        t = self._nearest_feasible_slot(net, s)
        return None if t is None else int(net.ids[t])

    def _random_feasible_slot(self, net, s, rng):
        xs, ys, pw = net.xs, net.ys, net.power
        dx = xs - xs[s]
        dy = ys - ys[s]
        d2 = dx * dx + dy * dy
        if net.delta == 2.0:
            p = d2
        else:
            p = d2 ** (net.delta / 2.0)
        feas = net.alive & (pw + p <= net.p_max) & (pw[s] + p <= net.p_max)
        feas[s] = False
        for t in net.adj[s]:
            feas[t] = False
        idx = np.flatnonzero(feas)
        if idx.size == 0:
            return None
        return int(idx[rng.randrange(idx.size)])

    def random_feasible(self, net, agent_id, rng):
        """Uniform draw from the feasible partner set of ``agent_id``."""
        s = net._slot(agent_id)
        t = self._random_feasible_slot(net, s, rng)
        return None if t is None else int(net.ids[t])
