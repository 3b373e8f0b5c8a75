import math
import random

import numpy as np
import pytest

from churnmesh import Kind, LinkResult, Network, is_connected


def build_net(positions, edges=(), delta=2.0, p_max=1e9, kinds=None):
    """Network from explicit positions and edge index pairs."""
    net = Network(len(positions), delta=delta, p_max=p_max)
    ids = []
    for k, (x, y) in enumerate(positions):
        kind = kinds[k] if kinds else Kind.LOCAL
        ids.append(net.add_agent(x, y, kind))
    for i, j in edges:
        res = net.add_link(ids[i], ids[j])
        assert res is LinkResult.ADDED
    return net, ids


def random_geometric_net(rng, n, radius, delta=2.0, p_max=1e9, require_connected=True):
    """Random unit-square net with all links shorter than ``radius``."""
    for _ in range(200):
        pts = [(rng.random(), rng.random()) for _ in range(n)]
        edges = []
        for i in range(n):
            for j in range(i + 1, n):
                dx = pts[i][0] - pts[j][0]
                dy = pts[i][1] - pts[j][1]
                if dx * dx + dy * dy <= radius * radius:
                    edges.append((i, j))
        net, ids = build_net(pts, edges, delta=delta, p_max=p_max)
        if not require_connected or is_connected(net):
            return net, ids
    raise RuntimeError("could not draw a connected geometric graph")


def floyd_warshall_hops(n, edge_pairs):
    """Independent all-pairs oracle: dense Floyd-Warshall on hop counts."""
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for i, j in edge_pairs:
        d[i, j] = 1.0
        d[j, i] = 1.0
    for k in range(n):
        d = np.minimum(d, d[:, k, None] + d[None, k, :])
    return d


def edge_index_pairs(net, ids):
    """Edges of ``net`` as index pairs into ``ids``."""
    pos = {agent_id: k for k, agent_id in enumerate(ids)}
    out = []
    for i in net.agent_ids():
        for j in net.neighbors(i):
            if i < j:
                out.append((pos[i], pos[j]))
    return out
