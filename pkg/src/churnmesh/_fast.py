"""Compiled kernels for the per-step connectivity check and all-pairs BFS.

Numba is optional; without it the same contracts are served by scipy's
csgraph routines (slower, identical results).
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

if HAVE_NUMBA:

    @njit(cache=True)
    def _uf_components(eu, ev, n_alive, parent):
        n = parent.shape[0]
        for i in range(n):
            parent[i] = i
        comps = n_alive
        for k in range(eu.shape[0]):
            a = eu[k]
            if a < 0:
                continue
            b = ev[k]
            ra = a
            while parent[ra] != ra:
                ra = parent[ra]
            rb = b
            while parent[rb] != rb:
                rb = parent[rb]
            while parent[a] != ra:
                t = parent[a]
                parent[a] = ra
                a = t
            while parent[b] != rb:
                t = parent[b]
                parent[b] = rb
                b = t
            if ra != rb:
                parent[rb] = ra
                comps -= 1
                if comps == 1:
                    return 1
        return comps

    @njit(cache=True)
    def _min_power_all(indptr, indices, wts, n):
        # FIFO BFS visits nodes in nondecreasing hop order, so when u is
        # dequeued every min-hop predecessor has already relaxed pw[u]; the
        # per-level min over (pw[pred] + w) is therefore an exact minimum
        # over left-folded path powers (float addition is monotone).
        hops = np.full((n, n), -1, np.int32)
        pw = np.zeros((n, n))
        queue = np.empty(n, np.int32)
        for s in range(n):
            hrow = hops[s]
            prow = pw[s]
            hrow[s] = 0
            head = 0
            tail = 1
            queue[0] = s
            while head < tail:
                u = queue[head]
                head += 1
                du = hrow[u]
                for k in range(indptr[u], indptr[u + 1]):
                    v = indices[k]
                    cand = prow[u] + wts[k]
                    if hrow[v] < 0:
                        hrow[v] = du + 1
                        prow[v] = cand
                        queue[tail] = v
                        tail += 1
                    elif hrow[v] == du + 1 and cand < prow[v]:
                        prow[v] = cand
        return hops, pw

    @njit(cache=True)
    def _bfs_all(indptr, indices, n, skip):
        dist = np.full((n, n), -1, np.int32)
        queue = np.empty(n, np.int32)
        for s in range(n):
            if s == skip:
                continue
            row = dist[s]
            row[s] = 0
            head = 0
            tail = 1
            queue[0] = s
            while head < tail:
                u = queue[head]
                head += 1
                du = row[u]
                for k in range(indptr[u], indptr[u + 1]):
                    v = indices[k]
                    if v == skip:
                        continue
                    if row[v] < 0:
                        row[v] = du + 1
                        queue[tail] = v
                        tail += 1
        return dist


def n_components(eu, ev, n_alive, n_slots):
    """Number of connected components over the alive agents.

    ``eu``/``ev`` are slot-endpoint arrays where negative entries are dead
    edges; isolated alive agents count as their own components.
    """
    if n_alive <= 1:
        return n_alive
    if HAVE_NUMBA:
        parent = np.empty(n_slots, np.int64)
        return int(_uf_components(eu, ev, n_alive, parent))
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    m = eu >= 0
    mat = coo_matrix((np.ones(int(m.sum())), (eu[m], ev[m])), shape=(n_slots, n_slots))
    total = connected_components(mat, directed=False, return_labels=False)
    return int(total) - (n_slots - n_alive)  # dead slots are isolated rows


def min_power_all_pairs(indptr, indices, weights, n):
    """Per ordered pair: (hop count, minimal left-folded power among
    minimum-hop paths).  Unreachable pairs have hops == -1."""
    if HAVE_NUMBA:
        return _min_power_all(indptr, indices, weights, n)
    hops = np.full((n, n), -1, np.int32)
    pw = np.zeros((n, n))
    for s in range(n):
        hrow, prow = hops[s], pw[s]
        hrow[s] = 0
        queue = [s]
        head = 0
        while head < len(queue):
            u = queue[head]
            head += 1
            du = hrow[u]
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                cand = prow[u] + weights[k]
                if hrow[v] < 0:
                    hrow[v] = du + 1
                    prow[v] = cand
                    queue.append(v)
                elif hrow[v] == du + 1 and cand < prow[v]:
                    prow[v] = cand
    return hops, pw


def bfs_all_pairs(indptr, indices, n, skip=-1):
    """Hop-count matrix (int32, -1 for unreachable) over nodes 0..n-1.

    ``skip`` >= 0 excludes that node, emulating a deletion; its row and
    column stay -1.
    """
    if HAVE_NUMBA:
        return _bfs_all(indptr, indices, n, skip)
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import shortest_path

    data = np.ones(len(indices))
    mat = csr_matrix((data, indices.copy(), indptr.copy()), shape=(n, n))
    if skip >= 0:
        keep = np.flatnonzero(np.arange(n) != skip)
        sub = mat[keep][:, keep]
        d = shortest_path(sub, method="D", directed=False, unweighted=True)
        out = np.full((n, n), -1, np.int32)
        fin = np.isfinite(d)
        block = np.full(d.shape, -1, np.int32)
        block[fin] = d[fin].astype(np.int32)
        out[np.ix_(keep, keep)] = block
        return out
    d = shortest_path(mat, method="D", directed=False, unweighted=True)
    out = np.full((n, n), -1, np.int32)
    fin = np.isfinite(d)
    out[fin] = d[fin].astype(np.int32)
    return out
