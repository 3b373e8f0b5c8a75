"""Structural measurements on a network snapshot.

Distance-type quantities (average distance, diameter, power-efficiency ratio,
robustness deltas) are defined on fully connected snapshots; disconnected
snapshots only contribute to the connectivity fraction and are skipped, with
skip counts reported by the harness.  Inside the robustness measurement a
deletion may disconnect the remainder; there distances are averaged over the
still-connected pairs and the diameter is taken over the largest component.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import dijkstra

from . import _fast
from .core import Network

class DisconnectedError(ValueError):
    """A distance metric was requested on a disconnected snapshot."""


@dataclass
class MetricsSample:
    """All structural quantities measured at one simulation instant.

    Distance-dependent fields are None when the snapshot was disconnected
    (or the metric was not requested).
    """

    step: int
    mean_degree: float
    mean_power: float
    min_power: float
    max_power: float
    connected: bool
    avg_distance: float | None = None
    diameter: float | None = None
    rho: float | None = None
    spectral_gap: float | None = None
    delta_avg_distance: float | None = None
    delta_diameter: float | None = None


def is_connected(net: Network) -> bool:
    """True iff every agent can reach every other (single component)."""
    return _fast.n_components(net.eu, net.ev, net.n_agents, len(net.xs)) <= 1


def distance_matrix(net: Network):
    """All-pairs hop counts over alive agents: (int32 matrix, slots).

    Unreachable pairs are -1; row order follows ascending slot order.
    """
    mat, slots = net.slot_csr()
    indices = mat.indices.astype(np.int32)
    indptr = mat.indptr.astype(np.int64)
    return _fast.bfs_all_pairs(indptr, indices, mat.shape[0], -1), slots


def hop_distances(net: Network, source_id):
    """BFS hop counts from ``source_id``; unreachable agents map to -1."""
    s = net._slot(source_id)
    mat, slots = net.slot_csr()
    row = int(np.searchsorted(slots, s))
    dist = dijkstra(mat, directed=False, unweighted=True, indices=row)
    out = {}
    for r, slot in enumerate(slots):
        d = dist[r]
        out[int(net.ids[slot])] = int(d) if np.isfinite(d) else -1
    return out


def _mean_and_max(dist):
    """Mean and max over unordered pairs of a full hop matrix."""
    n = dist.shape[0]
    iu = np.triu_indices(n, 1)
    vals = dist[iu]
    return float(vals.mean()), float(vals.max())


def avg_distance_and_diameter(net: Network, dist=None):
    """Mean over unordered pairs and maximum of hop distances."""
    if net.n_agents < 2:
        raise DisconnectedError("need at least 2 agents")
    if dist is None:
        dist, _ = distance_matrix(net)
    if dist.min() < 0:
        raise DisconnectedError("snapshot is not connected")
    return _mean_and_max(dist)


def _direct_power_matrix(net, slots):
    xs = net.xs[slots]
    ys = net.ys[slots]
    dx = xs[:, None] - xs[None, :]
    dy = ys[:, None] - ys[None, :]
    d2 = dx * dx + dy * dy
    if net.delta == 2.0:
        return d2
    return d2 ** (net.delta / 2.0)


def _min_power_paths(net):
    """Per ordered pair (s, v): hop count and the minimal total link power
    among minimum-hop paths, folded edge by edge from s.

    The level-by-level BFS relaxation is an exact minimum over left-folded
    path powers, so results agree bit-for-bit with a brute-force enumeration
    of minimum-hop routes.
    """
    eu, ev, ep, _ = net.live_edges()
    wmat, slots = net.slot_csr(weights=ep)
    n = wmat.shape[0]
    hops, pw = _fast.min_power_all_pairs(
        wmat.indptr.astype(np.int64), wmat.indices.astype(np.int32),
        wmat.data, n,
    )
    if int(hops.min()) < 0:
        raise DisconnectedError("snapshot is not connected")
    dpow = _direct_power_matrix(net, slots)
    return hops, pw, dpow


def power_efficiency_rho(net: Network) -> float:
    """Pair-averaged ratio of min-hop route power to direct-link power.

    Minimum-hop ties resolve to the route of minimal total power; coincident
    pairs (zero direct power) are excluded from the average.
    """
    if net.n_agents < 2:
        raise DisconnectedError("need at least 2 agents")
    _, pw, dpow = _min_power_paths(net)
    n = pw.shape[0]
    iu = np.triu_indices(n, 1)
    num = pw[iu]
    den = dpow[iu]
    ok = den > 0.0
    if not ok.any():
        raise DisconnectedError("no pair with positive direct power")
    return float(np.mean(num[ok] / den[ok]))


def _after_deletion(dist, victim):
    """(avg distance over connected pairs, diameter of largest component)
    from a BFS matrix computed with ``victim`` skipped."""
    n = dist.shape[0]
    keep = np.flatnonzero(np.arange(n) != victim)
    sub = dist[np.ix_(keep, keep)]
    k = len(keep)
    if k < 2:
        return 0.0, 0.0
    iu = np.triu_indices(k, 1)
    vals = sub[iu]
    finite = vals >= 0
    dbar = float(vals[finite].mean()) if finite.any() else 0.0
    # Component representative: smallest-index node each row can reach.
    comp = np.argmax(sub >= 0, axis=1)
    sizes = np.bincount(comp)
    big = np.flatnonzero(comp == int(np.argmax(sizes)))
    if len(big) < 2:
        dmax = 0.0
    else:
        dmax = float(sub[np.ix_(big, big)].max())
    return dbar, dmax


def robustness_deltas(net: Network, rng, trials, before=None):
    """Mean change of (avg distance, diameter) over random single deletions.

    The snapshot itself is never mutated; each trial re-runs BFS with the
    victim excluded.  ``before`` may carry a precomputed (avg, diameter).
    """
    if net.n_agents < 3:
        raise ValueError("need at least 3 agents")
    mat, _ = net.slot_csr()
    n = mat.shape[0]
    indices = mat.indices.astype(np.int32)
    indptr = mat.indptr.astype(np.int64)
    if before is None:
        dist = _fast.bfs_all_pairs(indptr, indices, n, -1)
        if dist.min() < 0:
            raise DisconnectedError("snapshot is not connected")
        before = _mean_and_max(dist)
    dbar0, dmax0 = before
    acc_d, acc_m = 0.0, 0.0
    for _ in range(trials):
        victim = rng.randrange(n)
        sub = _fast.bfs_all_pairs(indptr, indices, n, victim)
        dbar1, dmax1 = _after_deletion(sub, victim)
        acc_d += dbar1 - dbar0
        acc_m += dmax1 - dmax0
    if trials == 0:
        return 0.0, 0.0
    return acc_d / trials, acc_m / trials


def degree_and_power_stats(net: Network):
    """(mean degree, mean power, min power, max power) from the fresh ledger."""
    n = net.n_agents
    if n == 0:
        raise ValueError("empty network")
    kbar = 2.0 * net.n_edges / n
    rec = net.recompute_power()[net.alive]
    return kbar, float(rec.mean()), float(rec.min()), float(rec.max())


def connectivity_transform(phi, samples):
    """-log10(1 - phi); at phi == 1 a resolution-limited, censored bound.

    Returns (value, censored).  ``samples`` is the number of per-step
    connectivity evaluations behind ``phi``.
    """
    if not (0.0 <= phi <= 1.0):
        raise ValueError("phi must lie in [0, 1]")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if phi == 1.0:
        return float(np.log10(samples + 1)), True
    return float(-np.log10(1.0 - phi)), False
