"""Simulation loop: bootstrap, per-step churn, and deficit-driven attachment.

Each churn step removes one uniformly random agent and admits a newcomer at a
fresh uniform position, then lets every agent whose ledger fell below the
lower budget attach to new partners.  The control parameter q is the weight
of RANDOM attachment: under model A each attachment attempt is random with
probability q (otherwise nearest-neighbor), under model B a fraction q of
agents are permanently random attachers.

All stochastic choices come from one seeded stream, and the draw schedule is
identical for both models (agent kinds are drawn even under model A, the
per-attempt coin is drawn even under model B), so runs with equal seeds and
q in {0, 1} produce bit-identical trajectories under either model.

Draw order per churn step: victim slot, newcomer x, newcomer y, newcomer
kind, deficit-queue shuffle, then per-attempt coin (and, on the random
branch, one partner draw) for every attachment attempt.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .core import Kind, LinkResult, Network, Params
from .spatial import GridIndex, _feasible


@dataclass
class SimState:
    """One replicate's full simulation state; confined to a single thread."""

    net: Network
    index: GridIndex
    params: Params
    rng: random.Random
    step: int = 0


def _draw_kind(rng, q):
    return Kind.RANDOM if rng.random() < q else Kind.LOCAL


def bootstrap(params: Params) -> SimState:
    """Fresh state: N uniform agents, no edges, then one deficit-settling pass."""
    params.validate()
    rng = random.Random(params.seed)
    net = Network(params.n_agents, delta=params.delta, p_max=params.p_max)
    for _ in range(params.n_agents):
        x = rng.random()
        y = rng.random()
        kind = _draw_kind(rng, params.q)
        net.add_agent(x, y, kind)
    index = GridIndex(net, params.n_agents)
    state = SimState(net, index, params, rng)
    satisfy_deficits(state)
    return state


def churn_step(state: SimState) -> SimState:
    """One turnover event: random departure, uniform arrival, deficit pass."""
    net, rng, params = state.net, state.rng, state.params
    victim_slot = rng.randrange(params.n_agents)
    x = rng.random()
    y = rng.random()
    kind = _draw_kind(rng, params.q)
    state.index.remove(net, victim_slot)
    net.remove_agent(int(net.ids[victim_slot]))
    new_id = net.add_agent(x, y, kind)
    state.index.insert(net, net.slot_of[new_id])
    satisfy_deficits(state)
    state.step += 1
    return state


def satisfy_deficits(state: SimState) -> SimState:
    """Let every agent below the lower budget try to add links.

    The work queue is rebuilt from a full scan (only churn events and
    bootstrap enqueue), shuffled uniformly, and processed once: an agent
    keeps attaching while below p_min and drops out of the round as soon
    as an attempt finds no feasible partner.
    """
    net, rng = state.net, state.rng
    p_min = state.params.p_min
    queue = [int(s) for s in (net.power < p_min).nonzero()[0] if net.alive[s]]
    rng.shuffle(queue)
    for s in queue:
        _attach_until_satisfied(state, s)
    return state


def _attach_until_satisfied(state, s):
    net, rng, index = state.net, state.rng, state.index
    params = state.params
    model_b = params.model == "B"
    q = params.q
    stream = None
    while net.power[s] < params.p_min:
        coin = rng.random() < q  # drawn every attempt, under both models
        use_random = net.kind_rand[s] if model_b else coin
        if use_random:
            t = index._random_feasible_slot(net, s, rng)
            if t is None:
                return
            res = net._add_link_slots(s, t, random_origin=True)
        else:
            if stream is None:
                # Lazily ordered candidate stream; feasibility is rechecked at
                # pop time, and budgets only tighten within a round, so this is
                # equivalent to a fresh nearest-feasible query per attempt.
                stream = index._candidates(net, s)
            t = index._nearest_feasible_slot(net, s, stream)
            if t is None:
                return
            res = net._add_link_slots(s, t, random_origin=False)
        assert res is LinkResult.ADDED


def pick_candidate(state: SimState, agent_id):
    """One attachment-partner choice for ``agent_id`` per the model rules.

    Returns an agent id or None when the feasible set (of the chosen branch)
    is empty; no fallback to the other branch.
    """
    net = state.net
    s = net._slot(agent_id)
    coin = state.rng.random() < state.params.q
    use_random = net.kind_rand[s] if state.params.model == "B" else coin
    if use_random:
        t = state.index._random_feasible_slot(net, s, state.rng)
    else:
        t = state.index._nearest_feasible_slot(net, s)
    return None if t is None else int(net.ids[t])


def run_steps(state: SimState, n_steps):
    for _ in range(n_steps):
        churn_step(state)
    return state
