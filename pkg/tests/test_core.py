import math
import random

import numpy as np
import pytest

from churnmesh import (
    ConfigError,
    Kind,
    LedgerDriftError,
    LinkResult,
    Network,
    Params,
    UnknownAgentError,
    analytic_degree_q0,
    pair_power,
)

from conftest import build_net


class TestPairPower:
    def test_unit_distance(self):
        assert pair_power((0.0, 0.0), (1.0, 0.0), 2.0) == 1.0

    def test_coincident(self):
        assert pair_power((0.3, 0.7), (0.3, 0.7), 2.0) == 0.0

    def test_half_distance_quadratic(self):
        assert pair_power((0.0, 0.0), (0.5, 0.0), 2.0) == 0.25

    def test_diagonal(self):
        assert pair_power((0.0, 0.0), (0.6, 0.8), 2.0) == pytest.approx(1.0)

    def test_quartic_exponent(self):
        # distance 0.5, delta 4 -> 0.0625
        assert pair_power((0.0, 0.0), (0.5, 0.0), 4.0) == pytest.approx(0.0625)

    def test_symmetry_fuzz(self):
        rng = random.Random(7)
        for _ in range(200):
            a = (rng.random(), rng.random())
            b = (rng.random(), rng.random())
            delta = rng.uniform(2.0, 4.0)
            assert pair_power(a, b, delta) == pair_power(b, a, delta)
            assert pair_power(a, b, delta) >= 0.0


class TestAnalyticDegree:
    def test_reference_value(self):
        # pi*N*((2+2)*1/(2*pi*N))**(1/2) == sqrt(2*pi*N); N=1000 -> 79.266...
        got = analytic_degree_q0(1000, 2.0, 1.0)
        assert got == pytest.approx(math.sqrt(2000.0 * math.pi), rel=1e-12)
        assert got == pytest.approx(79.27, abs=0.01)

    def test_sqrt_scaling(self):
        # at delta=2 the estimate scales as N**(1/2)
        r = analytic_degree_q0(4000, 2.0, 1.0) / analytic_degree_q0(1000, 2.0, 1.0)
        assert r == pytest.approx(2.0, rel=1e-12)

    def test_budget_scaling(self):
        # and as p_min**(1/2)
        r = analytic_degree_q0(1000, 2.0, 4.0) / analytic_degree_q0(1000, 2.0, 1.0)
        assert r == pytest.approx(2.0, rel=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            analytic_degree_q0(0, 2.0, 1.0)


class TestParams:
    def test_defaults_valid(self):
        Params(n_agents=100).validate()

    @pytest.mark.parametrize(
        "kw",
        [
            dict(n_agents=1),
            dict(n_agents=10, p_min=0.0),
            dict(n_agents=10, p_min=3.0, p_max=2.0),
            dict(n_agents=10, q=-0.1),
            dict(n_agents=10, q=1.5),
            dict(n_agents=10, delta=1.0),
            dict(n_agents=10, delta=5.0),
            dict(n_agents=10, model="C"),
            dict(n_agents=10, sample_interval=0),
            dict(n_agents=10, equil_steps=-1),
            dict(n_agents=10, robustness_trials=-1),
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            Params(**kw).validate()


class TestNetworkBasics:
    def test_add_and_query_agent(self):
        net = Network(4)
        a = net.add_agent(0.25, 0.75, Kind.RANDOM)
        ag = net.agent(a)
        assert (ag.x, ag.y, ag.kind) == (0.25, 0.75, Kind.RANDOM)
        assert net.n_agents == 1
        assert net.ledger(a) == 0.0

    def test_position_outside_square(self):
        net = Network(2)
        with pytest.raises(ValueError):
            net.add_agent(1.5, 0.5)
        with pytest.raises(ValueError):
            net.add_agent(0.5, -0.1)

    def test_unknown_agent(self):
        net = Network(2)
        with pytest.raises(UnknownAgentError):
            net.agent(99)
        with pytest.raises(UnknownAgentError):
            net.remove_agent(99)

    def test_link_updates_both_ledgers(self):
        net, ids = build_net([(0.0, 0.0), (0.5, 0.0)], p_max=2.0)
        assert net.add_link(ids[0], ids[1]) is LinkResult.ADDED
        assert net.ledger(ids[0]) == pytest.approx(0.25)
        assert net.ledger(ids[1]) == pytest.approx(0.25)
        assert net.edge_power(ids[0], ids[1]) == pytest.approx(0.25)
        assert net.n_edges == 1

    def test_duplicate_link(self):
        net, ids = build_net([(0.0, 0.0), (0.5, 0.0)], p_max=2.0)
        net.add_link(ids[0], ids[1])
        assert net.add_link(ids[1], ids[0]) is LinkResult.ALREADY_LINKED
        assert net.n_edges == 1

    def test_self_loop_rejected(self):
        net, ids = build_net([(0.0, 0.0)])
        with pytest.raises(ValueError):
            net.add_link(ids[0], ids[0])

    def test_budget_rejection_example(self):
        # agent i already at P(i) = 1.8; a link of cost 0.3 must be refused
        # at p_max = 2 and leave both ledgers untouched.
        r9 = math.sqrt(0.9)
        r3 = math.sqrt(0.3)
        net, ids = build_net(
            [(0.0, 0.0), (r9, 0.0), (0.0, r9), (r3, 0.0)], p_max=2.0
        )
        i, a, b, j = ids
        assert net.add_link(i, a) is LinkResult.ADDED
        assert net.add_link(i, b) is LinkResult.ADDED
        assert net.ledger(i) == pytest.approx(1.8)
        before = net.ledger(j)
        assert net.add_link(i, j) is LinkResult.BUDGET_EXCEEDED
        assert net.ledger(i) == pytest.approx(1.8)
        assert net.ledger(j) == before
        assert net.n_edges == 2

    def test_budget_checked_for_partner_too(self):
        # the initiating agent has room but the partner does not
        r9 = math.sqrt(0.9)
        net, ids = build_net(
            [(0.0, 0.0), (r9, 0.0), (r9, r9), (0.5, 0.0)], p_max=1.0
        )
        j, a, b, i = ids
        assert net.add_link(j, a) is LinkResult.ADDED  # P(j) ~ 0.9
        assert net.add_link(i, j) is LinkResult.BUDGET_EXCEEDED
        assert net.neighbors(i) == []

    def test_remove_agent_returns_neighbors_and_refunds(self):
        # star: center linked to three leaves
        pts = [(0.5, 0.5), (0.6, 0.5), (0.5, 0.6), (0.4, 0.5)]
        net, ids = build_net(pts, edges=[(0, 1), (0, 2), (0, 3)], p_max=10.0)
        center, *leaves = ids
        former = net.remove_agent(center)
        assert former == sorted(leaves)
        assert net.n_edges == 0
        for leaf in leaves:
            assert net.ledger(leaf) == 0.0
            assert net.neighbors(leaf) == []
        net.check_invariants()

    def test_remove_middle_of_triangle(self):
        pts = [(0.1, 0.1), (0.9, 0.1), (0.5, 0.9)]
        net, ids = build_net(pts, edges=[(0, 1), (1, 2), (0, 2)], p_max=10.0)
        net.remove_agent(ids[1])
        assert net.n_edges == 1
        assert net.neighbors(ids[0]) == [ids[2]]
        rec = net.recompute_power()
        assert net.ledger(ids[0]) == pytest.approx(rec[net.slot_of[ids[0]]])
        net.check_invariants()

    def test_slot_reuse_keeps_ids_stable(self):
        net = Network(2)
        a = net.add_agent(0.1, 0.1)
        b = net.add_agent(0.2, 0.2)
        net.remove_agent(a)
        c = net.add_agent(0.3, 0.3)
        assert c not in (a,)
        assert sorted(net.agent_ids()) == sorted([b, c])

    def test_capacity_growth(self):
        net = Network(2)
        ids = [net.add_agent(i / 16.0, i / 16.0) for i in range(10)]
        assert net.n_agents == 10
        for i in ids:
            net.agent(i)
        net.check_invariants()


class TestLedger:
    def test_verify_clean(self):
        pts = [(0.0, 0.0), (0.5, 0.0), (0.5, 0.5)]
        net, ids = build_net(pts, edges=[(0, 1), (1, 2)], p_max=10.0)
        net.verify_ledger(reset=True)

    def test_detects_injected_drift(self):
        net, ids = build_net([(0.0, 0.0), (0.5, 0.0)], edges=[(0, 1)], p_max=10.0)
        net.power[net.slot_of[ids[0]]] += 1e-6
        with pytest.raises(LedgerDriftError):
            net.verify_ledger()

    def test_exact_zero_after_last_edge_removed(self):
        net, ids = build_net([(0.0, 0.0), (0.5, 0.0)], edges=[(0, 1)], p_max=10.0)
        net.remove_agent(ids[1])
        assert net.ledger(ids[0]) == 0.0

    def test_fuzz_ledger_matches_recompute(self):
        # random add/remove/link churn; the compensated ledger must track a
        # from-scratch python-float recomputation within the verify tolerance
        rng = random.Random(20240817)
        net = Network(32, p_max=4.0)
        ids = []
        for trial in range(2000):
            op = rng.random()
            if op < 0.3 or len(ids) < 3:
                x, y = rng.random(), rng.random()
                ids.append(net.add_agent(x, y))
            elif op < 0.45:
                victim = ids.pop(rng.randrange(len(ids)))
                net.remove_agent(victim)
            else:
                i, j = rng.sample(ids, 2)
                net.add_link(i, j)
            if trial % 97 == 0:
                for i in ids:
                    expected = sum(net.edge_power(i, j) for j in net.neighbors(i))
                    assert net.ledger(i) == pytest.approx(expected, abs=1e-12)
                net.verify_ledger(reset=True)
                net.check_invariants()
        net.verify_ledger(reset=True)
        net.check_invariants()


class TestMatrixView:
    def test_slot_csr_symmetric(self):
        pts = [(0.0, 0.0), (0.5, 0.0), (0.5, 0.5)]
        net, ids = build_net(pts, edges=[(0, 1), (1, 2)], p_max=10.0)
        mat, slots = net.slot_csr()
        dense = mat.toarray()
        assert (dense == dense.T).all()
        assert dense.sum() == 2 * net.n_edges

    def test_slot_csr_skips_dead_slots(self):
        pts = [(0.0, 0.0), (0.5, 0.0), (0.5, 0.5)]
        net, ids = build_net(pts, edges=[(0, 1), (1, 2)], p_max=10.0)
        net.remove_agent(ids[0])
        mat, slots = net.slot_csr()
        assert mat.shape == (2, 2)
        assert mat.toarray().sum() == 2
