import math

import numpy as np
import pytest

from circlelab.errors import (GateRejected, LipBudgetExceeded, NoConvergence,
                              NotMonotone)
from circlelab.graphflow import (GATE_CAP, ContractionReport, LipGraph,
                                 analytic_contraction, auto_k, basin_hits_graph,
                                 gate, graph_transform, invariance_residual,
                                 measure_contraction, minimal_admissible_eta,
                                 q_graph_map, random_lip_graph,
                                 solve_invariant_circle, transform_graph)
from circlelab.maps import (Frame, Params, Perturbation, PolyInRho, eval_Q,
                            contraction_factor)
from circlelab.trig import TrigPoly


@pytest.fixture
def p_admissible(golden):
    return Params(nu=0.3, eta=0.1, eps=1e-4, alpha=golden)


class TestGate:
    def test_edge_case_admissible(self, golden):
        # eps below the condition-1 threshold at the gate-edge budget
        pert = Perturbation.standard()
        p = Params(nu=0.3, eta=0.1, eps=1e-4, alpha=golden)
        rep = gate(p, pert, k=p.eta / 6.0, cap=0.35)
        thr = (math.pi / (6 * pert.A)) * 0.1 * (0.1 / 6.0)
        assert thr >= 1e-4
        assert rep.condition1 and rep.condition2 and rep.condition3
        assert rep.admissible
        assert rep.margin >= 0

    def test_zero_eps_admissible(self, golden, standard_pert):
        p = Params(nu=0.3, eta=0.04, eps=0.0, alpha=golden)
        assert gate(p, standard_pert, k=p.eta / 6.0).admissible

    def test_big_k_rejected(self, golden, standard_pert):
        p = Params(nu=0.3, eta=0.1, eps=0.0, alpha=golden)
        rep = gate(p, standard_pert, k=0.1, cap=0.35)
        assert not rep.condition2 and not rep.admissible

    def test_cap_flagged(self, golden, standard_pert):
        p = Params(nu=0.3, eta=0.1, eps=0.0, alpha=golden)
        rep = gate(p, standard_pert, k=p.eta / 6.0)
        assert rep.cap == GATE_CAP and not rep.condition3


class TestTransform:
    def test_zero_graph_fixed_at_eps0(self, golden):
        p = Params(nu=0.3, eta=0.1, eps=0.0, alpha=golden)
        phi = LipGraph.constant(0.0, 0.01, 256)
        out = graph_transform(p, Perturbation.zero(), phi, cap=0.35)
        assert np.abs(out.values).max() == 0.0

    def test_constant_graph_contracts(self, golden):
        p = Params(nu=0.3, eta=0.1, eps=0.0, alpha=golden)
        phi = LipGraph.constant(0.5, 0.01, 256)
        out = graph_transform(p, Perturbation.zero(), phi, cap=0.35)
        want = 0.5 * contraction_factor(0.1)
        assert np.abs(out.values - want).max() <= 1e-14

    def test_image_of_graph_oracle(self, golden):
        # Gr(transformed) must coincide with the image of Gr(phi) under the map
        pert = Perturbation(PolyInRho([TrigPoly.sine(1)]),
                            PolyInRho([TrigPoly.cosine(1)]))
        p = Params(nu=0.3, eta=0.1, eps=1e-4, alpha=golden)
        phi = LipGraph.constant(0.0, p.eta / 6.0, 4096)
        out = graph_transform(p, pert, phi, cap=0.35)
        band = p.eps * (1 + pert.A_g) / (1.0 - contraction_factor(p.eta))
        assert np.abs(out.values).max() <= band
        theta = 2 * np.pi * np.arange(4096) / 4096
        Th, R = eval_Q(p, pert, Frame(), (theta, phi.eval(theta)))
        assert np.abs(R - out.eval(Th)).max() <= 1e-10

    def test_monotonicity_guard(self, golden):
        # a graph steep enough to fold the angle map is refused
        p = Params(nu=0.3, eta=0.01, eps=0.0, alpha=golden)
        theta = 2 * np.pi * np.arange(512) / 512
        phi = LipGraph(0.9 * np.cos(theta), lip_k=1.0)
        with pytest.raises(NotMonotone):
            transform_graph(q_graph_map(p, Perturbation.zero()), phi, k=1.0)

    def test_lip_budget_enforced_at_construction(self):
        theta = 2 * np.pi * np.arange(128) / 128
        with pytest.raises(LipBudgetExceeded):
            LipGraph(0.5 * np.sin(theta), lip_k=1e-4)


class TestContraction:
    def test_closed_form(self, golden):
        p = Params(nu=0.3, eta=0.1, eps=0.0, alpha=golden)
        C = analytic_contraction(p, Perturbation.zero(), 0.01)
        assert C == pytest.approx(math.exp(-0.2 * math.pi) + 0.02 * math.pi,
                                  abs=1e-15)
        assert C < 1

    def test_k_zero_limit(self, golden):
        p = Params(nu=0.3, eta=0.1, eps=0.0, alpha=golden)
        assert analytic_contraction(p, Perturbation.zero(), 0.0) == \
            pytest.approx(contraction_factor(0.1), abs=1e-15)

    def test_empirical_below_analytic(self, golden, standard_pert):
        p = Params(nu=0.3, eta=0.1, eps=1e-4, alpha=golden)
        rep = measure_contraction(p, standard_pert, k=p.eta / 6.0,
                                  n_pairs=8, M=512, cap=0.35)
        assert isinstance(rep, ContractionReport)
        assert rep.empirical <= rep.analytic < 1.0


class TestSolve:
    def test_eps_zero_exactness(self, golden):
        p = Params(nu=0.3, eta=0.1, eps=0.0, alpha=golden)
        res = solve_invariant_circle(p, Perturbation.zero(), tol=1e-12,
                                     M=512, cap=0.35)
        assert np.abs(res.graph.values).max() == 0.0
        assert res.residual <= 1e-14
        assert res.iterations <= 2

    def test_perturbed_solve(self, golden, standard_pert, p_admissible):
        res = solve_invariant_circle(p_admissible, standard_pert, tol=1e-9,
                                     M=2048, cap=0.35)
        assert res.residual <= 5e-9
        assert res.coincidence <= 2e-9
        assert res.graph.measured_lip() <= p_admissible.eta / 6.0

    def test_geometric_step_decay(self, golden, standard_pert, p_admissible):
        k = auto_k(p_admissible)
        C = analytic_contraction(p_admissible, standard_pert, k)
        fn = q_graph_map(p_admissible, standard_pert)
        phi = LipGraph.constant(0.0, k, 512)
        steps = []
        for _ in range(12):
            nxt = transform_graph(fn, phi, k)
            steps.append(nxt.sup_diff(phi))
            phi = nxt
        for a, b in zip(steps[1:], steps[2:]):
            if a > 1e-13:
                assert b <= C * a * 1.1

    def test_gate_rejection(self, golden, standard_pert):
        p = Params(nu=0.3, eta=2e-3, eps=1e-4, alpha=golden)
        with pytest.raises(GateRejected):
            solve_invariant_circle(p, standard_pert)

    def test_basin_quickcheck(self, golden, standard_pert, p_admissible):
        res = solve_invariant_circle(p_admissible, standard_pert, tol=1e-9,
                                     M=1024, cap=0.35, multi_start=False)
        assert basin_hits_graph(p_admissible, standard_pert, res.graph,
                                n_seeds=20, iters=400, tol=1e-6)


class TestEtaScaling:
    def test_matches_analytic_boundary(self, standard_pert):
        for eps in (1e-6, 1e-5):
            got = minimal_admissible_eta(standard_pert, eps)
            want = 6.0 * math.sqrt(standard_pert.A * eps / math.pi)
            assert got == pytest.approx(want, abs=1e-6)

    def test_upward_closed(self, standard_pert, golden):
        eps = 1e-5
        eta_min = minimal_admissible_eta(standard_pert, eps)
        for eta in np.linspace(eta_min * 1.01, GATE_CAP, 7):
            p = Params(nu=0.3, eta=float(eta), eps=eps, alpha=golden)
            assert gate(p, standard_pert, auto_k(p)).admissible
