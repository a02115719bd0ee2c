import math

import numpy as np
import pytest

from circlelab.diophantine import certify, convergents
from circlelab.errors import CutoffTooSmall, NotPositive, ResonantDivisor
from circlelab.smalldiv import (BOUND_S, BOUND_SIGMA, FROZEN_BOUND_C,
                                DifferenceProblem, bound_margin,
                                calibrate_bound_constant, equation_residual,
                                multiplicative_residual, random_problem,
                                solve_difference, solve_log_multiplicative,
                                verify_norm_bound)
from circlelab.trig import TrigPoly


def pointwise_residual(p, f, mu, n=64):
    # independent oracle: direct summation at sample points
    theta = 2 * np.pi * np.arange(n) / n
    shift = 2 * np.pi * p.alpha.alpha
    lhs = mu + p.a * f.eval(theta + shift) - p.b * f.eval(theta)
    return np.abs(lhs - p.g.eval(theta)).max()


class TestSolveDifference:
    def test_constant_data(self, golden):
        p = DifferenceProblem(1.0, 1.0, TrigPoly.constant(0.7), golden)
        sol = solve_difference(p)
        assert np.abs(sol.f.coeffs).max() == 0.0
        assert sol.mu == pytest.approx(0.7, abs=1e-16)

    def test_cosine_frozen_mode(self, golden):
        p = DifferenceProblem(1.0, 1.0, TrigPoly.cosine(), golden)
        sol = solve_difference(p)
        want = 0.5 / (np.exp(2j * np.pi * golden.alpha) - 1.0)
        got = sol.f.coeffs[sol.f.N + 1]
        assert got == pytest.approx(want, abs=1e-15)
        live = np.nonzero(np.abs(sol.f.coeffs))[0] - sol.f.N
        assert set(live) == {-1, 1}
        assert pointwise_residual(p, sol.f, sol.mu) <= 1e-12

    def test_twisted_multipliers(self, golden):
        p = DifferenceProblem(0.81, 0.9, TrigPoly.sine(1), golden)
        sol = solve_difference(p)
        k = sol.f.modes
        d = 0.81 * np.exp(2j * np.pi * k * golden.alpha) - 0.9
        expect = np.where(k != 0, p.g.coeffs / d, 0.0)
        assert np.abs(sol.f.coeffs - expect).max() <= 1e-15
        assert pointwise_residual(p, sol.f, sol.mu) <= 1e-12

    def test_zero_mean_and_mu_convention(self, golden, rng):
        g = TrigPoly.from_modes({0: 1.3, 1: 0.2 - 0.1j, -1: 0.2 + 0.1j})
        sol = solve_difference(DifferenceProblem(1.0, 0.5, g, golden))
        assert sol.f.mean() == 0.0
        assert sol.mu == pytest.approx(1.3, abs=1e-15)

    def test_linearity(self, golden, rng):
        g1 = TrigPoly.cosine(1, 0.7) + TrigPoly.sine(2, 0.1)
        g2 = TrigPoly.sine(1, 0.4) + TrigPoly.cosine(3, 0.2)
        s1 = solve_difference(DifferenceProblem(1.0, 1.0, g1, golden))
        s2 = solve_difference(DifferenceProblem(1.0, 1.0, g2, golden))
        s12 = solve_difference(DifferenceProblem(1.0, 1.0, g1 + g2, golden))
        diff = (s1.f + s2.f - s12.f).coeffs
        assert np.abs(diff).max() <= 1e-13

    def test_rotation_equivariance(self, golden, rng):
        g = TrigPoly.cosine(1, 0.5) + TrigPoly.sine(3, 0.2)
        beta = rng.uniform(0, 2 * np.pi)
        s = solve_difference(DifferenceProblem(1.0, 1.0, g, golden))
        s_rot = solve_difference(
            DifferenceProblem(1.0, 1.0, g.compose_rotation(beta), golden))
        diff = (s.f.compose_rotation(beta) - s_rot.f).coeffs
        assert np.abs(diff).max() <= 1e-13

    def test_real_data_gives_real_solution(self, golden):
        sol = solve_difference(DifferenceProblem(
            1.0, 1.0, TrigPoly.cosine() + TrigPoly.sine(2, 0.3), golden))
        assert sol.f.real

    def test_residual_enforced_on_accepted(self, golden, rng):
        for _ in range(20):
            p = random_problem(golden, rng)
            sol = solve_difference(p)
            assert sol.residual <= 1e-11 * (1.0 + p.g.norm_s(0.0))

    def test_modes_beyond_certificate(self):
        small = certify((math.sqrt(5) - 1) / 2, 1.0, K=4)
        with pytest.raises(ResonantDivisor):
            solve_difference(DifferenceProblem(1.0, 1.0, TrigPoly.cosine(6),
                                               small))

    def test_cutoff_too_small(self, golden):
        g = TrigPoly.cosine(12)
        with pytest.raises(CutoffTooSmall):
            solve_difference(DifferenceProblem(1.0, 1.0, g, golden, modes=16))


class TestNormBound:
    def test_zero_solution(self, golden):
        p = DifferenceProblem(1.0, 1.0, TrigPoly.constant(1.0), golden)
        sol = solve_difference(p)
        assert verify_norm_bound(sol, 0.1, 0.1, p)

    def test_cosine_margin_positive(self, golden):
        p = DifferenceProblem(1.0, 1.0, TrigPoly.cosine(), golden)
        sol = solve_difference(p)
        assert verify_norm_bound(sol, 0.1, 0.1, p)
        assert bound_margin(sol, 0.1, 0.1, p) > 0

    def test_adversarial_worst_mode(self, golden):
        # concentrate on the worst divisor mode among convergent denominators
        qs = [q for _, q in convergents(golden.cf) if q <= 64]
        worst_q, worst_div = None, np.inf
        for q in qs:
            d = abs(np.exp(2j * np.pi * q * golden.alpha) - 1.0)
            scaled = d * math.exp(q * BOUND_SIGMA)
            if scaled < worst_div:
                worst_q, worst_div = q, scaled
        g = TrigPoly.cosine(worst_q)
        p = DifferenceProblem(1.0, 1.0, g, golden, modes=4 * worst_q)
        sol = solve_difference(p)
        assert verify_norm_bound(sol, BOUND_S, BOUND_SIGMA, p)
        benign = DifferenceProblem(1.0, 1.0, TrigPoly.cosine(), golden)
        sol_b = solve_difference(benign)
        assert (bound_margin(sol, BOUND_S, BOUND_SIGMA, p)
                < bound_margin(sol_b, BOUND_S, BOUND_SIGMA, benign))

    def test_frozen_constant_reproduces_calibration(self, golden):
        assert calibrate_bound_constant(golden) == pytest.approx(
            FROZEN_BOUND_C, rel=1e-12)


class TestLogMultiplicative:
    def test_constant_multiplier(self, golden):
        eta = 0.1
        b = math.exp(-2 * math.pi * eta)
        X, bar = solve_log_multiplicative(TrigPoly.constant(b), golden)
        assert bar == pytest.approx(b, rel=1e-14)
        assert X.mean() == pytest.approx(1.0, abs=1e-13)
        assert X.zero_mean().norm_s(0.0) <= 1e-13

    def test_oscillating_multiplier(self, golden):
        eta = 0.1
        B1 = math.exp(-2 * math.pi * eta) * (1.0 + TrigPoly.cosine(1, 0.01))
        X, bar = solve_log_multiplicative(B1, golden)
        # geometric-mean oracle by quadrature
        theta = 2 * np.pi * np.arange(4096) / 4096
        mean_log = np.log(B1.eval(theta).real).mean()
        assert bar == pytest.approx(math.exp(mean_log), rel=1e-12)
        assert multiplicative_residual(B1, X, bar, golden) <= 1e-10

    def test_zero_crossing_rejected(self, golden):
        with pytest.raises(NotPositive):
            solve_log_multiplicative(TrigPoly.cosine(), golden)
