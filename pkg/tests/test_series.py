import numpy as np
import pytest

from circlelab.series import (PolyMapCoeffs, TrigTaylor, apply_angular_shear,
                              apply_radial_scale, apply_radial_shear,
                              compose_along_lift, fit_lift_composition)
from circlelab.trig import TrigPoly

ORDER, MODES = 6, 96
ROT = 2 * np.pi * 0.6180339887498949


def taylor(coeffs):
    return TrigTaylor.build(coeffs, ORDER, MODES)


@pytest.fixture
def sample_map():
    # a small analytic map with a strong twist and near-unity contraction
    ang = taylor([TrigPoly.zero(),
                  TrigPoly.constant(4.6) + TrigPoly.sine(1, 0.003),
                  TrigPoly.cosine(2, 0.002),
                  TrigPoly.sine(1, 0.001)])
    rad = taylor([TrigPoly.zero(),
                  TrigPoly.constant(0.53) + TrigPoly.cosine(1, 0.002),
                  TrigPoly.sine(2, 0.001)])
    return PolyMapCoeffs(ROT, ang, rad)


class TestTaylorAlgebra:
    def test_product_pointwise(self, rng):
        a = taylor([TrigPoly.cosine(1, 0.3), TrigPoly.constant(1.1),
                    TrigPoly.sine(2, 0.2)])
        b = taylor([TrigPoly.constant(0.5), TrigPoly.sine(1, 0.4)])
        xi = rng.uniform(0, 2 * np.pi, 32)
        y = rng.uniform(-0.2, 0.2, 32)
        lhs = (a * b).eval(xi, y)
        rhs = a.eval(xi, y) * b.eval(xi, y)
        # exact up to the truncated y-order
        assert np.abs(lhs - rhs).max() <= 0.2 ** (ORDER + 1) * 10

    def test_substitute_pointwise(self, rng):
        a = taylor([TrigPoly.cosine(1, 0.3), TrigPoly.constant(1.0),
                    TrigPoly.sine(3, 0.1)])
        s = taylor([TrigPoly.zero(), TrigPoly.constant(1.0) +
                    TrigPoly.cosine(1, 0.2), TrigPoly.sine(1, 0.1)])
        xi = rng.uniform(0, 2 * np.pi, 32)
        y = rng.uniform(-0.05, 0.05, 32)
        lhs = a.substitute(s).eval(xi, y)
        rhs = a.eval(xi, s.eval(xi, y))
        assert np.abs(lhs - rhs).max() <= 1e-9

    def test_invert_radial_roundtrip(self, rng):
        s = taylor([TrigPoly.zero(), TrigPoly.constant(1.0) +
                    TrigPoly.cosine(1, 0.1), TrigPoly.sine(1, 0.05),
                    TrigPoly.cosine(2, 0.02)])
        t = s.invert_radial()
        xi = rng.uniform(0, 2 * np.pi, 32)
        w = rng.uniform(-0.05, 0.05, 32)
        back = s.eval(xi, t.eval(xi, w))
        assert np.abs(back - w).max() <= 1e-10

    def test_shift_angle_pointwise(self, rng):
        F = taylor([TrigPoly.cosine(1, 0.5), TrigPoly.sine(2, 0.3)])
        zeta = taylor([TrigPoly.zero(), TrigPoly.sine(1, 0.02),
                       TrigPoly.cosine(1, 0.01)])
        xi = rng.uniform(0, 2 * np.pi, 32)
        y = rng.uniform(-0.1, 0.1, 32)
        lhs = F.shift_angle(zeta).eval(xi, y)
        zv = zeta.eval(xi, y)
        rhs = (TrigPoly.cosine(1, 0.5).eval(xi + zv).real
               + TrigPoly.sine(2, 0.3).eval(xi + zv).real * y)
        assert np.abs(lhs - rhs).max() <= 1e-10

    def test_compose_along_lift(self, rng):
        f = TrigPoly.from_function(
            lambda t: np.exp(0.3 * np.cos(t) + 0.1 * np.sin(2 * t)), 48)
        inner = taylor([TrigPoly.cosine(1, 0.03),
                        TrigPoly.constant(4.6) + TrigPoly.sine(1, 0.2),
                        TrigPoly.cosine(2, 0.05)])
        out = compose_along_lift(f, ROT, inner)
        xi = rng.uniform(0, 2 * np.pi, 32)
        gaps = []
        for y0 in (0.02, 0.01):
            y = np.full(32, y0)
            arg = xi + ROT + inner.eval(xi, y)
            gaps.append(np.abs(out.eval(xi, y) - f.eval(arg).real).max())
        # exact through the working order; the rest is the order-7 tail
        assert gaps[0] <= 1e-8
        assert gaps[1] <= gaps[0] / 2 ** 6 + 1e-13

    def test_fit_lift_composition(self):
        f = TrigPoly.cosine(2)
        base = TrigPoly.sine(1, 0.1)
        out = fit_lift_composition(f, 0.3, base, 48)
        xi = np.linspace(0, 2 * np.pi, 41)
        want = np.cos(2 * (xi + 0.3 + 0.1 * np.sin(xi)))
        assert np.abs(out.eval(xi).real - want).max() <= 1e-12


def honest_conjugation(m, kind, poly, i):
    # pointwise conjugation oracle built on Newton inversions
    def fwd(xi, y):
        if kind == "scale":
            return xi, y / poly.eval(xi).real
        if kind == "radial":
            return xi, y + poly.eval(xi).real * y ** i
        return xi + poly.eval(xi).real * y ** i, y

    def inv(xi, y):
        if kind == "scale":
            return xi, y * poly.eval(xi).real
        if kind == "radial":
            t = y.copy()
            for _ in range(100):
                num = t + poly.eval(xi).real * t ** i - y
                if np.abs(num).max() < 1e-15:
                    break
                t -= num / (1 + i * poly.eval(xi).real * t ** (i - 1))
            return xi, t
        s = xi.copy()
        for _ in range(100):
            num = s + poly.eval(s).real * y ** i - xi
            if np.abs(num).max() < 1e-15:
                break
            s -= num / (1 + poly.derivative().eval(s).real * y ** i)
        return s, y

    def conjugated(xi, y):
        a, b = inv(xi, y)
        a2, b2 = m.eval(a, b)
        return fwd(a2, b2)
    return conjugated


@pytest.mark.parametrize("kind,i,poly", [
    ("scale", 0, TrigPoly.constant(1.0) + TrigPoly.cosine(1, 0.01)),
    ("radial", 2, TrigPoly.sine(1, 0.004)),
    ("radial", 3, TrigPoly.cosine(2, 0.003)),
    ("angular", 1, TrigPoly.sine(1, 0.005) + TrigPoly.cosine(3, 0.002)),
    ("angular", 2, TrigPoly.cosine(1, 0.004)),
])
def test_conjugations_match_pointwise(sample_map, rng, kind, i, poly):
    if kind == "scale":
        out = apply_radial_scale(sample_map, poly)
    elif kind == "radial":
        out = apply_radial_shear(sample_map, poly, i)
    else:
        out = apply_angular_shear(sample_map, poly, i)
    oracle = honest_conjugation(sample_map, kind, poly, i)
    xi = rng.uniform(0, 2 * np.pi, 64)
    gaps = []
    for y0 in (0.04, 0.02):
        y = np.full(64, y0)
        ax, ay = out.eval(xi, y)
        bx, by = oracle(xi, y)
        gaps.append(max(np.abs(ax - bx).max(), np.abs(ay - by).max()))
    # exact through the working order: the gap is the genuine order-7 tail
    assert gaps[0] <= 1e-8
    assert gaps[1] <= gaps[0] / 16 + 1e-14
