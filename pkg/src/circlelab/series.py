"""Polynomials in a radial variable with trig-polynomial coefficients.

The normal-form reduction manipulates maps of the annulus of the shape

    (xi, y)  |->  (xi + rot + sum_m a_m(xi) y^m,  sum_m b_m(xi) y^m)

truncated at a working order in y.  This module supplies the coefficient
algebra: sums, Cauchy products, substitution of one series into another,
series inversion, evaluation of a circle function along a lift, and the
angle-shift expansion f(xi + zeta(xi, y)) by exact term differentiation.
All products re-truncate coefficients at a working mode cutoff.

Every constructed coefficient passes through a spectral-cone cleaner:
modes beyond CONE_START must decay at least like e^{-CONE_SIGMA k} above
the relative floor, else they are zeroed.  Rounding carpets in high modes
are otherwise amplified like (k T y)^n / n! by the composition expansions
and would swamp the high-order tables; the cone is harmless for the data
handled here, whose genuine analyticity width is far larger than
CONE_SIGMA.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .trig import TrigPoly

_FIT_FACTOR = 4
CONE_FLOOR = 1e-15
CONE_SIGMA = 0.8
CONE_START = 8


def _cone(poly: TrigPoly) -> TrigPoly:
    scale = float(np.abs(poly.coeffs).max()) if poly.coeffs.size else 0.0
    if scale == 0.0:
        return poly
    out = poly.cone_cleaned(CONE_FLOOR * max(1.0, scale),
                            CONE_SIGMA, CONE_START)
    live = np.nonzero(np.abs(out.coeffs))[0]
    if live.size == 0:
        return TrigPoly.zero(out.width_s)
    reach = int(max(abs(live[0] - out.N), abs(live[-1] - out.N)))
    return out.truncated(reach) if reach < out.N else out


def fit_lift_composition(f: TrigPoly, beta: float, base: TrigPoly,
                         modes: int) -> TrigPoly:
    """Spectral fit of xi -> f(xi + beta + base(xi)), noise-floor cleaned."""
    M = max(_FIT_FACTOR * modes, _FIT_FACTOR * f.N, 64)
    xi = 2.0 * np.pi * np.arange(M) / M
    arg = xi + beta + base.eval(xi).real
    return _cone(TrigPoly.from_samples(f.eval(arg), modes))


def reciprocal_poly(f: TrigPoly, modes: int) -> TrigPoly:
    """Spectral fit of 1/f for f bounded away from zero."""
    M = max(_FIT_FACTOR * modes, _FIT_FACTOR * f.N, 64)
    vals = f.grid_values(M)
    vals = vals.real if f.real else vals
    if np.abs(vals).min() <= 0.0:
        raise ZeroDivisionError("reciprocal of a function with a zero")
    return _cone(TrigPoly.from_samples(1.0 / vals, modes))


@dataclass(frozen=True)
class TrigTaylor:
    """sum_{m=0..order} c_m(xi) y^m with TrigPoly coefficients."""

    coeffs: tuple
    order: int
    modes: int

    @staticmethod
    def build(coeffs, order: int, modes: int) -> "TrigTaylor":
        cs = []
        for m in range(order + 1):
            c = coeffs[m] if m < len(coeffs) else TrigPoly.zero()
            if np.isscalar(c):
                c = TrigPoly.constant(c)
            cs.append(_cone(c.truncated(modes)))
        return TrigTaylor(tuple(cs), order, modes)

    @staticmethod
    def zero(order: int, modes: int) -> "TrigTaylor":
        return TrigTaylor.build([], order, modes)

    @staticmethod
    def variable(order: int, modes: int) -> "TrigTaylor":
        """The series y itself."""
        return TrigTaylor.build([TrigPoly.zero(), TrigPoly.constant(1.0)],
                                order, modes)

    def coeff(self, m: int) -> TrigPoly:
        return self.coeffs[m] if m <= self.order else TrigPoly.zero()

    def min_order(self) -> int:
        for m, c in enumerate(self.coeffs):
            if np.abs(c.coeffs).max() > 0.0:
                return m
        return self.order + 1

    def __add__(self, other):
        if np.isscalar(other):
            other = TrigTaylor.build([TrigPoly.constant(other)],
                                     self.order, self.modes)
        if isinstance(other, TrigPoly):
            other = TrigTaylor.build([other], self.order, self.modes)
        cs = [self.coeff(m) + other.coeff(m) for m in range(self.order + 1)]
        return TrigTaylor.build(cs, self.order, self.modes)

    __radd__ = __add__

    def __neg__(self):
        return TrigTaylor.build([-c for c in self.coeffs], self.order, self.modes)

    def __sub__(self, other):
        if np.isscalar(other) or isinstance(other, TrigPoly):
            return self + (-1.0 * other if np.isscalar(other) else -other)
        return self + (-other)

    def __mul__(self, other):
        if np.isscalar(other):
            return TrigTaylor.build([other * c for c in self.coeffs],
                                    self.order, self.modes)
        if isinstance(other, TrigPoly):
            return TrigTaylor.build([(c * other).truncated(self.modes)
                                     for c in self.coeffs],
                                    self.order, self.modes)
        out = [TrigPoly.zero() for _ in range(self.order + 1)]
        lo_s, lo_o = self.min_order(), other.min_order()
        for m in range(lo_s, self.order + 1):
            cm = self.coeffs[m]
            if np.abs(cm.coeffs).max() == 0.0:
                continue
            for n in range(lo_o, self.order + 1 - m):
                cn = other.coeff(n)
                if np.abs(cn.coeffs).max() == 0.0:
                    continue
                out[m + n] = out[m + n] + (cm * cn).truncated(self.modes)
        return TrigTaylor.build(out, self.order, self.modes)

    __rmul__ = __mul__

    def power(self, n: int) -> "TrigTaylor":
        out = TrigTaylor.build([TrigPoly.constant(1.0)], self.order, self.modes)
        for _ in range(n):
            out = out * self
        return out

    def times_y_power(self, i: int) -> "TrigTaylor":
        cs = [TrigPoly.zero()] * i + list(self.coeffs)
        return TrigTaylor.build(cs, self.order, self.modes)

    def substitute(self, s: "TrigTaylor") -> "TrigTaylor":
        """Replace the radial variable: sum_m c_m(xi) s(xi, y)^m.

        Requires s to have zero constant term so the result stays polynomial
        in y at the working order.
        """
        if s.min_order() < 1:
            raise ValueError("substitution series must vanish at y = 0")
        out = TrigTaylor.build([self.coeff(0)], self.order, self.modes)
        s_pow = TrigTaylor.build([TrigPoly.constant(1.0)], self.order, self.modes)
        for m in range(1, self.order + 1):
            s_pow = s_pow * s
            if s_pow.min_order() > self.order:
                break
            out = out + s_pow * self.coeff(m)
        return out

    def invert_radial(self) -> "TrigTaylor":
        """Series t(xi, w) with self(xi, t(xi, w)) = w.

        Requires zero constant term and an order-1 coefficient bounded away
        from zero (its reciprocal is fitted spectrally).
        """
        if self.min_order() < 1:
            raise ValueError("inverse needs a series vanishing at y = 0")
        inv1 = reciprocal_poly(self.coeff(1), self.modes)
        w = TrigTaylor.variable(self.order, self.modes)
        t = w * inv1
        for _ in range(self.order):
            higher = self.substitute(t) - w
            t = t - TrigTaylor.build(
                [(c * inv1).truncated(self.modes) for c in higher.coeffs],
                self.order, self.modes)
        return t

    def shift_angle(self, zeta: "TrigTaylor") -> "TrigTaylor":
        """F(xi + zeta(xi, y), y) expanded by exact coefficient derivatives.

        zeta must vanish at y = 0; the expansion terminates at the working
        order because zeta carries at least one power of y.
        """
        if zeta.min_order() < 1:
            raise ValueError("angle shift must vanish at y = 0")
        i0 = zeta.min_order()
        n_max = self.order // i0
        out = TrigTaylor.zero(self.order, self.modes)
        zeta_pow = TrigTaylor.build([TrigPoly.constant(1.0)],
                                    self.order, self.modes)
        for n in range(n_max + 1):
            if n > 0:
                zeta_pow = zeta_pow * zeta
                if zeta_pow.min_order() > self.order:
                    break
            fact = 1.0 / math.factorial(n)
            deriv_coeffs = [c.derivative(n) if n else c for c in self.coeffs]
            term = TrigTaylor.build(deriv_coeffs, self.order, self.modes)
            out = out + (zeta_pow * term) * fact
        return out

    def eval(self, xi, y):
        """Pointwise sum_m c_m(xi) y^m (vectorized)."""
        xi = np.asarray(xi, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(xi, y).shape)
        for m in range(self.order, -1, -1):
            out = out * y + self.coeffs[m].eval(xi).real
        return out

    def nonconstancy(self, m: int) -> float:
        """Weighted norm of the oscillating part of the order-m coefficient."""
        return self.coeff(m).zero_mean().norm_s(0.0)


def compose_along_lift(f: TrigPoly, rot: float, inner: TrigTaylor) -> TrigTaylor:
    """f evaluated along the lift xi + rot + inner(xi, y).

    The order-0 part of inner is absorbed into a spectral fit of
    f(xi + rot + inner_0(xi)); the y-dependent rest enters through exact
    derivatives of f.
    """
    order, modes = inner.order, inner.modes
    base = inner.coeff(0)
    higher = TrigTaylor.build([TrigPoly.zero()] + list(inner.coeffs[1:]),
                              order, modes)
    out = TrigTaylor.zero(order, modes)
    h_pow = TrigTaylor.build([TrigPoly.constant(1.0)], order, modes)
    for n in range(order + 1):
        if n > 0:
            h_pow = h_pow * higher
            if h_pow.min_order() > order:
                break
        fn = fit_lift_composition(f.derivative(n) if n else f, rot, base, modes)
        out = out + (h_pow * fn) * (1.0 / math.factorial(n))
    return out


@dataclass(frozen=True)
class PolyMapCoeffs:
    """Coefficient tables of (xi, y) -> (xi + rot + ang(xi, y), rad(xi, y))."""

    rot: float
    ang: TrigTaylor
    rad: TrigTaylor

    def eval(self, xi, y):
        return (np.asarray(xi, dtype=float) + self.rot + self.ang.eval(xi, y),
                self.rad.eval(xi, y))


def apply_radial_scale(m: PolyMapCoeffs, X: TrigPoly) -> PolyMapCoeffs:
    """Conjugate by (xi, x) -> (xi, x / X(xi))."""
    sub = TrigTaylor.build([TrigPoly.zero(), X], m.ang.order, m.ang.modes)
    ang1 = m.ang.substitute(sub)
    rad1 = m.rad.substitute(sub)
    invX = reciprocal_poly(X, m.ang.modes)
    scale_out = compose_along_lift(invX, m.rot, ang1)
    return PolyMapCoeffs(m.rot, ang1, rad1 * scale_out)


def apply_radial_shear(m: PolyMapCoeffs, Xi: TrigPoly, i: int) -> PolyMapCoeffs:
    """Conjugate by (xi, y) -> (xi, y + Xi(xi) y^i)."""
    order, modes = m.ang.order, m.ang.modes
    fwd = TrigTaylor.variable(order, modes) + TrigTaylor.build(
        [TrigPoly.zero()] * i + [Xi], order, modes)
    back = fwd.invert_radial()
    ang1 = m.ang.substitute(back)
    rad1 = m.rad.substitute(back)
    Xi_out = compose_along_lift(Xi, m.rot, ang1)
    rad_new = rad1 + Xi_out * rad1.power(i)
    return PolyMapCoeffs(m.rot, ang1, rad_new)


def apply_angular_shear(m: PolyMapCoeffs, Z: TrigPoly, i: int) -> PolyMapCoeffs:
    """Conjugate by (xi, y) -> (xi + Z(xi) y^i, y)."""
    order, modes = m.ang.order, m.ang.modes
    Z_taylor = TrigTaylor.build([Z], order, modes)
    # zeta solves xi = Xi + zeta with zeta = -Z(Xi + zeta) y^i; each sweep
    # gains i orders in y.
    zeta = (-1.0 * Z_taylor).times_y_power(i)
    for _ in range(max(order // max(i, 1), 1)):
        zeta = (-1.0 * Z_taylor.shift_angle(zeta)).times_y_power(i)
    ang_sh = m.ang.shift_angle(zeta)
    rad_new = m.rad.shift_angle(zeta)
    E = zeta + ang_sh
    Z_out = compose_along_lift(Z, m.rot, E)
    ang_new = E + Z_out * rad_new.power(i)
    return PolyMapCoeffs(m.rot, ang_new, rad_new)
