"""Localization at the translated curve and order-k normal form.

localize() Taylor-expands the map around the translated curve in exact
coefficient tables (angle functions times powers of the radial offset),
cross-checked against finite differences.  reduce() then flattens the
angle dependence order by order: a multiplicative (log) solve makes the
linear multiplier constant, twisted difference equations remove the angle
from the higher radial coefficients, and twisted cohomological equations
remove it from the angular coefficients.  What remains is a polynomial
normal form with constant coefficients plus remainders carrying either
high powers of the radius or a factor of the translation.

The region machinery classifies parameter cells: the graph-transform gate
region, the enlarged region eta >~ eps and eta >= sqrt(2 pi) |nu - alpha|
where the normal form re-enables the graph transform, and proximity to the
zero-translation curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (NoConvergence, NoRoot, NotPositive, OrderBlowup,
                     ResonantDivisor, TaylorUnstable)
from .graphflow import (GATE_CAP, LipGraph, auto_k, gate, invariance_residual,
                        transform_graph)
from .maps import (Params, Perturbation, RussRFrame, contraction_factor,
                   eval_Q, twist_coefficient)
from .russmann import TranslatedCurve
from .series import (PolyMapCoeffs, TrigTaylor, apply_angular_shear,
                     apply_radial_scale, apply_radial_shear,
                     compose_along_lift, fit_lift_composition)
from .smalldiv import (DifferenceProblem, solve_difference,
                       solve_log_multiplicative)
from .trig import TrigPoly

DEFAULT_ORDER = 4
_WORK_EXTRA = 2            # orders carried beyond k_max for tail estimates
_NF_MODES = 192
_TAIL_RADIUS = 0.1
_FD_SCALE_TOL = 1e-7
_TRANSFORM_CAP = 10.0
_C_ALPHA_TOL = 1e-11


@dataclass(frozen=True)
class LocalizedMap:
    """Taylor tables of the map at the translated curve.

    A[i-1], B[i-1] hold the order-i angle and radial coefficients for
    i = 1..k_max; the full working tables (including the tiny order-0
    defect rows and the extra tail orders) ride along in coeffs.
    """

    A: tuple
    B: tuple
    lam: float
    k_max: int
    tail_bound: float
    coeffs: PolyMapCoeffs
    curve: TranslatedCurve

    def order_coeff(self, component: str, i: int) -> TrigPoly:
        table = self.coeffs.ang if component == "ang" else self.coeffs.rad
        return table.coeff(i)


class TransformStack:
    """Ordered elementary changes of variables with pointwise transport."""

    def __init__(self):
        self.stages = []

    def append(self, kind: str, poly: TrigPoly, order: int = 0):
        self.stages.append((kind, order, poly))

    def __iter__(self):
        return iter(self.stages)

    def __len__(self):
        return len(self.stages)

    def forward(self, xi, x):
        xi = np.asarray(xi, dtype=float).copy()
        x = np.asarray(x, dtype=float).copy()
        for kind, i, poly in self.stages:
            if kind == "scale":
                x = x / poly.eval(xi).real
            elif kind == "radial":
                x = x + poly.eval(xi).real * x ** i
            elif kind == "angular":
                xi = xi + poly.eval(xi).real * x ** i
            else:
                raise ValueError(kind)
        return xi, x

    def inverse(self, xi, x, tol: float = 1e-13, max_iter: int = 60):
        xi = np.asarray(xi, dtype=float).copy()
        x = np.asarray(x, dtype=float).copy()
        for kind, i, poly in reversed(self.stages):
            if kind == "scale":
                x = x * poly.eval(xi).real
            elif kind == "radial":
                y = x.copy()
                for _ in range(max_iter):
                    num = y + poly.eval(xi).real * y ** i - x
                    if np.abs(num).max() <= tol:
                        break
                    den = 1.0 + i * poly.eval(xi).real * y ** (i - 1)
                    y = y - num / den
                else:
                    raise NoConvergence("radial stage inversion stalled")
                x = y
            elif kind == "angular":
                target = xi.copy()
                for _ in range(max_iter):
                    num = xi + poly.eval(xi).real * x ** i - target
                    if np.abs(num).max() <= tol:
                        break
                    den = 1.0 + poly.derivative().eval(xi).real * x ** i
                    xi = xi - num / den
                else:
                    raise NoConvergence("angular stage inversion stalled")
            else:
                raise ValueError(kind)
        return xi, x


@dataclass(frozen=True)
class NormalFormResult:
    """Constants of the order-k normal form and the transform stack."""

    alpha_bar: tuple
    beta_bar: tuple
    lam: float
    transform_stack: TransformStack
    residual_report: dict
    k: int
    coeffs: PolyMapCoeffs          # reduced tables, working order
    localized: LocalizedMap

    def multiplier_at(self, R: float) -> float:
        """d/dR of the radial polynomial at R."""
        return float(sum(i * b * R ** (i - 1)
                         for i, b in enumerate(self.beta_bar, start=1)))

    def radial_poly(self, R: float) -> float:
        return self.lam + float(sum(b * R ** i
                                    for i, b in enumerate(self.beta_bar, start=1)))


def _curve_on_conjugate_grid(tc: TranslatedCurve, modes: int) -> TrigPoly:
    """gamma o h as a function of the conjugated angle."""
    return fit_lift_composition(tc.gamma, 0.0, tc.h.periodic, modes)


def _inverse_periodic_part(tc: TranslatedCurve, modes: int) -> TrigPoly:
    """q = h^{-1} - id fitted on a uniform grid, noise-floor cleaned."""
    M = 4 * modes
    y = 2.0 * np.pi * np.arange(M) / M
    out = TrigPoly.from_samples(tc.h.invert(y, tol=1e-14) - y, modes)
    return out.cleaned(1e-13)


def localize(p: Params, pert: Perturbation, tc: TranslatedCurve,
             k_max: int = DEFAULT_ORDER, modes: int = _NF_MODES,
             validate: bool = True, work_extra: int = _WORK_EXTRA) -> LocalizedMap:
    """Exact Taylor tables of the map in curve-adapted coordinates.

    Polynomial composition of the stored tables, carrying work_extra orders
    beyond k_max so downstream users can see the remainder; coefficients are
    validated against finite differences of the honestly evaluated map at 64
    angles (TaylorUnstable on disagreement).
    """
    order = k_max + work_extra
    alpha = p.alpha.alpha
    rot = 2.0 * math.pi * alpha
    frame = RussRFrame(p)
    c_shift = frame.shift
    T = twist_coefficient(p.eta)
    mu = contraction_factor(p.eta)

    gamma0 = _curve_on_conjugate_grid(tc, modes)
    q = _inverse_periodic_part(tc, modes)
    h_per = tc.h.periodic

    # (gamma0 + x)^j as reusable powers
    gx = TrigTaylor.build([gamma0, TrigPoly.constant(1.0)], order, modes)
    gx_pow = [TrigTaylor.build([TrigPoly.constant(1.0)], order, modes)]
    for _ in range(max(pert.f.degree, pert.g.degree)):
        gx_pow.append(gx_pow[-1] * gx)

    def pulled(table) -> TrigTaylor:
        """eps * sum_j table_j(h(xi)) (gamma0 + x)^j, arguments rho-shifted."""
        out = TrigTaylor.zero(order, modes)
        shifted = table.shifted_rho(c_shift)
        for j, cj in enumerate(shifted.coeffs):
            if np.abs(cj.coeffs).max() == 0.0:
                continue
            cj_on_curve = fit_lift_composition(cj, 0.0, h_per, modes)
            out = out + gx_pow[j] * cj_on_curve
        return p.eps * out

    # Theta = h(xi) + rot + T (gamma0 + x) + eps f(...) = xi + rot + inner
    inner = TrigTaylor.build([h_per, TrigPoly.zero()], order, modes) \
        + T * gx + pulled(pert.f)
    ang = inner + compose_along_lift(q, rot, inner)

    # radial output in the shifted frame
    tau = 2.0 * math.pi * p.eta * (p.nu - alpha)
    R_tab = mu * gx + tau + pulled(pert.g)
    gamma_at_image = compose_along_lift(tc.gamma, rot, inner)
    rad_full = R_tab - gamma_at_image
    rad = rad_full - tc.lam

    coeffs = PolyMapCoeffs(rot, ang, rad)
    A = tuple(ang.coeff(i) for i in range(1, k_max + 1))
    B = tuple(rad.coeff(i) for i in range(1, k_max + 1))
    tail = sum(coeffs.ang.coeff(i).norm_s(0.0) * _TAIL_RADIUS ** i
               + coeffs.rad.coeff(i).norm_s(0.0) * _TAIL_RADIUS ** i
               for i in range(k_max + 1, order + 1))
    lm = LocalizedMap(A, B, tc.lam, k_max, float(tail), coeffs, tc)
    if validate:
        _validate_against_fd(p, pert, lm)
    return lm


def _honest_local_map(p: Params, pert: Perturbation, tc: TranslatedCurve):
    """Pointwise evaluation of the map in curve-adapted coordinates, built
    from lift inversion rather than the coefficient tables."""
    frame = RussRFrame(p)

    def fn(xi, x):
        theta = tc.h.eval(xi)
        r = np.asarray(x, dtype=float) + tc.gamma.eval(theta).real
        Th, R = eval_Q(p, pert, frame, (theta, r))
        xi1 = tc.h.invert(Th, tol=1e-13)
        x1 = R - tc.gamma.eval(Th).real
        return xi1, x1
    return fn


# central stencils for f^(i): (offsets, weights, power of h)
_FD_STENCILS = {
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def _validate_against_fd(p: Params, pert: Perturbation, lm: LocalizedMap,
                         n_angles: int = 64, step: float = 0.02):
    """Check table coefficients against Richardson-extrapolated central
    differences in x of the honestly evaluated map."""
    fn = _honest_local_map(p, pert, lm.curve)
    xi = 2.0 * np.pi * np.arange(n_angles) / n_angles
    cache = {}

    def values(x: float):
        if x not in cache:
            cache[x] = fn(xi, np.full(n_angles, x))
        return cache[x]

    def fd(i: int, h: float):
        offs, wts = _FD_STENCILS[i]
        acc_a = np.zeros(n_angles)
        acc_b = np.zeros(n_angles)
        for o, w in zip(offs, wts):
            va, vb = values(o * h)
            acc_a += w * va
            acc_b += w * vb
        return acc_a / h ** i, acc_b / h ** i

    scale = 1.0 + max(max(c.sup_norm() for c in lm.A),
                      max(c.sup_norm() for c in lm.B))
    for i in range(1, min(lm.k_max, 4) + 1):
        a_h, b_h = fd(i, step)
        a_h2, b_h2 = fd(i, step / 2.0)
        fact = math.factorial(i)
        a_rich = (4.0 * a_h2 - a_h) / 3.0 / fact
        b_rich = (4.0 * b_h2 - b_h) / 3.0 / fact
        err_a = np.abs(a_rich - lm.A[i - 1].eval(xi).real).max()
        err_b = np.abs(b_rich - lm.B[i - 1].eval(xi).real).max()
        if max(err_a, err_b) > _FD_SCALE_TOL * scale:
            raise TaylorUnstable(
                f"order {i} coefficients differ from finite differences "
                f"by {max(err_a, err_b):.3e}")


def reduce(lm: LocalizedMap, alpha=None, k: int = None,
           constancy_tol: float = 1e-10) -> NormalFormResult:
    """Flatten angle dependence of all coefficients up to order k.

    Stage order matters: the log solve first (makes the linear radial
    coefficient constant), then radial shears for orders 2..k, then angular
    shears for orders 1..k.  Earlier stages are never re-polluted by later
    ones.  The difference equations carry the exact multipliers
    (beta1^i, beta1) and (beta1^i, 1); their divisors are bounded below by
    the hyperbolicity gap.
    """
    alpha = lm.curve.params.alpha if alpha is None else alpha
    k = lm.k_max if k is None else k
    if k > lm.k_max:
        raise ValueError("requested order exceeds the localized tables")
    m = lm.coeffs
    modes = m.ang.modes
    stack = TransformStack()

    B1 = m.rad.coeff(1)
    X, beta1 = solve_log_multiplicative(B1, alpha, modes=modes)
    stack.append("scale", X)
    m = apply_radial_scale(m, X)

    gap_scale = max(1.0, B1.sup_norm())
    for i in range(2, k + 1):
        beta_i = m.rad.coeff(i)
        if abs(beta1 ** i - beta1) < 1e-12 * gap_scale:
            raise ResonantDivisor(f"radial stage {i}: multiplier gap vanished")
        sol = solve_difference(DifferenceProblem(
            beta1 ** i, beta1, -1.0 * beta_i, alpha, modes=2 * modes))
        Xi = sol.f
        if Xi.norm_s(0.0) > _TRANSFORM_CAP:
            raise OrderBlowup(f"radial transform at order {i} has norm "
                              f"{Xi.norm_s(0.0):.2e}")
        stack.append("radial", Xi, i)
        m = apply_radial_shear(m, Xi, i)
        left = m.rad.nonconstancy(i)
        if left > constancy_tol * max(1.0, abs(float(beta_i.mean()))):
            raise NoConvergence(f"radial order {i} kept angle dependence "
                                f"{left:.3e}")

    for i in range(1, k + 1):
        alpha_i = m.ang.coeff(i)
        sol = solve_difference(DifferenceProblem(
            beta1 ** i, 1.0, -1.0 * alpha_i, alpha, modes=2 * modes))
        Z = sol.f
        if Z.norm_s(0.0) > _TRANSFORM_CAP:
            raise OrderBlowup(f"angular transform at order {i} has norm "
                              f"{Z.norm_s(0.0):.2e}")
        stack.append("angular", Z, i)
        m = apply_angular_shear(m, Z, i)
        left = m.ang.nonconstancy(i)
        if left > constancy_tol * max(1.0, abs(float(alpha_i.mean()))):
            raise NoConvergence(f"angular order {i} kept angle dependence "
                                f"{left:.3e}")

    alpha_bar = tuple(float(m.ang.coeff(i).mean()) for i in range(1, k + 1))
    beta_bar = tuple(float(m.rad.coeff(i).mean()) for i in range(1, k + 1))
    report = {
        "ang": [m.ang.nonconstancy(i) for i in range(0, m.ang.order + 1)],
        "rad": [m.rad.nonconstancy(i) for i in range(0, m.rad.order + 1)],
    }
    return NormalFormResult(alpha_bar, beta_bar, lm.lam, stack, report, k,
                            m, lm)


def invariant_radius(nf: NormalFormResult, tol: float = 1e-13,
                     max_iter: int = 100) -> float:
    """Newton root of R = lam + sum beta_i R^i started at -lam/(beta1 - 1)."""
    beta1 = nf.beta_bar[0]
    if abs(beta1 - 1.0) <= 1e-8:
        raise NoRoot("linear multiplier too close to 1")
    R = -nf.lam / (beta1 - 1.0)
    for _ in range(max_iter):
        F = nf.radial_poly(R) - R
        if abs(F) <= tol:
            return float(R)
        dF = nf.multiplier_at(R) - 1.0
        R = R - F / dF
        if abs(R) > 1.0:
            raise NoRoot("Newton iterate left |R| <= 1")
    raise NoRoot("invariant-radius Newton did not converge")


@dataclass(frozen=True)
class RegionReport:
    """Classification of one parameter cell."""

    nu: float
    eta: float
    eps: float
    tag: str                        # thm1_region | thm2_region | on_c_alpha | unresolved
    residual: Optional[float] = None
    lam: Optional[float] = None
    error: Optional[str] = None


def default_c2(pert: Perturbation) -> float:
    """Constant in the eta >~ eps inequality, tied to the recorded bounds."""
    return 10.0 * (pert.A + pert.C2_bound)


def classify_region(p: Params, pert: Perturbation, lam: float = None,
                    c2: float = None, cap: float = GATE_CAP,
                    residual: float = None) -> RegionReport:
    """Tag a parameter cell by the strongest applicable region."""
    c2 = default_c2(pert) if c2 is None else c2
    thm1 = False
    try:
        thm1 = gate(p, pert, auto_k(p), cap).admissible
    except ValueError:
        thm1 = False
    thm2 = (p.eta >= c2 * p.eps
            and p.eta >= math.sqrt(2.0 * math.pi) * abs(p.nu - p.alpha.alpha)
            and p.eta > 0.0)
    if lam is not None and abs(lam) <= _C_ALPHA_TOL:
        tag = "on_c_alpha"
    elif thm1:
        tag = "thm1_region"
    elif thm2:
        tag = "thm2_region"
    else:
        tag = "unresolved"
    return RegionReport(p.nu, p.eta, p.eps, tag, residual, lam)


def normal_frame_map(p: Params, pert: Perturbation, nf: NormalFormResult,
                     r_center: float = 0.0):
    """The full map transported to normal-form coordinates, recentred at
    R = r_center; pointwise and vectorized, built from the honest map."""
    honest = _honest_local_map(p, pert, nf.localized.curve)
    stack = nf.transform_stack

    def fn(Theta, R):
        xi, x = stack.inverse(Theta, np.asarray(R, dtype=float) + r_center)
        xi1, x1 = honest(xi, x)
        Th1, R1 = stack.forward(xi1, x1)
        return Th1, R1 - r_center
    return fn


def verify_circle_in_region(p: Params, pert: Perturbation,
                            nf: NormalFormResult, tol: float = 1e-8,
                            M: int = 1024, k: float = None,
                            budget: int = 4000):
    """Run the graph transform on the recentred normal-form map and report
    the invariance residual of the found circle mapped back to the original
    coordinates.  Returns (residual, curve_values_on_grid, r0)."""
    r0 = invariant_radius(nf)
    fn = normal_frame_map(p, pert, nf, r_center=r0)
    k = auto_k(p) if k is None else k

    phi = LipGraph.constant(0.0, k, M)
    residual_nf = invariance_residual(fn, phi)
    it = 0
    while residual_nf > 0.1 * tol and it < budget:
        phi = transform_graph(fn, phi, k)
        residual_nf = invariance_residual(fn, phi)
        it += 1
    if residual_nf > tol:
        raise NoConvergence(f"normal-frame residual {residual_nf:.3e} "
                            f"above {tol:.3e} after {it} steps")

    # transport the circle back to the shifted-radius frame
    Theta = 2.0 * np.pi * np.arange(M) / M
    xi, x = nf.transform_stack.inverse(Theta, phi.values + r0)
    tc = nf.localized.curve
    theta = tc.h.eval(xi)
    r = x + tc.gamma.eval(theta).real

    order = np.argsort(np.mod(theta, 2.0 * np.pi))
    th_s = np.mod(theta, 2.0 * np.pi)[order]
    r_s = r[order]

    def curve_r(th):
        return np.interp(np.mod(th, 2.0 * np.pi), th_s, r_s,
                         period=2.0 * np.pi)

    frame = RussRFrame(p)
    Th_img, R_img = eval_Q(p, pert, frame, (th_s, r_s))
    residual = float(np.abs(R_img - curve_r(Th_img)).max())
    return residual, (th_s, r_s), r0
