"""Translated-curve solver and the lambda(nu) = 0 curve tracer.

For a twist map close to a rigid rotation with linear contraction, there is
a unique triple (gamma, h, lambda): a curve r = gamma(theta) whose image is
its vertical translate by lambda, with the dynamics on the curve conjugated
to the rotation by 2*pi*alpha through the circle diffeomorphism h.

The solver is a quasi-Newton iteration.  Each step localizes the map at the
current curve, reads off the tangential and normal defects and the
first-order coefficients, and solves two scalar difference equations: the
normal one with multipliers (1, mean B1) whose mean gives the lambda
correction, and the tangential cohomological one (1, 1) whose solvability
fixes the mean radial correction through the twist.  Each sub-problem is
exactly the solvable small-divisor model, and the quadratic tail of the
defect is verified rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EpsTooLarge, NoConvergence, NoSignChange
from .maps import (Params, Perturbation, RussRFrame, contraction_factor,
                   eval_Q, translation_tau, twist_coefficient)
from .smalldiv import DifferenceProblem, solve_difference
from .trig import CircleLift, TrigPoly

DEFAULT_CURVE_MODES = 128
_FIT_FACTOR = 4          # grid = 4 * modes for all spectral fits
_DEFECT_GRID = 512
_QUAD_TAIL_ENTER = 1e-3


@dataclass(frozen=True)
class TranslatedCurve:
    """The triple (gamma, h, lambda) with its measured invariance defect."""

    gamma: TrigPoly
    h: CircleLift
    lam: float
    defect: float
    params: Params

    @property
    def gamma_mean(self) -> float:
        """Mean of gamma; reported so any gauge drift is observable."""
        return float(self.gamma.mean())

    def conjugacy_orbit(self, xi0: float, n: int) -> np.ndarray:
        """Lifted orbit of h o R_{2 pi alpha} o h^{-1} from h(xi0), n+1 points."""
        xi = xi0 + 2.0 * math.pi * self.params.alpha.alpha * np.arange(n + 1)
        return self.h.eval(xi)


@dataclass
class NewtonTrace:
    """Per-iteration defects and step norms of one solve."""

    defects: list = field(default_factory=list)
    step_gamma: list = field(default_factory=list)
    step_h: list = field(default_factory=list)
    step_lambda: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.defects)

    def quadratic_constant(self) -> float:
        """max defect_{n+1} / defect_n^2 over the tail (defect_n < 1e-3)."""
        K = 0.0
        for a, b in zip(self.defects, self.defects[1:]):
            if a < _QUAD_TAIL_ENTER and a > 0.0:
                K = max(K, b / (a * a))
        return K


def _theta_grid(M: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(M) / M


def curve_defect(p: Params, pert: Perturbation, gamma: TrigPoly,
                 h: CircleLift, lam: float, grid: int = _DEFECT_GRID) -> float:
    """sup over a theta grid of both components of
    Q(theta, gamma(theta)) - (H(theta), lam + gamma(H(theta))),
    H = h o R_{2 pi alpha} o h^{-1}."""
    frame = RussRFrame(p)
    theta = _theta_grid(grid)
    gv = gamma.eval(theta).real
    Th, R = eval_Q(p, pert, frame, (theta, gv))
    xi = h.invert(theta, tol=1e-13)
    H = h.eval(xi + 2.0 * math.pi * p.alpha.alpha)
    e1 = Th - H
    e2 = R - lam - gamma.eval(H).real
    return float(max(np.abs(e1).max(), np.abs(e2).max()))


def _localize_first_order(p: Params, pert: Perturbation, gamma: TrigPoly,
                          h: CircleLift, lam: float, N: int):
    """Defects and first-order coefficients of the map at the current curve,
    in the conjugated angle xi = h^{-1}(theta)."""
    M = _FIT_FACTOR * N
    xi = _theta_grid(M)
    theta0 = h.eval(xi)
    g0 = gamma.eval(theta0).real
    frame = RussRFrame(p)
    Th, R = eval_Q(p, pert, frame, (theta0, g0))
    xi1 = h.invert(Th, tol=1e-13)

    uv = xi1 - xi - 2.0 * math.pi * p.alpha.alpha
    wv = R - gamma.eval(Th).real - lam

    T = twist_coefficient(p.eta)
    c = frame.shift
    dTh_dr = T + p.eps * pert.f.d_rho().eval(theta0, g0 + c)
    dR_dr = contraction_factor(p.eta) + p.eps * pert.g.d_rho().eval(theta0, g0 + c)
    a1v = dTh_dr / h.deriv(xi1)
    b1v = dR_dr - gamma.derivative().eval(Th).real * dTh_dr

    def fit(v):
        out = TrigPoly.from_samples(v, N)
        return out.cleaned(1e-14 * max(1.0, float(np.abs(out.coeffs).max())))
    return fit(uv), fit(wv), fit(a1v), fit(b1v)


def solve_translated_curve(p: Params, pert: Perturbation,
                           guess: TranslatedCurve = None,
                           tol: float = 1e-11, max_iter: int = 40,
                           modes: int = DEFAULT_CURVE_MODES,
                           eps_max: float = 1e-3):
    """Quasi-Newton solve for the translated curve.  Returns (curve, trace).

    Starts from (gamma, h, lambda) = (0, id, tau) unless a warm-start guess
    is given.  Raises EpsTooLarge outside the plausibility range eps_max or
    when the first step increases the defect, NoConvergence when the defect
    stagnates above tol.
    """
    if p.eps > eps_max:
        raise EpsTooLarge(f"eps={p.eps:g} beyond the plausibility range "
                          f"{eps_max:g}")
    N = modes
    if guess is not None:
        gamma, h, lam = guess.gamma, guess.h, guess.lam
    else:
        gamma, h, lam = TrigPoly.zero(), CircleLift.identity(), translation_tau(p)

    trace = NewtonTrace()
    defect = curve_defect(p, pert, gamma, h, lam)
    trace.defects.append(defect)
    stall = 0
    for it in range(max_iter):
        if defect <= tol:
            break
        u, w, A1, B1 = _localize_first_order(p, pert, gamma, h, lam, N)
        b_bar = float(B1.mean())
        a_bar = float(A1.mean())
        if not 0.0 < b_bar < 1.0:
            raise NoConvergence(f"normal multiplier mean {b_bar:.4f} outside (0,1)")
        if abs(a_bar) < 1e-6:
            raise NoConvergence("degenerate twist along the curve")

        sol_n = solve_difference(DifferenceProblem(1.0, b_bar, w, p.alpha,
                                                   modes=2 * N))
        d_osc = sol_n.f
        d0 = -float((u.mean() + (A1 * d_osc).mean().real)) / a_bar
        d = d_osc + d0
        dlam = float(w.mean()) - (1.0 - b_bar) * d0

        gt = (u + (A1 * d).truncated(N))
        sol_t = solve_difference(DifferenceProblem(1.0, 1.0, gt.truncated(N),
                                                   p.alpha, modes=2 * N))
        z = sol_t.f

        M = _FIT_FACTOR * N
        theta = _theta_grid(M)
        clean = lambda f: f.cleaned(1e-13)
        xi_of_theta = h.invert(theta, tol=1e-13)
        gamma_new = clean(TrigPoly.from_samples(
            gamma.eval(theta).real + d.eval(xi_of_theta).real, N))

        xi = _theta_grid(M)
        zv = z.eval(xi).real
        per_new = clean(TrigPoly.from_samples(h.eval(xi + zv) - xi, N))
        h_new = CircleLift(0.0, per_new)
        c0 = h_new.invert(0.0, tol=1e-14)
        per_fixed = clean(TrigPoly.from_samples(h_new.eval(xi + c0) - xi, N))
        h_new = CircleLift(0.0, per_fixed)

        lam_new = lam + dlam
        new_defect = curve_defect(p, pert, gamma_new, h_new, lam_new)
        if it == 0 and new_defect > max(defect * 1.5, tol):
            raise EpsTooLarge(
                f"first correction increased the defect "
                f"({defect:.3e} -> {new_defect:.3e})")
        trace.step_gamma.append(d.norm_s(0.0))
        trace.step_h.append(z.norm_s(0.0))
        trace.step_lambda.append(abs(dlam))
        if new_defect >= defect and defect > tol:
            stall += 1
            if stall >= 10:
                raise NoConvergence(
                    f"defect stagnated at {defect:.3e} > tol {tol:.3e}")
        else:
            stall = 0
        gamma, h, lam, defect = gamma_new, h_new, lam_new, new_defect
        trace.defects.append(defect)
    else:
        if defect > tol:
            raise NoConvergence(f"defect {defect:.3e} above tol after "
                                f"{max_iter} iterations")
    curve = TranslatedCurve(gamma, h, lam, defect, p)
    return curve, trace


def dlambda_dnu(p: Params, pert: Perturbation, delta: float = 1e-4,
                **solve_kw) -> float:
    """Central difference of nu -> lambda across nu +- delta."""
    lo = Params(p.nu - delta, p.eta, p.eps, p.alpha)
    hi = Params(p.nu + delta, p.eta, p.eps, p.alpha)
    c_lo, _ = solve_translated_curve(lo, pert, **solve_kw)
    c_hi, _ = solve_translated_curve(hi, pert, **solve_kw)
    return (c_hi.lam - c_lo.lam) / (2.0 * delta)


def find_c_alpha(p0: Params, pert: Perturbation, bracket,
                 lam_tol: float = 1e-12, nu_tol: float = 5e-13,
                 **solve_kw):
    """Root of nu -> lambda(nu) inside the bracket; returns (nu*, curve).

    Secant steps with bisection fallback, warm-starting each solve from the
    previous curve.  Raises NoSignChange when the endpoints have equal sign.
    """
    nu_lo, nu_hi = float(bracket[0]), float(bracket[1])
    # the defect floor scales with the inverse hyperbolicity gap, so the
    # inner solves get a tolerance the floor can meet at small eta
    solve_kw.setdefault("tol", 1e-12)
    state = {"guess": None}

    def lam_at(nu: float) -> float:
        params = Params(nu, p0.eta, p0.eps, p0.alpha)
        curve, _ = solve_translated_curve(params, pert, guess=state["guess"],
                                          **solve_kw)
        state["guess"] = curve
        state["curve"] = curve
        return curve.lam

    f_lo, f_hi = lam_at(nu_lo), lam_at(nu_hi)
    if f_lo == 0.0:
        return nu_lo, state["curve"]
    if f_hi == 0.0:
        return nu_hi, state["curve"]
    if f_lo * f_hi > 0.0:
        raise NoSignChange(f"lambda({nu_lo}) = {f_lo:.3e} and "
                           f"lambda({nu_hi}) = {f_hi:.3e} have equal sign")

    nu, f_nu = nu_hi, f_hi
    for _ in range(80):
        if abs(f_hi - f_lo) > 0.0:
            nu_sec = nu_hi - f_hi * (nu_hi - nu_lo) / (f_hi - f_lo)
        else:
            nu_sec = 0.5 * (nu_lo + nu_hi)
        if not (min(nu_lo, nu_hi) < nu_sec < max(nu_lo, nu_hi)):
            nu_sec = 0.5 * (nu_lo + nu_hi)
        nu = nu_sec
        f_nu = lam_at(nu)
        if abs(f_nu) <= lam_tol or abs(nu_hi - nu_lo) <= nu_tol:
            break
        if f_lo * f_nu <= 0.0:
            nu_hi, f_hi = nu, f_nu
        else:
            nu_lo, f_lo = nu, f_nu
    else:
        raise NoConvergence("curve tracing did not meet the lambda tolerance")
    if abs(f_nu) > lam_tol:
        # polish with one bisection cascade on the shrunken bracket
        for _ in range(60):
            mid = 0.5 * (nu_lo + nu_hi)
            f_mid = lam_at(mid)
            if abs(f_mid) <= lam_tol:
                nu, f_nu = mid, f_mid
                break
            if f_lo * f_mid <= 0.0:
                nu_hi, f_hi = mid, f_mid
            else:
                nu_lo, f_lo = mid, f_mid
        else:
            raise NoConvergence("bisection polish did not meet the tolerance")
    return nu, state["curve"]


def restricted_orbit(p: Params, pert: Perturbation, tc: TranslatedCurve,
                     theta0: float, n: int) -> np.ndarray:
    """Lifted angles of the orbit of Q started on the curve r = gamma(theta)."""
    frame = RussRFrame(p)
    out = np.empty(n + 1)
    th = float(theta0)
    out[0] = th
    for i in range(1, n + 1):
        r = tc.gamma.eval(th).real
        th, _ = eval_Q(p, pert, frame, (th, r))
        th = float(th)
        out[i] = th
    return out
