"""The dissipative twist-map family, its perturbation, and coordinate frames.

The unperturbed map advances the angle by 2*pi*nu plus a twist linear in the
radius and contracts the radius by e^{-2*pi*eta}.  The perturbation adds
eps * (f, g) with f, g finite trigonometric polynomials in the angle times
polynomials in the radius, so all derivatives are exact.

Frames are exact changes of variables on the cylinder; evaluating a map "in
a frame" conjugates the raw map by the frame transport, which keeps every
frame consistent with every other by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .diophantine import DiophantineNumber
from .errors import BandNotFound, OutOfDomain
from .trig import TrigPoly

DEFAULT_BAND = 2.0

_DERIV_GRID = (512, 65)
_SAFETY = 1.05


def twist_coefficient(eta: float) -> float:
    """(1 - e^{-2 pi eta}) / eta, continuous through eta = 0."""
    if eta == 0.0:
        return 2.0 * math.pi
    return -math.expm1(-2.0 * math.pi * eta) / eta


def contraction_factor(eta: float) -> float:
    return math.exp(-2.0 * math.pi * eta)


@dataclass(frozen=True)
class Params:
    """Map parameters: frequency nu, dissipation eta != 0, size eps >= 0."""

    nu: float
    eta: float
    eps: float
    alpha: DiophantineNumber

    def __post_init__(self):
        if self.eta == 0.0:
            raise ValueError("eta must be nonzero")
        if self.eps < 0.0:
            raise ValueError("eps must be nonnegative")


def translation_tau(p: Params) -> float:
    """Normal translation 2 pi eta (nu - alpha) of the rotation-alpha circle."""
    return 2.0 * math.pi * p.eta * (p.nu - p.alpha.alpha)


def dio_bracket(eta: float) -> float:
    """The factor [1 + 2 pi eta / (e^{-2 pi eta} - 1)]; -> 0 as eta -> 0."""
    return 1.0 + 2.0 * math.pi * eta / math.expm1(-2.0 * math.pi * eta)


def radius_r_alpha(p: Params) -> float:
    """Radius, in the shifted frame, of the unique circle of rotation 2 pi alpha."""
    return (p.nu - p.alpha.alpha) * dio_bracket(p.eta)


class PolyInRho:
    """sum_j c_j(theta) rho^j with TrigPoly coefficients; exact derivatives."""

    def __init__(self, coeffs):
        self.coeffs = tuple(coeffs) if coeffs else (TrigPoly.zero(),)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def eval(self, theta, rho):
        theta = np.asarray(theta, dtype=float)
        rho = np.asarray(rho, dtype=float)
        out = np.zeros(np.broadcast(theta, rho).shape)
        for j in range(self.degree, -1, -1):
            out = out * rho + self.coeffs[j].eval(theta).real
        return out

    def d_theta(self) -> "PolyInRho":
        return PolyInRho([c.derivative() for c in self.coeffs])

    def d_rho(self) -> "PolyInRho":
        if self.degree == 0:
            return PolyInRho([TrigPoly.zero()])
        return PolyInRho([j * self.coeffs[j] for j in range(1, self.degree + 1)])

    def shifted_rho(self, c: float) -> "PolyInRho":
        """Coefficients of rho -> self(theta, rho + c)."""
        J = self.degree
        out = [TrigPoly.zero() for _ in range(J + 1)]
        for j, cj in enumerate(self.coeffs):
            for m in range(j + 1):
                out[m] = out[m] + math.comb(j, m) * c ** (j - m) * cj
        return PolyInRho(out)

    def to_json_list(self):
        return [[j, c.to_json_dict()] for j, c in enumerate(self.coeffs)
                if np.abs(c.coeffs).max() > 0.0]

    @staticmethod
    def from_json_list(items) -> "PolyInRho":
        if not items:
            return PolyInRho([TrigPoly.zero()])
        J = max(int(j) for j, _ in items)
        coeffs = [TrigPoly.zero() for _ in range(J + 1)]
        for j, d in items:
            coeffs[int(j)] = coeffs[int(j)] + TrigPoly.from_json_dict(d)
        return PolyInRho(coeffs)


def _grid_sup(fn) -> float:
    nt, nr = _DERIV_GRID
    theta = 2.0 * np.pi * np.arange(nt) / nt
    rho = np.linspace(-1.0, 1.0, nr)
    tt, rr = np.meshgrid(theta, rho, indexing="ij")
    return float(np.abs(fn(tt, rr)).max())


@dataclass(frozen=True)
class Perturbation:
    """Perturbation pair (f, g) with recorded derivative bounds.

    A_f and A_g are the sup norms of the first derivatives over the band
    T x [-1, 1] on a 512 x 65 grid with a 1.05 safety factor; C2_bound does
    the same for the second derivatives.  They feed the graph-transform
    admissibility gate and the parameter thresholds, so they are computed
    once at construction and frozen.
    """

    f: PolyInRho
    g: PolyInRho
    A_f: float = field(init=False)
    A_g: float = field(init=False)
    A: float = field(init=False)
    C2_bound: float = field(init=False)

    def __post_init__(self):
        af = _SAFETY * max(_grid_sup(self.f.d_theta().eval),
                           _grid_sup(self.f.d_rho().eval))
        ag = _SAFETY * max(_grid_sup(self.g.d_theta().eval),
                           _grid_sup(self.g.d_rho().eval))
        seconds = []
        for comp in (self.f, self.g):
            seconds.extend([
                _grid_sup(comp.d_theta().d_theta().eval),
                _grid_sup(comp.d_theta().d_rho().eval),
                _grid_sup(comp.d_rho().d_rho().eval),
            ])
        object.__setattr__(self, "A_f", af)
        object.__setattr__(self, "A_g", ag)
        object.__setattr__(self, "A", af + ag)
        object.__setattr__(self, "C2_bound", _SAFETY * max(seconds))

    @staticmethod
    def zero() -> "Perturbation":
        return Perturbation(PolyInRho([TrigPoly.zero()]),
                            PolyInRho([TrigPoly.zero()]))

    @staticmethod
    def standard() -> "Perturbation":
        """f = sin(theta)(1 + rho/2), g = cos(theta); the desk-scale example."""
        return Perturbation(
            PolyInRho([TrigPoly.sine(1), 0.5 * TrigPoly.sine(1)]),
            PolyInRho([TrigPoly.cosine(1)]))

    def scaled(self, factor: float) -> "Perturbation":
        return Perturbation(
            PolyInRho([factor * c for c in self.f.coeffs]),
            PolyInRho([factor * c for c in self.g.coeffs]))

    def to_json_dict(self) -> dict:
        return {"f": self.f.to_json_list(), "g": self.g.to_json_list()}

    @staticmethod
    def from_json_dict(d: dict) -> "Perturbation":
        return Perturbation(PolyInRho.from_json_list(d.get("f", [])),
                            PolyInRho.from_json_list(d.get("g", [])))

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def loads(s: str) -> "Perturbation":
        return Perturbation.from_json_dict(json.loads(s))


# -- frames ----------------------------------------------------------------


class Frame:
    """Raw cylinder coordinates (theta, rho); base of all frames."""

    tag = "raw"

    def to_raw(self, theta, rho):
        return theta, rho

    def from_raw(self, theta, rho):
        return theta, rho

    def d_to_raw(self, theta, rho) -> np.ndarray:
        return np.eye(2)

    def d_from_raw(self, theta, rho) -> np.ndarray:
        return np.eye(2)


class DioShiftFrame(Frame):
    """r = rho + (nu - alpha); centers the rotation-alpha circle at r_alpha."""

    tag = "dio_shift"

    def __init__(self, p: Params):
        self.shift = p.nu - p.alpha.alpha

    def to_raw(self, theta, r):
        return theta, r - self.shift

    def from_raw(self, theta, rho):
        return theta, rho + self.shift


class RussRFrame(Frame):
    """r = rho - tau/(e^{-2 pi eta} - 1); the map becomes a rigid rotation
    plus twist with constant normal translation tau."""

    tag = "russ_r"

    def __init__(self, p: Params):
        self.shift = translation_tau(p) / math.expm1(-2.0 * math.pi * p.eta)

    def to_raw(self, theta, r):
        return theta, r + self.shift

    def from_raw(self, theta, rho):
        return theta, rho - self.shift


class TranslatedCurveFrame(Frame):
    """(xi, x) with theta = h(xi) and x = r - gamma(theta) in the russ_r frame;
    sends the translated curve r = gamma(theta) to x = 0."""

    tag = "russ_xi_x"

    def __init__(self, p: Params, h, gamma: TrigPoly):
        self._russ = RussRFrame(p)
        self.h = h              # CircleLift
        self.gamma = gamma

    def to_raw(self, xi, x):
        theta = self.h.eval(xi)
        r = np.asarray(x, dtype=float) + self.gamma.eval(theta).real
        return self._russ.to_raw(theta, r)

    def from_raw(self, theta, rho):
        theta2, r = self._russ.from_raw(theta, rho)
        xi = self.h.invert(theta2)
        x = np.asarray(r, dtype=float) - self.gamma.eval(theta2).real
        th = np.asarray(theta2, dtype=float)
        return (xi, float(x)) if th.ndim == 0 else (xi, x)

    def d_to_raw(self, xi, x):
        theta = self.h.eval(xi)
        dh = self.h.deriv(xi)
        dg = self.gamma.derivative().eval(theta).real
        return np.array([[dh, 0.0], [dg * dh, 1.0]])

    def d_from_raw(self, theta, rho):
        dh = self.h.deriv(self.h.invert(theta))
        dg = self.gamma.derivative().eval(theta).real
        return np.array([[1.0 / dh, 0.0], [-dg, 1.0]])


class NormalFormFrame(Frame):
    """(Theta, R) after the translated-curve frame and a transform stack."""

    tag = "normal_ThetaR"

    def __init__(self, p: Params, h, gamma: TrigPoly, stack, r_center: float = 0.0):
        self._local = TranslatedCurveFrame(p, h, gamma)
        self.stack = stack      # normalform.TransformStack
        self.r_center = r_center

    def to_raw(self, Theta, R):
        xi, x = self.stack.inverse(Theta, np.asarray(R, dtype=float) + self.r_center)
        return self._local.to_raw(xi, x)

    def from_raw(self, theta, rho):
        xi, x = self._local.from_raw(theta, rho)
        Theta, R = self.stack.forward(xi, x)
        return Theta, R - self.r_center


# -- map evaluation --------------------------------------------------------


def _check_band(rho, band: float):
    if np.any(np.abs(np.asarray(rho, dtype=float)) > band):
        raise OutOfDomain(f"|rho| exceeds the validity band [{-band}, {band}]")


def _eval_raw(p: Params, pert: Perturbation, theta, rho):
    theta = np.asarray(theta, dtype=float)
    rho = np.asarray(rho, dtype=float)
    T = twist_coefficient(p.eta)
    lam = contraction_factor(p.eta)
    th1 = theta + 2.0 * math.pi * p.nu + T * rho
    rh1 = rho * lam
    if p.eps != 0.0:
        th1 = th1 + p.eps * pert.f.eval(theta, rho)
        rh1 = rh1 + p.eps * pert.g.eval(theta, rho)
    return th1, rh1


def eval_P(p: Params, frame: Frame, point):
    """Image of point under the unperturbed map, in the given frame."""
    theta, rho = frame.to_raw(*point)
    th1, rh1 = _eval_raw(p, Perturbation.zero(), theta, rho)
    return frame.from_raw(th1, rh1)


def eval_Q(p: Params, pert: Perturbation, frame: Frame, point,
           band: float = DEFAULT_BAND):
    """Image of point under the perturbed map, in the given frame.

    Raises OutOfDomain when the raw radius leaves the validity band.
    """
    theta, rho = frame.to_raw(*point)
    _check_band(rho, band)
    th1, rh1 = _eval_raw(p, pert, theta, rho)
    return frame.from_raw(th1, rh1)


def jacobian_raw(p: Params, pert: Perturbation, theta: float, rho: float) -> np.ndarray:
    T = twist_coefficient(p.eta)
    lam = contraction_factor(p.eta)
    J = np.array([[1.0, T], [0.0, lam]])
    if p.eps != 0.0:
        J[0, 0] += p.eps * pert.f.d_theta().eval(theta, rho)
        J[0, 1] += p.eps * pert.f.d_rho().eval(theta, rho)
        J[1, 0] += p.eps * pert.g.d_theta().eval(theta, rho)
        J[1, 1] += p.eps * pert.g.d_rho().eval(theta, rho)
    return J


def jacobian_Q(p: Params, pert: Perturbation, frame: Frame, point,
               band: float = DEFAULT_BAND) -> np.ndarray:
    """Differential of eval_Q at point, by the chain rule through the frame."""
    theta, rho = frame.to_raw(*point)
    _check_band(rho, band)
    th1, rh1 = _eval_raw(p, pert, theta, rho)
    D_in = frame.d_to_raw(*point)
    D_out = frame.d_from_raw(float(th1), float(rh1))
    return D_out @ jacobian_raw(p, pert, float(theta), float(rho)) @ D_in


def orbit(p: Params, pert: Perturbation, frame: Frame, point, n: int,
          band: float = DEFAULT_BAND) -> np.ndarray:
    """n-step forward orbit; angles are lifted (never reduced mod 2*pi)."""
    pts = np.empty((n + 1, 2))
    pts[0] = point
    cur = (float(point[0]), float(point[1]))
    for i in range(1, n + 1):
        cur = eval_Q(p, pert, frame, cur, band)
        cur = (float(cur[0]), float(cur[1]))
        pts[i] = cur
    return pts


def trapping_annulus(p: Params, pert: Perturbation, grid: int = 256,
                     max_multiple: int = 100):
    """Smallest tested band b (multiples of eps/eta) with inward radial motion
    at rho = +-b across a theta grid.  Returns (band, verified)."""
    if p.eta <= 0.0:
        raise ValueError("trapping requires eta > 0")
    if p.eps == 0.0:
        return 0.0, True
    theta = 2.0 * np.pi * np.arange(grid) / grid
    step = p.eps / p.eta
    for m in range(1, max_multiple + 1):
        b = m * step
        _, top = _eval_raw(p, pert, theta, np.full(grid, b))
        _, bot = _eval_raw(p, pert, theta, np.full(grid, -b))
        if np.all(top - b < 0.0) and np.all(bot + b > 0.0):
            return b, True
    raise BandNotFound(f"no trapping band within {max_multiple} eps/eta")
