"""Graph transform on Lipschitz graphs over the circle.

A graph r = phi(theta) is stored as samples on a uniform grid with monotone
piecewise-linear interpolation; the fixed curve is only guaranteed
Lipschitz, so a spectral representation would be inappropriate here.  The
admissibility gate couples the perturbation size, the dissipation and the
Lipschitz budget; inside the gate the transform is a contraction and the
invariant circle is its fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import (GateRejected, LipBudgetExceeded, NoConvergence,
                     NotMonotone)
from .maps import Params, Perturbation, _eval_raw, contraction_factor

DEFAULT_GRID = 1024
GATE_CAP = 0.05     # the unspecified smallness constant in "eta <= c"

GraphMap = Callable[[np.ndarray, np.ndarray], tuple]


@dataclass(frozen=True)
class LipGraph:
    """Samples of phi: T -> [-1, 1] on a uniform grid, with a Lipschitz budget."""

    values: np.ndarray
    lip_k: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 8:
            raise ValueError("graph needs a 1-d grid of at least 8 samples")
        if np.abs(v).max() > 1.0 + 1e-12:
            raise ValueError("graph values must stay within [-1, 1]")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.measured_lip() > self.lip_k + 1e-12:
            raise LipBudgetExceeded(
                f"measured slope {self.measured_lip():.3e} exceeds budget "
                f"{self.lip_k:.3e}")

    @staticmethod
    def constant(value: float, lip_k: float, M: int = DEFAULT_GRID) -> "LipGraph":
        return LipGraph(np.full(M, float(value)), lip_k)

    @property
    def M(self) -> int:
        return self.values.size

    def measured_lip(self) -> float:
        dv = np.diff(self.values, append=self.values[:1])
        return float(np.abs(dv).max() * self.M / (2.0 * np.pi))

    def eval(self, theta) -> np.ndarray:
        """Periodic piecewise-linear interpolation."""
        th = np.asarray(theta, dtype=float)
        pos = np.mod(th, 2.0 * np.pi) * self.M / (2.0 * np.pi)
        i = np.floor(pos).astype(int) % self.M
        t = pos - np.floor(pos)
        v = self.values
        return (1.0 - t) * v[i] + t * v[(i + 1) % self.M]

    def sup_diff(self, other: "LipGraph") -> float:
        if other.M == self.M:
            return float(np.abs(self.values - other.values).max())
        M = max(self.M, other.M)
        theta = 2.0 * np.pi * np.arange(M) / M
        return float(np.abs(self.eval(theta) - other.eval(theta)).max())


@dataclass(frozen=True)
class GateReport:
    """The three compatibility conditions for the transform to map the
    Lipschitz class into itself, with the smallest slack."""

    eps: float
    k: float
    eta: float
    A: float
    cap: float
    condition1: bool    # eps <= (pi / 6A) eta k
    condition2: bool    # k <= eta / 6
    condition3: bool    # eta <= cap
    admissible: bool
    margin: float


def gate(p: Params, pert: Perturbation, k: float, cap: float = GATE_CAP) -> GateReport:
    if k <= 0.0:
        raise ValueError("Lipschitz budget k must be positive")
    A = pert.A
    thr1 = math.inf if A == 0.0 else (math.pi / (6.0 * A)) * p.eta * k
    m1 = thr1 - p.eps
    m2 = p.eta / 6.0 - k
    m3 = cap - p.eta
    c1, c2, c3 = m1 >= 0.0, m2 >= 0.0, m3 >= 0.0
    return GateReport(p.eps, k, p.eta, A, cap, c1, c2, c3,
                      c1 and c2 and c3, min(m1, m2, m3))


def auto_k(p: Params) -> float:
    """The gate-edge budget k = eta/6, which maximizes the admissible eps."""
    return p.eta / 6.0


def q_graph_map(p: Params, pert: Perturbation) -> GraphMap:
    """The perturbed map as a vectorized (theta, rho) -> (Theta, R) closure."""
    def fn(theta, rho):
        return _eval_raw(p, pert, theta, rho)
    return fn


def _invert_angle_on_grid(u_of, target: np.ndarray, lo: np.ndarray,
                          hi: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    """Solve u(sigma) = target per node by vectorized bisection on [lo, hi].

    u must be a monotone lift and the bracket must contain the root.
    """
    width = float(np.max(hi - lo))
    n = int(np.ceil(np.log2(max(width / tol, 4.0))))
    for _ in range(n):
        mid = 0.5 * (lo + hi)
        below = u_of(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def transform_graph(map_fn: GraphMap, phi: LipGraph, k: float,
                    monotone_check: bool = True) -> LipGraph:
    """One application of the graph transform: the new graph is the image
    of Gr(phi) under the map, resampled at the grid nodes.

    Raises NotMonotone when the angular component along the graph fails the
    refined-grid monotonicity check, LipBudgetExceeded when the image graph
    leaves the declared class (a gate mis-calibration).
    """
    M = phi.M
    theta = 2.0 * np.pi * np.arange(M) / M

    def u_of(sig):
        return map_fn(sig, phi.eval(sig))[0]

    if monotone_check:
        fine = 2.0 * np.pi * np.arange(2 * M) / (2 * M)
        uf = u_of(fine)
        if np.any(np.diff(np.append(uf, uf[0] + 2.0 * np.pi)) <= 0.0):
            raise NotMonotone("angle map along the graph is not increasing")

    drift = u_of(theta) - theta
    lo = theta - float(drift.max()) - 1e-9
    hi = theta - float(drift.min()) + 1e-9
    sigma = _invert_angle_on_grid(u_of, theta, lo, hi)
    new_values = map_fn(sigma, phi.eval(sigma))[1]
    return LipGraph(np.clip(new_values, -1.0, 1.0), k)


def graph_transform(p: Params, pert: Perturbation, phi: LipGraph,
                    k: float = None, cap: float = GATE_CAP) -> LipGraph:
    """One graph-transform application of the full map to phi.

    Requires an admissible gate; see transform_graph for the generic driver
    taking an arbitrary map closure.
    """
    k = phi.lip_k if k is None else k
    report = gate(p, pert, k, cap)
    if not report.admissible:
        raise GateRejected(f"gate rejects (margin {report.margin:.3e})")
    return transform_graph(q_graph_map(p, pert), phi, k)


def analytic_contraction(p: Params, pert: Perturbation, k: float) -> float:
    """e^{-2 pi eta} + eps A_g + 2 pi k + eps k A_f."""
    return (contraction_factor(p.eta) + p.eps * pert.A_g
            + 2.0 * math.pi * k + p.eps * k * pert.A_f)


class ContractionReport(NamedTuple):
    analytic: float
    empirical: float


def random_lip_graph(rng, k: float, M: int = DEFAULT_GRID,
                     modes: int = 6) -> LipGraph:
    """A random graph safely inside Lip_k with values in [-0.95, 0.95]."""
    theta = 2.0 * np.pi * np.arange(M) / M
    vals = np.zeros(M)
    dmax = 0.0
    for m in range(1, modes + 1):
        a, b = rng.standard_normal(2) / m
        vals += a * np.cos(m * theta) + b * np.sin(m * theta)
        dmax += m * (abs(a) + abs(b))
    sup = max(np.abs(vals).max(), 1e-12)
    dmax = max(dmax, 1e-12)
    scale = min(0.95 / sup, 0.9 * k / dmax) * rng.uniform(0.2, 1.0)
    return LipGraph(vals * scale, k)


def measure_contraction(p: Params, pert: Perturbation, k: float,
                        n_pairs: int = 20, M: int = DEFAULT_GRID,
                        cap: float = GATE_CAP, seed: int = 7,
                        require_gate: bool = True) -> ContractionReport:
    """Analytic contraction bound and the worst empirical ratio
    sup|G(phi1)-G(phi2)| / sup|phi1-phi2| over random graph pairs."""
    if require_gate and not gate(p, pert, k, cap).admissible:
        raise GateRejected("contraction measurement outside the gate")
    fn = q_graph_map(p, pert)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        p1 = random_lip_graph(rng, k, M)
        p2 = random_lip_graph(rng, k, M)
        num = transform_graph(fn, p1, k).sup_diff(transform_graph(fn, p2, k))
        den = p1.sup_diff(p2)
        if den > 1e-13:
            worst = max(worst, num / den)
    return ContractionReport(analytic_contraction(p, pert, k), worst)


@dataclass(frozen=True)
class CircleSolveResult:
    graph: LipGraph
    residual: float
    iterations: int
    contraction: float
    coincidence: float     # worst sup-distance between multi-start fixed points
    gate_report: GateReport


def _fixed_point(map_fn: GraphMap, start: LipGraph, k: float, stop: float,
                 budget: int) -> tuple:
    phi = start
    for it in range(1, budget + 1):
        nxt = transform_graph(map_fn, phi, k)
        step = nxt.sup_diff(phi)
        phi = nxt
        if step <= stop:
            return phi, it
    raise NoConvergence(f"graph iteration exhausted {budget} steps "
                        f"(last step {step:.3e} > {stop:.3e})")


def invariance_residual(map_fn: GraphMap, graph: LipGraph) -> float:
    """Pointwise vertical distance from the image of the graph to the graph."""
    theta = 2.0 * np.pi * np.arange(graph.M) / graph.M
    Th, R = map_fn(theta, graph.values)
    return float(np.abs(R - graph.eval(Th)).max())


def solve_invariant_circle(p: Params, pert: Perturbation, k: float = None,
                           tol: float = 1e-10, M: int = DEFAULT_GRID,
                           cap: float = GATE_CAP,
                           multi_start: bool = True) -> CircleSolveResult:
    """Fixed point of the graph transform, started from the zero graph.

    Stops when the iteration step is below tol*(1 - C) for the analytic
    contraction C; the reported residual is the pointwise invariance defect
    of the fixed graph under the full map.  Uniqueness is probed by
    restarting from the constant graphs +-0.9.
    """
    k = auto_k(p) if k is None else k
    report = gate(p, pert, k, cap)
    if not report.admissible:
        raise GateRejected(f"gate rejects (margin {report.margin:.3e})")
    C = analytic_contraction(p, pert, k)
    if C >= 1.0:
        raise GateRejected(f"analytic contraction {C:.3f} >= 1")
    fn = q_graph_map(p, pert)
    stop = tol * (1.0 - C)
    budget = int(math.ceil(abs(math.log(max(tol, 1e-300))) / abs(math.log(C)))) + 50

    def solve_from(v0: float) -> tuple:
        start = LipGraph.constant(v0, k, M)
        total = 0
        if M > 1024:
            # pull in on a coarse grid first; the fine stage then only has
            # to shed the interpolation error
            coarse, n = _fixed_point(fn, LipGraph.constant(v0, k, 1024), k,
                                     stop, budget)
            theta = 2.0 * np.pi * np.arange(M) / M
            start = LipGraph(coarse.eval(theta), k)
            total = n
        out, n = _fixed_point(fn, start, k, stop, budget)
        return out, total + n

    phi, iterations = solve_from(0.0)
    coincidence = 0.0
    if multi_start:
        for v0 in (0.9, -0.9):
            alt, _ = solve_from(v0)
            coincidence = max(coincidence, alt.sup_diff(phi))
    residual = invariance_residual(fn, phi)
    return CircleSolveResult(phi, residual, iterations, C, coincidence, report)


def basin_hits_graph(p: Params, pert: Perturbation, graph: LipGraph,
                     n_seeds: int = 100, iters: int = 500, tol: float = 1e-6,
                     seed: int = 11) -> bool:
    """Do random seeds in T x [-1, 1] converge to the graph within iters?"""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, n_seeds)
    rho = rng.uniform(-1.0, 1.0, n_seeds)
    fn = q_graph_map(p, pert)
    for _ in range(iters):
        theta, rho = fn(theta, rho)
        if np.abs(rho - graph.eval(theta)).max() <= tol:
            return True
    return bool(np.abs(rho - graph.eval(theta)).max() <= tol)


def minimal_admissible_eta(pert: Perturbation, eps: float,
                           cap: float = GATE_CAP, tol: float = 1e-10) -> float:
    """Smallest eta whose gate admits some k (the edge k = eta/6), by bisection.

    The admissible set is upward-closed in eta below the cap, so bisection
    against the gate itself is exact up to tol.
    """

    def admissible(eta: float) -> bool:
        A = pert.A
        thr = math.inf if A == 0.0 else (math.pi / (6.0 * A)) * eta * (eta / 6.0)
        return eps <= thr and eta <= cap

    lo, hi = 0.0, cap
    if not admissible(hi):
        raise GateRejected("no admissible eta below the cap at this eps")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            hi = mid
        else:
            lo = mid
    return hi
