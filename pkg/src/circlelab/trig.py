"""Trigonometric-polynomial arithmetic on the circle.

Angle-dependent quantities everywhere downstream (difference-equation
solvers, curve solvers, normal forms) are truncated Fourier series carrying
an analyticity-width tag.  This module provides the coefficient arithmetic,
FFT grid transforms, weighted norms, and monotone-lift inversion they rely
on.  All values are immutable after construction and all operations are
pure functions, so they are safe to use from parallel workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, NotMonotone

DEFAULT_MODES = 128

# Hermitian-symmetry tolerance, relative to the largest coefficient.
_REAL_RTOL = 1e-13


def _as_coeffs(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or c.size % 2 == 0:
        raise ValueError("coefficients must be a 1-d array of odd length (modes -N..N)")
    return c


@dataclass(frozen=True)
class TrigPoly:
    """Finite Fourier series sum_{|k|<=N} c_k e^{ik theta}.

    coeffs holds c_k ordered k = -N..N.  width_s tags the analyticity
    width used by weighted norms; it is bookkeeping, not a constraint on
    the coefficients.  trunc_tail records the weighted-norm mass discarded
    when this polynomial was produced by truncation (0.0 otherwise).
    """

    coeffs: np.ndarray
    width_s: float = 0.0
    real: bool = field(default=None)  # type: ignore[assignment]
    trunc_tail: float = 0.0

    def __post_init__(self):
        c = _as_coeffs(self.coeffs)
        scale = np.abs(c).max() if c.size else 0.0
        sym_defect = np.abs(c - np.conj(c[::-1])).max() if scale > 0 else 0.0
        if self.real is None:
            is_real = scale == 0.0 or sym_defect <= _REAL_RTOL * scale
        elif self.real:
            # absolute guard: noise-scale data has O(1) relative asymmetry
            if scale > 0 and sym_defect > max(1e-6 * scale, 1e-12):
                raise ValueError("coefficients are not Hermitian-symmetric")
            # enforce exact symmetry so real evaluation is clean
            c = 0.5 * (c + np.conj(c[::-1]))
            is_real = True
        else:
            is_real = False
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "real", bool(is_real))

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(width_s: float = 0.0) -> "TrigPoly":
        return TrigPoly(np.zeros(1, dtype=complex), width_s)

    @staticmethod
    def constant(value, width_s: float = 0.0) -> "TrigPoly":
        return TrigPoly(np.array([value], dtype=complex), width_s)

    @staticmethod
    def from_modes(modes: dict, width_s: float = 0.0) -> "TrigPoly":
        """Build from a {k: c_k} dictionary (missing conjugates NOT filled in)."""
        if not modes:
            return TrigPoly.zero(width_s)
        N = max(abs(int(k)) for k in modes)
        c = np.zeros(2 * N + 1, dtype=complex)
        for k, v in modes.items():
            c[int(k) + N] += v
        return TrigPoly(c, width_s)

    @staticmethod
    def cosine(k: int = 1, amp: float = 1.0, width_s: float = 0.0) -> "TrigPoly":
        return TrigPoly.from_modes({k: amp / 2.0, -k: amp / 2.0}, width_s)

    @staticmethod
    def sine(k: int = 1, amp: float = 1.0, width_s: float = 0.0) -> "TrigPoly":
        return TrigPoly.from_modes({k: amp / (2j), -k: -amp / (2j)}, width_s)

    @staticmethod
    def from_samples(values, N: int, width_s: float = 0.0) -> "TrigPoly":
        """Fit modes -N..N to samples on the uniform grid 2*pi*j/M, M = len(values).

        Requires M >= 2N+1.  The weighted-norm mass in the discarded bins is
        recorded as trunc_tail so downstream residuals can be audited.
        """
        v = np.asarray(values)
        M = v.size
        if M < 2 * N + 1:
            raise ValueError("need at least 2N+1 samples to fit modes -N..N")
        fv = np.fft.fft(v) / M
        c = np.empty(2 * N + 1, dtype=complex)
        c[N:] = fv[: N + 1]
        c[:N] = fv[M - N:]
        kept = np.zeros(M, dtype=bool)
        kept[: N + 1] = True
        kept[M - N:] = True
        tail = float(np.abs(fv[~kept]).sum())
        return TrigPoly(c, width_s, trunc_tail=tail)

    @staticmethod
    def from_function(fn, N: int, width_s: float = 0.0, grid: int = None) -> "TrigPoly":
        M = grid if grid is not None else max(4 * N + 4, 64)
        theta = 2.0 * np.pi * np.arange(M) / M
        return TrigPoly.from_samples(fn(theta), N, width_s)

    # -- basic queries -----------------------------------------------------

    @property
    def N(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def eval(self, theta):
        """Direct summation sum c_k e^{ik theta}; complex, vectorized over theta."""
        th = np.asarray(theta, dtype=float)
        phases = np.exp(1j * np.multiply.outer(th, self.modes))
        out = phases @ self.coeffs
        return out if th.ndim else complex(out)

    def reval(self, theta):
        """Real part of eval; the value of a real-flagged polynomial."""
        out = self.eval(theta)
        return out.real if isinstance(out, np.ndarray) else out.real

    def grid_values(self, M: int) -> np.ndarray:
        """Values on the uniform grid 2*pi*j/M via FFT; requires M >= 2N+1."""
        N = self.N
        if M < 2 * N + 1:
            raise ValueError("grid must resolve all modes (M >= 2N+1)")
        a = np.zeros(M, dtype=complex)
        a[: N + 1] = self.coeffs[N:]
        a[M - N:] = self.coeffs[:N]
        vals = np.fft.ifft(a) * M
        return vals.real if self.real else vals

    def mean(self):
        c0 = self.coeffs[self.N]
        return float(c0.real) if self.real else complex(c0)

    def norm_s(self, s: float = None) -> float:
        """Weighted norm sum |c_k| e^{|k| s}; an upper bound for the sup over
        the strip |Im theta| <= s."""
        s = self.width_s if s is None else s
        return float(np.sum(np.abs(self.coeffs) * np.exp(np.abs(self.modes) * s)))

    def sup_norm(self, grid: int = None) -> float:
        """Max of |f| over a fine uniform grid."""
        M = grid if grid is not None else max(512, 4 * (2 * self.N + 1))
        return float(np.abs(self.grid_values(M)).max())

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if np.isscalar(other):
            other = TrigPoly.constant(other)
        if not isinstance(other, TrigPoly):
            return NotImplemented
        N = max(self.N, other.N)
        c = np.zeros(2 * N + 1, dtype=complex)
        c[N - self.N: N + self.N + 1] = self.coeffs
        c[N - other.N: N + other.N + 1] += other.coeffs
        return TrigPoly(c, max(self.width_s, other.width_s))

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly(-self.coeffs, self.width_s, self.real)

    def __sub__(self, other):
        if np.isscalar(other):
            other = TrigPoly.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return TrigPoly(self.coeffs * other, self.width_s)
        if not isinstance(other, TrigPoly):
            return NotImplemented
        c = np.convolve(self.coeffs, other.coeffs)
        return TrigPoly(c, min(self.width_s, other.width_s))

    __rmul__ = __mul__

    def product(self, other: "TrigPoly", max_modes: int = None) -> "TrigPoly":
        """Coefficient convolution with cutoff N_f + N_g, optionally re-truncated."""
        out = self * other
        if max_modes is not None and out.N > max_modes:
            out = out.truncated(max_modes)
        return out

    def truncated(self, N: int) -> "TrigPoly":
        """Drop modes |k| > N, recording the discarded weighted-norm mass."""
        if N >= self.N:
            return self
        lo, hi = self.N - N, self.N + N + 1
        dropped = float(np.abs(np.concatenate([self.coeffs[:lo], self.coeffs[hi:]])).sum())
        return TrigPoly(self.coeffs[lo:hi], self.width_s,
                        trunc_tail=self.trunc_tail + dropped)

    def compose_rotation(self, beta: float) -> "TrigPoly":
        """Coefficients of theta -> f(theta + beta)."""
        return TrigPoly(self.coeffs * np.exp(1j * self.modes * beta),
                        self.width_s, self.real, self.trunc_tail)

    def derivative(self, order: int = 1) -> "TrigPoly":
        c = self.coeffs * (1j * self.modes) ** order
        if self.real:
            # rounding asymmetry grows like k^order; project back exactly
            c = 0.5 * (c + np.conj(c[::-1]))
        return TrigPoly(c, self.width_s, self.real)

    def zero_mean(self) -> "TrigPoly":
        c = self.coeffs.copy()
        c[self.N] = 0.0
        return TrigPoly(c, self.width_s, self.real, self.trunc_tail)

    def cleaned(self, floor: float) -> "TrigPoly":
        """Zero every coefficient below floor in modulus.

        Spectral hygiene for fitted data: rounding/iteration noise in high
        modes is harmless pointwise but is amplified like k^n by
        derivatives, so fits drop it before further algebra.
        """
        return self._thresholded(np.full(self.coeffs.size, floor))

    def cone_cleaned(self, floor: float, sigma: float = 0.8,
                     start: int = 8) -> "TrigPoly":
        """Zero coefficients below a mode-dependent envelope
        floor * exp(sigma * max(|k| - start, 0)).

        Keeps only spectra decaying at least like e^{-sigma k} beyond the
        start mode, which bounds every k^n/n! derivative amplification by
        the floor itself.  Intended for data whose genuine analyticity
        width exceeds sigma.
        """
        k = np.abs(self.modes)
        env = floor * np.exp(sigma * np.maximum(k - start, 0))
        return self._thresholded(env)

    def _thresholded(self, env: np.ndarray) -> "TrigPoly":
        c = self.coeffs.copy()
        small = np.abs(c) < env
        if self.real:
            # drop conjugate pairs together so symmetry survives exactly
            small &= small[::-1]
        dropped = float(np.abs(c[small]).sum())
        c[small] = 0.0
        return TrigPoly(c, self.width_s, self.real,
                        self.trunc_tail + dropped)

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "N": self.N,
            "coeffs": [[float(z.real), float(z.imag)] for z in self.coeffs],
            "s": float(self.width_s),
            "real": bool(self.real),
        }

    @staticmethod
    def from_json_dict(d: dict) -> "TrigPoly":
        c = np.array([complex(re, im) for re, im in d["coeffs"]], dtype=complex)
        if c.size != 2 * int(d["N"]) + 1:
            raise ValueError("coefficient count does not match N")
        return TrigPoly(c, float(d.get("s", 0.0)), bool(d.get("real", False)) or None)

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def loads(s: str) -> "TrigPoly":
        return TrigPoly.from_json_dict(json.loads(s))


@dataclass(frozen=True)
class CircleLift:
    """Lift u(theta) = theta + base_rotation + periodic(theta) of a circle map.

    u(theta + 2*pi) = u(theta) + 2*pi holds by construction.  The monotone
    flag is certified on a grid of 8N points together with the derivative
    norm bound sum |k c_k| < 1 (the latter is recorded, the grid decides).
    """

    base_rotation: float = 0.0
    periodic: TrigPoly = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.periodic is None:
            object.__setattr__(self, "periodic", TrigPoly.zero())
        if not self.periodic.real:
            raise ValueError("lift periodic part must be real-valued")

    @staticmethod
    def identity() -> "CircleLift":
        return CircleLift(0.0, TrigPoly.zero())

    def eval(self, theta):
        th = np.asarray(theta, dtype=float)
        out = th + self.base_rotation + self.periodic.eval(th).real
        return out if th.ndim else float(out)

    __call__ = eval

    def deriv(self, theta):
        th = np.asarray(theta, dtype=float)
        out = 1.0 + self.periodic.derivative().eval(th).real
        return out if th.ndim else float(out)

    def deriv_norm_bound(self) -> float:
        p = self.periodic
        return float(np.sum(np.abs(p.coeffs) * np.abs(p.modes)))

    def min_grid_deriv(self) -> float:
        M = max(8 * self.periodic.N, 64)
        theta = 2.0 * np.pi * np.arange(M) / M
        return float(self.deriv(theta).min())

    def is_monotone(self) -> bool:
        return self.min_grid_deriv() > 0.0

    def compose_rotation(self, beta: float) -> "CircleLift":
        """The lift of theta -> u(theta + beta)."""
        return CircleLift(self.base_rotation + beta,
                          self.periodic.compose_rotation(beta))

    def invert(self, y, tol: float = 1e-12, bisect_width: float = 1e-6,
               max_newton: int = 60):
        """Solve u(theta) = y for theta (vectorized over y).

        Bracketed bisection down to bisect_width, then Newton polish to
        |u(theta) - y| <= tol.  Raises NotMonotone if the derivative grid
        check fails, NoConvergence if the budget is exhausted.
        """
        if not self.is_monotone():
            raise NotMonotone("lift has nonpositive derivative on the check grid")
        yarr = np.asarray(y, dtype=float)
        scalar = yarr.ndim == 0
        yv = np.atleast_1d(yarr).astype(float)

        S = self.periodic.norm_s(0.0) + 1e-9
        lo = yv - self.base_rotation - S
        hi = yv - self.base_rotation + S
        n_bis = int(np.ceil(np.log2(max(2.0 * S / bisect_width, 2.0))))
        for _ in range(n_bis):
            mid = 0.5 * (lo + hi)
            below = self.eval(mid) < yv
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        theta = 0.5 * (lo + hi)

        for _ in range(max_newton):
            res = self.eval(theta) - yv
            if np.abs(res).max() <= tol:
                break
            step = res / self.deriv(theta)
            theta = np.clip(theta - step, lo, hi)
        else:
            raise NoConvergence("lift inversion did not reach tolerance")
        return float(theta[0]) if scalar else theta
