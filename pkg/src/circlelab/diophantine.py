"""Continued fractions, certified Diophantine constants, rotation numbers.

A DiophantineNumber packages an irrational alpha with a brute-force
certificate |k*alpha - l| >= gamma / k^q valid for all 1 <= k <= cutoff_K.
Floating point cannot certify all k, but every small-divisor solve in this
package uses modes |k| <= N <= cutoff_K, so the finite certificate is the
one that matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GammaUnderflow, RationalDetected, TooShort

GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0

_CF_EPS = 1e-12
_GAMMA_FLOOR = 1e-12


def continued_fraction(alpha: float, depth: int) -> list[int]:
    """Partial quotients a_1..a_depth of alpha in (0,1).

    Raises RationalDetected when a remainder vanishes to machine precision.
    """
    x = float(alpha) % 1.0
    quotients = []
    for _ in range(depth):
        if x < _CF_EPS:
            raise RationalDetected("remainder vanished; alpha is rational "
                                   "to machine precision")
        x = 1.0 / x
        a = int(math.floor(x))
        quotients.append(a)
        x -= a
    return quotients


def convergents(quotients) -> list[tuple[int, int]]:
    """Convergents p_k/q_k of [0; a_1, a_2, ...]."""
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    out = []
    for a in quotients:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        out.append((p, q))
    return out


def dist_to_integers(x) -> np.ndarray:
    frac = np.mod(x, 1.0)
    return np.minimum(frac, 1.0 - frac)


@dataclass(frozen=True)
class DiophantineNumber:
    """alpha in (0,1) with continued-fraction data and certified (gamma, q)."""

    alpha: float
    cf: tuple
    gamma: float
    q: float
    cutoff_K: int

    def divisor_lower_bound(self, k: int) -> float:
        """Certified lower bound on dist(k*alpha, Z) for 1 <= k <= cutoff_K."""
        if not 1 <= k <= self.cutoff_K:
            raise ValueError("mode outside the certified range")
        return self.gamma / float(k) ** self.q


def certify(alpha: float, q: float = 1.0, K: int = 1024,
            cf_depth: int = 32) -> DiophantineNumber:
    """Brute-force Diophantine certificate over 1 <= k <= K.

    gamma = min_k k^q * dist(k*alpha, Z).  Raises GammaUnderflow when the
    result drops below 1e-12 (alpha is too close to rational at this cutoff).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    a = float(alpha) % 1.0
    k = np.arange(1, K + 1, dtype=float)
    gamma = float(np.min(k ** q * dist_to_integers(k * a)))
    if gamma < _GAMMA_FLOOR:
        raise GammaUnderflow(f"gamma={gamma:.3e} below certification floor")
    try:
        cf = tuple(continued_fraction(a, cf_depth))
    except RationalDetected:
        cf = tuple()
    return DiophantineNumber(a, cf, gamma, q, K)


def golden(q: float = 1.0, K: int = 1024) -> DiophantineNumber:
    """The golden mean (sqrt(5)-1)/2, the default frequency for experiments."""
    return certify(GOLDEN_MEAN, q, K)


class RotationEstimate(NamedTuple):
    value: float
    error: float


def rotation_number(orbit, mode: str = "birkhoff") -> RotationEstimate:
    """Rotation number lim (theta_n - theta_0)/(2 pi n) of a lifted orbit.

    mode 'birkhoff' (default) applies Richardson extrapolation over dyadic
    orbit lengths to the Birkhoff quotient, killing the leading 1/n error
    term.  mode 'convergent-acceleration' evaluates the quotient at the
    largest continued-fraction convergent denominator of the running
    estimate, where the quasi-periodic deviation nearly closes up; for
    Diophantine rotations this gains several digits at the same length.
    """
    th = np.asarray(orbit, dtype=float)
    if th.ndim != 1 or th.size < 100:
        raise TooShort("need at least 100 lifted iterates")
    n = th.size - 1

    def quotient(m: int) -> float:
        return (th[m] - th[0]) / (2.0 * np.pi * m)

    if mode == "birkhoff":
        full, half = quotient(n), quotient(n // 2)
        return RotationEstimate(2.0 * full - half, abs(full - half))
    if mode == "convergent-acceleration":
        value = quotient(n)
        for _ in range(3):
            try:
                cf = continued_fraction(value % 1.0, 24)
            except RationalDetected:
                break
            qs = [q for _, q in convergents(cf) if 1 <= q <= n]
            if not qs:
                break
            value = quotient(max(qs))
        return RotationEstimate(value, abs(value - quotient(n)))
    raise ValueError(f"unknown mode {mode!r}")
