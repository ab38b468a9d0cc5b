"""Closed-form and semi-analytic results for the Gaussian limit.

Covers the random-walk endpoint distribution of a single arc under
measurement-free matchgate brickwork, the resulting sqrt(t/pi) mean
half-chain entropy, the exact Page curve over uniformly random pairings,
and the arc-length master equation of the monitored Gaussian circuit with
its momentum-space fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


# ---------------------------------------------------------------------------
# Unitary growth: endpoint random walk.

def endpoint_probability(t: int, x: int, x0: int) -> Fraction:
    """Exact probability that an arc endpoint sits at point x after t layers.

    Points are labeled by integers (two Majorana points per site); the
    endpoint performs a persistent random walk whose coarse-grained position
    advances by one unit cell per two layers.  Closed binomial form, exact
    in rationals.
    """
    if t < 1:
        raise ValueError("need at least one layer")
    c0 = (x0 - 1) // 4
    if t % 2 == 1:
        m = (t - 1) // 2 + (x - 1) // 4 - c0
    else:
        m = t // 2 - 1 + (x + 1) // 4 - c0
    if not 0 <= m <= t - 1:
        return Fraction(0)
    return Fraction(math.comb(t - 1, m), 2 ** (t + 1))


def endpoint_distribution(t: int, x0: int, span: int | None = None):
    """(xs, probs) arrays of the endpoint distribution after t layers."""
    if span is None:
        span = 4 * t + 8
    xs = np.arange(x0 - span, x0 + span + 1)
    probs = [endpoint_probability(t, int(x), x0) for x in xs]
    return xs, probs


def endpoint_variance(t: int, x0: int) -> Fraction:
    xs, probs = endpoint_distribution(t, x0)
    mean = sum(Fraction(int(x)) * p for x, p in zip(xs, probs))
    return sum((Fraction(int(x)) - mean) ** 2 * p for x, p in zip(xs, probs))


def mean_entropy_unitary(t) -> np.ndarray:
    """Asymptotic mean half-chain entropy sqrt(t/pi) of the unmonitored
    matchgate brickwork (diffusive arc spreading)."""
    return np.sqrt(np.asarray(t, dtype=float) / np.pi)


# ---------------------------------------------------------------------------
# Page curve over uniformly random pairings.

def pairing_count(n: int) -> int:
    """Number of perfect pairings of 2n points: (2n)! / (n! 2^n)."""
    return math.factorial(2 * n) // (math.factorial(n) * 2 ** n)


def page_curve_cg(n: int) -> list[Fraction]:
    """Exact mean cut entropies [S_0, ..., S_n] over uniform pairings.

    S_i averages half the number of arcs crossing the cut after site i when
    all pairing_count(n) pairings of the 2n Majorana points are equally
    likely.  Entry i sums over the even crossing numbers 2j.
    """
    a = [pairing_count(k) for k in range(n + 1)]
    out = []
    for i in range(n + 1):
        tot = Fraction(0)
        for j in range(0, min(i, n - i) + 1):
            cnt = (math.comb(2 * i, 2 * j) * math.comb(2 * (n - i), 2 * j)
                   * math.factorial(2 * j) * a[i - j] * a[n - i - j])
            tot += Fraction(j * cnt)
        out.append(tot / a[n])
    return out


def page_half_chain(n: int) -> Fraction:
    if n % 2:
        raise ValueError("half chain needs even n")
    return page_curve_cg(n)[n // 2]


# ---------------------------------------------------------------------------
# Monitored Gaussian circuit: arc-length master equation.
#
# P(l) is the distribution of arc lengths on a circular length lattice of M
# sites (index = length mod M); the smoothing kernel is
# f = (d_{-1} + 2 d_0 + d_{+1}) / 4 and one time step acts as
#   P' = (1 - 2p) f*f*P + p f*f + p f*f*(P*P),
# all convolutions circular.  In momentum space every term is pointwise:
#   P'(k) = cos^4(k/2) [ (1-2p) P(k) + p + p P(k)^2 ].


def master_eq_step(P: np.ndarray, p: float) -> np.ndarray:
    """One real-space step of the length master equation (circular)."""
    M = len(P)
    f = np.zeros(M)
    f[0] = 0.5
    f[1] = 0.25
    f[-1] = 0.25
    fk = np.fft.rfft(f)
    Pk = np.fft.rfft(P)
    outk = fk * fk * ((1 - 2 * p) * Pk + p + p * Pk * Pk)
    return np.fft.irfft(outk, n=M)


def master_eq_step_momentum(Pk: np.ndarray, cos4: np.ndarray,
                            p: float) -> np.ndarray:
    return cos4 * ((1 - 2 * p) * Pk + p + p * Pk * Pk)


def steady_state_momentum(p: float, k) -> np.ndarray:
    """Stable root of the momentum-space fixed-point equation.

    With c4 = cos^-4(k/2), A = c4 - 1 + 2p, D = sqrt((c4-1)(c4-1+4p)):
    P(k) = 2p / (A + D); the two quadratic roots multiply to 1 and this form
    stays finite at k -> 0 (P -> 1).
    """
    if not 0 < p <= 0.5:
        raise ValueError("p must lie in (0, 1/2]")
    k = np.asarray(k, dtype=float)
    c4 = np.cos(k / 2) ** -4
    A = c4 - 1 + 2 * p
    D = np.sqrt((c4 - 1) * (c4 - 1 + 4 * p))
    return 2 * p / (A + D)


@dataclass
class LengthDistribution:
    """Steady-state arc-length distribution on a circular lattice."""

    p: float
    M: int
    P: np.ndarray           # real-space probabilities, index = length mod M
    iterations: int
    residual: float         # last sup-norm change in momentum space


def steady_state(p: float, M: int = 4096, tol: float = 1e-10,
                 max_iter: int = 200000) -> LengthDistribution:
    """Iterate the master-equation map to its fixed point.

    The iteration runs pointwise in momentum space (the map is a sum of
    circular convolutions) starting from the all-local state P = delta_0.
    Raises RuntimeError if the sup-norm change does not fall below ``tol``.
    """
    if not 0 < p <= 0.5:
        raise ValueError("p must lie in (0, 1/2]")
    k = 2 * np.pi * np.arange(M // 2 + 1) / M
    cos4 = np.cos(k / 2) ** 4
    Pk = np.ones(M // 2 + 1, dtype=np.complex128)
    resid = np.inf
    for it in range(1, max_iter + 1):
        nxt = master_eq_step_momentum(Pk, cos4, p)
        resid = float(np.max(np.abs(nxt - Pk)))
        Pk = nxt
        if resid < tol:
            break
    else:
        raise RuntimeError(
            "master-equation fixed point did not converge "
            "(p=%g, M=%d, residual=%.3g)" % (p, M, resid))
    P = np.fft.irfft(Pk, n=M)
    return LengthDistribution(p, M, P, it, resid)


def tail_coefficient(dist: LengthDistribution,
                     window: tuple[float, float] = (0.125, 0.5)) -> float:
    """Least-squares amplitude c of the P(l) ~ c/l^2 tail.

    On the circular lattice the images at l and M - l superpose, so the fit
    model is g(l) = l^-2 + (M - l)^-2 over l in [window[0] M, window[1] M].
    """
    M = dist.M
    lo = int(window[0] * M)
    hi = int(window[1] * M)
    ls = np.arange(lo, hi + 1, dtype=float)
    g = ls ** -2 + (M - ls) ** -2
    y = dist.P[lo:hi + 1]
    return float(np.sum(y * g) / np.sum(g * g))


def expected_tail_coefficient(p: float) -> float:
    """Predicted tail amplitude 1 / (pi sqrt(2p))."""
    return 1.0 / (np.pi * np.sqrt(2 * p))


def entropy_from_lengths(dist: LengthDistribution, n: int) -> float:
    """Mean cut entropy of an n-site segment from the length distribution.

    An arc of length l contributes to min(l, n - l, n/2) of the n - 1
    interior cuts; summing the weight against P(l) gives the mean entropy
    per cut times (n - 1) ... normalized here as the mean half-chain-style
    entropy S(n) = sum_l min(l, n/2, n - l) P(l).
    """
    if n < 2 or 2 * n > dist.M:
        raise ValueError("segment must fit in half the lattice")
    ls = np.arange(1, n)
    w = np.minimum(np.minimum(ls, n - ls), n / 2.0)
    return float(np.sum(w * dist.P[1:n]))


def expected_entropy_slope(p: float) -> float:
    """Predicted d S / d ln n = 1 / (pi sqrt(2p)) in the monitored phase."""
    return 1.0 / (np.pi * np.sqrt(2 * p))
