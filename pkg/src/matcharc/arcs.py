"""Arc (pairing) model: exact classical simulation of Gaussian circuits.

A Gaussian stabilizer state maps to a perfect pairing of 2n Majorana points;
a matchgate permutes the four points of the gate window, a Z measurement
glues the two arcs at the measured site (outcome-independent), and the
entanglement entropy of a cut equals half the number of crossing arcs.
Signs of the stabilizers are not tracked; they carry no entanglement.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K


class ArcConfiguration:
    """Perfect pairing of 2n points; ``partner[mu]`` is mu's arc partner."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("need at least one qubit")
        self.n = n
        self.partner = np.empty(2 * n, dtype=np.int64)
        K.arc_init_local(self.partner)

    @classmethod
    def from_partner(cls, partner) -> "ArcConfiguration":
        partner = np.asarray(partner, dtype=np.int64)
        cfg = object.__new__(ArcConfiguration)
        cfg.n = len(partner) // 2
        cfg.partner = partner.copy()
        cfg.check_invariants()
        return cfg

    @classmethod
    def random_pairing(cls, n: int, rng) -> "ArcConfiguration":
        """Uniform pairing: repeatedly match the first unpaired point with a
        uniformly random remaining one."""
        pts = list(range(2 * n))
        partner = np.empty(2 * n, dtype=np.int64)
        while pts:
            a = pts.pop(0)
            b = pts.pop(int(rng.integers(len(pts))))
            partner[a] = b
            partner[b] = a
        cfg = object.__new__(ArcConfiguration)
        cfg.n = n
        cfg.partner = partner
        return cfg

    def pairs(self) -> list[tuple[int, int]]:
        return sorted({(min(m, int(p)), max(m, int(p)))
                       for m, p in enumerate(self.partner)})

    def copy(self) -> "ArcConfiguration":
        other = object.__new__(ArcConfiguration)
        other.n = self.n
        other.partner = self.partner.copy()
        return other

    def apply_permutation(self, site: int, sigma):
        """Relabel the 4 Majorana points of the gate at (site, site+1)."""
        if not 0 <= site <= self.n - 2:
            raise ValueError("gate site out of range")
        sigma = np.asarray(sigma, dtype=np.int64)
        if sorted(sigma.tolist()) != [0, 1, 2, 3]:
            raise ValueError("sigma must be a permutation of 0..3")
        K.arc_apply_perm(self.partner, site, sigma)

    def measure(self, site: int):
        """Glue the arcs at ``site``; deterministic (no outcome dependence)."""
        if not 0 <= site < self.n:
            raise ValueError("measurement site out of range")
        K.arc_measure(self.partner, site)

    def crossings(self, cut: int) -> int:
        if not 1 <= cut <= self.n - 1:
            raise ValueError("cut must leave a nonempty region on both sides")
        return int(K.arc_crossings(self.partner, cut))

    def entropy(self, cut: int) -> int:
        """Entropy (bits) of qubits [0, cut): half the crossing count."""
        c = self.crossings(cut)
        if c % 2:
            raise AssertionError("odd crossing count: corrupted pairing")
        return c // 2

    def check_invariants(self):
        p = self.partner
        if np.any(p[p] != np.arange(2 * self.n)):
            raise AssertionError("partner map is not an involution")
        if np.any(p == np.arange(2 * self.n)):
            raise AssertionError("pairing has a fixed point")
        for cut in range(1, self.n):
            if self.crossings(cut) % 2:
                raise AssertionError("odd crossing count at cut %d" % cut)
