"""Bit-packed stabilizer tableau with destabilizers.

Supports Clifford two-qubit gates on neighboring sites, projective Z
measurements, and rank-based entanglement entropy of contiguous left regions.
The heavy lifting lives in :mod:`matcharc._kernels`; this class is the
object-level interface used for small-scale work and tests.  The circuit
engine drives the same kernels through a fused loop instead.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .gates import CliffordGate2, gate_tables
from .paulis import Pauli, majorana, majorana_pair, popcount


def _pack_mask(mask: int, n: int) -> np.ndarray:
    W = (n + 63) // 64
    out = np.zeros(W, dtype=np.uint64)
    for w in range(W):
        out[w] = (mask >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
    return out


def _unpack_mask(words: np.ndarray) -> int:
    mask = 0
    for w, v in enumerate(words):
        mask |= int(v) << (64 * w)
    return mask


class StabilizerTableau:
    """N-qubit stabilizer state: N generator rows plus N destabilizer rows."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("need at least one qubit")
        self.n = n
        self.W = (n + 63) // 64
        self.X = np.zeros((2 * n, self.W), dtype=np.uint64)
        self.Z = np.zeros((2 * n, self.W), dtype=np.uint64)
        self.delta = np.zeros(2 * n, dtype=np.uint8)
        K.tableau_init_vacuum(self.X, self.Z, self.delta, n)

    @classmethod
    def from_majorana_pairs(cls, n, pairs, signs):
        """Gaussian stabilizer state with generators ``sign * i g_mu g_nu``.

        ``pairs`` is a perfect pairing of the 2n Majorana indices.  Matching
        destabilizers are built from the mode chain
        ``D_a = (prod_{b<a} g_{mu_b} g_{nu_b}) g_{mu_a}`` (signs arbitrary).
        """
        pairs = sorted((min(p), max(p)) for p in pairs)
        flat = sorted(i for p in pairs for i in p)
        if flat != list(range(2 * n)):
            raise ValueError("pairs must form a perfect pairing of 0..2n-1")
        if len(signs) != n:
            raise ValueError("need one sign per pair")
        tab = cls(n)
        tab.X[:] = 0
        tab.Z[:] = 0
        tab.delta[:] = 0
        pref = Pauli.identity(n)
        for a, ((mu, nu), sg) in enumerate(zip(pairs, signs)):
            stab = majorana_pair(n, mu, nu, sg)
            destab = pref * majorana(n, mu)
            # destabilizer phases are unobservable; pick the +1 Hermitian rep
            destab = Pauli(n, destab.x, destab.z,
                           popcount(destab.x & destab.z) % 4)
            tab._set_row(a, destab)
            tab._set_row(n + a, stab)
            pref = pref * majorana(n, mu) * majorana(n, nu)
        return tab

    def _set_row(self, r: int, p: Pauli):
        self.X[r] = _pack_mask(p.x, self.n)
        self.Z[r] = _pack_mask(p.z, self.n)
        self.delta[r] = p.delta % 4

    def _get_row(self, r: int) -> Pauli:
        return Pauli(self.n, _unpack_mask(self.X[r]), _unpack_mask(self.Z[r]),
                     int(self.delta[r]))

    def stabilizer(self, i: int) -> Pauli:
        return self._get_row(self.n + i)

    def destabilizer(self, i: int) -> Pauli:
        return self._get_row(i)

    def copy(self) -> "StabilizerTableau":
        other = object.__new__(StabilizerTableau)
        other.n, other.W = self.n, self.W
        other.X = self.X.copy()
        other.Z = self.Z.copy()
        other.delta = self.delta.copy()
        return other

    def apply_gate(self, gate, site: int):
        """Conjugate the state by a two-qubit Clifford on (site, site+1)."""
        if not 0 <= site <= self.n - 2:
            raise ValueError("gate site out of range")
        t = gate_tables()
        gid = gate if isinstance(gate, (int, np.integer)) else t.gate_id(gate)
        K.tableau_apply_gate(self.X, self.Z, self.delta, site, t.lut[gid])

    def measure_z(self, site: int, rng) -> tuple[int, bool]:
        """Measure Z on ``site``; returns (outcome, deterministic).

        One coin is drawn from ``rng`` per call whether or not the outcome is
        random, so the stream position is input-independent.
        """
        if not 0 <= site < self.n:
            raise ValueError("measurement site out of range")
        coin = int(rng.integers(2)) if hasattr(rng, "integers") else int(rng) & 1
        out, det = K.tableau_measure(self.X, self.Z, self.delta, self.n,
                                     site, coin)
        return int(out), bool(det)

    def entanglement_entropy(self, cut: int) -> int:
        """Entropy (bits) of the contiguous region [0, cut)."""
        if not 1 <= cut <= self.n - 1:
            raise ValueError("cut must leave a nonempty region on both sides")
        return int(K.tableau_entropy(self.X, self.Z, self.n, cut))

    def check_invariants(self):
        """Assert commutation, independence, and Hermitian phases."""
        stabs = [self.stabilizer(i) for i in range(self.n)]
        destabs = [self.destabilizer(i) for i in range(self.n)]
        for p in stabs:
            if not p.is_hermitian:
                raise AssertionError("non-Hermitian stabilizer phase")
            p.sign  # raises on +-i
        for i, a in enumerate(stabs):
            for b in stabs[i + 1:]:
                if not a.commutes_with(b):
                    raise AssertionError("stabilizers do not commute")
        for i, d in enumerate(destabs):
            for j, s in enumerate(stabs):
                want = i == j
                got = not d.commutes_with(s)
                if got != want:
                    raise AssertionError("destabilizer pairing broken")
            for e in destabs[i + 1:]:
                if not d.commutes_with(e):
                    raise AssertionError("destabilizers do not commute")
        M = np.zeros((self.n, 2 * self.W), dtype=np.uint64)
        M[:, :self.W] = self.X[self.n:]
        M[:, self.W:] = self.Z[self.n:]
        if K.rank_gf2(M, 2 * 64 * self.W) != self.n:
            raise AssertionError("stabilizer rows are dependent")
