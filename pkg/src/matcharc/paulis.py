"""Signed Pauli strings with exact phase tracking.

A Pauli string on n qubits is stored as a pair of bit masks (x, z) together
with a phase exponent ``delta`` (mod 4), representing the operator

    i^delta * prod_j X_j^{x_j} Z_j^{z_j}

with per-qubit factors ordered X before Z.  Hermitian strings satisfy
``delta == popcount(x & z) (mod 2)``; the overall sign of a Hermitian string
is +1 when ``delta == popcount(x & z) (mod 4)`` and -1 otherwise.  Stabilizer
dynamics generated by Clifford gates and Z measurements never leaves the
Hermitian sector, which is asserted throughout.
"""

from __future__ import annotations

from dataclasses import dataclass


def popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class Pauli:
    """A phased Pauli string over ``n`` qubits (bit j = qubit j)."""

    n: int
    x: int
    z: int
    delta: int = 0  # phase exponent of i, mod 4

    def __post_init__(self):
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError("bit mask exceeds qubit count")
        object.__setattr__(self, "delta", self.delta % 4)

    @classmethod
    def identity(cls, n: int) -> "Pauli":
        return cls(n, 0, 0, 0)

    @classmethod
    def from_sign(cls, n: int, x: int, z: int, sign: int) -> "Pauli":
        """Hermitian Pauli ``sign * i^{|x&z|} X^x Z^z`` with sign in {+1, -1}."""
        if sign not in (+1, -1):
            raise ValueError("sign must be +1 or -1")
        delta = (popcount(x & z) + (0 if sign > 0 else 2)) % 4
        return cls(n, x, z, delta)

    def __mul__(self, other: "Pauli") -> "Pauli":
        if self.n != other.n:
            raise ValueError("qubit count mismatch")
        # Commuting Z^z1 past X^x2 contributes (-1)^{|z1 & x2|}.
        delta = (self.delta + other.delta + 2 * popcount(self.z & other.x)) % 4
        return Pauli(self.n, self.x ^ other.x, self.z ^ other.z, delta)

    @property
    def is_hermitian(self) -> bool:
        return (self.delta - popcount(self.x & self.z)) % 2 == 0

    @property
    def sign(self) -> int:
        """Sign of a Hermitian string; raises on +-i phases."""
        r = (self.delta - popcount(self.x & self.z)) % 4
        if r == 0:
            return +1
        if r == 2:
            return -1
        raise ValueError("Pauli has an imaginary phase; no real sign")

    @property
    def weight(self) -> int:
        return popcount(self.x | self.z)

    def commutes_with(self, other: "Pauli") -> bool:
        return (popcount(self.x & other.z) + popcount(self.z & other.x)) % 2 == 0

    def equals_up_to_sign(self, other: "Pauli") -> bool:
        return self.x == other.x and self.z == other.z

    def __str__(self):
        body = "".join("IXZY"[((self.x >> j) & 1) | (((self.z >> j) & 1) << 1)]
                       for j in range(self.n))
        pre = {0: "+", 1: "+i", 2: "-", 3: "-i"}[
            (self.delta - popcount(self.x & self.z)) % 4]
        return pre + body


def symplectic_product(a: Pauli, b: Pauli) -> int:
    """Binary symplectic inner product: 1 iff the strings anticommute."""
    return (popcount(a.x & b.z) + popcount(a.z & b.x)) % 2


def majorana(n: int, mu: int) -> Pauli:
    """Majorana operator ``mu`` (0-based) on ``n`` qubits via Jordan-Wigner.

    Even mu = 2i:   Z_0 .. Z_{i-1} X_i;  odd mu = 2i+1:  Z_0 .. Z_{i-1} Y_i.
    """
    if not 0 <= mu < 2 * n:
        raise ValueError("Majorana index out of range")
    i = mu // 2
    zstring = (1 << i) - 1
    if mu % 2 == 0:
        return Pauli(n, 1 << i, zstring, 0)
    return Pauli(n, 1 << i, zstring | (1 << i), 1)


def majorana_pair(n: int, mu: int, nu: int, sign: int = +1) -> Pauli:
    """Stabilizer-type bilinear ``sign * i * gamma_mu gamma_nu`` (mu != nu)."""
    if mu == nu:
        raise ValueError("need two distinct Majorana indices")
    p = majorana(n, mu) * majorana(n, nu)
    p = Pauli(n, p.x, p.z, p.delta + 1)  # multiply by i
    if sign < 0:
        p = Pauli(n, p.x, p.z, p.delta + 2)
    if not p.is_hermitian:
        raise AssertionError("Majorana bilinear must be Hermitian")
    return p
