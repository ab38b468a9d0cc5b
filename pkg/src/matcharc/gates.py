"""Two-qubit gate ensembles for the circuit model.

Two ensembles are supported, both specified by their conjugation action on
the Pauli generators X1, Z1, X2, Z2 (phases are unobservable in stabilizer
dynamics, so gates are identified modulo global phase):

* the full two-qubit Clifford group modulo phase (11520 elements,
  720 symplectic images x 16 sign choices), and
* its matchgate subgroup (192 elements), whose members act on the four local
  Majorana operators as signed permutations with an SO(4) determinant
  constraint.

Enumeration tables (including per-gate conjugation lookup tables used by the
tableau backend and the Majorana-permutation map used by the arc backend) are
built once per process and are immutable afterwards.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .paulis import Pauli, popcount

N_CLIFFORD2 = 11520
N_MATCHGATE2 = 192

#: Majorana operators on two qubits: X1, Y1, Z1 X2, Z1 Y2.
MAJORANA_2Q = (
    Pauli(2, x=0b01, z=0b00, delta=0),
    Pauli(2, x=0b01, z=0b01, delta=1),
    Pauli(2, x=0b10, z=0b01, delta=0),
    Pauli(2, x=0b10, z=0b11, delta=1),
)

_BASIS_2Q = (
    Pauli(2, 0b01, 0b00),  # X1
    Pauli(2, 0b00, 0b01),  # Z1
    Pauli(2, 0b10, 0b00),  # X2
    Pauli(2, 0b00, 0b10),  # Z2
)


@dataclass(frozen=True)
class CliffordGate2:
    """A two-qubit Clifford gate as the images of X1, Z1, X2, Z2."""

    images: tuple[Pauli, Pauli, Pauli, Pauli]

    def __post_init__(self):
        if len(self.images) != 4:
            raise ValueError("need exactly four images")
        for im in self.images:
            if im.n != 2 or im.x == im.z == 0:
                raise ValueError("invalid image")
            if not im.is_hermitian:
                raise ValueError("gate images must be Hermitian Paulis")
        # Symplectic form: anticommute within (X, Z) pairs, commute across.
        for i in range(4):
            for j in range(i + 1, 4):
                want = 1 if {i, j} in ({0, 1}, {2, 3}) else 0
                got = 0 if self.images[i].commutes_with(self.images[j]) else 1
                if got != want:
                    raise ValueError("images do not preserve the symplectic form")

    def key(self):
        return tuple((im.x, im.z, im.delta) for im in self.images)

    def conjugate(self, p: Pauli) -> Pauli:
        """Image of a two-qubit Pauli under conjugation by this gate."""
        if p.n != 2:
            raise ValueError("expected a two-qubit Pauli")
        out = Pauli.identity(2)
        bits = (p.x & 1, p.z & 1, (p.x >> 1) & 1, (p.z >> 1) & 1)
        for b, im in zip(bits, self.images):
            if b:
                out = out * im
        return Pauli(2, out.x, out.z, out.delta + p.delta)

    def compose(self, other: "CliffordGate2") -> "CliffordGate2":
        """Gate of the circuit 'self first, then other'."""
        return CliffordGate2(
            tuple(self.conjugate(other.conjugate(p)) for p in _BASIS_2Q))

    def inverse(self) -> "CliffordGate2":
        imgs = []
        minv = _gf2_inverse_4x4([_pauli_to_vec(im) for im in self.images])
        for row in minv:
            cand = _vec_to_pauli(row, sign=+1)
            back = self.conjugate(cand)
            if back.sign < 0:
                cand = Pauli.from_sign(2, cand.x, cand.z, -1)
            imgs.append(cand)
        return CliffordGate2(tuple(imgs))

    @property
    def is_identity(self) -> bool:
        return all(im == p for im, p in zip(self.images, _BASIS_2Q))


def _pauli_to_vec(p: Pauli) -> int:
    """(x1, z1, x2, z2) packed as bits 0..3."""
    return (p.x & 1) | ((p.z & 1) << 1) | (((p.x >> 1) & 1) << 2) | (((p.z >> 1) & 1) << 3)


def _vec_to_pauli(v: int, sign: int) -> Pauli:
    x = (v & 1) | (((v >> 2) & 1) << 1)
    z = ((v >> 1) & 1) | (((v >> 3) & 1) << 1)
    return Pauli.from_sign(2, x, z, sign)


def _symp(u: int, v: int) -> int:
    vs = ((v & 0b0101) << 1) | ((v & 0b1010) >> 1)
    return popcount(u & vs) & 1


def _gf2_inverse_4x4(rows):
    """Invert a 4x4 GF(2) matrix given as four 4-bit row masks."""
    aug = [rows[i] | (1 << (4 + i)) for i in range(4)]
    r = 0
    for col in range(4):
        piv = next((k for k in range(r, 4) if (aug[k] >> col) & 1), None)
        if piv is None:
            raise ValueError("singular matrix")
        aug[r], aug[piv] = aug[piv], aug[r]
        for k in range(4):
            if k != r and (aug[k] >> col) & 1:
                aug[k] ^= aug[r]
        r += 1
    out = [0, 0, 0, 0]
    for i in range(4):
        for j in range(4):
            if (aug[i] >> (4 + j)) & 1:
                out[i] |= 1 << j
    return out


@dataclass(frozen=True)
class SignedMajoranaPermutation:
    """Signed permutation of the four local Majorana modes, restricted to SO(4)."""

    perm: tuple[int, int, int, int]
    signs: tuple[int, int, int, int]

    def __post_init__(self):
        if sorted(self.perm) != [0, 1, 2, 3]:
            raise ValueError("perm must be a permutation of 0..3")
        if any(s not in (+1, -1) for s in self.signs):
            raise ValueError("signs must be +-1")
        if self.determinant != +1:
            raise ValueError("signed permutation is not in SO(4)")

    @property
    def determinant(self) -> int:
        inv = sum(1 for i in range(4) for j in range(i + 1, 4)
                  if self.perm[i] > self.perm[j])
        d = -1 if inv % 2 else +1
        for s in self.signs:
            d *= s
        return d


def signed_perm_to_gate(q: SignedMajoranaPermutation) -> CliffordGate2:
    """Clifford matchgate whose Majorana action realizes ``q``.

    Pauli generators are expressed as Majorana monomials (X1 = g0,
    Z1 = -i g0 g1, X2 = -i g0 g1 g2, Z2 = -i g2 g3), each factor is mapped to
    ``signs[mu] * gamma_{perm[mu]}``, and the product is reduced with exact
    phase tracking.
    """
    def image(indices):
        out = Pauli.identity(2)
        sgn = +1
        for mu in indices:
            out = out * MAJORANA_2Q[q.perm[mu]]
            sgn *= q.signs[mu]
        # -i prefactor for every bilinear/trilinear monomial above.
        delta = out.delta + (3 if len(indices) > 1 else 0) + (0 if sgn > 0 else 2)
        return Pauli(2, out.x, out.z, delta)

    return CliffordGate2((image([0]), image([0, 1]), image([0, 1, 2]), image([2, 3])))


def is_gaussian(g: CliffordGate2) -> bool:
    """True iff the gate is a matchgate: signed Majorana permutation in SO(4).

    Weight preservation alone admits 384 gates; the reflections (odd Majorana
    monomials such as X1, which flip the fermion parity Z1 Z2) are excluded by
    the determinant condition.
    """
    det = +1
    for mu in range(4):
        c = g.conjugate(MAJORANA_2Q[mu])
        for nu in range(4):
            if c.equals_up_to_sign(MAJORANA_2Q[nu]):
                break
        else:
            return False
    # det(Q) via the parity operator: images of g0 g1 g2 g3 ~ Z1 Z2.
    par = Pauli(2, 0, 0b11, 2)  # Z1 Z2 (product g0 g1 g2 g3 = -Z1 Z2)
    det = g.conjugate(par).sign * par.sign
    return det == +1


def gate_to_arc_permutation(g: CliffordGate2) -> tuple[int, int, int, int]:
    """Permutation sigma with ``U^dag gamma_mu U = +- gamma_sigma(mu)``."""
    sigma = []
    for mu in range(4):
        c = g.conjugate(MAJORANA_2Q[mu])
        for nu in range(4):
            if c.equals_up_to_sign(MAJORANA_2Q[nu]):
                sigma.append(nu)
                break
        else:
            raise ValueError("gate is not Gaussian")
    return tuple(sigma)


def enumerate_cg2() -> list[CliffordGate2]:
    """All 192 Clifford matchgates, from the 384 signed permutations."""
    seen = {}
    for perm in itertools.permutations(range(4)):
        for bits in range(16):
            signs = tuple(-1 if (bits >> k) & 1 else +1 for k in range(4))
            try:
                q = SignedMajoranaPermutation(perm, signs)
            except ValueError:
                continue
            g = signed_perm_to_gate(q)
            seen[g.key()] = g
    return list(seen.values())


class GateTables:
    """Immutable enumeration tables for the full two-qubit Clifford group.

    Gates are ordered canonically: symplectic images enumerated
    lexicographically, then the 16 sign assignments in binary order, so gate
    ids are stable across runs and processes.
    """

    def __init__(self):
        sympl = []
        for v1 in range(1, 16):
            for v2 in range(1, 16):
                if _symp(v1, v2) != 1:
                    continue
                for v3 in range(1, 16):
                    if _symp(v1, v3) or _symp(v2, v3):
                        continue
                    for v4 in range(1, 16):
                        if (_symp(v3, v4) != 1 or _symp(v1, v4)
                                or _symp(v2, v4)):
                            continue
                        sympl.append((v1, v2, v3, v4))
        if len(sympl) != 720:
            raise AssertionError("symplectic enumeration is broken")

        self.gates: list[CliffordGate2] = []
        for vecs in sympl:
            for bits in range(16):
                imgs = tuple(
                    _vec_to_pauli(v, -1 if (bits >> k) & 1 else +1)
                    for k, v in enumerate(vecs))
                self.gates.append(CliffordGate2(imgs))
        if len(self.gates) != N_CLIFFORD2:
            raise AssertionError("Clifford enumeration is broken")

        self.index = {g.key(): i for i, g in enumerate(self.gates)}

        self.perms_s4 = list(itertools.permutations(range(4)))
        perm_index = {p: i for i, p in enumerate(self.perms_s4)}

        # Conjugation LUT: input m = x1<<3 | z1<<2 | x2<<1 | z2 (phase 0),
        # output = x1' | z1'<<1 | x2'<<2 | z2'<<3 | (delta mod 4)<<4.
        self.lut = np.zeros((N_CLIFFORD2, 16), dtype=np.uint8)
        self.gaussian = np.zeros(N_CLIFFORD2, dtype=np.bool_)
        self.arc_perm_id = np.full(N_CLIFFORD2, 255, dtype=np.uint8)
        for gid, g in enumerate(self.gates):
            for m in range(1, 16):
                p = Pauli(2, x=((m >> 3) & 1) | (((m >> 1) & 1) << 1),
                          z=((m >> 2) & 1) | ((m & 1) << 1))
                im = g.conjugate(p)
                self.lut[gid, m] = (
                    (im.x & 1) | ((im.z & 1) << 1) | (((im.x >> 1) & 1) << 2)
                    | (((im.z >> 1) & 1) << 3) | (im.delta << 4))
            if is_gaussian(g):
                self.gaussian[gid] = True
                self.arc_perm_id[gid] = perm_index[gate_to_arc_permutation(g)]
        self.cg_ids = np.flatnonzero(self.gaussian).astype(np.int64)
        if len(self.cg_ids) != N_MATCHGATE2:
            raise AssertionError("matchgate count is not 192")

    def gate_id(self, g: CliffordGate2) -> int:
        return self.index[g.key()]


@lru_cache(maxsize=1)
def gate_tables() -> GateTables:
    return GateTables()


def sample_c2(rng) -> CliffordGate2:
    """Uniform draw from the 11520 two-qubit Cliffords modulo phase."""
    t = gate_tables()
    return t.gates[int(rng.integers(N_CLIFFORD2))]


def sample_cg2(rng) -> CliffordGate2:
    """Uniform draw from the 192 Clifford matchgates."""
    t = gate_tables()
    return t.gates[int(t.cg_ids[int(rng.integers(N_MATCHGATE2))])]


def selftest(rng=None, n_uniform: int = 10**6, p_threshold: float = 1e-3) -> dict:
    """Closure, cardinality and sampler-uniformity checks.

    Returns a dict of named boolean results plus supporting numbers; used by
    the ``gates selftest`` CLI subcommand.
    """
    from scipy import stats as sps

    if rng is None:
        rng = np.random.default_rng(0)
    t = gate_tables()
    results = {}

    results["c2_cardinality"] = (len(t.gates) == N_CLIFFORD2)
    cg = enumerate_cg2()
    results["cg2_cardinality"] = (len(cg) == N_MATCHGATE2)
    cg_ids = sorted(t.gate_id(g) for g in cg)
    results["cg2_matches_gaussian_filter"] = (cg_ids == list(t.cg_ids))

    closed = True
    has_inverse = True
    cg_key_set = {g.key() for g in cg}
    for a in cg:
        found_inv = False
        for b in cg:
            c = a.compose(b)
            if c.key() not in cg_key_set:
                closed = False
            if c.is_identity:
                found_inv = True
        has_inverse &= found_inv
    results["cg2_closed"] = closed
    results["cg2_has_inverses"] = has_inverse

    # Each arc permutation is realized by exactly 8 matchgates.
    counts = np.zeros(24, dtype=int)
    for g in cg:
        counts[t.arc_perm_id[t.gate_id(g)]] += 1
    results["cg2_perm_multiplicity_8"] = bool(np.all(counts == 8))

    draws = rng.integers(N_CLIFFORD2, size=n_uniform)
    obs = np.bincount(draws, minlength=N_CLIFFORD2)
    chi2 = float(((obs - n_uniform / N_CLIFFORD2) ** 2
                  / (n_uniform / N_CLIFFORD2)).sum())
    pval = float(sps.chi2.sf(chi2, N_CLIFFORD2 - 1))
    results["c2_uniformity_pvalue"] = pval
    results["c2_uniform"] = pval > p_threshold

    # Rejection to the Gaussian subset reproduces the uniform matchgate law.
    sub = draws[t.gaussian[draws]]
    if len(sub) > 0:
        ranks = np.searchsorted(t.cg_ids, sub)
        obs = np.bincount(ranks, minlength=N_MATCHGATE2)
        chi2 = float(((obs - len(sub) / N_MATCHGATE2) ** 2
                      / (len(sub) / N_MATCHGATE2)).sum())
        pval = float(sps.chi2.sf(chi2, N_MATCHGATE2 - 1))
        results["cg2_rejection_pvalue"] = pval
        results["cg2_rejection_uniform"] = pval > p_threshold

    results["ok"] = all(v for k, v in results.items() if isinstance(v, bool))
    return results
