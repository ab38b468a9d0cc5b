"""Numba kernels for the tableau and arc backends.

The tableau is stored bit-packed: ``X``/``Z`` are ``(2n, W)`` uint64 arrays
(row-major, qubit j at word ``j >> 6`` bit ``j & 63``) with destabilizers in
rows ``0..n-1`` and stabilizers in rows ``n..2n-1``.  ``delta`` holds the
phase exponent of i (mod 4) per row, in the convention of
:mod:`matcharc.paulis`.

All kernels are deterministic; randomness is pre-drawn by the caller.
"""

import numpy as np
from numba import njit

U1 = np.uint64(1)
U3 = np.uint64(3)


@njit(cache=True, inline="always")
def popcount64(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


@njit(cache=True)
def tableau_init_vacuum(X, Z, delta, n):
    X[:] = np.uint64(0)
    Z[:] = np.uint64(0)
    delta[:] = np.uint8(0)
    for i in range(n):
        w = i >> 6
        b = U1 << np.uint64(i & 63)
        X[i, w] |= b          # destabilizer i = X_i
        Z[n + i, w] |= b      # stabilizer i = +Z_i


@njit(cache=True)
def tableau_apply_gate(X, Z, delta, site, lut):
    """Conjugate every row by a two-qubit gate on (site, site+1).

    ``lut`` is the 16-entry conjugation table of the gate: index
    ``x1<<3 | z1<<2 | x2<<1 | z2``, value
    ``x1' | z1'<<1 | x2'<<2 | z2'<<3 | (dphase)<<4``.
    """
    w1 = site >> 6
    s1 = np.uint64(site & 63)
    w2 = (site + 1) >> 6
    s2 = np.uint64((site + 1) & 63)
    nrows = X.shape[0]
    for r in range(nrows):
        a = (X[r, w1] >> s1) & U1
        b = (Z[r, w1] >> s1) & U1
        c = (X[r, w2] >> s2) & U1
        d = (Z[r, w2] >> s2) & U1
        m = (a << np.uint64(3)) | (b << np.uint64(2)) | (c << U1) | d
        if m == np.uint64(0):
            continue
        o = np.uint64(lut[m])
        X[r, w1] = (X[r, w1] & ~(U1 << s1)) | ((o & U1) << s1)
        Z[r, w1] = (Z[r, w1] & ~(U1 << s1)) | (((o >> U1) & U1) << s1)
        X[r, w2] = (X[r, w2] & ~(U1 << s2)) | (((o >> np.uint64(2)) & U1) << s2)
        Z[r, w2] = (Z[r, w2] & ~(U1 << s2)) | (((o >> np.uint64(3)) & U1) << s2)
        delta[r] = np.uint8((np.uint64(delta[r]) + (o >> np.uint64(4))) & U3)


@njit(cache=True)
def tableau_measure(X, Z, delta, n, site, coin):
    """Projective Z measurement; returns (outcome, deterministic).

    Random branch: the lowest anticommuting stabilizer row becomes the pivot,
    is multiplied into every other anticommuting row, moved to the matching
    destabilizer slot, and replaced by +-Z_site with the coin's sign.
    Deterministic branch: the outcome sign is accumulated from the stabilizer
    rows selected by anticommuting destabilizers.
    """
    W = X.shape[1]
    w = site >> 6
    s = np.uint64(site & 63)
    p = -1
    for r in range(n, 2 * n):
        if (X[r, w] >> s) & U1:
            p = r
            break
    if p >= 0:
        for r in range(2 * n):
            if r != p and ((X[r, w] >> s) & U1):
                cnt = np.uint64(0)
                for wi in range(W):
                    cnt += popcount64(Z[p, wi] & X[r, wi])
                delta[r] = np.uint8(
                    (np.uint64(delta[p]) + np.uint64(delta[r])
                     + np.uint64(2) * (cnt & U1)) & U3)
                for wi in range(W):
                    X[r, wi] ^= X[p, wi]
                    Z[r, wi] ^= Z[p, wi]
        d = p - n
        for wi in range(W):
            X[d, wi] = X[p, wi]
            Z[d, wi] = Z[p, wi]
            X[p, wi] = np.uint64(0)
            Z[p, wi] = np.uint64(0)
        delta[d] = delta[p]
        Z[p, w] = U1 << s
        outcome = coin & 1
        delta[p] = np.uint8(0) if outcome == 0 else np.uint8(2)
        return outcome, False
    # Deterministic: scratch accumulates the product of the stabilizer rows
    # indicated by destabilizers anticommuting with Z_site.
    sx = np.zeros(W, np.uint64)
    sd = np.uint64(0)
    for i in range(n):
        if (X[i, w] >> s) & U1:
            cnt = np.uint64(0)
            for wi in range(W):
                cnt += popcount64(Z[n + i, wi] & sx[wi])
            sd = (np.uint64(delta[n + i]) + sd + np.uint64(2) * (cnt & U1)) & U3
            for wi in range(W):
                sx[wi] ^= X[n + i, wi]
    outcome = 1 if sd == np.uint64(2) else 0
    return outcome, True


@njit(cache=True)
def tableau_entropy(X, Z, n, cut):
    """Entanglement entropy (bits) of qubits [0, cut): GF(2) rank - cut."""
    Wc = (cut + 63) >> 6
    M = np.zeros((n, 2 * Wc), np.uint64)
    rem = cut & 63
    mask = ~np.uint64(0) if rem == 0 else (U1 << np.uint64(rem)) - U1
    for r in range(n):
        for wi in range(Wc):
            M[r, wi] = X[n + r, wi]
            M[r, Wc + wi] = Z[n + r, wi]
        M[r, Wc - 1] &= mask
        M[r, 2 * Wc - 1] &= mask
    rank = 0
    for blk in range(2):
        for col in range(cut):
            w = blk * Wc + (col >> 6)
            bit = np.uint64(col & 63)
            piv = -1
            for r in range(rank, n):
                if (M[r, w] >> bit) & U1:
                    piv = r
                    break
            if piv < 0:
                continue
            if piv != rank:
                for wi in range(2 * Wc):
                    tmp = M[rank, wi]
                    M[rank, wi] = M[piv, wi]
                    M[piv, wi] = tmp
            for r in range(rank + 1, n):
                if (M[r, w] >> bit) & U1:
                    for wi in range(2 * Wc):
                        M[r, wi] ^= M[rank, wi]
            rank += 1
            if rank == n:
                return rank - cut
    return rank - cut


@njit(cache=True)
def run_tableau(X, Z, delta, n, depth, gate_ids, luts, meas, coins,
                record, cuts, ent_out, outcomes):
    """Full brickwall + measurement dynamics on the tableau backend.

    Layer t places gates on sites (t&1, t&1 + 2, ...); the measurement layer
    of step t follows its unitary layer.  Entropies at the requested cuts are
    written for every layer with ``record[t]`` set.
    """
    gi = 0
    rec = 0
    for t in range(depth):
        for site in range(t & 1, n - 1, 2):
            tableau_apply_gate(X, Z, delta, site, luts[gate_ids[gi]])
            gi += 1
        for q in range(n):
            if meas[t, q]:
                out, det = tableau_measure(X, Z, delta, n, q, coins[t, q])
                outcomes[t, q] = np.int8(out)
        if record[t]:
            for ci in range(cuts.shape[0]):
                ent_out[rec, ci] = tableau_entropy(X, Z, n, cuts[ci])
            rec += 1
    return gi


# ---------------------------------------------------------------------------
# Arc backend: a Gaussian stabilizer state as a perfect pairing of 2n points.


@njit(cache=True)
def arc_init_local(partner):
    for i in range(partner.shape[0] // 2):
        partner[2 * i] = 2 * i + 1
        partner[2 * i + 1] = 2 * i


@njit(cache=True)
def arc_apply_perm(partner, site, sigma):
    """Relabel the four points of the gate at (site, site+1) by sigma."""
    base = 2 * site
    newp = np.empty(4, np.int64)
    for k in range(4):
        pr = partner[base + k]
        if base <= pr < base + 4:
            newp[k] = base + sigma[pr - base]
        else:
            newp[k] = pr
    for k in range(4):
        nl = base + sigma[k]
        partner[nl] = newp[k]
        if not (base <= newp[k] < base + 4):
            partner[newp[k]] = nl


@njit(cache=True)
def arc_measure(partner, site):
    """Gluing rule: repair (2i, j), (2i+1, k) into (2i, 2i+1), (j, k)."""
    a = 2 * site
    b = a + 1
    j = partner[a]
    if j == b:
        return
    k = partner[b]
    partner[a] = b
    partner[b] = a
    partner[j] = k
    partner[k] = j


@njit(cache=True)
def arc_crossings(partner, cut):
    """Number of arcs crossing the boundary after qubit ``cut`` (1-sided count)."""
    m = 2 * cut
    c = 0
    for mu in range(m):
        if partner[mu] >= m:
            c += 1
    return c


@njit(cache=True)
def run_arc(partner, n, depth, gate_ids, arc_perm_id, perms, meas,
            record, cuts, ent_out):
    """Arc-model dynamics driven by the same gate/measurement streams.

    ``arc_perm_id[gate_ids[gi]]`` must be a valid S4 index for every applied
    gate (Gaussian circuits only); entropy = crossings / 2, asserted even.
    """
    gi = 0
    rec = 0
    for t in range(depth):
        for site in range(t & 1, n - 1, 2):
            pid = arc_perm_id[gate_ids[gi]]
            arc_apply_perm(partner, site, perms[pid])
            gi += 1
        for q in range(n):
            if meas[t, q]:
                arc_measure(partner, q)
        if record[t]:
            for ci in range(cuts.shape[0]):
                c = arc_crossings(partner, cuts[ci])
                if c & 1:
                    # odd crossing count signals a corrupted pairing
                    ent_out[rec, ci] = -1
                else:
                    ent_out[rec, ci] = c // 2
            rec += 1
    return gi


@njit(cache=True)
def rank_gf2(M, ncols):
    """GF(2) rank of a bit-packed matrix (rows x words)."""
    nrows, W = M.shape
    rank = 0
    for col in range(ncols):
        w = col >> 6
        bit = np.uint64(col & 63)
        piv = -1
        for r in range(rank, nrows):
            if (M[r, w] >> bit) & U1:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for wi in range(W):
                tmp = M[rank, wi]
                M[rank, wi] = M[piv, wi]
                M[piv, wi] = tmp
        for r in range(rank + 1, nrows):
            if (M[r, w] >> bit) & U1:
                for wi in range(W):
                    M[r, wi] ^= M[rank, wi]
        rank += 1
        if rank == nrows:
            break
    return rank
