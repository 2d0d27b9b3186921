"""Hot loops over the full configuration space.

Every kernel has a numba version and a vectorised numpy version with the
same signature. The public names dispatch on ``_accel.USE_NUMBA`` at call
time, so tests and benchmarks can flip the flag without reloading.

Configuration index convention: bit ``k`` of the index is the spin of the
``k``-th site, bit set <-> spin +1.
"""
import numpy as np

from . import _accel


def _csr(n, ei, ej, jv):
    deg = np.zeros(n + 1, dtype=np.int64)
    np.add.at(deg, ei + 1, 1)
    np.add.at(deg, ej + 1, 1)
    indptr = np.cumsum(deg)
    nbr = np.empty(indptr[-1], dtype=np.int64)
    w = np.empty(indptr[-1], dtype=jv.dtype)
    fill = indptr[:-1].copy()
    for a, b, v in zip(ei, ej, jv):
        nbr[fill[a]], w[fill[a]] = b, v
        fill[a] += 1
        nbr[fill[b]], w[fill[b]] = a, v
        fill[b] += 1
    return indptr, nbr, w


def _energies_gray(n, indptr, nbr, w, h, out):
    # Walk configurations in Gray-code order; each step flips one spin.
    spins = -np.ones(n, dtype=np.int64)
    out[0] = 0
    e = out[0]
    for a in range(n):
        e += h[a]
        for p in range(indptr[a], indptr[a + 1]):
            if nbr[p] > a:
                e -= w[p]
    out[0] = e
    g = 0
    for k in range(1, out.shape[0]):
        b = 0
        kk = k
        while (kk & 1) == 0:
            kk >>= 1
            b += 1
        local = h[b]
        for p in range(indptr[b], indptr[b + 1]):
            local += w[p] * spins[nbr[p]]
        e += 2 * spins[b] * local
        spins[b] = -spins[b]
        g ^= 1 << b
        out[g] = e
    return out


_energies_gray_nb = _accel.njit(_energies_gray)


def energies_numpy(n, ei, ej, jv, h):
    """Energy ``-sum J s_i s_j - sum h s_i`` of every configuration (numpy path)."""
    dtype = np.result_type(jv, h)
    idx = np.arange(1 << n, dtype=np.int64)
    out = np.zeros(1 << n, dtype=dtype)
    for a, b, v in zip(ei, ej, jv):
        out -= v * (1 - 2 * (((idx >> a) ^ (idx >> b)) & 1))
    for a in range(n):
        if h[a] != 0:
            out -= h[a] * (2 * ((idx >> a) & 1) - 1)
    return out


def energies_numba(n, ei, ej, jv, h):
    """Same contract as :func:`energies_numpy`, Gray-code walk under numba."""
    dtype = np.result_type(jv, h)
    jv = np.asarray(jv, dtype=dtype)
    h = np.asarray(h, dtype=dtype)
    indptr, nbr, w = _csr(n, np.asarray(ei, dtype=np.int64), np.asarray(ej, dtype=np.int64), jv)
    out = np.empty(1 << n, dtype=dtype)
    return _energies_gray_nb(n, indptr, nbr, w, h, out)


def all_energies(n, ei, ej, jv, h):
    if _accel.USE_NUMBA:
        return energies_numba(n, ei, ej, jv, h)
    return energies_numpy(n, ei, ej, jv, h)


def _tv_counts(counts, probs, m):
    acc = 0.0
    inv = 1.0 / m
    for k in range(probs.shape[0]):
        acc += abs(counts[k] * inv - probs[k])
    return 0.5 * acc


_tv_counts_nb = _accel.njit(_tv_counts)


def tv_counts_numpy(counts, probs, m):
    """TV between the empirical law ``counts / m`` and ``probs``."""
    return 0.5 * float(np.abs(counts / m - probs).sum())


def tv_counts_numba(counts, probs, m):
    return float(_tv_counts_nb(np.asarray(counts, dtype=np.int64), np.asarray(probs, dtype=np.float64), float(m)))


def tv_counts(counts, probs, m):
    if _accel.USE_NUMBA:
        return tv_counts_numba(counts, probs, m)
    return tv_counts_numpy(counts, probs, m)


def unpack_spins(indices, n):
    """Rows of +-1 spins (int8, site order) for an array of configuration indices."""
    indices = np.asarray(indices, dtype=np.int64)
    bits = (indices[..., None] >> np.arange(n, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(np.int8)


def pack_spins(spins):
    """Inverse of :func:`unpack_spins`."""
    spins = np.asarray(spins)
    n = spins.shape[-1]
    bits = (spins > 0).astype(np.int64)
    return (bits << np.arange(n, dtype=np.int64)).sum(axis=-1)
