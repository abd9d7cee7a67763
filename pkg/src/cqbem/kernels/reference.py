"""Pure-numpy reduction sweeps over precomputed pair geometry.

The geometry cache stores, per quadrature point pair, the distance r and
three frequency-independent amplitudes (weight / 4 pi r for the single
layer, weighted normal projections for the double layer in both scatter
directions). A sweep at complex frequency s turns those into operator
entries:

    single layer   sum  aV  * exp(-s r)
    double layer   sum  aK  * (1 + s r) exp(-s r) * hat(local vertex)

Everything is flat float64; pairs are blocks of nnz consecutive points.
Work proceeds in bounded chunks so temporaries stay small no matter how
large the cache is.
"""

from __future__ import annotations

import numpy as np

# Chunk size in quadrature points, keeps complex temporaries around ~100 MB.
_POINT_BUDGET = 2_000_000


def reduce_pairs(r, a_v, a_ky, a_kx, hat_x, hat_y, s, n_pairs, with_k):
    """Reduce per-point amplitudes to per-pair operator values.

    Arrays r, a_v, a_ky, a_kx are flat (n_pairs * nnz,). hat_x and hat_y
    are rule-level tables (nnz, 3). Returns (v, ky, kx):

      v  (n_pairs,)   single-layer values
      ky (n_pairs, 3) double-layer values scattering to the y-panel vertices
      kx (n_pairs, 3) same with roles swapped (x-panel vertices)

    When with_k is false, a_ky / a_kx are ignored and ky / kx are zeros.
    """
    nnz = r.shape[0] // n_pairs if n_pairs else 0
    v = np.zeros(n_pairs, dtype=np.complex128)
    ky = np.zeros((n_pairs, 3), dtype=np.complex128)
    kx = np.zeros((n_pairs, 3), dtype=np.complex128)
    if n_pairs == 0 or nnz == 0:
        return v, ky, kx

    block = max(1, _POINT_BUDGET // nnz)
    for start in range(0, n_pairs, block):
        stop = min(start + block, n_pairs)
        sl = slice(start * nnz, stop * nnz)
        shape = (stop - start, nnz)
        rr = r[sl].reshape(shape)
        decay = np.exp(-s * rr)
        v[start:stop] = np.einsum("pz,pz->p", a_v[sl].reshape(shape), decay)
        if with_k:
            decay *= 1.0 + s * rr
            ky[start:stop] = (a_ky[sl].reshape(shape) * decay) @ hat_y
            kx[start:stop] = (a_kx[sl].reshape(shape) * decay) @ hat_x
    return v, ky, kx
