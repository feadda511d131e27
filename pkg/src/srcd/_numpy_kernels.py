"""Pure-numpy implementations of the hot kernels.

Used when the compiled extension is unavailable (or forced via SRCD_KERNEL).
Function signatures and semantics match srcd._kernels exactly; the compiled
module is the fast path, this one the portable path.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

# scaling-and-squaring matrix exponential, Pade order 13
_PADE13 = (64764752532480000., 32382376266240000., 7771770303897600.,
           1187353796428800., 129060195264000., 10559470521600.,
           670442572800., 33522128640., 1323241920., 40840800.,
           960960., 16380., 182., 1.)
_THETA13 = 5.371920351148152


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential of a stack (..., d, d), Pade order 13 with scaling."""
    a = np.asarray(a)
    d = a.shape[-1]
    norm1 = np.abs(a).sum(axis=-2).max(axis=-1)
    with np.errstate(divide="ignore"):
        s = np.ceil(np.log2(np.maximum(norm1, 1e-300) / _THETA13))
    s = np.where(norm1 <= _THETA13, 0, np.maximum(s, 0)).astype(int)
    a = a / (2.0 ** s)[..., None, None]
    eye = np.broadcast_to(np.eye(d, dtype=a.dtype), a.shape)
    b = _PADE13
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye)
    f = np.linalg.solve(v - u, v + u)
    smax = int(s.max()) if s.size else 0
    for k in range(smax):
        f = np.where((s > k)[..., None, None], f @ f, f)
    return f


def step_expmul(g: np.ndarray, m: np.ndarray) -> np.ndarray:
    """g <- g @ expm(m), stacked; returns the updated array."""
    out = g @ expm(m)
    g[...] = out
    return g


def assemble_hessians(p: np.ndarray, tri: np.ndarray, hv: np.ndarray,
                      R: np.ndarray, n: int) -> np.ndarray:
    """Build constrained Hessian rows from free entries.

    The symmetric horizontal part comes from `tri` (upper-triangle packing),
    vertical columns from `hv`, and the antisymmetric horizontal part is
    forced by the commutation constraint
    H[i][j] - H[j][i] = sum_s p[n+s] R[i][j][s].
    """
    N = p.shape[0]
    d = p.shape[1]
    sym = np.zeros((N, n, n))
    iu = np.triu_indices(n)
    sym[:, iu[0], iu[1]] = tri
    sym[:, iu[1], iu[0]] = tri
    anti = 0.5 * np.einsum('Ns,ijs->Nij', p[:, n:], R)
    H = np.empty((N, n, d))
    H[:, :, :n] = sym + anti
    H[:, :, n:] = hv
    return H


def jet_terms(p: np.ndarray, H: np.ndarray, ric_h: np.ndarray, ric_hv: np.ndarray,
              R: np.ndarray, nv: np.ndarray, dv: np.ndarray, n: int) -> np.ndarray:
    """Per-jet building blocks of the iterated forms, one row per jet.

    Columns: gh, gv, lf, hess_h, ric_h-term, ric_hv-term, cross, hess_v,
    nabla_v-term, delta_v-term, q_h, q_v, cb (see cdcore for their roles).
    The ell-dependence is applied downstream, so one pass serves every ell.
    """
    ph = p[:, :n]
    pv = p[:, n:]
    Hh = H[:, :, :n]
    Hv = H[:, :, n:]
    out = np.empty((p.shape[0], 13))
    out[:, 0] = (ph ** 2).sum(1)                                     # gh
    out[:, 1] = (pv ** 2).sum(1)                                     # gv
    out[:, 2] = np.einsum('Nii->N', Hh)                              # lf
    out[:, 3] = (Hh ** 2).sum((1, 2))                                # hess_h
    out[:, 4] = np.einsum('Nj,jk,Nk->N', ph, ric_h[:n, :n], ph)      # ric_h
    out[:, 5] = np.einsum('Na,ab,Nb->N', p, ric_hv, p)               # ric_hv
    rp = np.einsum('ijs,Nj->Nis', R, ph)
    out[:, 6] = 2.0 * np.einsum('Nis,Nis->N', Hv, rp)                # cross
    out[:, 7] = (Hv ** 2).sum((1, 2))                                # hess_v
    out[:, 8] = 2.0 * np.einsum('iab,Na,Nib->N', nv, p, H)           # nabla_v
    out[:, 9] = 0.5 * np.einsum('ab,Na,Nb->N', dv, p, p)             # delta_v
    out[:, 10] = 4.0 * (np.einsum('Nij,Nj->Ni', Hh, ph) ** 2).sum(1)  # q_h
    out[:, 11] = 4.0 * (np.einsum('Nis,Ns->Ni', Hv, pv) ** 2).sum(1)  # q_v
    inner1 = np.einsum('Nis,Ns->Ni', Hv, pv)
    inner2 = np.einsum('Njs,Nj->Ns', Hv, ph)
    out[:, 12] = 2.0 * np.einsum('Ni,Ni->N', ph, inner1) \
        - 2.0 * np.einsum('Ns,Ns->N', pv, inner2)                    # cb residual
    return out
