"""Connections, curvatures and derived tensors of an adapted splitting.

All operations require the adapted orthonormal frame and exploit that every
tensor of a left-invariant structure has constant frame components: covariant
derivatives act through connection coefficients only.  This shortcut is the
backbone of the whole package and is only valid on that class.

Conventions.  ``lc[i][j][k] = <nabla_{e_i} e_j, e_k>`` for the Levi-Civita
connection; same layout for the splitting-adapted connection ``bott``.  The
adapted connection is assembled from four projected pieces,

    pr_H nabla_{pr_H X} pr_H Y  +  pr_V nabla_{pr_V X} pr_V Y
      +  pr_H [pr_V X, pr_H Y]  +  pr_V [pr_H X, pr_V Y],

so it preserves the splitting by construction; mixed-block coefficients are
exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotOrthonormalFrame, TorsionMismatch
from .liealg import LieSRStructure

TORSION_TOL = 1e-10


@dataclass(frozen=True)
class ConnectionData:
    n: int
    nu: int
    lc: np.ndarray            # (d,d,d) Levi-Civita coefficients
    bott: np.ndarray          # (d,d,d) adapted-connection coefficients
    torsion: np.ndarray       # (d,d,d)
    curv: np.ndarray          # (d,d,d,d) <R(e_i,e_j)e_k, e_l>
    R: np.ndarray             # (d,d,nu) vertical parts of horizontal brackets
    Rbar: np.ndarray          # (d,d,n) horizontal parts of vertical brackets
    nablaR: np.ndarray        # (d,d,d,nu) components of (nabla_m R)(e_i,e_j)
    nabla_vstar: np.ndarray   # (d,d,d) derivative of the vertical co-metric
    nabla_hstar: np.ndarray   # (d,d,d) derivative of the horizontal co-metric
    delta_vstar: np.ndarray   # (d,d) horizontal tensor Laplacian of the vertical co-metric
    drift: np.ndarray         # (n,) first-order coefficients of the sub-Laplacian
    N: np.ndarray             # (n,) mean-curvature defect components

    @property
    def dim(self) -> int:
        return self.n + self.nu

    @property
    def metric_preserving(self) -> bool:
        return bool(np.abs(self.nabla_hstar).max() < 1e-10)

    @property
    def vertical_metric_parallel(self) -> bool:
        return bool(np.abs(self.nabla_vstar).max() < 1e-12)


def _require_orthonormal(s: LieSRStructure):
    if not s.is_orthonormal():
        raise NotOrthonormalFrame(
            "operation requires the adapted orthonormal frame; "
            "apply adapted_orthonormal_frame first")


def levi_civita(s: LieSRStructure) -> np.ndarray:
    """Koszul formula for left-invariant fields in an orthonormal frame:
    2 <nabla_i e_j, e_k> = c_ijk - c_jki + c_kij.
    """
    _require_orthonormal(s)
    c = s.c
    return 0.5 * (c - np.transpose(c, (2, 0, 1)) + np.transpose(c, (1, 2, 0)))


def bott_connection(s: LieSRStructure, lc: np.ndarray) -> np.ndarray:
    n, d = s.n, s.dim
    b = np.zeros((d, d, d))
    b[:n, :n, :n] = lc[:n, :n, :n]
    b[n:, n:, n:] = lc[n:, n:, n:]
    b[n:, :n, :n] = s.c[n:, :n, :n]
    b[:n, n:, n:] = s.c[:n, n:, n:]
    return b


def ehresmann_curvature(s: LieSRStructure) -> tuple[np.ndarray, np.ndarray]:
    """Curvature R (vertical parts of horizontal brackets) and co-curvature
    Rbar (horizontal parts of vertical brackets); both vanish on mixed pairs.
    """
    n, d = s.n, s.dim
    R = np.zeros((d, d, s.nu))
    R[:n, :n, :] = s.c[:n, :n, n:]
    Rbar = np.zeros((d, d, n))
    Rbar[n:, n:, :] = s.c[n:, n:, :n]
    return R, Rbar


def bott_curvature(s: LieSRStructure, bott: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Torsion and curvature of the adapted connection.

    Raises TorsionMismatch if torsion != -(R + Rbar); that identity is the
    strongest internal cross-check available, so a violation is a hard error.
    """
    c = s.c
    n = s.n
    torsion = bott - np.transpose(bott, (1, 0, 2)) - c
    R, Rbar = ehresmann_curvature(s)
    expected = np.zeros_like(torsion)
    expected[:, :, n:] -= R
    expected[:, :, :n] -= Rbar
    err = np.abs(torsion - expected).max()
    if err > TORSION_TOL:
        raise TorsionMismatch(
            f"torsion deviates from -(curvature + co-curvature) by {err:.3e}")
    curv = (np.einsum('jkm,iml->ijkl', bott, bott)
            - np.einsum('ikm,jml->ijkl', bott, bott)
            - np.einsum('ijm,mkl->ijkl', c, bott))
    return torsion, curv


def _nabla_sym2(bott: np.ndarray, tensor: np.ndarray) -> np.ndarray:
    # (nabla_m S)^{ab} for a constant-component section S of Sym^2 TM
    t = np.einsum('mla,lb->mab', bott, tensor)
    return t + np.transpose(t, (0, 2, 1))


def covariant_derivatives(s: LieSRStructure, bott: np.ndarray, R: np.ndarray):
    """(nabla R, nabla v*, Delta' v*) plus nabla h* for the splitting.

    Components are constant, so each derivative is pure coefficient action:
    (nabla_m R)(e_i, e_j) = nabla_m(R(e_i,e_j)) - R(nabla_m e_i, e_j)
    - R(e_i, nabla_m e_j), and similarly on the co-metrics.
    """
    n, d = s.n, s.dim
    vstar = np.zeros((d, d))
    vstar[n:, n:] = np.eye(s.nu)
    hstar = np.zeros((d, d))
    hstar[:n, :n] = np.eye(n)

    nablaR = (np.einsum('ijt,mts->mijs', R, bott[:, n:, n:])
              - np.einsum('mil,ljs->mijs', bott, R)
              - np.einsum('mjl,ils->mijs', bott, R))
    nabla_vstar = _nabla_sym2(bott, vstar)
    nabla_hstar = _nabla_sym2(bott, hstar)

    # second derivative, traced over the horizontal frame
    second = (-np.einsum('iml,lab->imab', bott, nabla_vstar)
              + np.einsum('ila,mlb->imab', bott, nabla_vstar)
              + np.einsum('ilb,mal->imab', bott, nabla_vstar))
    delta_vstar = np.einsum('iiab->ab', second[:n, :n])
    return nablaR, nabla_vstar, nabla_hstar, delta_vstar


def sublaplacian_data(s: LieSRStructure, lc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First-order coefficients of the sub-Laplacian and the mean-curvature
    defect N (the gap to the metric-volume sub-Laplacian).

    drift[j] = sum_i <pr_H nabla_{e_i} e_j, e_i> over the horizontal frame;
    N is characterized by <A, N> = -1/2 tr_V (Lie_{pr_H A} g).
    """
    n = s.n
    drift = np.einsum('iji->j', lc[:n, :n, :n])
    # (Lie_{e_a} g)(f_s, f_s) = -2 c[a][n+s][n+s] for constant metrics
    N = np.einsum('ass->a', s.c[:n, n:, n:])
    return drift, N


def compute_connection(s: LieSRStructure) -> ConnectionData:
    """Full connection/curvature pipeline for an orthonormal-frame structure."""
    _require_orthonormal(s)
    lc = levi_civita(s)
    bott = bott_connection(s, lc)
    R, Rbar = ehresmann_curvature(s)
    torsion, curv = bott_curvature(s, bott)
    nablaR, nabla_vstar, nabla_hstar, delta_vstar = covariant_derivatives(s, bott, R)
    drift, N = sublaplacian_data(s, lc)
    return ConnectionData(n=s.n, nu=s.nu, lc=lc, bott=bott, torsion=torsion,
                          curv=curv, R=R, Rbar=Rbar, nablaR=nablaR,
                          nabla_vstar=nabla_vstar, nabla_hstar=nabla_hstar,
                          delta_vstar=delta_vstar, drift=drift, N=N)


def cocurvature_trace_residual(conn: ConnectionData, v: np.ndarray) -> float:
    """tr Rbar(v, R(v, .)) — must vanish for non-integrable complements to be
    admissible for the curvature-dimension machinery."""
    d = conn.dim
    n = conn.n
    Rv = np.einsum('i,ijs->js', v, conn.R)        # vertical comps of R(v, e_j)
    total = 0.0
    for l in range(d):
        w = np.zeros(d)
        w[n:] = Rv[l]
        out = np.einsum('i,j,ija->a', v, w, conn.Rbar)
        if l < n:
            total += out[l]
    return float(total)
