"""Bound constants entering the generalized curvature-dimension inequality.

Six numbers control the inequality: two curvature extremes (an upper bound
M_R and a lower 2-form bound m_R for the splitting curvature), the horizontal
Ricci lower bound rho_H, a mixed Ricci bound M_HV, and two bounds on how the
vertical co-metric varies horizontally (M_nabla_v, rho_delta_v).  Each is an
exact extremum of a small symmetric eigenproblem, never a sampled value.

Tensor norms are Frobenius norms in the induced frame metric throughout; for
2-forms the norm sums over unordered index pairs.  These conventions matter:
they are pinned by the regression fixtures and by the requirement that the
pointwise inequality they feed is actually valid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .connection import ConnectionData, compute_connection
from .errors import AsymmetricRicci, NotPositiveDefinite, NotStepTwo, ZeroCurvature
from .liealg import (
    GrowthFlag,
    LieSRStructure,
    adapted_orthonormal_frame,
    growth_flag,
    rescale_vertical_metric,
)

RICCI_SYM_TOL = 1e-10
PSD_TOL = 1e-10

UNBOUNDED = math.inf          # sentinel for M_HV when no bound of the required shape exists
MINUS_INF = -math.inf         # sentinel for rho_delta_v


@dataclass(frozen=True)
class CDConstants:
    n: int
    nu: int
    M_R: float
    m_R: float
    rho_H: float
    M_HV: float               # UNBOUNDED sentinel when the mixed bound fails
    M_nabla_v: float
    rho_delta_v: float        # MINUS_INF sentinel when unbounded below
    ric_h: np.ndarray         # (d,d), vanishes on vertical rows/columns
    ric_hv: np.ndarray        # (d,d)

    @property
    def has_sentinel(self) -> bool:
        return math.isinf(self.M_HV) or math.isinf(self.rho_delta_v)


def ricci_horizontal(conn: ConnectionData) -> tuple[np.ndarray, float]:
    """Horizontal Ricci tensor and its smallest horizontal-block eigenvalue.

    ric_h[k][j] = sum_{i<n} <R(e_i, e_j) e_k, e_i>.  Symmetry and the
    vanishing of vertical rows/columns are asserted; their failure means an
    implementation bug, not bad data.
    """
    n = conn.n
    ric = np.ascontiguousarray(np.einsum('ijki->kj', conn.curv[:n, :, :, :n]))
    if np.abs(ric - ric.T).max() > RICCI_SYM_TOL:
        raise AsymmetricRicci(
            f"horizontal Ricci asymmetric by {np.abs(ric - ric.T).max():.3e}")
    if np.abs(ric[n:, :]).max(initial=0.0) > RICCI_SYM_TOL:
        raise AsymmetricRicci("horizontal Ricci has nonzero vertical rows")
    rho_h = float(np.linalg.eigvalsh(0.5 * (ric + ric.T)[:n, :n]).min())
    return ric, rho_h


def hv_bound_from_blocks(ric_hv: np.ndarray, n: int) -> float:
    """Extract M_HV from the mixed Ricci tensor.

    The bound -2 M_HV ||pr_V Z|| ||pr_H Z|| can only absorb the off-diagonal
    block; if either pure block has negative mass the bound shape fails and
    the sentinel is returned.
    """
    hh = 0.5 * (ric_hv[:n, :n] + ric_hv[:n, :n].T)
    vv = 0.5 * (ric_hv[n:, n:] + ric_hv[n:, n:].T)
    for block in (hh, vv):
        if block.size and np.linalg.eigvalsh(block).min() < -PSD_TOL:
            return UNBOUNDED
    hv = ric_hv[:n, n:]
    if min(hv.shape) == 0:
        return 0.0
    return float(np.linalg.svd(hv, compute_uv=False).max())


def ricci_hv(conn: ConnectionData) -> tuple[np.ndarray, float]:
    """Mixed Ricci tensor built from the derivative of the splitting curvature.

    ric_hv[j][k] = 1/2 sum_m ( <e_j, (nabla_m R)(e_m, e_k)>
                             + <e_k, (nabla_m R)(e_m, e_j)> ).
    The trace over the full frame equals the horizontal-only trace (the
    connection preserves the splitting and R kills vertical slots); both are
    computed and compared as a consistency assertion.
    """
    n, d = conn.n, conn.dim
    tr_full = np.einsum('mmks->ks', conn.nablaR)
    tr_h = np.einsum('mmks->ks', conn.nablaR[:n, :n])
    if np.abs(tr_full - tr_h).max(initial=0.0) > 1e-10:
        raise AsymmetricRicci("full-frame and horizontal traces of nabla R differ")
    ric = np.zeros((d, d))
    ric[n:, :] += 0.5 * tr_full.T
    ric[:, n:] += 0.5 * tr_full
    return ric, hv_bound_from_blocks(ric, n)


def curvature_constants(conn: ConnectionData) -> tuple[float, float]:
    """(M_R, m_R): extremes of the splitting curvature.

    M_R^2 is the largest eigenvalue of Q[a][b] = sum_{j,s} R_ajs R_bjs over
    horizontal a, b (the squared frame norm of R(v, .) for unit horizontal v).
    m_R^2 is the smallest eigenvalue of the Gram matrix of the 2-forms
    obtained by pairing R with unit vertical covectors, summed over unordered
    horizontal pairs.
    """
    n = conn.n
    Rh = conn.R[:n, :n]
    Q = np.einsum('ajs,bjs->ab', conn.R[:n], conn.R[:n])
    M_R = math.sqrt(max(float(np.linalg.eigvalsh(Q).max()), 0.0))
    if conn.nu == 0:
        return M_R, 0.0
    iu = np.triu_indices(n, 1)
    pairs = Rh[iu]                          # (#pairs, nu)
    G = pairs.T @ pairs
    m_R = math.sqrt(max(float(np.linalg.eigvalsh(G).min()), 0.0))
    return M_R, m_R


def nabla_v_constants(conn: ConnectionData) -> tuple[float, float]:
    """(M_nabla_v, rho_delta_v) for the vertical co-metric.

    M_nabla_v is the Frobenius norm of the full derivative 3-tensor (constant
    over the group, so the supremum is the value).  rho_delta_v is the
    infimum of the tensor-Laplacian quadratic form over covectors of unit
    vertical norm; covectors with vanishing vertical norm are null directions,
    and a negative eigenvalue among them makes the infimum -inf.
    """
    n = conn.n
    M_nv = math.sqrt(float((conn.nabla_vstar ** 2).sum()))
    Q = 0.5 * (conn.delta_vstar + conn.delta_vstar.T)
    qhh = Q[:n, :n]
    qhv = Q[:n, n:]
    qvv = Q[n:, n:]
    if qvv.size == 0:
        return M_nv, 0.0
    if qhh.size:
        w, u = np.linalg.eigh(qhh)
        if w.min() < -PSD_TOL:
            return M_nv, MINUS_INF
        w = np.maximum(w, 0.0)
        keep = w > PSD_TOL
        # coupling out of range(qhh) lets the form run to -inf along a null direction
        resid = qhv - u[:, keep] @ (u[:, keep].T @ qhv)
        if keep.size and np.abs(resid).max(initial=0.0) > PSD_TOL:
            return M_nv, MINUS_INF
        pinv = (u[:, keep] / w[keep]) @ u[:, keep].T if keep.any() else np.zeros_like(qhh)
        schur = qvv - qhv.T @ pinv @ qhv
    else:
        schur = qvv
    return M_nv, float(np.linalg.eigvalsh(schur).min())


def normalize_vertical(s: LieSRStructure, conn: ConnectionData) -> LieSRStructure:
    """Rescale the vertical metric so the curvature bound constant is one.

    Horizontal data is unaffected: the adapted connection restricted to
    horizontal arguments does not see the vertical metric.
    """
    M_R, _ = curvature_constants(conn)
    if M_R < 1e-12:
        raise ZeroCurvature("splitting curvature vanishes; nothing to normalize against")
    return rescale_vertical_metric(s, 1.0 / M_R ** 2)


def privileged_step2(s: LieSRStructure) -> tuple[float, LieSRStructure]:
    """Canonical vertical metric for step-2 structures and its constant b.

    The bracket map on wedge pairs of the orthonormal horizontal frame pushes
    the horizontal metric to the vertical space (restricted to the orthogonal
    complement of its kernel); in that metric the curvature bound constant is
    b, and the returned structure carries the metric rescaled by 1/b^2 so the
    bound becomes one.  The returned Gram is expressed over the vertical basis
    of the input structure.
    """
    flag = growth_flag(s)
    if flag.step != 2:
        raise NotStepTwo(f"privileged construction implemented for step 2 only, got {flag.step}")
    son = adapted_orthonormal_frame(s)
    n, nu = s.n, s.nu
    iu = np.triu_indices(n, 1)
    m2 = son.c[:n, :n, n:][iu].T              # (nu, #pairs), wedge-basis components
    gram_on = m2 @ m2.T
    if np.linalg.eigvalsh(gram_on).min() < 1e-12:
        raise NotStepTwo("bracket map does not reach the whole vertical space")
    gram_priv_on = np.linalg.inv(gram_on)
    # convert from the orthonormalized vertical basis back to the input basis
    p_v = son.basis_change[n:, n:] if son.basis_change is not None else np.eye(nu)
    p_inv = np.linalg.inv(p_v)
    gram_priv = p_inv.T @ gram_priv_on @ p_inv
    candidate = LieSRStructure(name=s.name, n=s.n, nu=s.nu, c=s.c,
                               gram_h=s.gram_h, gram_v=gram_priv,
                               realization=s.realization, su2=s.su2)
    conn = compute_connection(adapted_orthonormal_frame(candidate))
    b, _ = curvature_constants(conn)
    lo, hi = 2.0 * nu / n, 2.0 * nu
    if not (lo - 1e-9 <= b * b <= hi + 1e-9):
        raise NotPositiveDefinite(
            f"privileged-metric constant out of range: b^2 = {b*b:.6f} not in [{lo}, {hi}]")
    return b, rescale_vertical_metric(candidate, 1.0 / b ** 2)


def compute_constants(s: LieSRStructure, conn: ConnectionData | None = None) -> CDConstants:
    """All bound constants of an orthonormal-frame structure."""
    if conn is None:
        conn = compute_connection(s)
    ric_h, rho_h = ricci_horizontal(conn)
    ric_hv, M_HV = ricci_hv(conn)
    M_R, m_R = curvature_constants(conn)
    M_nv, rho_dv = nabla_v_constants(conn)
    return CDConstants(n=conn.n, nu=conn.nu, M_R=M_R, m_R=m_R, rho_H=rho_h,
                       M_HV=M_HV, M_nabla_v=M_nv, rho_delta_v=rho_dv,
                       ric_h=ric_h, ric_hv=ric_hv)


def analyze_structure(s: LieSRStructure) -> tuple[LieSRStructure, ConnectionData, CDConstants, GrowthFlag]:
    """Convenience pipeline: orthonormalize, connect, extract constants."""
    son = adapted_orthonormal_frame(s)
    conn = compute_connection(son)
    return son, conn, compute_constants(son, conn), growth_flag(s)
