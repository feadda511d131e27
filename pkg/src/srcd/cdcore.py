"""Curvature-dimension parameters and pointwise verification on 2-jets.

The inequality under test, for a function f and every ell > 0, reads

    G2(f; ell) >= (1/n) (Lf)^2 + (rho1 - 1/ell) G_h(f)
                  + (rho20 + rho21 ell) G_v(f),

where G_h, G_v are the horizontal/vertical squared gradient forms and
G2(f; ell) is the iterated form of the combined co-metric.  For
left-invariant structures the proof reduces this to an algebraic statement
about the pair (df, horizontal Hessian rows) subject to one commutation
constraint.  Verification therefore samples constrained 2-jets directly:
no functions on the group are ever constructed, and the sampled set tests
exactly what the inequality asserts.

G2 is assembled from seven tensor terms (Hessian norms, the two Ricci
forms, a curvature cross term, and three vertical-metric derivative terms);
margins are reported relative to scale = 1 + |lhs| + |rhs| to absorb
cancellation in large random jets.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .connection import ConnectionData
from .errors import (
    BadDimension,
    ConstraintViolated,
    NotNormalized,
    NotVertical,
    RequiresParallelVerticalMetric,
    UnboundedConstant,
)
from .invariants import CDConstants, hv_bound_from_blocks

CONSTRAINT_TOL = 1e-12
MARGIN_TOL = 1e-9
CHUNK = 16384            # fixed chunk size keeps results independent of thread count


@dataclass(frozen=True)
class CDParams:
    n_dim: float             # effective dimension (rank of H by default, may be inf)
    rho1: float
    rho20: float
    rho21: float
    c: float                 # the Young-splitting parameter used, possibly inf
    ell: float | None = None  # recorded per evaluation


@dataclass(frozen=True)
class Jet2:
    """One point's worth of (df, horizontal Hessian rows)."""

    n: int
    nu: int
    p: np.ndarray            # (n+nu,) covector components
    H: np.ndarray            # (n, n+nu) rows (nabla_{A_i} df)(e_j)

    def scaled(self, lam: float) -> "Jet2":
        return Jet2(self.n, self.nu, lam * self.p, lam * self.H)


@dataclass(frozen=True)
class JetBatch:
    n: int
    nu: int
    p: np.ndarray            # (N, n+nu)
    H: np.ndarray            # (N, n, n+nu)

    def __len__(self) -> int:
        return self.p.shape[0]

    def jet(self, k: int) -> Jet2:
        return Jet2(self.n, self.nu, self.p[k], self.H[k])


def _check_normalized(k: CDConstants):
    if abs(k.M_R - 1.0) > 1e-9:
        raise NotNormalized(
            f"vertical metric not normalized (curvature bound {k.M_R:.12g}); "
            "apply normalize_vertical first")


def _check_no_sentinel(k: CDConstants):
    if math.isinf(k.M_HV):
        raise UnboundedConstant("mixed Ricci bound is unbounded; inequality assembly refused")
    if math.isinf(k.rho_delta_v):
        raise UnboundedConstant("vertical-Laplacian lower bound is -inf; assembly refused")


def cd_parameters(k: CDConstants, c: float, n_dim: float | None = None) -> CDParams:
    """Parameters (n, rho1, rho20, rho21) for a given splitting parameter c.

    c = inf is admitted exactly when both M_HV and M_nabla_v vanish; then
    rho1 = rho_H and the curvature term keeps its full weight.
    """
    _check_normalized(k)
    _check_no_sentinel(k)
    if not c > 0:
        raise UnboundedConstant("c must be positive (or inf)")
    msum = k.M_HV + k.M_nabla_v
    if math.isinf(c) and msum > 1e-14:
        raise UnboundedConstant("c = inf requires M_HV = M_nabla_v = 0")
    inv_c = 0.0 if math.isinf(c) else 1.0 / c
    rho20 = 0.5 * k.m_R ** 2 - (0.0 if math.isinf(c) else c * msum ** 2)
    return CDParams(
        n_dim=float(k.n) if n_dim is None else float(n_dim),
        rho1=k.rho_H - inv_c,
        rho20=rho20,
        rho21=0.5 * k.rho_delta_v - k.M_nabla_v ** 2,
        c=c,
    )


def drifted_cd_parameters(k: CDConstants, conn: ConnectionData, Z: np.ndarray,
                          c: float, n_dim: float) -> CDParams:
    """Parameters for the operator with an added vertical drift field Z.

    The mixed Ricci bound is corrected by the covariant derivative of Z
    paired against vertical directions (and a curvature pairing that
    vanishes identically for vertical Z, kept for fidelity); rho20 pays a
    ||Z||^2/(n_dim - n) penalty and rho21 the squared most-negative
    eigenvalue of the symmetrized vertical derivative block.
    """
    _check_normalized(k)
    _check_no_sentinel(k)
    n, nu, d = conn.n, conn.nu, conn.dim
    Z = np.asarray(Z, dtype=float)
    if Z.shape == (nu,):
        zfull = np.concatenate([np.zeros(n), Z])
    elif Z.shape == (d,):
        if np.abs(Z[:n]).max(initial=0.0) > 1e-12:
            raise NotVertical("drift field must be vertical")
        zfull = Z
    else:
        raise NotVertical(f"drift field has shape {Z.shape}, expected ({nu},) or ({d},)")
    if np.linalg.norm(zfull) < 1e-15:
        raise NotVertical("drift field must be nonzero")
    if not n_dim > n:
        raise BadDimension(f"effective dimension must exceed rank H = {n}")

    ndz = np.einsum('u,mua->ma', zfull[n:], conn.bott[:, n:, :])   # (d, d): nabla_m Z
    corr = np.zeros((d, d))
    corr[:, :n] += 0.5 * ndz[:n].T          # <e_a, nabla_{e_b} Z> for horizontal b
    corr[:n, :] += 0.5 * ndz[:n]
    # curvature pairing v(pr_V ., R(Z, .)) vanishes for vertical Z; assembled anyway
    rzv = np.einsum('u,ubs->bs', zfull[n:], conn.R[n:, :, :])      # (d, nu)
    corr[n:, :] += 0.5 * rzv.T
    corr[:, n:] += 0.5 * rzv
    ric_hv_z = k.ric_hv + corr
    m_hv_z = hv_bound_from_blocks(ric_hv_z, n)
    if math.isinf(m_hv_z):
        raise UnboundedConstant("drift-corrected mixed Ricci bound is unbounded")

    nf = 0.5 * (ndz[n:, n:] + ndz[n:, n:].T)
    n_const = max(0.0, -float(np.linalg.eigvalsh(nf).min())) if nu else 0.0

    msum = m_hv_z + k.M_nabla_v
    if math.isinf(c) and msum > 1e-14:
        raise UnboundedConstant("c = inf requires a vanishing mixed bound")
    inv_c = 0.0 if math.isinf(c) else 1.0 / c
    z_norm2 = float(zfull[n:] @ zfull[n:])
    return CDParams(
        n_dim=float(n_dim),
        rho1=k.rho_H - inv_c,
        rho20=0.5 * k.m_R ** 2 - (0.0 if math.isinf(c) else c * msum ** 2)
        - z_norm2 / (n_dim - n),
        rho21=0.5 * k.rho_delta_v - k.M_nabla_v ** 2 - n_const ** 2,
        c=c,
    )


# ---------------------------------------------------------------------------
# jets
# ---------------------------------------------------------------------------

def sample_jet_batch(conn: ConnectionData, count: int, seed: int) -> JetBatch:
    """Draw constrained 2-jets.

    Covector components, vertical Hessian columns and the symmetric part of
    the horizontal Hessian block are independent standard normals; the
    antisymmetric part is set from the commutation constraint, which
    therefore holds exactly by construction.  Randomness comes from a
    counter-based generator keyed by the seed, so a given (seed, index) pair
    always yields the same jet no matter how evaluation is scheduled.
    """
    n, nu, d = conn.n, conn.nu, conn.dim
    rng = np.random.Generator(np.random.Philox(key=seed))
    p = rng.standard_normal((count, d))
    tri = rng.standard_normal((count, n * (n + 1) // 2))
    hv = rng.standard_normal((count, n, nu))
    Rh = np.ascontiguousarray(conn.R[:n, :n])
    H = kernels.assemble_hessians(p, tri, hv, Rh, n)
    return JetBatch(n=n, nu=nu, p=p, H=H)


def sample_jet(conn: ConnectionData, seed: int) -> Jet2:
    return sample_jet_batch(conn, 1, seed).jet(0)


def constraint_residual(jet: Jet2, conn: ConnectionData) -> float:
    n = jet.n
    hh = jet.H[:, :n]
    target = np.einsum('s,ijs->ij', jet.p[n:], conn.R[:n, :n])
    return float(np.abs(hh - hh.T - target).max(initial=0.0))


def _require_constraint(jet: Jet2, conn: ConnectionData):
    scale = 1.0 + float(np.abs(jet.p).max(initial=0.0)) + float(np.abs(jet.H).max(initial=0.0))
    if constraint_residual(jet, conn) > CONSTRAINT_TOL * scale:
        raise ConstraintViolated("jet violates the Hessian commutation constraint")


def _terms(batch: JetBatch, conn: ConnectionData, k: CDConstants) -> np.ndarray:
    n = batch.n
    Rh = np.ascontiguousarray(conn.R[:n, :n])
    nv = np.ascontiguousarray(conn.nabla_vstar[:n])
    dv = np.ascontiguousarray(conn.delta_vstar)
    ric_h = np.ascontiguousarray(k.ric_h)
    ric_hv = np.ascontiguousarray(k.ric_hv)

    workers = _thread_cap()
    if len(batch) <= CHUNK or workers <= 1:
        return kernels.jet_terms(batch.p, batch.H, ric_h, ric_hv, Rh, nv, dv, n)
    edges = list(range(0, len(batch), CHUNK)) + [len(batch)]
    spans = list(zip(edges[:-1], edges[1:]))

    def run(span):
        a, b = span
        return kernels.jet_terms(np.ascontiguousarray(batch.p[a:b]),
                                 np.ascontiguousarray(batch.H[a:b]),
                                 ric_h, ric_hv, Rh, nv, dv, n)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(run, spans))
    return np.concatenate(parts, axis=0)


def _thread_cap() -> int:
    raw = os.environ.get("SRCD_THREADS", "1").strip()
    try:
        cap = int(raw)
    except ValueError:
        return 1
    if cap == 0:
        return min(os.cpu_count() or 1, 8)
    return max(1, cap)


class Gamma2Terms:
    """Columnar view of per-jet term arrays (one kernel pass serves all ell)."""

    __slots__ = ("gh", "gv", "lf", "hess_h", "ric_h", "ric_hv", "cross",
                 "hess_v", "nv", "dv", "q_h", "q_v", "cb", "vertical_parallel")

    def __init__(self, arr: np.ndarray, vertical_parallel: bool):
        (self.gh, self.gv, self.lf, self.hess_h, self.ric_h, self.ric_hv,
         self.cross, self.hess_v, self.nv, self.dv, self.q_h, self.q_v,
         self.cb) = (arr[:, i] for i in range(13))
        self.vertical_parallel = vertical_parallel

    def gamma2(self, ell: float) -> np.ndarray:
        return (self.hess_h + self.ric_h + self.ric_hv + self.cross
                + ell * (self.hess_v + self.nv + self.dv))

    def gamma2_vertical(self) -> np.ndarray:
        if not self.vertical_parallel:
            raise RequiresParallelVerticalMetric(
                "the vertical iterated form is only available when the vertical "
                "co-metric is parallel")
        return self.hess_v


def gamma2_terms(batch: JetBatch, conn: ConnectionData, k: CDConstants) -> Gamma2Terms:
    return Gamma2Terms(_terms(batch, conn, k), conn.vertical_metric_parallel)


def gamma2_forms(jet: Jet2, conn: ConnectionData, k: CDConstants, ell: float):
    """(G_h, G_v, Lf, G2(ell), G2_vertical) for a single jet.

    G2_vertical is None when the vertical co-metric is not parallel (it has
    no closed form at jet level in that case).
    """
    _require_constraint(jet, conn)
    batch = JetBatch(jet.n, jet.nu, jet.p[None, :], jet.H[None, :, :])
    t = gamma2_terms(batch, conn, k)
    g2v = float(t.hess_v[0]) if conn.vertical_metric_parallel else None
    return (float(t.gh[0]), float(t.gv[0]), float(t.lf[0]),
            float(t.gamma2(ell)[0]), g2v)


def margins(terms: Gamma2Terms, params: CDParams, ell: float) -> np.ndarray:
    """Relative slack of the inequality at one ell: >= -tol means it holds."""
    lhs = terms.gamma2(ell)
    rhs = ((1.0 / params.n_dim) * terms.lf ** 2
           + (params.rho1 - 1.0 / ell) * terms.gh
           + (params.rho20 + params.rho21 * ell) * terms.gv)
    return (lhs - rhs) / (1.0 + np.abs(lhs) + np.abs(rhs))


def verify_cd(jet: Jet2, params: CDParams, conn: ConnectionData, k: CDConstants,
              ell: float) -> float:
    """Relative margin of the inequality for one constrained jet."""
    _require_constraint(jet, conn)
    batch = JetBatch(jet.n, jet.nu, jet.p[None, :], jet.H[None, :, :])
    return float(margins(gamma2_terms(batch, conn, k), params, ell)[0])


@dataclass(frozen=True)
class VerificationSummary:
    samples: int
    ells: tuple[float, ...]
    cs: tuple[float, ...]
    min_margin: float
    argmin: tuple[float, float, int]     # (ell, c, jet index)
    tolerance: float
    passed: bool
    condition_b_max: float | None        # None when not applicable


def verify_cd_batch(conn: ConnectionData, k: CDConstants, samples: int, seed: int,
                    ells: tuple[float, ...] = (0.1, 1.0, 10.0),
                    cs: tuple[float, ...] | None = None,
                    n_dim: float | None = None,
                    tol: float = MARGIN_TOL) -> VerificationSummary:
    """Sample constrained jets and check the inequality across an (ell, c) grid."""
    if cs is None:
        c_opt, _ = optimize_c(k, float(n_dim or k.n))
        cs = (c_opt, 1.0)
    batch = sample_jet_batch(conn, samples, seed)
    terms = gamma2_terms(batch, conn, k)
    worst = math.inf
    arg = (math.nan, math.nan, -1)
    for c in cs:
        params = cd_parameters(k, c, n_dim)
        for ell in ells:
            m = margins(terms, params, ell)
            i = int(np.argmin(m))
            if m[i] < worst:
                worst = float(m[i])
                arg = (ell, c, i)
    cb = float(np.abs(terms.cb).max()) if conn.vertical_metric_parallel else None
    return VerificationSummary(samples=samples, ells=tuple(ells), cs=tuple(cs),
                               min_margin=worst, argmin=arg, tolerance=tol,
                               passed=worst >= -tol,
                               condition_b_max=cb)


# ---------------------------------------------------------------------------
# iterated-gradient inequalities and the commutation identity
# ---------------------------------------------------------------------------

def _require_parallel(conn: ConnectionData):
    if not conn.vertical_metric_parallel:
        raise RequiresParallelVerticalMetric(
            "operation requires a parallel vertical co-metric")


def verify_double_gamma(jet: Jet2, conn: ConnectionData, k: CDConstants,
                        c: float, ell: float) -> tuple[float, float]:
    """Margins of the two gradient-of-gradient bounds (parallel vertical metric).

    margin1: G_h(f) (G2(ell) - (r1 - 1/ell) G_h - r2 G_v) - (1/4) G_h(G_h(f))
    margin2: G_v(f) G2_vertical(f) - (1/4) G_h(G_v(f))
    with r1 = rho_H - 1/c and r2 = -c M_HV^2, both relative to their scales.
    """
    _require_parallel(conn)
    _require_constraint(jet, conn)
    _check_normalized(k)
    if math.isinf(c) and k.M_HV > 1e-14:
        raise UnboundedConstant("c = inf requires M_HV = 0 here")
    batch = JetBatch(jet.n, jet.nu, jet.p[None, :], jet.H[None, :, :])
    t = gamma2_terms(batch, conn, k)
    r1 = k.rho_H - (0.0 if math.isinf(c) else 1.0 / c)
    r2 = -(0.0 if math.isinf(c) else c * k.M_HV ** 2)
    lhs1 = t.gh * (t.gamma2(ell) - (r1 - 1.0 / ell) * t.gh - r2 * t.gv)
    m1 = (lhs1 - 0.25 * t.q_h) / (1.0 + np.abs(lhs1) + 0.25 * np.abs(t.q_h))
    lhs2 = t.gv * t.gamma2_vertical()
    m2 = (lhs2 - 0.25 * t.q_v) / (1.0 + np.abs(lhs2) + 0.25 * np.abs(t.q_v))
    return float(m1[0]), float(m2[0])


def double_gamma_margins(terms: Gamma2Terms, k: CDConstants, c: float,
                         ell: float) -> tuple[np.ndarray, np.ndarray]:
    """Batch version of verify_double_gamma on precomputed terms."""
    r1 = k.rho_H - (0.0 if math.isinf(c) else 1.0 / c)
    r2 = -(0.0 if math.isinf(c) else c * k.M_HV ** 2)
    lhs1 = terms.gh * (terms.gamma2(ell) - (r1 - 1.0 / ell) * terms.gh - r2 * terms.gv)
    m1 = (lhs1 - 0.25 * terms.q_h) / (1.0 + np.abs(lhs1) + 0.25 * np.abs(terms.q_h))
    lhs2 = terms.gv * terms.gamma2_vertical()
    m2 = (lhs2 - 0.25 * terms.q_v) / (1.0 + np.abs(lhs2) + 0.25 * np.abs(terms.q_v))
    return m1, m2


def condition_b_residual(jet: Jet2, conn: ConnectionData) -> float:
    """Commutation defect of the two mixed gradient forms; an algebraic zero.

    2 sum_i p_i <H_i, p>_v - 2 sum_s p_{n+s} sum_j H[j][n+s] p_j, evaluated
    with independent summation orders so floating-point cancellation is
    actually exercised.  Requires a parallel vertical co-metric.
    """
    _require_parallel(conn)
    _require_constraint(jet, conn)
    n = jet.n
    hv = jet.H[:, n:]
    t1 = 2.0 * float(jet.p[:n] @ (hv @ jet.p[n:]))
    t2 = 2.0 * float(jet.p[n:] @ (hv.T @ jet.p[:n]))
    return t1 - t2


# ---------------------------------------------------------------------------
# choice of the splitting parameter c
# ---------------------------------------------------------------------------

def _prop41_value(n_dim: float, rho1: float, rho20: float, rho21: float) -> float:
    k2 = max(0.0, -rho21)
    if math.isinf(n_dim):
        return rho20 / (1.0 + rho20) * (rho1 - k2 / rho20)
    return (n_dim * rho20 / (n_dim + rho20 * (n_dim - 1.0))
            * (rho1 - k2 / rho20))


def optimize_c(k: CDConstants, n_dim: float) -> tuple[float, float | None]:
    """Splitting parameter maximizing the spectral-gap expression.

    Golden-section search on log10 c over [-6, 6], 200 iterations, ties
    broken toward larger c.  When both mixed bounds vanish the optimum is
    exactly c = inf (the curvature term is then c-independent).  Returns
    (c, value); value is the gap expression at the optimum (possibly
    nonpositive, i.e. vacuous) and None when no admissible c makes rho20
    positive at all.
    """
    _check_normalized(k)
    _check_no_sentinel(k)
    msum = k.M_HV + k.M_nabla_v
    if msum <= 1e-14:
        params = cd_parameters(k, math.inf, n_dim)
        if params.rho20 > 0:
            return math.inf, _prop41_value(n_dim, params.rho1, params.rho20, params.rho21)
        return math.inf, None
    if k.m_R <= 0:
        return 1.0, None
    # rho20(c) > 0 iff c < c_max
    c_max = 0.5 * k.m_R ** 2 / msum ** 2
    lo, hi = -6.0, min(6.0, math.log10(c_max) - 1e-12)
    if hi <= lo:
        return 10.0 ** -6, None

    def value(logc: float) -> float:
        p = cd_parameters(k, 10.0 ** logc, n_dim)
        return _prop41_value(n_dim, p.rho1, p.rho20, p.rho21)

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = value(x1), value(x2)
    for _ in range(200):
        if f1 > f2:          # strict: ties move toward larger c
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = value(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = value(x2)
    logc = x2 if f2 >= f1 else x1
    return 10.0 ** logc, value(logc)
