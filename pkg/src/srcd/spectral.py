"""Spectral-gap lower bounds and an irreducible-representation eigenvalue oracle.

Two bound routes: a direct one from the curvature-dimension parameters
(requiring rho20 > 0), and a closed-form one for parallel vertical metrics
through the combination kappa = rho_H m_R^2 / 2 - M_HV^2.  A third,
step-2 route goes through the canonical vertical metric and its constant b.

The oracle is independent of all of that: on compact su(2)-type groups the
sub-Laplacian acts on matrix coefficients of each irreducible representation
by right multiplication, so it block-diagonalizes into small dense symmetric
problems whose spectra are exact.  Any valid bound must sit below the
smallest nonzero eigenvalue magnitude the oracle finds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cdcore import CDParams, cd_parameters, optimize_c, _prop41_value
from .connection import ConnectionData, compute_connection
from .errors import (
    BadParam,
    NonPositiveKappa,
    NonPositiveRho20,
    RequiresParallelMetric,
    UnsupportedAlgebra,
)
from .invariants import CDConstants, compute_constants, privileged_step2
from .liealg import LieSRStructure, adapted_orthonormal_frame


@dataclass(frozen=True)
class GapBound:
    bound: float
    k2: float
    c_opt: float                 # the c behind the bound (inf allowed)
    kappa: float | None          # set by the kappa route only
    source: str                  # "prop41" | "kappa_corollary" | "step2_privileged"


def gap_bound_prop41(params: CDParams) -> GapBound:
    """Lower bound for the spectral gap from fixed inequality parameters:
    n rho20 / (n + rho20 (n-1)) * (rho1 - k2/rho20), k2 = max(0, -rho21).
    """
    if not params.rho20 > 0:
        raise NonPositiveRho20(f"rho20 = {params.rho20:.6g} must be positive")
    k2 = max(0.0, -params.rho21)
    return GapBound(bound=_prop41_value(params.n_dim, params.rho1, params.rho20, params.rho21),
                    k2=k2, c_opt=params.c, kappa=None, source="prop41")


def gap_bound_best(k: CDConstants, n_dim: float | None = None) -> GapBound:
    """prop41 bound with the splitting parameter chosen by the optimizer."""
    nd = float(k.n) if n_dim is None else float(n_dim)
    c_opt, value = optimize_c(k, nd)
    if value is None:
        raise NonPositiveRho20("no splitting parameter yields a positive rho20 bound")
    return gap_bound_prop41(cd_parameters(k, c_opt, nd))


def gap_bound_kappa(k: CDConstants, conn: ConnectionData,
                    n_dim: float | None = None) -> GapBound:
    """Closed-form bound (2 kappa / (2 M_HV + m_R sqrt(2 rho_H + 2 kappa (n-1)/n)))^2.

    Valid in the parallel-vertical-metric setting with
    kappa = rho_H m_R^2 / 2 - M_HV^2 > 0.
    """
    if not conn.vertical_metric_parallel:
        raise RequiresParallelMetric("kappa bound requires a parallel vertical co-metric")
    kappa = 0.5 * k.rho_H * k.m_R ** 2 - k.M_HV ** 2
    if not kappa > 0:
        raise NonPositiveKappa(f"kappa = {kappa:.6g} must be positive")
    nd = float(k.n) if n_dim is None else float(n_dim)
    frac = 1.0 if math.isinf(nd) else (nd - 1.0) / nd
    denom = 2.0 * k.M_HV + k.m_R * math.sqrt(2.0 * k.rho_H + 2.0 * kappa * frac)
    bound = (2.0 * kappa / denom) ** 2
    return GapBound(bound=bound, k2=0.0, c_opt=math.inf if k.M_HV == 0 else math.nan,
                    kappa=kappa, source="kappa_corollary")


def gap_bound_step2(s: LieSRStructure) -> tuple[GapBound, float]:
    """Bound through the canonical step-2 vertical metric; returns (bound, b).

    Equivalent to feeding rho20 = 1/(2 b^2), rho21 = 0, c = inf into the
    direct route, which requires the structure to have parallel vertical
    data in the privileged metric (checked numerically).
    """
    b, priv = privileged_step2(s)
    son = adapted_orthonormal_frame(priv)
    conn = compute_connection(son)
    k = compute_constants(son, conn)
    if k.M_HV > 1e-10 or k.M_nabla_v > 1e-10:
        raise RequiresParallelMetric(
            "step-2 route needs vanishing mixed bounds in the privileged metric")
    bound = gap_bound_prop41(cd_parameters(k, math.inf))
    return GapBound(bound=bound.bound, k2=bound.k2, c_opt=math.inf, kappa=None,
                    source="step2_privileged"), b


# ---------------------------------------------------------------------------
# representation-theoretic oracle
# ---------------------------------------------------------------------------

def spin_matrices(two_j: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hermitian angular-momentum matrices for spin j = two_j/2 (ladder basis)."""
    j = two_j / 2.0
    dim = two_j + 1
    m = j - np.arange(dim)
    j3 = np.diag(m).astype(complex)
    ladder = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    jp = np.zeros((dim, dim), dtype=complex)
    jp[np.arange(dim - 1), np.arange(1, dim)] = ladder
    jm = jp.conj().T
    return 0.5 * (jp + jm), (jp - jm) / 2j, j3


def _dpi(coeffs: np.ndarray, two_j: int) -> np.ndarray:
    """Anti-Hermitian representation matrix of sum_k coeffs[k] X_k, where the
    X_k satisfy the cyclic brackets [X_1, X_2] = X_3 etc."""
    j1, j2, j3 = spin_matrices(two_j)
    return -1j * (coeffs[0] * j1 + coeffs[1] * j2 + coeffs[2] * j3)


@dataclass(frozen=True)
class SpectrumOracleResult:
    eigenvalues: np.ndarray       # sorted ascending, nonzero only
    gap: float                    # smallest magnitude among them
    blocks: tuple[tuple[float, ...], ...]   # spins (j,) or (j1, j2) per block
    j_max: float


def irrep_spectrum_oracle(s: LieSRStructure, j_max: float | None = None,
                          zero_tol: float = 1e-9) -> SpectrumOracleResult:
    """Exact sub-Laplacian spectra over irreducible blocks of a compact
    su(2)-type group, aggregated up to spin j_max (per factor for products).

    The horizontal generators act through spin matrices; the block operator
    is sum_i dPi(e_i)^2 plus the first-order drift term.  Eigenvalues are
    nonpositive; the gap is the smallest magnitude above zero_tol.
    """
    son = adapted_orthonormal_frame(s)
    if son.su2 is None:
        raise UnsupportedAlgebra(
            f"structure '{s.name}' carries no su(2) presentation for the oracle")
    factors = son.su2.factors
    if j_max is None:
        j_max = 5.5 if factors == 1 else 2.5
    if j_max > 12.5:
        raise BadParam("j_max capped at 25/2")
    two_j_max = int(round(2 * j_max))
    if two_j_max < 0:
        raise BadParam("j_max must be nonnegative")

    conn = compute_connection(son)
    coeffs = son.su2.coeffs
    n = son.n

    def block_operator(spins: tuple[int, ...]) -> np.ndarray:
        dims = [tj + 1 for tj in spins]
        total = int(np.prod(dims))
        op = np.zeros((total, total), dtype=complex)

        def rep(i: int) -> np.ndarray:
            mats = []
            for f, tj in enumerate(spins):
                mats.append(_dpi(coeffs[i, 3 * f:3 * f + 3], tj))
            if len(mats) == 1:
                return mats[0]
            return np.kron(mats[0], np.eye(dims[1])) + np.kron(np.eye(dims[0]), mats[1])

        for i in range(n):
            a = rep(i)
            op += a @ a
        for j in range(n):
            if abs(conn.drift[j]) > 1e-14:
                op += conn.drift[j] * rep(j)
        return op

    spins_list: list[tuple[int, ...]]
    if factors == 1:
        spins_list = [(tj,) for tj in range(two_j_max + 1)]
    else:
        spins_list = [(t1, t2) for t1 in range(two_j_max + 1)
                      for t2 in range(two_j_max + 1)]

    eigs = []
    blocks = []
    for spins in spins_list:
        op = block_operator(spins)
        herm_defect = np.abs(op - op.conj().T).max()
        if herm_defect > 1e-10:
            raise UnsupportedAlgebra(
                f"block operator not symmetric (defect {herm_defect:.2e}); "
                "drift breaks self-adjointness")
        w = np.linalg.eigvalsh(0.5 * (op + op.conj().T))
        eigs.append(w)
        blocks.append(tuple(tj / 2.0 for tj in spins))
    all_eigs = np.sort(np.concatenate(eigs))
    nonzero = all_eigs[np.abs(all_eigs) > zero_tol]
    if nonzero.size == 0:
        raise BadParam("j_max too small: no nonzero eigenvalue in range")
    return SpectrumOracleResult(eigenvalues=nonzero, gap=float(np.abs(nonzero).min()),
                                blocks=tuple(blocks), j_max=j_max)
