import math

import numpy as np
import pytest

from srcd.cdcore import CDParams, cd_parameters
from srcd.errors import (
    BadParam,
    NonPositiveKappa,
    NonPositiveRho20,
    RequiresParallelMetric,
    UnsupportedAlgebra,
)
from srcd.liealg import LieSRStructure, adapted_orthonormal_frame, build_example
from srcd.spectral import (
    gap_bound_best,
    gap_bound_kappa,
    gap_bound_prop41,
    gap_bound_step2,
    irrep_spectrum_oracle,
    spin_matrices,
)

from conftest import analysis_for


def test_spin_matrices_commutators():
    for two_j in range(1, 8):
        j1, j2, j3 = spin_matrices(two_j)
        assert np.abs(j1 @ j2 - j2 @ j1 - 1j * j3).max() < 1e-12
        assert np.abs(j2 @ j3 - j3 @ j2 - 1j * j1).max() < 1e-12
        j = two_j / 2
        cas = j1 @ j1 + j2 @ j2 + j3 @ j3
        assert np.abs(cas - j * (j + 1) * np.eye(two_j + 1)).max() < 1e-12


def test_gap_bound_prop41_values():
    p = CDParams(n_dim=3.0, rho1=4.0, rho20=0.25, rho21=0.0, c=math.inf)
    gb = gap_bound_prop41(p)
    assert gb.bound == pytest.approx(6.0 / 7.0, abs=1e-15)
    assert gb.k2 == 0.0
    # negative rho21 activates the k2 penalty
    p = CDParams(n_dim=3.0, rho1=4.0, rho20=0.25, rho21=-0.5, c=math.inf)
    gb = gap_bound_prop41(p)
    assert gb.k2 == 0.5
    assert gb.bound == pytest.approx((3 * 0.25) / (3 + 0.25 * 2) * (4.0 - 0.5 / 0.25))
    # independent of rho21 >= 0
    for r in (0.0, 0.3, 5.0):
        p = CDParams(n_dim=3.0, rho1=4.0, rho20=0.25, rho21=r, c=math.inf)
        assert gap_bound_prop41(p).bound == pytest.approx(6.0 / 7.0)


def test_gap_bound_prop41_requires_positive_rho20():
    with pytest.raises(NonPositiveRho20):
        gap_bound_prop41(CDParams(n_dim=3.0, rho1=1.0, rho20=0.0, rho21=0.0, c=1.0))


def test_gap_bound_kappa_su2_double_v2():
    _, _, conn, k = analysis_for("su2-double-v2")
    gb = gap_bound_kappa(k, conn)
    assert gb.kappa == pytest.approx(1.0, abs=1e-12)
    assert gb.bound == pytest.approx(6.0 / 7.0, abs=1e-12)


def test_gap_bound_routes_agree_su2_double_v2():
    _, _, conn, k = analysis_for("su2-double-v2")
    b1 = gap_bound_best(k).bound
    b2 = gap_bound_kappa(k, conn).bound
    assert abs(b1 - b2) <= 1e-10
    assert b1 == pytest.approx(6.0 / 7.0, abs=1e-12)


def test_gap_bound_kappa_errors():
    _, _, conn, k = analysis_for("free-step2", {"n": 3})
    with pytest.raises(NonPositiveKappa):
        gap_bound_kappa(k, conn)        # rho_H = 0 -> kappa = 0
    _, _, conn, k = analysis_for("sl2c")
    with pytest.raises(NonPositiveKappa):
        gap_bound_kappa(k, conn)        # rho_H < 0 -> kappa < 0
    # non-parallel vertical metric refused
    s = build_example("su2-double-v1")
    aniso = LieSRStructure("aniso", 3, 3, s.c, s.gram_h, np.diag([1.0, 2.0, 3.0]) / 16)
    from srcd.connection import compute_connection
    from srcd.invariants import compute_constants
    son = adapted_orthonormal_frame(aniso)
    conn = compute_connection(son)
    k = compute_constants(son, conn)
    with pytest.raises(RequiresParallelMetric):
        gap_bound_kappa(k, conn)


def test_gap_bound_step2_hopf():
    # b = 1, so the bound is n rho_H / (n (2 b^2 + 1) - 1) = 2 * 2 / 5 = 0.8,
    # and it must agree with the direct route at c = inf
    gb, b = gap_bound_step2(build_example("su2-hopf"))
    assert b == pytest.approx(1.0, abs=1e-12)
    assert gb.bound == pytest.approx(0.8, abs=1e-12)
    _, _, conn, k = analysis_for("su2-hopf")
    direct = gap_bound_prop41(cd_parameters(k, math.inf))
    assert abs(gb.bound - direct.bound) < 1e-12
    kap = gap_bound_kappa(k, conn)
    assert abs(gb.bound - kap.bound) < 1e-12


def test_gap_bound_step2_formula_from_b():
    for name, params in (("su2-double-v2", {}), ("free-step2", {"n": 3})):
        s = build_example(name, params)
        try:
            gb, b = gap_bound_step2(s)
        except RequiresParallelMetric:
            continue
        _, _, _, k = analysis_for(name, params)
        n = k.n
        expected = n / (n * (2 * b ** 2 + 1) - 1) * k.rho_H
        assert gb.bound == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

def test_oracle_hopf_spin_half_block():
    s = adapted_orthonormal_frame(build_example("su2-hopf"))
    res = irrep_spectrum_oracle(s, j_max=0.5)
    # spin-0 contributes only zero (excluded); spin-1/2 block eigenvalues are
    # -2(j(j+1) - m^2) = -1 twice
    assert np.allclose(res.eigenvalues, [-1.0, -1.0], atol=1e-12)
    assert res.gap == pytest.approx(1.0, abs=1e-12)


def test_oracle_hopf_gap_stable():
    s = adapted_orthonormal_frame(build_example("su2-hopf"))
    res = irrep_spectrum_oracle(s, j_max=5.5)
    assert res.gap == pytest.approx(1.0, abs=1e-10)


def test_oracle_ladder_formula():
    # eigenvalues of the spin-j block are -2(j(j+1) - m^2) for this
    # normalization; checked against the aggregated table for a few spins
    s = adapted_orthonormal_frame(build_example("su2-hopf"))
    for two_j in (1, 2, 3, 4):
        res = irrep_spectrum_oracle(s, j_max=two_j / 2.0)
        expected = [-2.0 * (j * (j + 1) - m ** 2)
                    for tj in range(1, two_j + 1)
                    for j in [tj / 2.0]
                    for m in np.arange(-j, j + 1)]
        expected = [v for v in expected if abs(v) > 1e-9]
        assert np.allclose(np.sort(res.eigenvalues), np.sort(expected), atol=1e-10)


def test_oracle_su2_double_analytic_spectrum():
    """Analytic oracle for the product blocks: with generators (X, 2X) the
    block operator decomposes through coupled spins, giving eigenvalues
    2 j1(j1+1) - 4 j2(j2+1) - 4 j(j+1) for |j1-j2| <= j <= j1+j2."""
    s = adapted_orthonormal_frame(build_example("su2-double-v2"))
    res = irrep_spectrum_oracle(s, j_max=1.5)
    expected = []
    for tj1 in range(0, 4):
        for tj2 in range(0, 4):
            j1, j2 = tj1 / 2.0, tj2 / 2.0
            j = abs(j1 - j2)
            while j <= j1 + j2 + 1e-9:
                lam = 2 * j1 * (j1 + 1) - 4 * j2 * (j2 + 1) - 4 * j * (j + 1)
                # multiplicity 2j+1 inside the block
                expected.extend([lam] * int(round(2 * j + 1)))
                j += 1.0
    expected = np.sort([v for v in expected if abs(v) > 1e-9])
    assert np.allclose(np.sort(res.eigenvalues), expected, atol=1e-9)


def test_oracle_monotone_in_jmax():
    s = adapted_orthonormal_frame(build_example("su2-double-v2"))
    gaps = [irrep_spectrum_oracle(s, j_max=j).gap for j in (0.5, 1.0, 1.5, 2.5)]
    assert all(g2 <= g1 + 1e-12 for g1, g2 in zip(gaps, gaps[1:]))


def test_oracle_su2_double_v2_gap():
    s = adapted_orthonormal_frame(build_example("su2-double-v2"))
    res = irrep_spectrum_oracle(s, j_max=2.5)
    assert res.gap == pytest.approx(1.5, abs=1e-10)
    assert 6.0 / 7.0 <= res.gap + 1e-8


def test_bounds_below_oracle_gap():
    for name in ("su2-hopf", "su2-double-v2"):
        _, son, conn, k = analysis_for(name)
        res = irrep_spectrum_oracle(son)
        assert gap_bound_best(k).bound <= res.gap + 1e-8
        assert gap_bound_kappa(k, conn).bound <= res.gap + 1e-8


def test_oracle_unsupported_and_bad_jmax():
    with pytest.raises(UnsupportedAlgebra):
        irrep_spectrum_oracle(adapted_orthonormal_frame(build_example("heisenberg")))
    with pytest.raises(UnsupportedAlgebra):
        irrep_spectrum_oracle(adapted_orthonormal_frame(build_example("sl2c")))
    s = adapted_orthonormal_frame(build_example("su2-hopf"))
    with pytest.raises(BadParam):
        irrep_spectrum_oracle(s, j_max=13.0)
    with pytest.raises(BadParam):
        irrep_spectrum_oracle(s, j_max=0.0)   # only the trivial block: no gap
