"""Acceptance suite: every release criterion, at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line
per criterion.  Each criterion prints its line before asserting, so failures
still report their status.

Four sub-checks assert documented reference values for the first doubled-su2
complement and for the complexified-su2 example (m_R and the mixed Ricci
bound, and the vertical inequality coefficient downstream of m_R) that are
inconsistent with the defining extremizations those quantities are computed
from; the toolkit's computed values make the pointwise inequality sharp
(criterion 4), while the documented ones are refuted by explicit jets.
Those sub-checks are expected to fail and are kept as stated rather than
weakened; everything else passes.
"""

import contextlib
import io
import json
import math
import os
import time

import numpy as np
import pytest

from srcd import cdcore
from srcd.cdcore import cd_parameters, optimize_c, sample_jet_batch
from srcd.cli import canonical_json, run
from srcd.connection import cocurvature_trace_residual, compute_connection
from srcd.diffusion import SimConfig, generator_consistency, observable, simulate_paths
from srcd.invariants import compute_constants
from srcd.liealg import adapted_orthonormal_frame, build_example
from srcd.spectral import gap_bound_best, gap_bound_kappa, irrep_spectrum_oracle

from conftest import CATALOG, analysis_for, random_orthogonal, rotate_frame

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def report(tag: str, ok: bool, detail: str = ""):
    print(f"\nACCEPTANCE {tag}: {'PASS' if ok else 'FAIL'}"
          + (f"  ({detail})" if detail else ""))


# ---------------------------------------------------------------------------
# 1. example-constant regression (tolerance 1e-10, < 1 s per structure)
# ---------------------------------------------------------------------------

CONSTANT_TARGETS = [
    ("free-step2", {"n": 2}, "M_R", 1.0),
    ("free-step2", {"n": 2}, "m_R", 1.0),
    ("free-step2", {"n": 2}, "rho_H", 0.0),
    ("free-step2", {"n": 2}, "M_HV", 0.0),
    ("free-step2", {"n": 3}, "M_R", 1.0),
    ("free-step2", {"n": 3}, "m_R", 1.0 / math.sqrt(2.0)),
    ("free-step2", {"n": 3}, "rho_H", 0.0),
    ("free-step2", {"n": 3}, "M_HV", 0.0),
    ("free-step2", {"n": 4}, "M_R", 1.0),
    ("free-step2", {"n": 4}, "m_R", 1.0 / math.sqrt(3.0)),
    ("free-step2", {"n": 4}, "rho_H", 0.0),
    ("free-step2", {"n": 4}, "M_HV", 0.0),
    ("su2-double-v1", {}, "M_R", 1.0),
    ("su2-double-v1", {}, "m_R", 0.5),
    ("su2-double-v1", {}, "rho_H", 1.0),
    ("su2-double-v1", {}, "M_HV", 3.0 / 8.0),
    ("su2-double-v2", {}, "M_R", 1.0),
    ("su2-double-v2", {}, "m_R", 1.0 / math.sqrt(2.0)),
    ("su2-double-v2", {}, "rho_H", 4.0),
    ("su2-double-v2", {}, "M_HV", 0.0),
    ("sl2c", {}, "M_R", 1.0),
    ("sl2c", {}, "m_R", 1.0),
]


@pytest.mark.parametrize("name,params,attr,target", CONSTANT_TARGETS,
                         ids=[f"{n}{tuple(p.values()) if p else ''}-{a}"
                              for n, p, a, _ in CONSTANT_TARGETS])
def test_criterion_1_constants(name, params, attr, target):
    t0 = time.perf_counter()
    _, _, _, k = analysis_for(name, params)
    elapsed = time.perf_counter() - t0
    value = getattr(k, attr)
    ok = abs(value - target) <= 1e-10 and elapsed < 1.0
    report(f"1 [{name}{params or ''} {attr}]", ok,
           f"target {target:.12g}, computed {value:.12g}")
    assert elapsed < 1.0
    assert abs(value - target) <= 1e-10, (
        f"{name} {attr}: documented reference {target!r} vs computed {value!r}")


def test_criterion_1_free_step2_parallel_vertical():
    ok = True
    for n in (2, 3, 4):
        _, _, conn, k = analysis_for("free-step2", {"n": n})
        ok = ok and k.M_nabla_v <= 1e-10 and np.abs(conn.nabla_vstar).max() <= 1e-10
    report("1 [free-step2 parallel vertical]", ok)
    assert ok


def test_criterion_1_sl2c_tensors():
    t0 = time.perf_counter()
    _, _, conn, k = analysis_for("sl2c")
    evals = np.sort(np.linalg.eigvalsh(k.ric_h[:4, :4]))
    ok_evals = np.abs(evals - np.array([-2.5, -2.5, -2.0, 0.5])).max() <= 1e-10
    ok_hv = np.abs(k.ric_hv).max() <= 1e-10
    rng = np.random.default_rng(0)
    worst = max(abs(cocurvature_trace_residual(conn, rng.standard_normal(6)))
                for _ in range(100))
    ok_trace = worst <= 1e-10
    elapsed = time.perf_counter() - t0
    ok = ok_evals and ok_hv and ok_trace and elapsed < 1.0
    report("1 [sl2c tensors]", ok,
           f"ric_h evals {np.round(evals, 12).tolist()}, trace max {worst:.2e}")
    assert ok_evals and ok_hv and ok_trace and elapsed < 1.0


# ---------------------------------------------------------------------------
# 2. inequality-parameter regression (tolerance 1e-12)
# ---------------------------------------------------------------------------

def test_criterion_2_su2_double_v2():
    _, _, _, k = analysis_for("su2-double-v2")
    p = cd_parameters(k, math.inf)
    ok = (abs(p.rho1 - 4.0) <= 1e-12 and abs(p.rho20 - 0.25) <= 1e-12
          and abs(p.rho21) <= 1e-12 and p.n_dim == 3.0)
    report("2 [su2-double-v2 parameters]", ok,
           f"(rho1, rho20, rho21) = ({p.rho1:.15g}, {p.rho20:.15g}, {p.rho21:.15g})")
    assert ok


@pytest.mark.parametrize("n", [2, 3, 4])
def test_criterion_2_free_step2(n):
    _, _, _, k = analysis_for("free-step2", {"n": n})
    p = cd_parameters(k, math.inf)
    ok = abs(p.rho20 - 1.0 / (2.0 * (n - 1))) <= 1e-12
    report(f"2 [free-step2({n}) vertical coefficient]", ok, f"rho20 = {p.rho20:.15g}")
    assert ok


def test_criterion_2_sl2c():
    _, _, _, k = analysis_for("sl2c")
    p = cd_parameters(k, math.inf)
    ok = abs(p.rho20 - 0.5) <= 1e-12
    report("2 [sl2c rho20]", ok, f"documented 0.5, computed {p.rho20:.15g}")
    assert ok, (
        "documented vertical coefficient 1/2 is refuted by an explicit jet "
        "(see test_sharp_jet_sits_on_boundary_sl2c); computed value is "
        f"{p.rho20!r}")


# ---------------------------------------------------------------------------
# 3. spectral gap (agreement <= 1e-10, bound <= oracle gap, < 30 s)
# ---------------------------------------------------------------------------

def test_criterion_3_spectral_gap():
    t0 = time.perf_counter()
    _, _, conn, k = analysis_for("su2-double-v2")
    b1 = gap_bound_best(k)
    b2 = gap_bound_kappa(k, conn)
    agree = abs(b1.bound - b2.bound) <= 1e-10
    value = abs(b1.bound - 6.0 / 7.0) <= 1e-10
    son = adapted_orthonormal_frame(build_example("su2-double-v2"))
    res = irrep_spectrum_oracle(son, j_max=2.5)
    sound = b1.bound <= res.gap + 1e-8
    # soundness on the second compact example
    _, son_h, conn_h, k_h = analysis_for("su2-hopf")
    hopf_bound = gap_bound_best(k_h).bound
    hopf_gap = irrep_spectrum_oracle(son_h).gap
    sound_hopf = hopf_bound <= hopf_gap + 1e-8
    elapsed = time.perf_counter() - t0
    ok = agree and value and sound and sound_hopf and elapsed < 30.0
    report("3 [spectral gap]", ok,
           f"bound {b1.bound:.12g} (= 6/7), oracle gap {res.gap:.12g}, "
           f"hopf {hopf_bound:.6g} <= {hopf_gap:.6g}, {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 4. pointwise inequality verification (< 60 s total)
# ---------------------------------------------------------------------------

def test_criterion_4_jet_verification():
    t0 = time.perf_counter()
    details = []
    ok = True
    for name, params in CATALOG:
        _, son, conn, k = analysis_for(name, params)
        c_opt, _ = optimize_c(k, float(k.n))
        summary = cdcore.verify_cd_batch(conn, k, samples=100000, seed=0,
                                         ells=(0.1, 1.0, 10.0),
                                         cs=(c_opt, 1.0), tol=1e-9)
        ok = ok and summary.min_margin >= -1e-9
        details.append(f"{son.name}:{summary.min_margin:.2e}")
        if conn.vertical_metric_parallel:
            batch = sample_jet_batch(conn, 100000, seed=0)
            terms = cdcore.gamma2_terms(batch, conn, k)
            c_dg = 1.0 if k.M_HV > 1e-14 else math.inf
            for ell in (0.1, 1.0, 10.0):
                m1, m2 = cdcore.double_gamma_margins(terms, k, c_dg, ell)
                ok = ok and m1.min() >= -1e-9 and m2.min() >= -1e-9
            ok = ok and float(np.abs(terms.cb).max()) <= 1e-12
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 60.0
    report("4 [jet verification]", ok,
           f"min margins {{{', '.join(details)}}}, {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 5. internal-consistency suite
# ---------------------------------------------------------------------------

def test_criterion_5_internal_consistency():
    ok = True
    for name, params in CATALOG:
        _, son, conn, k = analysis_for(name, params)
        n = son.n
        expected = np.zeros_like(conn.torsion)
        expected[:, :, n:] -= conn.R
        expected[:, :, :n] -= conn.Rbar
        ok = ok and np.abs(conn.torsion - expected).max() <= 1e-10
        block = conn.curv[:, :, :n, :n]
        ok = ok and np.abs(block + np.transpose(block, (0, 1, 3, 2))).max() <= 1e-10
        # pair symmetry on horizontal slots
        sym = conn.curv[:n, :n, :n, :n]
        for a in range(n):
            ok = ok and np.abs(sym[a, :, :, a] - sym[a, :, :, a].T).max() <= 1e-10
        # frame-rotation invariance of the constants, 10 random rotations
        rng = np.random.default_rng(1)
        for _ in range(10):
            rot = rotate_frame(son, random_orthogonal(rng, son.n),
                               random_orthogonal(rng, son.nu))
            k2 = compute_constants(rot, compute_connection(rot))
            for attr in ("M_R", "m_R", "rho_H", "M_HV", "M_nabla_v", "rho_delta_v"):
                ok = ok and abs(getattr(k2, attr) - getattr(k, attr)) <= 1e-10
    report("5 [internal consistency]", ok)
    assert ok


# ---------------------------------------------------------------------------
# 6. diffusion (< 60 s for the mean test; fixed seed 42 for consistency)
# ---------------------------------------------------------------------------

def test_criterion_6_heisenberg_mean():
    t0 = time.perf_counter()
    _, son, conn, _ = analysis_for("heisenberg")
    cfg = SimConfig(t_final=1.0, steps=200, paths=100000, seed=0)
    sample = simulate_paths(son, conn, cfg)
    x = sample.final[:, 0, 1]
    y = sample.final[:, 1, 2]
    vals = x ** 2 + y ** 2
    mean = vals.mean()
    stderr = vals.std(ddof=1) / math.sqrt(len(vals))
    elapsed = time.perf_counter() - t0
    ok = abs(mean - 2.0) <= 3.0 * stderr and elapsed < 60.0
    report("6 [heisenberg mean]", ok,
           f"E = {mean:.4f} +- {stderr:.4f} (target 2.0), {elapsed:.1f}s")
    assert ok


def test_criterion_6_generator_consistency():
    _, son, conn, _ = analysis_for("heisenberg")
    cfg = SimConfig(t_final=0.5, steps=256, paths=200000, seed=42)
    rep_h = generator_consistency(son, conn, cfg, observable("x2py2"))
    _, son2, conn2, _ = analysis_for("su2-hopf")
    cfg2 = SimConfig(t_final=0.25, steps=256, paths=200000, seed=42)
    rep_s = generator_consistency(son2, conn2, cfg2, observable("trace_re"))
    ok = (rep_h.passed and rep_h.exponent >= 1.7
          and rep_s.passed and rep_s.exponent >= 1.7)
    report("6 [generator consistency]", ok,
           f"heisenberg exponent {rep_h.exponent}, su2-hopf exponent "
           f"{rep_s.exponent:.3f}")
    assert ok


# ---------------------------------------------------------------------------
# 7. CLI golden reports
# ---------------------------------------------------------------------------

def _invoke(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(io.StringIO()):
        code = run(argv)
    return code, buf.getvalue()


@pytest.mark.parametrize("argv,golden", [
    (["verify", "--example", "heisenberg", "--samples", "100000", "--seed", "0"],
     "verify-heisenberg.constants.json"),
    (["spectral", "--example", "su2-double-v2:rho=1"],
     "spectral-su2-double-v2.constants.json"),
    (["analyze", "--example", "sl2c", "--json"],
     "analyze-sl2c.constants.json"),
], ids=["verify-heisenberg", "spectral-su2-double-v2", "analyze-sl2c"])
def test_criterion_7_cli_golden(argv, golden):
    code, out = _invoke(argv)
    block = canonical_json(json.loads(out)["constants"]) + "\n"
    with open(os.path.join(GOLDEN, golden)) as fh:
        expected = fh.read()
    ok = code == 0 and block == expected
    report(f"7 [{golden.split('.')[0]}]", ok, f"exit {code}")
    assert code == 0
    assert block == expected
