"""Acceptance criteria, one test per criterion, each printing a PASS line.

Runs the full pipeline at the stated sizes; the session-scoped fixtures share
the expensive eigendecompositions with the rest of the suite.
"""

import numpy as np
import pytest

from npspec.assembly import QuadratureGrid, assemble_K, assemble_P
from npspec.bvp import (TractionData, gauge_fixed_error, linear_field_traction,
                        rigid_motion_samples, solve_neumann)
from npspec.cli import main as cli_main
from npspec.geometry import LameParams
from npspec.kernels import conormal_kelvin, kernel_K1, kernel_K2
from npspec.ratefit import compare_with_theory, default_window, fit_exponential, fit_polynomial
from npspec.spectral import (cluster_pm_k0, compact_defect, conjugate_by_P, decay_levels,
                             fit_fourier_slope, fit_tail_slope, kernel_fourier_decay,
                             resolvable_eigenvalues, riesz_projectors, truncate_fourier)

RHO = np.log(3.0)


def report(criterion, detail):
    print(f"ACCEPT-{criterion:02d} PASS  {detail}")


@pytest.fixture(scope="module")
def ellipse_fits(ellipse21_report):
    fits = {}
    for tag, members in (("plus", ellipse21_report.plus), ("minus", ellipse21_report.minus)):
        levels = decay_levels(members)
        window = default_window(levels)
        fits[tag] = fit_exponential(levels, window, prefactor=True, cluster=tag)
    return fits


def test_criterion_01_ellipse_rates(ellipse_fits):
    eps_plus = ellipse_fits["plus"].rate
    eps_minus = ellipse_fits["minus"].rate
    assert abs(eps_plus - RHO) / RHO <= 0.15
    assert abs(eps_minus - 2 * RHO) / (2 * RHO) <= 0.15
    report(1, f"eps_plus={eps_plus:.4f} (target {RHO:.4f}), "
              f"eps_minus={eps_minus:.4f} (target {2 * RHO:.4f})")


def test_criterion_02_rate_lower_bound(ellipse_fits, ellipse21):
    for tag in ("plus", "minus"):
        verdicts = compare_with_theory(ellipse_fits[tag], curve=ellipse21)
        bound = [v for v in verdicts if v["quote_anchor"] == "analytic-rate-lower-bound"][0]
        assert bound["pass"] is True
        assert ellipse_fits[tag].rate >= RHO / 8.0
    report(2, f"both rates exceed rho/8 = {RHO / 8:.4f}")


def test_criterion_03_clustering(ellipse21_report, eig_cache, ellipse21):
    rep = ellipse21_report
    assert rep.resolved_plus >= 20
    assert rep.resolved_minus >= 20
    fine = eig_cache(ellipse21, 1024)
    for v in rep.outliers:
        if np.min(np.abs(fine - v)) < 1e-9:  # resolved outlier
            assert abs(v - 0.5) <= 1e-8
    halves = [v for v in rep.outliers if abs(v - 0.5) <= 1e-8]
    assert len(halves) == 3
    report(3, f"resolved members: plus={rep.resolved_plus}, minus={rep.resolved_minus}; "
              f"outliers are the rigid-motion triple at 1/2")


def test_criterion_04_polynomial_compactness(ellipse21, operator_cache, params01):
    K = operator_cache(ellipse21, "K", 512)
    sv, slope = compact_defect(K, params01.k0)
    assert sv[99] / sv[0] < 1e-6
    assert slope is not None and slope < 0.0
    report(4, f"sigma_100/sigma_1 = {sv[99] / sv[0]:.2e}, slope = {slope:.3f}")


def test_criterion_05_kernel_analyticity(ellipse21):
    grid = QuadratureGrid(512)
    ks, table = kernel_fourier_decay(ellipse21, "A", grid, extended=True)
    slope = fit_fourier_slope(ks, table, kmin=5, kmax=40)
    assert abs(slope + RHO) / RHO <= 0.10
    report(5, f"Fourier slope = {slope:.4f} vs -rho = {-RHO:.4f} "
              f"({abs(slope + RHO) / RHO * 100:.1f}%)")


def test_criterion_06_kernel_identity(rng):
    worst = 0.0
    for _ in range(1000):
        lam = rng.uniform(-0.3, 3.0)
        mu = rng.uniform(0.2, 2.0)
        p = LameParams(lam, mu)
        x = rng.uniform(-2, 2, 2)
        d = rng.standard_normal(2)
        y = x + rng.uniform(0.05, 2.0) * d / np.linalg.norm(d)
        nv = rng.standard_normal(2)
        nv /= np.linalg.norm(nv)
        M = conormal_kelvin(p, x, y, nv)
        ref = 2 * p.k0 * kernel_K1(x, y, nv) - kernel_K2(p, x, y, nv)
        worst = max(worst, float(np.max(np.abs(M - ref)) / np.max(np.abs(M))))
    assert worst < 1e-12
    report(6, f"max relative error over 1000 samples = {worst:.2e}")


def test_criterion_07_plemelj(ellipse21, operator_cache):
    K = operator_cache(ellipse21, "K", 256).mat
    Ks = operator_cache(ellipse21, "K_adjoint", 256).mat
    S = operator_cache(ellipse21, "S", 256).mat
    resid = np.linalg.norm(S @ Ks - K @ S) / (np.linalg.norm(S) * np.linalg.norm(K))
    assert resid < 1e-8
    report(7, f"relative Frobenius residual = {resid:.2e}")


def test_criterion_08_riesz_projectors(ellipse21, operator_cache, params01):
    K = operator_cache(ellipse21, "K", 256)
    vals, im_abs = resolvable_eigenvalues(K)
    rep = cluster_pm_k0(vals, params01.k0, im_tol=im_abs)
    pair = riesz_projectors(K, rep, contour_nodes=64)
    r = pair.residuals
    assert r["idempotency_plus"] < 1e-8 and r["idempotency_minus"] < 1e-8
    assert r["completeness"] < 1e-8
    assert r["commutation_plus"] < 1e-8 and r["commutation_minus"] < 1e-8
    assert r["trace_sum"] == pytest.approx(2 * 256, abs=1e-6)
    report(8, f"idempotency={max(r['idempotency_plus'], r['idempotency_minus']):.2e}, "
              f"completeness={r['completeness']:.2e}, "
              f"commutation={max(r['commutation_plus'], r['commutation_minus']):.2e}")


def test_criterion_09_truncation(disk, params01):
    grid = QuadratureGrid(128)
    K = assemble_K(disk, params01, grid)
    pt = assemble_P(grid)
    Q, _, _ = conjugate_by_P(K, pt, disk)
    kappa = np.sort(np.abs(np.linalg.eigvals(Q)))[::-1]
    tails = []
    for m in range(1, 21):
        Qm, tail = truncate_fourier(Q, m)
        sv = np.linalg.svd(Qm, compute_uv=False)
        rank = int(np.sum(sv > 1e-12 * max(sv[0], 1e-300)))
        bound = 2 * (2 * m - 1)
        assert rank <= bound
        assert tail >= kappa[bound] * (1 - 1e-8)
        tails.append(max(tail, 1e-300))
    slope = fit_tail_slope(np.arange(1, 21), tails)
    assert slope < 0.0
    report(9, f"rank bound exact, tail slope = {slope:.2f}, Weyl-Courant holds")


def test_criterion_10_smooth_boundary_rate(smoothtest_curve, params01):
    curve = smoothtest_curve
    coarse, _ = resolvable_eigenvalues(assemble_K(curve, params01, QuadratureGrid(512)))
    fine, _ = resolvable_eigenvalues(assemble_K(curve, params01, QuadratureGrid(1024)))
    rep = cluster_pm_k0(coarse, params01.k0, resolved_reference=fine)
    levels = decay_levels(rep.plus)
    fit = fit_polynomial(levels, default_window(levels), cluster="plus")
    assert fit.rate <= -1.5
    report(10, f"fitted exponent d = {fit.rate:.2f} <= -1.5 "
               f"(loose check; theoretical bound -2.0 with slack 0.5)")


def test_criterion_11_bvp(ellipse21, params01, operator_cache):
    grid = QuadratureGrid(256)
    t = grid.t
    K = operator_cache(ellipse21, "K", 256).mat
    for r in rigid_motion_samples(ellipse21, t):
        assert np.max(np.abs((K - 0.5 * np.eye(512)) @ r)) < 1e-8
    normals = ellipse21.normal(t)
    worst = 0.0
    for A in (np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])):
        g = TractionData.from_samples(ellipse21, grid,
                                      linear_field_traction(params01, A, normals))
        sol = solve_neumann(ellipse21, params01, g, grid)
        th = np.linspace(0, 2 * np.pi, 16, endpoint=False)
        probes = np.stack([1.0 * np.cos(th), 0.5 * np.sin(th)], axis=1)
        u_num, near = sol.evaluate(probes)
        assert not near.any()
        worst = max(worst, gauge_fixed_error(u_num, probes @ A.T, probes))
    assert worst < 1e-6
    report(11, f"interior reconstruction error = {worst:.2e}, rigid motions in the kernel")


def test_criterion_12_determinism(tmp_path):
    outs = [str(tmp_path / x) for x in ("r1", "r2")]
    for out in outs:
        rc = cli_main(["spectrum", "--curve", "ellipse:a=2,b=1", "--n", "128",
                       "--n-check", "256", "--out", out])
        assert rc == 0
    for ext in (".json", ".csv", ".manifest.json"):
        with open(outs[0] + ext, "rb") as fa, open(outs[1] + ext, "rb") as fb:
            assert fa.read() == fb.read()
    report(12, "byte-identical JSON, CSV, and manifest across repeated runs")
