"""
Acceptance criteria, one test per criterion.

Each test appends a ``PASS``/``FAIL`` line (with the measured figure and the
pinned tolerance) that is printed in the pytest terminal summary; running
this file directly prints the same lines.
"""

import math
import time

import numpy as np
import pytest

from bingham_hgm import (MultiplicityTheta, OdeControl, PathSegment, SuffStats, Trajectory,
                         canonicalize, complex_bingham_const, contour_norm_const, fit_continuous,
                         fit_discrete, hg_norm_const, loglik_grad_hess, mc_norm_const,
                         pfaffian_matrix, propagate, series_grad, series_norm_const, spa1)
from bingham_hgm.approx import log_spa1
from bingham_hgm.series import series_log_norm_const
from bingham_hgm.tables import TABLE1, TABLE2, TABLE3, TABLE4, table1_theta, table2_theta

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

# pinned tolerances
TOL_TABLE1 = 1e-5            # absolute, eps = 1e-6
TOL_TABLE2_7DIGIT = 1e-5     # relative
TOL_TABLE2_4DIGIT = 5e-4     # relative
TIME_TABLE2 = 60.0           # seconds
TOL_SERIES_HG = 1e-6         # relative
TOL_COMPLEX = 1e-5           # relative
TOL_MLE_THETA = 1e-4         # per component
TOL_MLE_RESIDUAL = 1e-6
TIME_MLE = 30.0              # seconds
TOL_COLUMN_SUM = 1e-12
TOL_SIMPLEX = 1e-9
RECT_FACTOR = 10.0           # times the ODE tolerance
TOL_GAUGE = 1e-10
TOL_FD = 1e-5                # times N
TOL_CONTOUR = 1e-6
MC_SIGMAS = 4.0
TOL_SPA = 0.10

THETA_MLE = np.array([-7.188333, -3.120184, -1.543555, -0.628081, 0.0])


def record(tag, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------- criterion 1

def test_ac1_table1_series():
    worst = 0.0
    for p in range(2, 7):
        g = series_grad(canonicalize(table1_theta(p)), 1e-6).to_reduced().values
        worst = max(worst, float(np.max(np.abs(g - np.asarray(TABLE1[p])))))
    record("AC1 Table 1 (p=2..6, series, eps=1e-6)", worst <= TOL_TABLE1,
           f"max abs error {worst:.2e} <= {TOL_TABLE1:g}")


# ------------------------------------------------------------ criteria 2 and 3

def test_ac2_table2_hg():
    t0 = time.perf_counter()
    worst7 = worst4 = 0.0
    for p, a, b, ref, digits in TABLE2:
        val = hg_norm_const(table2_theta(p, a, b)).value
        rel = abs(val - ref) / ref
        if digits == 7:
            worst7 = max(worst7, rel)
        else:
            worst4 = max(worst4, rel)
    elapsed = time.perf_counter() - t0
    ok = worst7 <= TOL_TABLE2_7DIGIT and worst4 <= TOL_TABLE2_4DIGIT and elapsed < TIME_TABLE2
    record("AC2 Table 2 (12 rows, HG)", ok,
           f"7-digit rel {worst7:.2e} <= {TOL_TABLE2_7DIGIT:g}, 4-digit rel {worst4:.2e} "
           f"<= {TOL_TABLE2_4DIGIT:g}, {elapsed:.2f} s < {TIME_TABLE2:g} s")


def test_ac3_series_hg_agreement():
    worst, used = 0.0, 0
    for p, a, b, _, _ in TABLE2:
        theta = table2_theta(p, a, b)
        s, _ = series_log_norm_const(canonicalize(theta), 1e-10)
        h = hg_norm_const(theta).log_c
        worst = max(worst, abs(math.expm1(s - h)))
        used += 1
    record("AC3 series vs HG on Table 2 rows", worst <= TOL_SERIES_HG,
           f"{used} rows within budget, max rel diff {worst:.2e} <= {TOL_SERIES_HG:g}")


# ---------------------------------------------------------------- criterion 4

def test_ac4_complex_exactness():
    worst, cells = 0.0, 0
    for third, table in ((-2.0, TABLE3), (-22.0, TABLE4)):
        for kappa, row in table.items():
            ref = row[5]
            phi = np.array([0.0, -1.0, third, -kappa])
            cf = complex_bingham_const(phi)
            hg = hg_norm_const(np.repeat(phi, 2)).raw
            worst = max(worst, abs(cf - ref) / ref, abs(hg - ref) / ref)
            cells += 1
    record("AC4 complex Bingham cells (closed form and HG on d=2 embedding)",
           worst <= TOL_COMPLEX and cells == 12,
           f"{cells} cells, max rel error {worst:.2e} <= {TOL_COMPLEX:g}")


# ---------------------------------------------------------------- criterion 5

def test_ac5_mle():
    t0 = time.perf_counter()
    r = fit_continuous(SuffStats(np.arange(1, 6) / 15, 1))
    dev = float(np.max(np.abs(r.theta - THETA_MLE)))
    res = []
    for p in range(2, 11):
        st = SuffStats(2 * np.arange(1, p + 1) / (p * (p + 1)), 1)
        res.append(fit_continuous(st).residual)
        res.append(fit_discrete(st).residual)
    elapsed = time.perf_counter() - t0
    ok = dev <= TOL_MLE_THETA and max(res) <= TOL_MLE_RESIDUAL and elapsed < TIME_MLE
    record("AC5 MLE (s=1/15..5/15 and Table 5 inputs p=2..10)", ok,
           f"theta dev {dev:.2e} <= {TOL_MLE_THETA:g}, max residual {max(res):.2e} "
           f"<= {TOL_MLE_RESIDUAL:g}, {elapsed:.2f} s < {TIME_MLE:g} s")


# ---------------------------------------------------------------- criterion 6

def test_ac6a_column_sum_law():
    rng = np.random.default_rng(601)
    worst = 0.0
    for _ in range(1000):
        q = int(rng.integers(2, 7))
        phi = np.concatenate([[0.0], -np.cumsum(rng.uniform(0.01, 3.0, q - 1))])
        d = rng.integers(1, 5, q)
        for i in range(q):
            col = pfaffian_matrix(i, phi, d).sum(axis=0)
            col[i] -= 1.0
            worst = max(worst, float(np.max(np.abs(col))))
    record("AC6a Pfaffian column-sum law (1000 cases, q<=6)", worst <= TOL_COLUMN_SUM,
           f"max deviation {worst:.2e} <= {TOL_COLUMN_SUM:g}")


def test_ac6b_log_simplex_conservation():
    rng = np.random.default_rng(602)
    worst, steps = 0.0, 0
    for _ in range(30):
        p = int(rng.integers(2, 8))
        theta = rng.uniform(-40, 40, p)
        traj = Trajectory()
        r = hg_norm_const(theta, trajectory=traj, log_threshold=0.0)
        st = np.asarray(traj.states)
        if st.size:
            worst = max(worst, float(np.max(np.abs(st[:, :-1].sum(axis=1) - 1.0))))
            steps += len(st)
        worst = max(worst, abs(float(np.sum(r.gl.values)) - 1.0))
    for p in (4, 7, 10):
        fit = fit_continuous(SuffStats(2 * np.arange(1, p + 1) / (p * (p + 1)), 1))
        for _, _, eta in fit.trajectory:
            worst = max(worst, abs(float(np.sum(eta)) - 1.0))
            steps += 1
    record("AC6b log-system simplex conservation", worst <= TOL_SIMPLEX,
           f"{steps} steps, max |sum G^L - 1| {worst:.2e} <= {TOL_SIMPLEX:g}")


def test_ac6c_rectangle_integrability():
    rng = np.random.default_rng(603)
    ctl = OdeControl(rel_tol=1e-10, abs_tol=1e-10)
    worst = 0.0
    for _ in range(20):
        q = int(rng.integers(2, 6))
        d = rng.integers(1, 3, q)
        A = np.concatenate([[0.0], -np.cumsum(rng.uniform(0.05, 0.2, q - 1))])
        dB, dC = np.zeros(q), np.zeros(q)
        dB[0], dC[-1] = rng.uniform(1, 5), -rng.uniform(1, 5)
        B, C, D = A + dB, A + dC, A + dB + dC
        mk = lambda v: MultiplicityTheta.from_blocks(v, d)
        G0 = series_grad(mk(A), 1e-14)
        gb = propagate(propagate(G0, PathSegment(mk(A), mk(B)), ctl), PathSegment(mk(B), mk(D)), ctl)
        gc = propagate(propagate(G0, PathSegment(mk(A), mk(C)), ctl), PathSegment(mk(C), mk(D)), ctl)
        worst = max(worst, float(np.max(np.abs(gb.values - gc.values) / np.abs(gb.values))))
    limit = RECT_FACTOR * ctl.rel_tol
    record("AC6c rectangle integrability (20 rectangles)", worst <= limit,
           f"max rel path difference {worst:.2e} <= {limit:g}")


def test_ac6d_gauge_covariance():
    rng = np.random.default_rng(604)
    worst = 0.0
    for _ in range(20):
        p = int(rng.integers(2, 7))
        theta = rng.uniform(-8, 8, p)
        c = float(rng.uniform(-20, 20))
        s0, _ = series_log_norm_const(canonicalize(theta), 1e-12)
        s1, _ = series_log_norm_const(canonicalize(theta + c), 1e-12)
        h0, h1 = hg_norm_const(theta).log_c, hg_norm_const(theta + c).log_c
        l0 = hg_norm_const(theta, log_threshold=0.0).log_c
        l1 = hg_norm_const(theta + c, log_threshold=0.0).log_c
        a0, a1 = log_spa1(theta), log_spa1(theta + c)
        for x0, x1 in ((s0, s1), (h0, h1), (l0, l1), (a0, a1)):
            worst = max(worst, abs((x1 - x0) - c))
        m = mc_norm_const(np.full(p, c), n=1000, seed=1).mean
        worst = max(worst, abs(math.log(m) - c))
    record("AC6d gauge covariance (series, HG, log-HG, SPA, MC exact case)", worst <= TOL_GAUGE,
           f"max |log C(theta+c) - log C(theta) - c| {worst:.2e} <= {TOL_GAUGE:g}")


def test_ac6e_order_preservation():
    rng = np.random.default_rng(605)
    fits = steps = 0
    ok = True
    cases = [2 * np.arange(1, p + 1) / (p * (p + 1)) for p in range(2, 11)]
    cases += [rng.dirichlet(np.ones(int(rng.integers(2, 8)))) for _ in range(10)]
    cases += [np.array([0.1, 0.3, 0.1, 0.5]), np.array([0.2, 0.2, 0.3, 0.3])]
    for s in cases:
        st = SuffStats(s, 1)
        r = fit_continuous(st)
        fits += 1
        pattern = canonicalize(s)
        for _, phi, _ in r.trajectory:
            steps += 1
            ok &= bool(np.all(np.diff(phi) < 0))
        # final estimate keeps order and ties of s
        ok &= canonicalize(r.theta).same_pattern(pattern)
    record("AC6e order/tie preservation in continuous HGD", ok,
           f"{fits} fits, {steps} flow steps checked")


def test_ac6f_gradient_hessian_fd():
    rng = np.random.default_rng(606)
    N = 40
    worst = 0.0
    for _ in range(20):
        p = int(rng.integers(3, 7))
        s = rng.dirichlet(np.ones(p))
        st = SuffStats(s, N)
        pat = canonicalize(s)
        phi = np.concatenate([[0.0], -np.cumsum(rng.uniform(0.2, 3.0, p - 1))])

        def ll(ph):
            t = pat.with_phi(ph)
            return loglik_grad_hess(st, t, hg_norm_const(t).gl)

        _, g, H = ll(phi)
        h = 1e-4
        for i in range(p):
            e = np.zeros(p)
            e[i] = h
            lp, gp, _ = ll(phi + e)
            lm, gm, _ = ll(phi - e)
            worst = max(worst, abs((lp - lm) / (2 * h) - g[i]),
                        float(np.max(np.abs((gp - gm) / (2 * h) - H[:, i]))))
    record("AC6f gradient/Hessian vs finite differences (20 points)", worst <= TOL_FD * N,
           f"max deviation {worst:.2e} <= {TOL_FD * N:g} (N={N})")


def test_ac6g_contour_concordance():
    rng = np.random.default_rng(607)
    worst = 0.0
    n = 0
    for p in range(3, 7):
        for _ in range(5):
            theta = rng.uniform(-10, 10, p)
            cv = contour_norm_const(theta)
            hv = hg_norm_const(theta).value
            worst = max(worst, abs(cv - hv) / hv)
            n += 1
    record("AC6g HG vs contour quadrature (p=3..6)", worst <= TOL_CONTOUR,
           f"{n} cases, max rel diff {worst:.2e} <= {TOL_CONTOUR:g}")


def test_ac6h_monte_carlo_concordance():
    rng = np.random.default_rng(608)
    worst = 0.0
    for k in range(50):
        p = int(rng.integers(2, 7))
        theta = rng.uniform(-5, 5, p)
        est = mc_norm_const(theta, n=1_000_000, seed=1000 + k)
        hv = hg_norm_const(theta).value
        z = abs(est.mean - hv) / est.stderr if est.stderr > 0 else 0.0
        worst = max(worst, z)
    record("AC6h HG vs Monte Carlo (50 cases, n=1e6)", worst <= MC_SIGMAS,
           f"max |z| {worst:.2f} <= {MC_SIGMAS:g}")


# ---------------------------------------------------------------- criterion 7

def test_ac7_first_order_spa():
    worst, n = 0.0, 0
    for third in (-2.0, -22.0):
        for kappa in (5, 10, 30, 50, 100, 200):
            base = [0.0, -1.0, third, -kappa]
            for theta in (base, base + [-kappa], list(np.repeat(base, 2))):
                ref = hg_norm_const(theta).raw
                worst = max(worst, abs(spa1(theta) - ref) / ref)
                n += 1
    record("AC7 first-order SPA vs HG (Tables 3-4 parameter sets)", worst <= TOL_SPA,
           f"{n} cells, max rel error {worst:.2e} <= {TOL_SPA:g}")


if __name__ == "__main__":
    import sys
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_ac") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
