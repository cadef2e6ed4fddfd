"""Desk-scale acceptance checks, one test group per criterion.

Each check prints a PASS/FAIL line and the terminal summary collects one
verdict per criterion. Two checks fail for reasons of mathematics rather than
numerics; they run in full and are marked xfail(strict=True).
"""
import time

import numpy as np
import pytest

from kdvb_lab.carleman import CarlemanWeight, fd_crosscheck, positivity_scan, sample_ratios
from kdvb_lab.control import (ControlProblem, SteeringPlan, bump_forcing, hum_solve, mode_construct,
                              mode_residual, noncontrol_scan, steer_pipeline)
from kdvb_lab.linear import BoundaryData, BoundaryQuadrature, WholeLineGrid, characteristic_roots, whole_line_propagate
from kdvb_lab.nonlinear import (IbvpProblem, contraction_radius, energy_audit, manufactured_problem,
                                solve_fixed_point, spacetime_norm)
from kdvb_lab.linear import halfline_semigroup
from kdvb_lab.numerics import Grid1D, finite_diff
from kdvb_lab.periodic import ModeCoeffs, observability_ratio, ratio_ensemble, spectrum

pytestmark = pytest.mark.acceptance


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


# ---------------------------------------------------------------- C1 roots

def test_c1_root_structure(acceptance):
    rng = np.random.default_rng(101)
    tau = rng.uniform(1e-3, 50, 100) + 1j * rng.uniform(-50, 50, 100)
    with Clock() as clk:
        triples = [characteristic_roots(z) for z in tau]
    n_dec = [sum(np.real(r) < 0 for r in tr.roots) for tr in triples]
    worst = max(tr.residuals().max() for tr in triples)
    ok = all(n == 2 for n in n_dec) and worst <= 1e-10 and clk.elapsed < 1
    acceptance("C1", ok, f"two decaying roots for 100/100, max residual {worst:.2e}, {clk.elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------- C2 boundary reproduction

def _windowed(t, rng_seed=202):
    rng = np.random.default_rng(rng_seed)
    c, w, a = rng.uniform(1.2, 2.8, 10), rng.uniform(4, 16, 10), rng.uniform(0.5, 2, 10)
    return a[:, None] * np.exp(-w[:, None] * (t[None, :] - c[:, None]) ** 2)


def test_c2_boundary_reproduction(acceptance):
    T, floor = 4.0, 1e-12
    err = {}
    with Clock() as clk:
        for n in (512, 1024):
            tg, sg = Grid1D(0, T, n), Grid1D(0, 10, n)
            data = _windowed(tg.points)
            q = BoundaryQuadrature(tg)
            # first five grid points of the 512 x 512 (resp. 1024) state
            near = Grid1D(0, 4 * sg.spacing, 5)
            u_d = q.apply(near.points, h=data)
            u_n = q.apply(near.points, g=data)
            err[n] = (np.abs(u_d[:, 0] - data).max(),
                      np.abs(finite_diff(u_n, near, 1, axis=1)[:, 0] - data).max())
    ok = True
    for k, name in enumerate(("dirichlet value", "neumann slope")):
        e1, e2 = err[512][k], err[1024][k]
        # a trace already at round-off cannot improve further
        improves = e2 <= floor or e1 / e2 >= 3
        good = e1 <= 1e-3 and improves
        ok &= good
        acceptance("C2", good, f"{name} sup error {e1:.2e} -> {e2:.2e}")
    ok &= clk.elapsed < 60
    acceptance("C2", clk.elapsed < 60, f"{clk.elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------- C3 whole-line semigroup

def test_c3_semigroup_and_dissipation(acceptance):
    rng = np.random.default_rng(303)
    box = WholeLineGrid(-40, 80 / 512, 512)
    with Clock() as clk:
        worst_law, worst_growth = 0.0, 0.0
        for _ in range(20):
            u0 = rng.standard_normal(512)
            t, s = rng.uniform(0, 2, 2)
            lhs = whole_line_propagate(u0, box, t + s)
            rhs = whole_line_propagate(whole_line_propagate(u0, box, s), box, t)
            worst_law = max(worst_law, np.linalg.norm(lhs - rhs) * np.sqrt(box.dx))
            norms = np.linalg.norm(whole_line_propagate(u0, box, np.linspace(0, 5, 26)), axis=-1)
            worst_growth = max(worst_growth, np.max(norms / np.linalg.norm(u0)))
    ok = worst_law <= 1e-10 and worst_growth <= 1 + 1e-14 and clk.elapsed < 1
    acceptance("C3", ok, f"semigroup defect {worst_law:.2e}, max norm ratio {worst_growth:.15f}, {clk.elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------- C4 contraction regime

@pytest.mark.slow
def test_c4_contraction_regime(acceptance):
    sg, tg = Grid1D(0, 20, 129), Grid1D(0, 1, 17)
    shape = np.exp(-(sg.points - 5) ** 2)
    zero = BoundaryData(tg, np.zeros(tg.n_points), np.zeros(tg.n_points))
    with Clock() as clk:
        radius = contraction_radius(shape, sg, tg, fine_steps=64)
        rep = solve_fixed_point(IbvpProblem(0.5 * radius * shape, sg, zero, fine_steps=64), tol=1e-11)
        hist = np.asarray(rep.residual_history)
        ratios = hist[1:] / hist[:-1]
        errs = []
        for s, t in ((Grid1D(0, 25, 129), Grid1D(0, 1, 17)), (Grid1D(0, 25, 257), Grid1D(0, 1, 33))):
            prob, exact = manufactured_problem(s, t)
            errs.append(spacetime_norm(solve_fixed_point(prob, tol=1e-12).solution.values - exact, s, t))
    order = np.log2(errs[0] / errs[1])
    ok_ratio = 0 < radius and rep.converged and np.all(ratios < 1)
    acceptance("C4", ok_ratio, f"radius {radius:.3g}, residual ratios at half radius max {ratios.max():.3f}")
    acceptance("C4", order >= 1.9, f"manufactured solution order {order:.2f}")
    acceptance("C4", clk.elapsed < 120, f"{clk.elapsed:.1f}s")
    assert ok_ratio and order >= 1.9 and clk.elapsed < 120


# ---------------------------------------------------------------- C5 energy ledger

def test_c5_energy_ledger(acceptance):
    res, mono = [], []
    with Clock() as clk:
        for nx, nt in ((201, 51), (401, 101), (801, 201)):
            sg, tg = Grid1D(0, 20, nx), Grid1D(0, 1, nt)
            u0 = sg.points**2 * np.exp(-(sg.points - 3) ** 2)
            zero = BoundaryData(tg, np.zeros(nt), np.zeros(nt))
            audit = energy_audit(halfline_semigroup(u0, sg, tg), zero)
            res.append(audit.max_residual)
            mono.append(audit.monotone)
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    ok = np.all(orders >= 1.9) and all(mono) and clk.elapsed < 30
    acceptance("C5", ok, f"residual orders {', '.join(f'{o:.2f}' for o in orders)}, monotone {all(mono)}, "
                         f"{clk.elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------- C6 spectrum

def test_c6_spectrum_exactness(acceptance):
    eps = np.finfo(float).eps
    worst, gap_err = 0.0, 0.0
    with Clock() as clk:
        for L in (1.0, np.pi, 2 * np.pi):
            sp = spectrum(L, 64)
            k = sp.n * np.pi / L
            ref = -(k**2) - 1j * k**3
            worst = max(worst, np.max(np.abs(sp.eigenvalues - ref) / np.maximum(1, np.abs(ref))))
            gamma = 2 * np.pi**3 / L**3
            gap_err = max(gap_err, abs(sp.gap - gamma) / gamma, abs(sp.pair_gaps().min() - gamma) / gamma)
    ok = worst <= 4 * eps and gap_err <= 4 * eps and clk.elapsed < 1
    acceptance("C6", ok, f"relative eigenvalue error {worst:.1e}, gap error {gap_err:.1e}, {clk.elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------- C7 observability

L7, l7, T7 = np.pi, np.pi / 2, 4.0


def test_c7_single_mode_and_quadrature(acceptance):
    with Clock() as clk:
        k2 = (np.pi / L7) ** 2
        exact = 1.0 / ((l7 / L7) * (1 - np.exp(-2 * k2 * T7)) / (2 * k2))
        single = max(abs(observability_ratio(ModeCoeffs.single(1, 8), L7, l7, T7, method=m) - exact) / exact
                     for m in ("closed", "quadrature"))
        q64 = ratio_ensemble(L7, l7, T7, 8, draws=100, method="quadrature", n_quad=64).max()
        q128 = ratio_ensemble(L7, l7, T7, 8, draws=100, method="quadrature", n_quad=128).max()
    change = abs(q64 - q128) / q128
    acceptance("C7", single <= 1e-8, f"single-mode relative error {single:.1e}")
    acceptance("C7", change < 0.05, f"max ratio {q64:.2f} -> {q128:.2f} under quadrature doubling ({100 * change:.1f}%)")
    acceptance("C7", clk.elapsed < 60, f"{clk.elapsed:.1f}s")
    assert single <= 1e-8 and change < 0.05 and clk.elapsed < 60


@pytest.mark.xfail(strict=True, reason="a mode of wavenumber k keeps only about 1/(2k^2) of its mass in "
                   "the observed time integral, so the worst ratio grows with n_max: the bound holds "
                   "per truncation, not uniformly")
def test_c7_ratio_stable_when_n_max_doubles(acceptance):
    r8 = ratio_ensemble(L7, l7, T7, 8, draws=100).max()
    r16 = ratio_ensemble(L7, l7, T7, 16, draws=100).max()
    change = abs(r16 - r8) / r8
    acceptance("C7", change < 0.10, f"max ratio {r8:.2f} -> {r16:.2f} when n_max doubles ({100 * change:.0f}%)")
    assert change < 0.10


# ---------------------------------------------------------------- C8 Carleman

@pytest.mark.slow
@pytest.mark.parametrize("L, T", [(1.0, 2.0), (2.0, 1.0)])
def test_c8_carleman(acceptance, L, T):
    with Clock() as clk:
        scan = positivity_scan(L, T)
        assert scan.found
        s = 2 * scan.s0
        coarse = sample_ratios(L, T, s, nx=201, nt=201, samples=50)
        fine = sample_ratios(L, T, s, nx=401, nt=401, samples=50)
        c_coarse, c_fine = 1.05 * coarse.max(), 1.05 * fine.max()
        x = np.linspace(-L, L, 9)
        t = np.linspace(0.1 * T, 0.9 * T, 9)
        fd = fd_crosscheck(CarlemanWeight(L, T, s), x, t)
    holds = bool(np.all(np.isfinite(fine)) and np.all(fine <= c_coarse))
    drift = abs(c_fine - c_coarse) / c_fine
    tag = f"(L, T) = ({L:g}, {T:g})"
    acceptance("C8", True, f"{tag} s0 = {scan.s0:.4g}")
    acceptance("C8", holds, f"{tag} 50/50 samples below C_fit = {c_coarse:.4g} on the refined grid")
    acceptance("C8", drift < 0.1, f"{tag} C_fit drift {100 * drift:.2f}% under refinement")
    acceptance("C8", fd < 1e-6, f"{tag} closed form vs finite differences {fd:.1e}")
    acceptance("C8", clk.elapsed < 150, f"{tag} {clk.elapsed:.1f}s")
    assert holds and drift < 0.1 and fd < 1e-6 and clk.elapsed < 150


# ---------------------------------------------------------------- C9 non-controllability

A9 = [0.5, 0.2, 0.1, 0.05, 0.02]


def test_c9_modes_and_order(acceptance):
    with Clock() as clk:
        cubic = max(max(mode_construct(a).cubic_residuals()) for a in A9)
        orders = []
        for a in (1.0, 0.2):
            m = mode_construct(a)
            r = [mode_residual(m, Grid1D(0, 1, n), Grid1D(0, 0.1, n)) for n in (81, 161)]
            orders.append(np.log2(r[0] / r[1]))
    acceptance("C9", cubic <= 1e-12, f"max cubic residual {cubic:.1e}")
    acceptance("C9", min(orders) >= 1.9, f"mode PDE residual orders {', '.join(f'{o:.2f}' for o in orders)}")
    acceptance("C9", clk.elapsed < 30, f"{clk.elapsed:.1f}s")
    assert cubic <= 1e-12 and min(orders) >= 1.9 and clk.elapsed < 30


@pytest.mark.xfail(strict=True, reason="at fixed X the ratio N/D is not monotone in a: it falls from "
                   "a = 0.5 to 0.05 and rises again toward the finite small-a limit sqrt(X^3 / 3T)")
def test_c9_ratio_increases_as_a_decreases(acceptance):
    ratios = [r.ratio for r in noncontrol_scan(A9, X=20.0, T=1.0)]
    ok = bool(np.all(np.diff(ratios) > 0))
    acceptance("C9", ok, "N/D along a = 0.5 -> 0.02: " + ", ".join(f"{r:.4g}" for r in ratios))
    assert ok


# ---------------------------------------------------------------- C10 control synthesis

@pytest.mark.slow
def test_c10_control_synthesis(acceptance):
    with Clock() as clk:
        f = bump_forcing(48, 48, 1.0, 1.0, 0.3, 0.7)
        sol = hum_solve(ControlProblem(1.0, 1.0, 0.3, 0.7, 0.2, f))
        plan = SteeringPlan(lambda x: np.exp(-(x - 7) ** 2), lambda x: np.exp(-(x - 12) ** 2 / 10))
        res = steer_pipeline(plan)
    ok_hum = sol.forward_residual <= 1e-6 and sol.support_leakage <= 1e-10
    ok_steer = res.error_initial <= 5e-2 and res.error_final <= 5e-2
    acceptance("C10", ok_hum, f"HUM 48x48 residual {sol.forward_residual:.1e}, leakage {sol.support_leakage:.1e}")
    acceptance("C10", ok_steer, f"steering {plan.nx}x{plan.nt} errors L2 {res.error_initial:.1e}, "
                                f"L2_beta {res.error_final:.1e}")
    acceptance("C10", clk.elapsed < 180, f"{clk.elapsed:.1f}s")
    assert ok_hum and ok_steer and clk.elapsed < 180
