import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdvb_lab.periodic import (ModeCoeffs, eval_modes, final_state_ratio, ingham_params,
                               observability_ratio, propagate_periodic, random_coeffs,
                               ratio_ensemble, spectrum)


def test_spectrum_examples():
    sp = spectrum(np.pi, 4)
    lam = dict(zip(sp.n.tolist(), sp.eigenvalues))
    assert lam[1] == pytest.approx(-1j - 1)
    assert lam[0] == 0
    assert sp.gap == pytest.approx(2.0)


@pytest.mark.parametrize("L", [1.0, np.pi, 2 * np.pi])
def test_spectrum_matches_independent_formula(L):
    sp = spectrum(L, 64)
    for n, lam in zip(sp.n, sp.eigenvalues):
        k = n * np.pi / L
        ref = complex(-(k**2), -(k**3))
        assert abs(lam - ref) <= 4 * np.finfo(float).eps * max(1.0, abs(ref))
    re = sp.eigenvalues.real
    assert np.all(re[sp.n != 0] < 0) and re[sp.n == 0] == 0


def test_gap_structure():
    L = 1.7
    sp = spectrum(L, 20)
    gamma = 2 * np.pi**3 / L**3
    # the +/- pairing holds the full gap, attained at n = 1
    assert np.min(sp.pair_gaps()) == pytest.approx(gamma, rel=1e-14)
    # consecutive sorted frequencies only keep half of it, around n = 0
    gaps = sp.sorted_gaps()
    assert np.min(gaps) == pytest.approx(gamma / 2, rel=1e-14)
    i = int(np.argmin(gaps))
    assert sp.n[i] in (-1, 0)
    assert np.all(np.delete(gaps, [i, i + 1]) >= gamma)


def test_spectrum_validation():
    with pytest.raises(ValueError):
        spectrum(-1, 3)
    with pytest.raises(ValueError):
        spectrum(1, 0)


def test_ingham_params():
    assert ingham_params(np.pi) == pytest.approx((2.0, np.pi / 2))
    assert ingham_params(2 * np.pi) == pytest.approx((0.25, 4 * np.pi))
    gam = [ingham_params(L)[0] for L in np.linspace(0.5, 5, 20)]
    assert np.all(np.diff(gam) < 0)


def test_propagate_examples():
    sp = spectrum(np.pi, 3)
    c0 = ModeCoeffs.single(0, 3, 2.0)
    for t in (0.0, 1.0, 10.0):
        assert np.allclose(propagate_periodic(c0, sp, t).coefficients, c0.coefficients)
    c1 = propagate_periodic(ModeCoeffs.single(1, 3), sp, 1.0)
    assert abs(c1.coefficients[4]) == pytest.approx(np.exp(-1))
    with pytest.raises(ValueError):
        propagate_periodic(c0, sp, -1.0)
    with pytest.raises(ValueError):
        propagate_periodic(ModeCoeffs.single(0, 2), sp, 1.0)


def test_propagated_norm_against_dense_quadrature():
    L, t = 1.3, 0.2
    rng = np.random.default_rng(5)
    c = random_coeffs(6, rng)
    sp = spectrum(L, 6)
    x = np.linspace(-L, L, 512, endpoint=False)
    u = eval_modes(c, sp, x, [t])[:, 0]
    direct = np.sum(np.abs(u) ** 2) * (2 * L / 512)
    exact = np.sum(np.exp(-2 * (sp.n * np.pi / L) ** 2 * t) * np.abs(c.coefficients) ** 2)
    assert abs(direct - exact) <= 1e-12 * exact


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 5), st.integers(1, 12))
def test_dissipativity(seed, t, n_max):
    c = random_coeffs(n_max, np.random.default_rng(seed))
    sp = spectrum(2.0, n_max)
    assert propagate_periodic(c, sp, t).norm() <= c.norm() * (1 + 1e-15)


def test_constant_mode_only_is_conserved():
    sp = spectrum(2.0, 3)
    c = ModeCoeffs.single(0, 3, 1.0)
    assert propagate_periodic(c, sp, 3.0).norm() == pytest.approx(1.0)
    c.coefficients[4] = 0.1
    assert propagate_periodic(c, sp, 3.0).norm() < np.sqrt(1.01)


def test_mode_coeffs_validation():
    with pytest.raises(ValueError):
        ModeCoeffs(np.ones(4))
    with pytest.raises(ValueError):
        ModeCoeffs(np.array([1, np.nan, 1]))


@pytest.mark.parametrize("method", ["closed", "quadrature"])
def test_single_mode_ratio_closed_form(method):
    L, l, T = np.pi, np.pi / 2, 4.0
    k2 = (np.pi / L) ** 2
    expected = 1.0 / ((l / L) * (1 - np.exp(-2 * k2 * T)) / (2 * k2))
    got = observability_ratio(ModeCoeffs.single(1, 8), L, l, T, method=method)
    assert abs(got - expected) <= 1e-8 * expected


def test_ratio_scaling_invariance():
    c = random_coeffs(5, np.random.default_rng(2))
    a = observability_ratio(c, np.pi, 1.0, 4.0)
    for alpha in (1e-3, -2.0, 3j, np.exp((np.pi / np.pi) ** 2 * 4.0)):
        assert observability_ratio(ModeCoeffs(alpha * c.coefficients), np.pi, 1.0, 4.0) == pytest.approx(a, rel=1e-12)


def test_ratio_rejections():
    c = ModeCoeffs.single(1, 2)
    with pytest.raises(ValueError):
        observability_ratio(ModeCoeffs(np.zeros(5)), 1, 0.5, 1)
    with pytest.raises(ValueError):
        observability_ratio(c, 1, 1.5, 1)
    with pytest.raises(ValueError):
        observability_ratio(c, 1, 0.5, -1)
    with pytest.raises(ValueError):
        observability_ratio(c, 1, 0.5, 1, method="bogus")


def test_quadrature_agrees_with_closed_form():
    rng = np.random.default_rng(8)
    for _ in range(5):
        c = random_coeffs(4, rng)
        a = observability_ratio(c, np.pi, np.pi / 2, 4.0)
        b = observability_ratio(c, np.pi, np.pi / 2, 4.0, method="quadrature", n_quad=128)
        assert b == pytest.approx(a, rel=1e-6)


def test_ensemble_finite_and_quadrature_stable():
    a = ratio_ensemble(np.pi, np.pi / 2, 4.0, 8, method="quadrature", n_quad=64)
    b = ratio_ensemble(np.pi, np.pi / 2, 4.0, 8, method="quadrature", n_quad=128)
    assert np.all(np.isfinite(a))
    assert abs(a.max() - b.max()) < 0.05 * b.max()


def test_final_state_ratio_below_observability_ratio():
    c = random_coeffs(6, np.random.default_rng(3))
    assert final_state_ratio(c, np.pi, np.pi / 2, 4.0) <= observability_ratio(c, np.pi, np.pi / 2, 4.0)
