"""Periodic operator u_xxx + u_xx on (-L, L): spectrum, propagator and the
observability ratio on a sub-window (-l, l) x (0, T)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PeriodicSpectrum",
    "ModeCoeffs",
    "spectrum",
    "propagate_periodic",
    "observability_ratio",
    "final_state_ratio",
    "ingham_params",
    "random_coeffs",
    "ratio_ensemble",
    "eval_modes",
]


@dataclass(frozen=True)
class PeriodicSpectrum:
    """Eigenvalues lam_n = -i (n pi/L)^3 - (n pi/L)^2 for |n| <= n_max."""

    L: float
    n_max: int
    n: np.ndarray
    eigenvalues: np.ndarray
    gap: float

    @property
    def alpha(self) -> np.ndarray:
        """Frequencies alpha_n = (n pi / L)^3 (minus the imaginary parts)."""
        return (self.n * np.pi / self.L) ** 3

    def sorted_gaps(self) -> np.ndarray:
        """alpha_{n+1} - alpha_n for consecutive n."""
        return np.diff(self.alpha)

    def pair_gaps(self) -> np.ndarray:
        """alpha_n - alpha_{-n} for n = 1..n_max."""
        pos = self.n[self.n > 0]
        return 2.0 * (pos * np.pi / self.L) ** 3

    def basis(self, x) -> np.ndarray:
        """Orthonormal e_n(x) = (2L)^{-1/2} e^{i n pi x / L}, shape (len(x), n_modes)."""
        x = np.asarray(x, dtype=float)
        return np.exp(1j * np.outer(x, self.n) * np.pi / self.L) / np.sqrt(2 * self.L)


@dataclass
class ModeCoeffs:
    """Coefficients c_n, n = -n_max..n_max, in the orthonormal basis."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 1 or c.size % 2 == 0:
            raise ValueError("coefficients must be a 1-D array of odd length (n = -n_max..n_max)")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        self.coefficients = c

    @property
    def n_max(self) -> int:
        return self.coefficients.size // 2

    @classmethod
    def single(cls, n: int, n_max: int, value: complex = 1.0) -> "ModeCoeffs":
        c = np.zeros(2 * n_max + 1, dtype=complex)
        c[n + n_max] = value
        return cls(c)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))


def spectrum(L: float, n_max: int) -> PeriodicSpectrum:
    if L <= 0:
        raise ValueError("L must be positive")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n = np.arange(-n_max, n_max + 1)
    k = n * np.pi / L
    lam = -1j * k**3 - k**2
    return PeriodicSpectrum(float(L), int(n_max), n, lam, 2 * np.pi**3 / L**3)


def ingham_params(L: float) -> tuple[float, float]:
    """(gamma, minimal observation time pi/gamma) for the gap gamma = 2 pi^3 / L^3."""
    if L <= 0:
        raise ValueError("L must be positive")
    gamma = 2 * np.pi**3 / L**3
    return gamma, np.pi / gamma


def _check(c: ModeCoeffs, spec: PeriodicSpectrum):
    if c.n_max != spec.n_max:
        raise ValueError(f"coefficients have n_max={c.n_max}, spectrum has n_max={spec.n_max}")


def propagate_periodic(c: ModeCoeffs, spec: PeriodicSpectrum, t: float) -> ModeCoeffs:
    """c_n -> e^{lam_n t} c_n."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    _check(c, spec)
    return ModeCoeffs(np.exp(spec.eigenvalues * t) * c.coefficients)


def eval_modes(c: ModeCoeffs, spec: PeriodicSpectrum, x, t) -> np.ndarray:
    """u(x, t) = sum_n e^{lam_n t} c_n e_n(x) on the mesh, shape (len(x), len(t))."""
    _check(c, spec)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    e = spec.basis(x)
    growth = np.exp(np.outer(spec.eigenvalues, t))
    return e @ (c.coefficients[:, None] * growth)


def _gram(spec: PeriodicSpectrum, l: float, T: float) -> np.ndarray:
    """G_mn = int_{-l}^{l} int_0^T e^{lam_m t} e_m conj(e^{lam_n t} e_n) dt dx in closed form."""
    n, L = spec.n, spec.L
    dn = (n[:, None] - n[None, :]) * np.pi / L
    with np.errstate(divide="ignore", invalid="ignore"):
        space = np.where(dn == 0, 2 * l, 2 * np.sin(dn * l) / np.where(dn == 0, 1.0, dn))
    space = space / (2 * L)
    z = spec.eigenvalues[:, None] + np.conj(spec.eigenvalues)[None, :]
    small = np.abs(z * T) < 1e-8
    zs = np.where(small, 1.0, z)
    time = np.where(small, T * (1 + z * T / 2), np.expm1(zs * T) / zs)
    return space * time


def _gauss_window(l: float, T: float, n_quad: int):
    xg, wg = np.polynomial.legendre.leggauss(n_quad)
    x = l * xg
    wx = l * wg
    # composite Gauss in time: the modes decay on different scales
    panels = max(1, n_quad // 16)
    edges = np.linspace(0.0, T, panels + 1)
    tg, wt = [], []
    xq, wq = np.polynomial.legendre.leggauss(16 if panels > 1 else n_quad)
    for a, b in zip(edges[:-1], edges[1:]):
        tg.append(0.5 * (a + b) + 0.5 * (b - a) * xq)
        wt.append(0.5 * (b - a) * wq)
    return x, wx, np.concatenate(tg), np.concatenate(wt)


def observability_ratio(c: ModeCoeffs, L: float, l: float, T: float, method: str = "closed",
                        n_quad: int = 64) -> float:
    """||u0||^2_{L^2(-L,L)} / ||u||^2_{L^2((-l,l) x (0,T))} for u = S_L(t) u0.

    ``method="closed"`` uses the exact modal cross integrals, ``"quadrature"``
    samples u on an ``n_quad``-point Gauss rule in x and a composite Gauss
    rule in t.
    """
    if not (0 < l < L):
        raise ValueError("need 0 < l < L")
    if T <= 0:
        raise ValueError("T must be positive")
    if not np.any(c.coefficients):
        raise ValueError("zero coefficient vector: the ratio is undefined")
    spec = spectrum(L, c.n_max)
    num = float(np.sum(np.abs(c.coefficients) ** 2))
    if method == "closed":
        cc = c.coefficients
        den = float(np.real(cc @ _gram(spec, l, T) @ np.conj(cc)))
    elif method == "quadrature":
        x, wx, t, wt = _gauss_window(l, T, n_quad)
        u = eval_modes(c, spec, x, t)
        den = float(wx @ (np.abs(u) ** 2) @ wt)
    else:
        raise ValueError(f"unknown method {method!r}")
    return num / den


def final_state_ratio(c: ModeCoeffs, L: float, l: float, T: float) -> float:
    """||S_L(T) u0||^2 / ||u||^2_{L^2((-l,l) x (0,T))}."""
    spec = spectrum(L, c.n_max)
    num = float(np.sum(np.exp(2 * spec.eigenvalues.real * T) * np.abs(c.coefficients) ** 2))
    return num / (float(np.sum(np.abs(c.coefficients) ** 2)) / observability_ratio(c, L, l, T))


def random_coeffs(n_max: int, rng: np.random.Generator, decay: float = 0.0) -> ModeCoeffs:
    """Complex Gaussian coefficients, optionally weighted by <n>^{-decay}."""
    n = np.arange(-n_max, n_max + 1)
    c = rng.standard_normal(n.size) + 1j * rng.standard_normal(n.size)
    return ModeCoeffs(c * (1.0 + n**2) ** (-decay / 2))


def ratio_ensemble(L: float, l: float, T: float, n_max: int, draws: int = 100, seed: int = 0,
                   method: str = "closed", n_quad: int = 64, decay: float = 0.0) -> np.ndarray:
    """Observability ratios for ``draws`` random coefficient vectors."""
    rng = np.random.default_rng(seed)
    return np.array([observability_ratio(random_coeffs(n_max, rng, decay), L, l, T, method, n_quad)
                     for _ in range(draws)])
