"""Carleman weight psi = phi(x) / (t (T - t)), phi(x) = -x^2 - (2L + 3T/2) x, and
numerical verification of the weighted estimate for P q = q_t - q_xx - q_xxx
on (-L, L) x (0, T).

The coefficients A, B, C of the conjugated operator
e^{-s psi} P (e^{s psi} u) = u_t - u_xxx + C u_xx + B u_x + A u
and the derived fields D, E, F are obtained symbolically once and evaluated
with numpy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

from .numerics import Grid1D, _stencil, quadrature

__all__ = [
    "CarlemanWeight",
    "CoefficientField",
    "AdmissibleTest",
    "InequalityResult",
    "PositivityScan",
    "weight_eval",
    "coefficients_abc",
    "coefficients_def",
    "fd_crosscheck",
    "positivity_scan",
    "verify_inequality",
    "admissible_sample",
    "admissible_polynomial",
    "sample_ratios",
    "symbolic_coefficients",
    "DEFAULT_LADDER",
    "graded_grid",
]

DEFAULT_LADDER = 2.0 ** np.arange(-3.0, 10.01, 0.25)


@dataclass(frozen=True)
class CarlemanWeight:
    L: float
    T: float
    s: float = 1.0

    def __post_init__(self):
        if self.L <= 0 or self.T <= 0 or self.s <= 0:
            raise ValueError("L, T and s must be positive")

    @property
    def slope(self) -> float:
        """Linear coefficient 2L + 3T/2 of -phi."""
        return 2 * self.L + 1.5 * self.T

    def phi(self, x):
        return -np.asarray(x) ** 2 - self.slope * np.asarray(x)

    def dphi(self, x):
        return -2 * np.asarray(x) - self.slope

    def with_s(self, s: float) -> "CarlemanWeight":
        return CarlemanWeight(self.L, self.T, s)


def _check_time(t, T):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t >= T):
        raise ValueError("psi is singular at t = 0 and t = T; need 0 < t < T")
    return t


def weight_eval(w: CarlemanWeight, x, t):
    """(psi, psi_x, psi_xx, psi_xxx, psi_t) at (x, t); broadcasts."""
    t = _check_time(t, w.T)
    x = np.asarray(x, dtype=float)
    tau = t * (w.T - t)
    phi = w.phi(x)
    psi = phi / tau
    psi_x = w.dphi(x) / tau
    psi_xx = -2.0 / tau + 0 * x
    psi_xxx = np.zeros(np.broadcast(x, t).shape)
    psi_t = phi * (2 * t - w.T) / tau**2
    return psi, psi_x, psi_xx, psi_xxx, psi_t


@lru_cache(maxsize=2)
def symbolic_coefficients(variant: str = "derived"):
    """Sympy expressions for A..F in the symbols (x, t, s, L, T, epsilon).

    ``variant="derived"`` expands the conjugated operator directly;
    ``variant="printed"`` uses the printed A, which carries 3 psi_x psi_xx in
    both the s^2 and the s^3 bracket.
    """
    x, t, s, L, T, eps = sp.symbols("x t s L T epsilon", real=True)
    phi = -x**2 - (2 * L + sp.Rational(3, 2) * T) * x
    psi = phi / (t * (T - t))
    px, pxx, pxxx, pt = (sp.diff(psi, x), sp.diff(psi, x, 2), sp.diff(psi, x, 3), sp.diff(psi, t))
    if variant == "derived":
        u0, u1, u2 = sp.symbols("u0 u1 u2")
        U = sp.Function("U")(x, t)
        e = sp.exp(s * psi)
        conj = sp.expand((sp.diff(e * U, t) - sp.diff(e * U, x, 3) - sp.diff(e * U, x, 2)) / e)
        conj = conj.subs({sp.diff(U, x, 2): u2, sp.diff(U, x): u1}).subs(U, u0)
        conj = sp.expand(conj)
        A, B, C = (sp.together(conj.coeff(v)) for v in (u0, u1, u2))
    elif variant == "printed":
        A = s * (pt - pxx - pxxx) - s**2 * (px**2 + 3 * px * pxx) - s**3 * (px**3 + 3 * px * pxx)
        B = -(2 * s * px + 3 * s * pxx) - 3 * s**2 * px**2
        C = -1 - 3 * s * px
    else:
        raise ValueError(f"unknown variant {variant!r}")
    Cx = sp.diff(C, x)
    D = -sp.diff(A, t) + sp.diff(A, x, 3) - sp.diff(A * B, x) - sp.diff(Cx * A, x)
    E = sp.diff(C, t) + 2 * Cx * B - sp.diff(Cx * C, x) - sp.diff(C, x, 3) - sp.diff(B * C, x) - eps * Cx**2
    F = 3 * Cx
    syms = (x, t, s, L, T, eps)
    exprs = {"A": A, "B": B, "C": C, "D": D, "E": E, "F": F}
    funcs = {k: sp.lambdify(syms, v, "numpy") for k, v in exprs.items()}
    return syms, exprs, funcs


def _eval(name, w, x, t, epsilon=0.1, variant="derived"):
    _, _, funcs = symbolic_coefficients(variant)
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), _check_time(t, w.T))
    out = funcs[name](x, t, w.s, w.L, w.T, epsilon)
    return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()


def coefficients_abc(w: CarlemanWeight, x, t, variant: str = "derived"):
    """(A, B, C) at interior points."""
    return tuple(_eval(k, w, x, t, variant=variant) for k in "ABC")


@dataclass
class CoefficientField:
    x: np.ndarray
    t: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    epsilon: float
    fd_error: float | None = None

    def minima(self) -> dict:
        return {k: float(getattr(self, k).min()) for k in "DEF"}

    def positive(self) -> bool:
        return all(v > 0 for v in self.minima().values())


def _margin_grid(w: CarlemanWeight, nx: int, nt: int, margin: float):
    if not (0 < margin < 0.5):
        raise ValueError("margin must lie in (0, 0.5)")
    x = np.linspace(-w.L, w.L, nx)
    t = np.linspace(margin * w.T, (1 - margin) * w.T, nt)
    return x, t


def fd_crosscheck(w: CarlemanWeight, x, t, epsilon: float = 0.1, h: float = 1e-3,
                  variant: str = "derived") -> float:
    """Max relative deviation of D, E, F from versions built with finite differences
    of the closed-form A, B, C (sixth-order central stencils)."""
    X, Tm = np.meshgrid(np.asarray(x, float), np.asarray(t, float), indexing="ij")
    offs = tuple(range(-3, 4))
    st = {k: _stencil(offs, k) for k in (1, 2, 3)}

    def d(name, order, axis, X=X, Tm=Tm):
        acc = 0.0
        for o, c in zip(offs, st[order]):
            if c == 0:
                continue
            xs, ts = (X + o * h, Tm) if axis == 0 else (X, Tm + o * h)
            acc = acc + c * _eval(name, w, xs, ts, epsilon, variant)
        return acc / h**order

    A, B, C = (_eval(k, w, X, Tm, epsilon, variant) for k in "ABC")
    Ax, Bx, Cx, Cxx = d("A", 1, 0), d("B", 1, 0), d("C", 1, 0), d("C", 2, 0)
    # (AB)_x and (C_x A)_x by the product rule
    D = -d("A", 1, 1) + d("A", 3, 0) - (Ax * B + A * Bx) - (Cxx * A + Cx * Ax)
    E = d("C", 1, 1) + 2 * Cx * B - (Cxx * C + Cx * Cx) - d("C", 3, 0) - (Bx * C + B * Cx) - epsilon * Cx**2
    F = 3 * Cx
    err = 0.0
    for name, approx in (("D", D), ("E", E), ("F", F)):
        exact = _eval(name, w, X, Tm, epsilon, variant)
        err = max(err, float(np.max(np.abs(approx - exact)) / np.max(np.abs(exact))))
    return err


def coefficients_def(w: CarlemanWeight, nx: int = 101, nt: int = 101, epsilon: float = 0.1,
                     margin: float = 0.025, variant: str = "derived", check: bool = True) -> CoefficientField:
    """A..F on the interior margin grid; optionally cross-checked by finite differences."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    x, t = _margin_grid(w, nx, nt, margin)
    X, Tm = np.meshgrid(x, t, indexing="ij")
    vals = {k: _eval(k, w, X, Tm, epsilon, variant) for k in "ABCDEF"}
    fd = fd_crosscheck(w, x[:: max(1, nx // 8)], t[:: max(1, nt // 8)], epsilon, variant=variant) if check else None
    return CoefficientField(x, t, epsilon=epsilon, fd_error=fd, **vals)


@dataclass
class PositivityScan:
    s0: float | None
    ladder: np.ndarray
    minima: list = field(default_factory=list)
    margin: float = 0.025

    @property
    def found(self) -> bool:
        return self.s0 is not None


def positivity_scan(L: float, T: float, ladder=None, nx: int = 201, nt: int = 201, epsilon: float = 0.1,
                    margin: float = 0.025, variant: str = "derived", strict: bool = False) -> PositivityScan:
    """Smallest s on the ladder with min D, E, F > 0 on the interior margin grid.

    With ``strict=True`` an exhausted ladder raises ``RuntimeError`` carrying the
    minima seen at the last rung.
    """
    ladder = np.asarray(DEFAULT_LADDER if ladder is None else ladder, dtype=float)
    if ladder.ndim != 1 or ladder.size == 0 or np.any(np.diff(ladder) <= 0) or ladder[0] <= 0:
        raise ValueError("ladder must be a positive increasing sequence")
    w0 = CarlemanWeight(L, T, float(ladder[0]))
    x, t = _margin_grid(w0, nx, nt, margin)
    X, Tm = np.meshgrid(x, t, indexing="ij")
    minima = []
    for s in ladder:
        w = w0.with_s(float(s))
        mins = {k: float(_eval(k, w, X, Tm, epsilon, variant).min()) for k in "DEF"}
        minima.append(mins)
        if all(v > 0 for v in mins.values()):
            return PositivityScan(float(s), ladder, minima, margin)
    if strict:
        raise RuntimeError(f"no s on the ladder makes D, E, F positive; last minima {minima[-1]}")
    return PositivityScan(None, ladder, minima, margin)


@dataclass
class AdmissibleTest:
    """q and the derivatives needed for P q on a tensor grid (x along axis 0)."""

    x: np.ndarray
    t: np.ndarray
    q: np.ndarray
    q_x: np.ndarray
    q_xx: np.ndarray
    q_xxx: np.ndarray
    q_t: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        shape = (len(self.x), len(self.t))
        for name in ("q", "q_x", "q_xx", "q_xxx", "q_t"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != shape:
                raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
            setattr(self, name, a)
        scale = max(1.0, float(np.max(np.abs(self.q))))
        edge = max(float(np.max(np.abs(a[[0, -1]]))) for a in (self.q, self.q_x, self.q_xx))
        if edge > self.tol * scale:
            raise ValueError(f"q, q_x, q_xx must vanish at x = +-L (edge size {edge:.2e})")

    @property
    def Pq(self) -> np.ndarray:
        return self.q_t - self.q_xx - self.q_xxx

    def scaled(self, alpha: float) -> "AdmissibleTest":
        return AdmissibleTest(self.x, self.t, *(alpha * a for a in (self.q, self.q_x, self.q_xx, self.q_xxx, self.q_t)),
                              tol=self.tol)


def _envelope(x, L):
    """(L^2 - x^2)^3 and its first three derivatives."""
    p = np.polynomial.Polynomial([L**2, 0, -1]) ** 3
    return [p.deriv(k)(x) if k else p(x) for k in range(4)]


def admissible_polynomial(L: float, T: float, x, t) -> AdmissibleTest:
    """q = (L^2 - x^2)^3 sin^3(pi t / T)."""
    x, t = np.asarray(x, float), np.asarray(t, float)
    env = _envelope(x, L)
    st = np.sin(np.pi * t / T)
    g, gt = st**3, 3 * st**2 * np.cos(np.pi * t / T) * np.pi / T
    return AdmissibleTest(x, t, np.outer(env[0], g), np.outer(env[1], g), np.outer(env[2], g),
                          np.outer(env[3], g), np.outer(env[0], gt))


def admissible_sample(L: float, T: float, x, t, rng: np.random.Generator, bumps: int = 3) -> AdmissibleTest:
    """(L^2 - x^2)^3 times a sum of random Gaussian bumps in x, each modulated in t."""
    x, t = np.asarray(x, float), np.asarray(t, float)
    env = _envelope(x, L)
    G = [np.zeros((x.size, t.size)) for _ in range(4)]
    Gt = np.zeros((x.size, t.size))
    for _ in range(bumps):
        c, sig = rng.uniform(-L, L), rng.uniform(0.15, 0.6) * L
        a, b = rng.normal(), rng.uniform(0, 0.9)
        om, th = rng.uniform(0.5, 3.0) * np.pi / T, rng.uniform(0, 2 * np.pi)
        z = (x - c) / sig
        g = np.exp(-0.5 * z**2)
        gx = [g, -z / sig * g, (z**2 - 1) / sig**2 * g, (-z**3 + 3 * z) / sig**3 * g]
        tm, tmt = 1 + b * np.sin(om * t + th), b * om * np.cos(om * t + th)
        for k in range(4):
            G[k] += a * np.outer(gx[k], tm)
        Gt += a * np.outer(gx[0], tmt)
    e = [v[:, None] for v in env]
    q = e[0] * G[0]
    qx = e[1] * G[0] + e[0] * G[1]
    qxx = e[2] * G[0] + 2 * e[1] * G[1] + e[0] * G[2]
    qxxx = e[3] * G[0] + 3 * e[2] * G[1] + 3 * e[1] * G[2] + e[0] * G[3]
    return AdmissibleTest(x, t, q, qx, qxx, qxxx, e[0] * Gt)


@dataclass
class InequalityResult:
    lhs: float
    rhs_raw: float
    ratio: float
    log_scale: float

    def as_tuple(self):
        return self.lhs, self.rhs_raw, self.ratio


def graded_grid(w: CarlemanWeight, nx: int, nt: int, margin: float = 0.025, px: float = 3.0,
                pt: float = 4.0):
    """Nodes and quadrature weights clustered where e^{-2 s psi} peaks.

    The exponent -2 s psi grows with x on [-L, L] and blows up towards both time
    margins, so x = L - 2L (1 - xi)^px and t = a + (b - a) eta^pt / (eta^pt + (1 - eta)^pt)
    are used with composite Simpson weights in (xi, eta). Endpoints are included.
    """
    if nx % 2 == 0 or nt % 2 == 0:
        raise ValueError("graded_grid needs odd point counts (Simpson panels)")
    xi = np.linspace(0.0, 1.0, nx)
    x = w.L - 2 * w.L * (1 - xi) ** px
    jx = 2 * w.L * px * (1 - xi) ** (px - 1)
    a, b = margin * w.T, (1 - margin) * w.T
    eta = np.linspace(0.0, 1.0, nt)
    num, den = eta**pt, eta**pt + (1 - eta) ** pt
    t = a + (b - a) * num / den
    dnum, dden = pt * eta ** (pt - 1), pt * eta ** (pt - 1) - pt * (1 - eta) ** (pt - 1)
    jt = (b - a) * (dnum * den - num * dden) / den**2

    def simpson_weights(n):
        c = np.ones(n)
        c[1:-1:2], c[2:-1:2] = 4.0, 2.0
        return c / (3.0 * (n - 1))

    return x, simpson_weights(nx) * jx, t, simpson_weights(nt) * jt


def verify_inequality(w: CarlemanWeight, q: AdmissibleTest, weights=None, method: str = "simpson") -> InequalityResult:
    """Weighted integrals of the estimate on the grid of ``q``.

    ``weights=(wx, wt)`` supplies tensor quadrature weights (see ``graded_grid``);
    otherwise the grid must be uniform and ``method`` is used. Both sides carry
    e^{-2 s psi}, which spans hundreds of orders of magnitude near the time
    margins, so they are reported relative to e^{log_scale} (the maximum of
    -2 s psi on the grid). The ratio is unaffected. For q = 0 the ratio is NaN.
    """
    x, t = q.x, q.t
    psi = weight_eval(w, x[:, None], t[None, :])[0]
    expo = -2 * w.s * psi
    m = float(expo.max())
    weight = np.exp(expo - m)
    tau = (t * (w.T - t))[None, :]
    s = w.s
    dens = (s**5 / tau**5 * q.q**2 + s**3 / tau**3 * q.q_x**2 + s / tau * q.q_xx**2) * weight
    rdens = q.Pq**2 * weight
    if weights is not None:
        wx, wt = weights

        def integ(f):
            return float(wx @ f @ wt)
    else:
        gx = Grid1D(float(x[0]), float(x[-1]), x.size)
        gt = Grid1D(float(t[0]), float(t[-1]), t.size)

        def integ(f):
            return float(quadrature(quadrature(f, gx, method, axis=0), gt, method))

    lhs, rhs = integ(dens), integ(rdens)
    ratio = lhs / rhs if rhs > 0 else float("nan")
    return InequalityResult(lhs, rhs, ratio, m)


def sample_ratios(L: float, T: float, s: float, nx: int = 401, nt: int = 401, samples: int = 50,
                  seed: int = 0, margin: float = 0.025) -> np.ndarray:
    """lhs / rhs for ``samples`` random admissible q at parameter s (graded quadrature)."""
    w = CarlemanWeight(L, T, s)
    x, wx, t, wt = graded_grid(w, nx, nt, margin)
    rng = np.random.default_rng(seed)
    return np.array([verify_inequality(w, admissible_sample(L, T, x, t, rng), (wx, wt)).ratio
                     for _ in range(samples)])
