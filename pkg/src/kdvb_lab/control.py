"""Control constructions for P = d_t - d_xxx - d_xx.

* ``hum_solve``: minimum-norm v with P v = f on a box, v supported in a time
  window and free at the lateral boundary (those values act as controls).
* ``mode_construct`` / ``noncontrol_scan``: the family e^{-lam t} e^{a x} sin(b x)
  of exact solutions with zero Dirichlet trace.
* ``steer_pipeline``: nu = phi nu1 + (1 - phi) nu2 + omega joining u0 at t = 0
  to uT at t = T.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .linear import WholeLineGrid, whole_line_propagate
from .numerics import Grid1D, finite_diff, quadrature, smoothstep, sobolev_norm

__all__ = [
    "ControlProblem",
    "ControlSolution",
    "SupportError",
    "box_operator",
    "hum_solve",
    "bump_forcing",
    "NonControlMode",
    "mode_construct",
    "mode_residual",
    "ScanRow",
    "noncontrol_scan",
    "SteeringPlan",
    "SteeringResult",
    "steer_pipeline",
    "cutoff",
    "backward_propagate",
    "weighted_norm",
    "TIKHONOV",
]

TIKHONOV = 1e-12


class SupportError(ValueError):
    """Forcing or control leaves its prescribed support."""


# ---------------------------------------------------------------- HUM

@dataclass
class ControlProblem:
    """Forcing f sampled on x in [x_min, x_min + 2L], t in [0, T] (shape nx x nt)."""

    L: float
    T: float
    t1: float
    t2: float
    epsilon: float
    f: np.ndarray
    x_min: float | None = None
    support_tol: float = 1e-12

    def __post_init__(self):
        if self.x_min is None:
            self.x_min = -self.L
        if not (0 < self.t1 < self.t2 < self.T):
            raise ValueError("need 0 < t1 < t2 < T")
        if not (0 < self.epsilon < min(self.t1, self.T - self.t2)):
            raise ValueError("need 0 < epsilon < min(t1, T - t2)")
        self.f = np.asarray(self.f, dtype=float)
        if self.f.ndim != 2 or min(self.f.shape) < 8:
            raise ValueError("f must be a 2-D array with at least 8 points per axis")
        if not np.all(np.isfinite(self.f)):
            raise ValueError("f must be finite")
        leak = self.outside_mass()
        if leak > self.support_tol:
            raise SupportError(f"forcing mass outside (-L, L) x [t1, t2] is {leak:.3e}")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_min + 2 * self.L, self.f.shape[0])

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.f.shape[1])

    def outside_mass(self) -> float:
        dx, dt = 2 * self.L / (self.f.shape[0] - 1), self.T / (self.f.shape[1] - 1)
        t = self.t
        inside = np.zeros(self.f.shape, dtype=bool)
        tol = 1e-12 * self.T
        inside[1:-1, (t >= self.t1 - tol) & (t <= self.t2 + tol)] = True
        return float(np.sum(np.abs(self.f[~inside])) * dx * dt)


@dataclass
class ControlSolution:
    v: np.ndarray
    forward_residual: float
    support_leakage: float
    quadratic_cost: float
    dual_pairing: float
    regularized: bool = False
    min_pivot_ratio: float = float("nan")
    metadata: dict = field(default_factory=dict)


def box_operator(nx: int, nt: int, length: float, T: float):
    """Crank-Nicolson box scheme for P on an (nx, nt) grid.

    Returns (spatial rows, A) where A is the (len(rows), nx) matrix of
    D3 + D2 (second-order central stencils) on rows 2..nx-3. Row n of the
    scheme reads (v^{n+1} - v^n)/dt - A (v^{n+1} + v^n)/2 = (f^n + f^{n+1})/2.
    """
    dx = length / (nx - 1)
    rows = np.arange(2, nx - 2)
    A = np.zeros((rows.size, nx))
    for r, i in enumerate(rows):
        A[r, i - 2:i + 3] += np.array([-0.5, 1.0, 0.0, -1.0, 0.5]) / dx**3
        A[r, i - 1:i + 2] += np.array([1.0, -2.0, 1.0]) / dx**2
    return rows, A


def apply_box(v: np.ndarray, length: float, T: float) -> np.ndarray:
    """Discrete P v on all scheme rows, shape (nx - 4, nt - 1)."""
    nx, nt = v.shape
    rows, A = box_operator(nx, nt, length, T)
    dt = T / (nt - 1)
    return (v[rows, 1:] - v[rows, :-1]) / dt - 0.5 * A @ (v[:, 1:] + v[:, :-1])


def _row_forcing(f: np.ndarray) -> np.ndarray:
    return 0.5 * (f[2:-2, 1:] + f[2:-2, :-1])


def hum_solve(problem: ControlProblem) -> ControlSolution:
    """Minimum-norm control for the box scheme, by QR of the transposed system.

    Unknowns are v at every x node (boundary nodes included) on the time levels
    strictly inside (t1 - eps, t2 + eps); v is zero elsewhere. The scheme rows
    touching those levels form M, and v = M^T p with M M^T p = f solved through
    M^T = QR. If R has a pivot below 1e-14 of the largest one the normal
    equations are solved with a Tikhonov shift and the result is flagged.
    """
    f = problem.f
    nx, nt = f.shape
    length, T = 2 * problem.L, problem.T
    t = problem.t
    dt = T / (nt - 1)
    dx = length / (nx - 1)
    fr_all = _row_forcing(f)
    if not np.any(f):
        z = np.zeros_like(f)
        return ControlSolution(z, 0.0, 0.0, 0.0, 0.0, metadata={"levels": 0})
    lo, hi = problem.t1 - problem.epsilon, problem.t2 + problem.epsilon
    tol = 1e-12 * T
    lev = np.where((t > lo + tol) & (t < hi - tol))[0]
    if lev.size < 2:
        raise ValueError("time window contains fewer than two grid levels")
    rows, A = box_operator(nx, nt, length, T)
    trow = np.arange(lev[0] - 1, lev[-1] + 1)
    nr, K = rows.size, lev.size
    if trow.size * nr > K * nx:
        raise ValueError("time window too short for the grid: more equations than unknowns")
    M = np.zeros((trow.size * nr, K * nx))
    eye = np.zeros((nr, nx))
    eye[np.arange(nr), rows] = 1.0
    for a, n in enumerate(trow):
        for lvl, sgn in ((n, -1.0), (n + 1, 1.0)):
            b = lvl - lev[0]
            if 0 <= b < K:
                M[a * nr:(a + 1) * nr, b * nx:(b + 1) * nx] = sgn / dt * eye - 0.5 * A
    rhs = fr_all[:, trow].T.ravel()
    Q, R = sla.qr(M.T, mode="economic")
    piv = np.abs(np.diag(R))
    ratio = float(piv.min() / piv.max())
    regularized = ratio < 1e-14
    if regularized:
        G = M @ M.T
        p = np.linalg.solve(G + TIKHONOV * np.trace(G) / G.shape[0] * np.eye(G.shape[0]), rhs)
        y = M.T @ p
    else:
        # M M^T = R^T R, so y = M^T p = Q R^{-T} rhs
        z = sla.solve_triangular(R, rhs, trans="T")
        y = Q @ z
        p = sla.solve_triangular(R, z)
    v = np.zeros_like(f)
    v[:, lev] = y.reshape(K, nx).T
    res = apply_box(v, length, T) - fr_all
    fnorm = np.linalg.norm(fr_all)
    outside = np.ones(nt, dtype=bool)
    outside[lev] = False
    leak = float(np.sum(np.abs(v[:, outside])) * dx * dt)
    cost = float(np.sum(y**2) * dx * dt)
    pairing = float(p @ rhs * dx * dt)
    return ControlSolution(v, float(np.linalg.norm(res) / fnorm), leak, cost, pairing, regularized, ratio,
                           {"levels": int(K), "equations": int(M.shape[0]), "unknowns": int(M.shape[1])})


def bump_forcing(nx: int, nt: int, L: float, T: float, t1: float, t2: float, width: float = 0.3,
                 center: float = 0.0) -> np.ndarray:
    """Smooth f = exp(-(x - c)^2 / w^2) (L^2 - x^2)^3 / L^6 times a C^infinity pulse on [t1, t2]."""
    x = np.linspace(-L, L, nx)
    t = np.linspace(0.0, T, nt)
    s = (t - t1) / (t2 - t1)
    pulse = np.where((s > 0) & (s < 1), np.exp(-1.0 / np.clip(s * (1 - s), 1e-300, None)) * np.e**4, 0.0)
    space = np.exp(-((x - center) / width) ** 2) * (L**2 - x**2) ** 3 / L**6
    return np.outer(space, pulse)


# ---------------------------------------------------------------- non-controllable modes

@dataclass(frozen=True)
class NonControlMode:
    """w(x, t) = e^{-lam t} e^{a x} sin(b x) with b^2 = a (2 + 3a), lam = 2a (1 + 2a)^2."""

    a: float
    b: float
    lam: float
    lam_printed: float

    @property
    def z(self) -> complex:
        return complex(self.a, self.b)

    @property
    def z1(self) -> float:
        return -(1 + 2 * self.a)

    def cubic_residuals(self) -> tuple[float, float]:
        """|z^3 + z^2 + lam| for z = a + ib and z = -(1 + 2a)."""
        z, z1 = self.z, self.z1
        return abs(z**3 + z**2 + self.lam), abs(z1**3 + z1**2 + self.lam)

    def field(self, x, t) -> np.ndarray:
        x, t = np.asarray(x, float), np.asarray(t, float)
        return np.exp(-self.lam * t) * np.exp(self.a * x) * np.sin(self.b * x)

    def trace_x(self, t) -> np.ndarray:
        """w_x(0, t) = b e^{-lam t}."""
        return self.b * np.exp(-self.lam * np.asarray(t, float))

    def trace_xx(self, t) -> np.ndarray:
        """w_xx(0, t) = 2ab e^{-lam t}."""
        return 2 * self.a * self.b * np.exp(-self.lam * np.asarray(t, float))


def mode_construct(a: float) -> NonControlMode:
    if not a > 0:
        raise ValueError("a must be positive")
    b = float(np.sqrt(a * (2 + 3 * a)))
    return NonControlMode(float(a), b, 2 * a * (1 + 2 * a) ** 2, 2 * a * (1 + 3 * a) * (2 * a + 1))


def mode_residual(mode: NonControlMode, space_grid: Grid1D, time_grid: Grid1D) -> float:
    """Max |w_t - w_xxx - w_xx| over interior nodes, all derivatives by finite differences."""
    x, t = space_grid.points, time_grid.points
    w = mode.field(x[:, None], t[None, :])
    r = (finite_diff(w, time_grid, 1, axis=1) - finite_diff(w, space_grid, 3, axis=0)
         - finite_diff(w, space_grid, 2, axis=0))
    return float(np.max(np.abs(r[2:-2, 1:-1])))


def _exp_integral(c: float, T: float) -> float:
    """int_0^T e^{-c t} dt."""
    return T if c == 0 else -np.expm1(-c * T) / c


@dataclass
class ScanRow:
    a: float
    b: float
    lam: float
    N: float
    D: float

    @property
    def ratio(self) -> float:
        return self.N / self.D


def _numerator(mode: NonControlMode, X: float) -> float:
    # int_0^X e^{2ax} sin^2(bx) dx = (1/2) int e^{2ax} - (1/2) Re int e^{(2a + 2ib) x}
    a, b = mode.a, mode.b
    k = complex(2 * a, 2 * b)
    val = 0.5 * np.expm1(2 * a * X) / (2 * a) - 0.5 * (np.expm1(k * X) / k).real
    return float(np.sqrt(val))


def noncontrol_scan(a_values, X: float = 20.0, T: float = 1.0, method: str = "closed",
                    nt: int = 1025) -> list[ScanRow]:
    """N(a) = ||w(., 0)||_{L2(0, X)} against D(a) = ||w_x(0, .)||_{H1(0,T)} + ||w_xx(0, .)||_{H1(0,T)}.

    ``method="closed"`` uses exact integrals; ``"surrogate"`` uses the discrete
    H^1 norm of the sampled traces (even extension) and Simpson in x.
    """
    a_values = np.asarray(a_values, dtype=float)
    if a_values.ndim != 1 or np.any(a_values <= 0):
        raise ValueError("a_values must be positive")
    if np.any(np.diff(a_values) >= 0):
        raise ValueError("a_values must be strictly decreasing")
    out = []
    for a in a_values:
        m = mode_construct(a)
        if method == "closed":
            N = _numerator(m, X)
            base = np.sqrt((1 + m.lam**2) * _exp_integral(2 * m.lam, T))
            D = m.b * base + 2 * m.a * m.b * base
        elif method == "surrogate":
            gx = Grid1D(0.0, X, 8 * nt + 1)
            N = float(np.sqrt(quadrature(m.field(gx.points, 0.0) ** 2, gx)))
            tt = np.linspace(0.0, T, nt)
            D = (sobolev_norm(m.trace_x(tt), 1.0, length=T, extension="even")
                 + sobolev_norm(m.trace_xx(tt), 1.0, length=T, extension="even"))
        else:
            raise ValueError(f"unknown method {method!r}")
        out.append(ScanRow(m.a, m.b, m.lam, N, D))
    return out


# ---------------------------------------------------------------- steering

def cutoff(t, T: float, tau: float):
    """(phi, phi') with phi = 1 for t <= tau, 0 for t >= T - tau, C-infinity in between."""
    t = np.asarray(t, dtype=float)
    width = T - 2 * tau
    y = np.clip((t - tau) / width, 0.0, 1.0)
    phi = 1.0 - smoothstep(y)
    a = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
    b = np.where(y < 1, np.exp(-1.0 / np.where(y < 1, 1 - y, 1.0)), 0.0)
    inner = (y > 0) & (y < 1)
    ys = np.where(inner, y, 0.5)
    ds = np.where(inner, a * b * (1 / ys**2 + 1 / (1 - ys) ** 2) / (a + b) ** 2, 0.0)
    return phi, -ds / width


def backward_propagate(uT, grid: WholeLineGrid, s, tol: float = 1e-13):
    """Solve P nu = 0 backward over time s >= 0 from nu = uT on a periodic box.

    Multiplies by e^{(i xi^3 + xi^2) s} after discarding the Fourier modes whose
    amplitude is below ``tol`` times the largest. The problem is ill-posed in
    general, so this is meant for band-limited targets; returns (values, filter
    defect), the defect being the relative L2 size of what was discarded.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    uT = np.asarray(uT, dtype=float)
    c = np.fft.rfft(uT)
    xi = 2 * np.pi * np.fft.rfftfreq(uT.size, d=grid.dx)
    keep = np.abs(c) >= tol * np.abs(c).max() if np.any(c) else np.ones(c.shape, bool)
    # keep a contiguous band so no isolated round-off modes get amplified
    cut = np.argmin(keep) if not keep.all() else keep.size
    band = np.arange(c.size) < cut
    dropped = np.linalg.norm(c[~band]) / max(np.linalg.norm(c), 1e-300)
    out = np.zeros(s.shape + c.shape, dtype=complex)
    out[..., band] = c[band] * np.exp((1j * xi[band] ** 3 + xi[band] ** 2) * s[..., None])
    return np.fft.irfft(out, n=uT.size), float(dropped)


def weighted_norm(values, x, beta: float) -> float:
    """(int u^2 e^{-2 beta x} dx)^{1/2} by Simpson on the uniform nodes x."""
    x = np.asarray(x, float)
    g = Grid1D(float(x[0]), float(x[-1]), x.size)
    return float(np.sqrt(quadrature(np.asarray(values) ** 2 * np.exp(-2 * beta * x), g)))


@dataclass
class SteeringPlan:
    """Steer u0 (at t = 0) to uT (at t = T) on (0, X); callables of x."""

    u0: object
    uT: object
    X: float = 20.0
    T: float = 2.0
    tau: float = 0.4
    beta: float = 0.5
    nx: int = 97
    nt: int = 65
    epsilon: float | None = None
    target_mode: str = "backward"
    filter_tol: float = 1e-10
    pad: float | None = None

    def __post_init__(self):
        if not (0 < self.tau < self.T / 2):
            raise ValueError("need 0 < tau < T/2")
        if self.target_mode not in ("backward", "forward"):
            raise ValueError("target_mode must be 'backward' or 'forward'")
        if self.epsilon is None:
            self.epsilon = self.tau / 2
        if self.pad is None:
            self.pad = self.X
        if np.exp(-2 * self.beta * self.X) * np.linalg.norm(self.sample(self.uT)) >= 1e-8 * np.sqrt(self.nx):
            raise ValueError("X too small for the weight: e^{-2 beta X} ||uT|| must be < 1e-8")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.X, self.nx)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt)

    def sample(self, u) -> np.ndarray:
        vals = u(self.x) if callable(u) else np.asarray(u, dtype=float)
        vals = np.asarray(vals, dtype=float)
        if vals.shape != (self.nx,):
            raise ValueError(f"data must have {self.nx} samples")
        return vals

    def box(self) -> tuple[WholeLineGrid, int]:
        """Periodic box [-pad, X + pad) with the grid spacing; index of x = 0."""
        dx = self.X / (self.nx - 1)
        n_pad = int(np.ceil(self.pad / dx))
        return WholeLineGrid(-n_pad * dx, dx, self.nx + 2 * n_pad), n_pad

    def sample_box(self, u) -> np.ndarray:
        """Samples on the periodic box; arrays given on (0, X) are padded with zeros."""
        box, i0 = self.box()
        if callable(u):
            return np.asarray(u(box.points), dtype=float)
        out = np.zeros(box.n)
        out[i0:i0 + self.nx] = self.sample(u)
        return out


@dataclass
class SteeringResult:
    nu: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray
    omega: np.ndarray
    forcing: np.ndarray
    phi: np.ndarray
    error_initial: float
    error_final: float
    scheme_residual: float
    hum: ControlSolution
    metadata: dict = field(default_factory=dict)


def steer_pipeline(plan: SteeringPlan) -> SteeringResult:
    """nu = phi nu1 + (1 - phi) nu2 + omega on (0, X) x (0, T).

    nu1 = S(t) u0 forward; in the default ``"backward"`` mode nu2 solves
    P nu2 = 0 with nu2(T) = uT, so P omega = phi' (nu2 - nu1) is supported
    where phi' is. ``target_mode="forward"`` takes nu2(t) = S(T - t) uT and the
    forcing phi' (nu1 - nu2) + 2 (phi - 1) A nu2 (A = d_xxx + d_xx); its
    support check fails unless uT = 0.
    """
    x, t = plan.x, plan.t
    u0, uT = plan.sample(plan.u0), plan.sample(plan.uT)
    box, i0 = plan.box()
    phi, dphi = cutoff(t, plan.T, plan.tau)
    inner = slice(i0, i0 + plan.nx)

    nu1 = whole_line_propagate(plan.sample_box(plan.u0), box, t)[:, inner].T
    defect = 0.0
    if plan.target_mode == "backward":
        vals, defect = backward_propagate(plan.sample_box(plan.uT), box, plan.T - t, plan.filter_tol)
        nu2 = vals[:, inner].T
        f = dphi[None, :] * (nu2 - nu1)
    else:
        full = whole_line_propagate(plan.sample_box(plan.uT), box, plan.T - t)
        sym = (1j * box.xi) ** 3 + (1j * box.xi) ** 2
        nu2 = full[:, inner].T
        Anu2 = np.fft.ifft(sym * np.fft.fft(full, axis=-1), axis=-1).real[:, inner].T
        f = -(dphi[None, :] * (nu1 - nu2) + 2 * (phi - 1)[None, :] * Anu2)
    t1, t2 = plan.tau, plan.T - plan.tau
    # lateral boundary nodes carry no scheme equation; their values are controls
    f = f.copy()
    f[[0, -1], :] = 0.0
    problem = ControlProblem(plan.X / 2, plan.T, t1, t2, plan.epsilon, f, x_min=0.0)
    hum = hum_solve(problem)
    omega = hum.v
    nu = phi[None, :] * nu1 + (1 - phi)[None, :] * nu2 + omega
    # relative errors; absolute when the reference state vanishes
    n0, nT = weighted_norm(u0, x, 0.0), weighted_norm(uT, x, plan.beta)
    e0 = weighted_norm(nu[:, 0] - u0, x, 0.0) / (n0 if n0 > 0 else 1.0)
    eT = weighted_norm(nu[:, -1] - uT, x, plan.beta) / (nT if nT > 0 else 1.0)
    # discrete P nu on the scheme rows, relative to the scale of P applied to each stage
    r = apply_box(nu, plan.X, plan.T)
    scale = max(np.linalg.norm(apply_box(phi[None, :] * nu1, plan.X, plan.T)), 1e-300)
    return SteeringResult(nu, nu1, nu2, omega, f, phi, float(e0), float(eT), float(np.linalg.norm(r) / scale), hum,
                          {"filter_defect": defect, "target_mode": plan.target_mode, "t1": t1, "t2": t2,
                           "epsilon": plan.epsilon})
