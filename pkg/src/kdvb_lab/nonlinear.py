"""Fixed-point solver for u_t - u_xxx - u_xx = u u_x + F on x > 0 and the
energy balance of the linear flow."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linear import (BoundaryData, HalfLineState, WholeLineGrid, boundary_quadrature,
                     duhamel_forced, extend_to_box, trace_extract)
from .numerics import Grid1D, quadrature

__all__ = [
    "IbvpProblem",
    "SolveReport",
    "EnergyAudit",
    "gamma_map",
    "solve_fixed_point",
    "energy_audit",
    "contraction_radius",
    "lipschitz_sample",
    "spacetime_norm",
    "manufactured_problem",
]


@dataclass
class IbvpProblem:
    """Data (u0, h, g, T) on the half-line with optional forcing F(x, t).

    ``forcing`` is sampled as ``[x_i, t_j]`` on ``space_grid`` x the boundary
    time grid. ``extension`` selects how half-line fields are continued to
    x < 0 before whole-line propagation (``"smooth"`` or ``"zero"``).
    """

    u0: np.ndarray
    space_grid: Grid1D
    boundary: BoundaryData
    nonlinearity_on: bool = True
    forcing: np.ndarray | None = None
    pad: float | None = None
    extension: str = "smooth"
    initial_extension: str = "smooth"
    dealias: bool = True
    fine_steps: int = 4096
    initial_order: int = 2

    def __post_init__(self):
        self.u0 = np.asarray(self.u0, dtype=float)
        if self.u0.shape != (self.space_grid.n_points,):
            raise ValueError("u0 must be sampled on space_grid")
        if self.space_grid.x_min != 0.0:
            raise ValueError("space_grid must start at x = 0")
        if self.forcing is not None:
            self.forcing = np.asarray(self.forcing, dtype=float)
            shape = (self.space_grid.n_points, self.time_grid.n_points)
            if self.forcing.shape != shape:
                raise ValueError(f"forcing has shape {self.forcing.shape}, expected {shape}")
        if self.T <= 0:
            raise ValueError("T must be positive")

    @property
    def time_grid(self) -> Grid1D:
        return self.boundary.time_grid

    @property
    def T(self) -> float:
        return self.time_grid.x_max - self.time_grid.x_min

    def _setup(self):
        # the w-independent part of the map, with its boundary correction done
        # on a time grid refined ``oversample`` times
        if getattr(self, "_cache", None) is not None:
            return self._cache
        pad = max(self.space_grid.length, 10.0) if self.pad is None else self.pad
        box, i0 = WholeLineGrid.around(self.space_grid, pad, pad)
        tg = self.time_grid
        step = max(1, int(np.ceil(self.fine_steps / (tg.n_points - 1))))
        fine = tg.refined(step) if step > 1 else tg
        ext = extend_to_box(self.u0, self.space_grid, box, i0, self.initial_extension,
                            order=self.initial_order)
        whole = _propagate_all(ext, box, fine.points)
        if self.forcing is not None:
            f_fine = _time_interp(self.forcing, tg, fine)
            fext = extend_to_box(f_fine.T, self.space_grid, box, i0, self.extension)
            whole = whole + duhamel_forced(fext, box, fine)
        p, q = _node_traces(whole, box, i0)
        h = _time_interp(self.boundary.h, tg, fine, kind="cubic")
        g = _time_interp(self.boundary.g, tg, fine, kind="cubic")
        nx = self.space_grid.n_points
        base = whole[::step, i0:i0 + nx].T.copy()
        dh, dg = h - p, g - q
        if np.any(dh) or np.any(dg):
            qf = boundary_quadrature(fine)
            base += qf.apply(self.space_grid.points, dh, dg, stride=step)
        self._cache = {"box": box, "i0": i0, "base": base,
                       "quad": boundary_quadrature(tg)}
        return self._cache


def _time_interp(values, coarse: Grid1D, fine: Grid1D, kind: str = "linear"):
    """Resample along the last axis from ``coarse`` to ``fine`` time nodes."""
    v = np.asarray(values, dtype=float)
    if fine == coarse:
        return v
    if kind == "linear":
        from scipy.interpolate import interp1d
        return interp1d(coarse.points, v, axis=-1)(fine.points)
    from scipy.interpolate import CubicSpline
    return CubicSpline(coarse.points, v, axis=-1)(fine.points)


def _propagate_all(ext, box: WholeLineGrid, t):
    c = np.fft.rfft(ext)
    xi = 2.0 * np.pi * np.fft.rfftfreq(box.n, d=box.dx)
    return np.fft.irfft(c[None, :] * np.exp(-(1j * xi**3 + xi**2) * t[:, None]), n=box.n, axis=1)


def _node_traces(field_tx, box: WholeLineGrid, i0: int):
    # value and spectral slope at grid node i0 for every time row
    c = np.fft.rfft(field_tx, axis=1)
    xi = 2.0 * np.pi * np.fft.rfftfreq(box.n, d=box.dx)
    slope = np.fft.irfft(1j * xi * c, n=box.n, axis=1)[:, i0]
    return field_tx[:, i0].copy(), slope


def _burgers_term(w_tx, box: WholeLineGrid, dealias: bool):
    """w * w_x pseudo-spectrally, with the 2/3 rule when ``dealias``."""
    c = np.fft.rfft(w_tx, axis=1)
    xi = 2.0 * np.pi * np.fft.rfftfreq(box.n, d=box.dx)
    if dealias:
        keep = np.arange(xi.size) <= box.n // 3
        c = c * keep
    w = np.fft.irfft(c, n=box.n, axis=1)
    wx = np.fft.irfft(1j * xi * c, n=box.n, axis=1)
    prod = w * wx
    if dealias:
        prod = np.fft.irfft(np.fft.rfft(prod, axis=1) * keep, n=box.n, axis=1)
    return prod


def spacetime_norm(values, space_grid: Grid1D, time_grid: Grid1D) -> float:
    """Discrete L^2 norm over the space-time rectangle."""
    v = np.asarray(values)
    return float(np.sqrt(np.sum(v**2) * space_grid.spacing * time_grid.spacing))


def gamma_map(w: HalfLineState | np.ndarray, problem: IbvpProblem) -> HalfLineState:
    """One application of the integral map.

    Gamma(w) = W_R u0* + Duhamel(w w_x + F) + W_D(h - p1 - q1) + W_N(g - p2 - q2)
    restricted to x >= 0, where p, q are the x = 0 traces (value, slope) of the
    whole-line parts. ``w`` is ignored when the nonlinearity is off.
    """
    values = w.values if isinstance(w, HalfLineState) else np.asarray(w, dtype=float)
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("non-finite values in the iterate passed to gamma_map")
    c = problem._setup()
    box, i0 = c["box"], c["i0"]
    out = c["base"].copy()
    if problem.nonlinearity_on and np.any(values):
        wext = extend_to_box(values.T, problem.space_grid, box, i0, problem.extension)
        whole = duhamel_forced(_burgers_term(wext, box, problem.dealias), box, problem.time_grid)
        p, q = _node_traces(whole, box, i0)
        nx = problem.space_grid.n_points
        out += whole[:, i0:i0 + nx].T
        out -= c["quad"].apply(problem.space_grid.points, p, q)
    return HalfLineState(problem.space_grid, problem.time_grid, out)


@dataclass
class SolveReport:
    solution: HalfLineState
    iterations: int
    residual_history: list
    contraction_ratio: float
    converged: bool
    energy_audit: "EnergyAudit | None" = None
    metadata: dict = field(default_factory=dict)


def solve_fixed_point(problem: IbvpProblem, tol: float = 1e-10, max_iter: int = 50,
                      audit: bool = False) -> SolveReport:
    """Picard iteration w <- Gamma(w) started from the linear solution Gamma(0).

    Stops when the space-time L^2 distance between successive iterates drops
    below ``tol``. ``contraction_ratio`` is the geometric mean of successive
    residual ratios (nan with fewer than two residuals).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    sg, tg = problem.space_grid, problem.time_grid
    w = gamma_map(np.zeros((sg.n_points, tg.n_points)), problem)
    history: list[float] = []
    converged = False
    it = 1
    while it <= max_iter:
        if not problem.nonlinearity_on:
            converged = True
            history.append(0.0)
            break
        w_new = gamma_map(w, problem)
        it += 1
        res = spacetime_norm(w_new.values - w.values, sg, tg)
        history.append(res)
        w = w_new
        if not np.isfinite(res) or res > 1e6:
            break
        if res < tol:
            converged = True
            break
    if problem.nonlinearity_on and not np.any(w.values) and history and history[-1] == 0.0:
        converged, it = True, 1
    ratio = _geometric_ratio(history)
    report = SolveReport(w, it, history, ratio, converged)
    if audit:
        report.energy_audit = energy_audit(w, problem.boundary)
    return report


def _geometric_ratio(history) -> float:
    h = np.asarray([r for r in history if r > 0], dtype=float)
    if h.size < 2:
        return float("nan")
    return float(np.exp(np.mean(np.diff(np.log(h)))))


def contraction_radius(shape, space_grid: Grid1D, time_grid: Grid1D, target_ratio: float = 0.9,
                       lo: float = 1e-3, hi: float = 64.0, steps: int = 12,
                       max_iter: int = 30, **problem_kw) -> float:
    """Largest amplitude A (by bisection in log A) for which Picard iteration on
    u0 = A * shape, h = g = 0 converges with every residual ratio <= target_ratio.

    Extra keyword arguments go to :class:`IbvpProblem`."""
    shape = np.asarray(shape, dtype=float)
    bd = BoundaryData(time_grid, np.zeros(time_grid.n_points), np.zeros(time_grid.n_points))

    def ok(amp):
        prob = IbvpProblem(amp * shape, space_grid, bd, **problem_kw)
        try:
            rep = solve_fixed_point(prob, tol=1e-9 * max(amp, 1e-12), max_iter=max_iter)
        except (FloatingPointError, ValueError):
            return False
        h = np.asarray(rep.residual_history)
        h = h[h > 0]
        if not rep.converged or h.size < 2:
            return rep.converged
        return bool(np.all(h[1:] / h[:-1] <= target_ratio))

    if not ok(lo):
        return 0.0
    if ok(hi):
        return hi
    for _ in range(steps):
        mid = np.sqrt(lo * hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return float(lo)


def lipschitz_sample(problem: IbvpProblem, w1: HalfLineState, w2: HalfLineState) -> float:
    """||Gamma(w1) - Gamma(w2)|| / ||w1 - w2|| in the space-time L^2 norm."""
    sg, tg = problem.space_grid, problem.time_grid
    num = spacetime_norm(gamma_map(w1, problem).values - gamma_map(w2, problem).values, sg, tg)
    den = spacetime_norm(w1.values - w2.values, sg, tg)
    if den == 0:
        raise ValueError("w1 and w2 coincide")
    return num / den


def manufactured_problem(space_grid: Grid1D, time_grid: Grid1D, nonlinear: bool = True):
    """Problem whose exact solution is u*(x,t) = e^{-t} x^2 e^{-x}.

    Both boundary traces of u* vanish; the forcing is P u* - u* u*_x.
    Returns ``(problem, exact)`` with ``exact[i, j] = u*(x_i, t_j)``.
    """
    x = space_grid.points[:, None]
    t = time_grid.points[None, :]
    et, ex = np.exp(-t), np.exp(-x)
    u = et * x**2 * ex
    ux = et * (2 * x - x**2) * ex
    pu = et * ex * (4 - 2 * x - x**2)
    forcing = pu - u * ux if nonlinear else pu
    zero = np.zeros(time_grid.n_points)
    prob = IbvpProblem(u[:, 0].copy(), space_grid, BoundaryData(time_grid, zero, zero),
                       nonlinearity_on=nonlinear, forcing=forcing)
    return prob, u


@dataclass
class EnergyAudit:
    """Per-step balance of (1/2) d/dt int u^2 = -h u_xx(0) + g^2/2 - h g - int u_x^2."""

    time_mid: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    residual: np.ndarray
    energy: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.energy) <= 0))


def energy_audit(state: HalfLineState, boundary: BoundaryData | None = None) -> EnergyAudit:
    """Check the energy balance of u_t = u_xxx + u_xx on x > 0 step by step.

    The time derivative of the energy is a forward difference, the flux side is
    averaged over the step (both second order at the half step). Spatial
    integrals use Simpson's rule and x-derivatives second-order stencils; the
    traces h, g default to those of the state.
    """
    from .numerics import finite_diff
    sg, tg = state.space_grid, state.time_grid
    u = state.values
    u0, ux0, uxx0 = trace_extract(state)
    h = u0 if boundary is None else boundary.h
    g = ux0 if boundary is None else boundary.g
    ux = finite_diff(u, sg, 1, axis=0)
    energy = 0.5 * quadrature(u**2, sg, axis=0)
    diss = quadrature(ux**2, sg, axis=0)
    flux = -h * uxx0 + 0.5 * g**2 - h * g - diss
    lhs = np.diff(energy) / tg.spacing
    rhs = 0.5 * (flux[1:] + flux[:-1])
    tm = 0.5 * (tg.points[1:] + tg.points[:-1])
    return EnergyAudit(tm, lhs, rhs, lhs - rhs, energy)
