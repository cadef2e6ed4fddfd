"""Explicit linear solution operators for u_t - u_xxx - u_xx = 0 on x > 0.

The whole-line problem is a Fourier multiplier. Boundary data at x = 0 is
handled by the two characteristic roots of ``r^3 + r^2 = tau`` that decay as
x grows: for a boundary signal e^{i w t} the half-line solution is
e^{i w t} K(x, i w) with

    K_D = (r2 e^{r1 x} - r1 e^{r2 x}) / (r2 - r1)     (unit value, zero slope)
    K_N = (e^{r2 x} - e^{r1 x}) / (r2 - r1)            (zero value, unit slope)

and the operators are assembled by quadrature over w >= 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .numerics import Grid1D, cubic_roots, finite_diff, smooth_extension, smoothstep

__all__ = [
    "DEAD_BAND",
    "CubicRootTriple",
    "RootSplit",
    "HalfLineState",
    "BoundaryData",
    "WholeLineGrid",
    "characteristic_roots",
    "decaying_roots",
    "root_split",
    "kernel",
    "whole_line_symbol",
    "whole_line_propagate",
    "BoundaryQuadrature",
    "boundary_dirichlet",
    "boundary_neumann",
    "boundary_solution",
    "halfline_semigroup",
    "extend_to_box",
    "boundary_derivatives",
    "boundary_quadrature",
    "duhamel_forced",
    "trace_extract",
]

DEAD_BAND = 1e-9


@dataclass(frozen=True)
class CubicRootTriple:
    """Roots of ``tau - r^3 - r^2 = 0``.

    ``decaying`` holds indices of roots with Re r < -DEAD_BAND; ``degenerate``
    is set when some root sits inside the dead-band around the imaginary axis.
    """

    tau: complex
    roots: tuple
    decaying: tuple
    degenerate: bool

    def residuals(self) -> np.ndarray:
        r = np.asarray(self.roots)
        return np.abs(self.tau - r**3 - r**2)


@dataclass(frozen=True)
class RootSplit:
    """Decaying roots on the curve tau = i lam^3 written as r_j = i lam + mu_j."""

    lam: float
    mu1: complex
    mu2: complex


@dataclass
class HalfLineState:
    """Samples ``values[i, j] = u(x_i, t_j)`` on a space grid (x >= 0) and a time grid."""

    space_grid: Grid1D
    time_grid: Grid1D
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        shape = (self.space_grid.n_points, self.time_grid.n_points)
        if self.values.shape != shape:
            raise ValueError(f"values have shape {self.values.shape}, grids imply {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("HalfLineState values must be finite")

    @property
    def x(self) -> np.ndarray:
        return self.space_grid.points

    @property
    def t(self) -> np.ndarray:
        return self.time_grid.points

    def __add__(self, other: "HalfLineState") -> "HalfLineState":
        _same_grids(self, other)
        return HalfLineState(self.space_grid, self.time_grid, self.values + other.values,
                             {**self.metadata, **other.metadata})

    def __sub__(self, other: "HalfLineState") -> "HalfLineState":
        _same_grids(self, other)
        return HalfLineState(self.space_grid, self.time_grid, self.values - other.values,
                             {**self.metadata, **other.metadata})


def _same_grids(a: HalfLineState, b: HalfLineState):
    if a.space_grid != b.space_grid or a.time_grid != b.time_grid:
        raise ValueError("states live on different grids")


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet values h(t) and Neumann values g(t) at x = 0."""

    time_grid: Grid1D
    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        g = np.asarray(self.g, dtype=float)
        n = self.time_grid.n_points
        if h.shape != (n,) or g.shape != (n,):
            raise ValueError(f"h and g must have length {n}, got {h.shape} and {g.shape}")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(g))):
            raise ValueError("boundary data must be finite")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)

    @classmethod
    def dirichlet(cls, time_grid: Grid1D, h) -> "BoundaryData":
        return cls(time_grid, h, np.zeros(time_grid.n_points))

    @classmethod
    def neumann(cls, time_grid: Grid1D, g) -> "BoundaryData":
        return cls(time_grid, np.zeros(time_grid.n_points), g)

    def compatibility_defect(self, u0_value: float, u0_slope: float) -> tuple[float, float]:
        """Mismatch between the data at t = 0 and the initial profile at x = 0."""
        return float(self.h[0] - u0_value), float(self.g[0] - u0_slope)


# ---------------------------------------------------------------- roots

def characteristic_roots(tau: complex) -> CubicRootTriple:
    tau = complex(tau)
    z, _ = cubic_roots(1.0, 0.0, -tau)
    z = np.asarray(z)
    re = z.real
    decaying = tuple(int(i) for i in np.flatnonzero(re < -DEAD_BAND))
    degenerate = bool(np.any(np.abs(re) < DEAD_BAND))
    return CubicRootTriple(tau, tuple(complex(r) for r in z), decaying, degenerate)


def decaying_roots(omega, warn_list: list | None = None):
    """The two decaying roots at tau = i*omega for an array of real omega.

    Nodes inside the dead-band |omega| < DEAD_BAND are moved to
    tau = i*omega + DEAD_BAND, where the classification is unambiguous, and
    the shift is recorded in ``warn_list``.
    """
    omega = np.asarray(omega, dtype=float)
    tau = 1j * omega
    close = np.abs(omega) < DEAD_BAND
    if np.any(close):
        tau = np.where(close, tau + DEAD_BAND, tau)
        msg = f"{int(close.sum())} quadrature node(s) shifted by {DEAD_BAND:g} off tau = 0"
        if warn_list is not None:
            warn_list.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    z, _ = cubic_roots(1.0, 0.0, -tau)
    # roots come sorted by real part; on Re tau >= 0 the two leftmost decay
    return z[..., 0], z[..., 1]


def root_split(lam) -> RootSplit | list[RootSplit]:
    """Decaying roots at tau = i lam^3 minus the shift i*lam."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    r1, r2 = decaying_roots(lam_arr**3)
    out = [RootSplit(float(l), complex(a - 1j * l), complex(b - 1j * l))
           for l, a, b in zip(lam_arr, r1, r2)]
    return out[0] if np.ndim(lam) == 0 else out


def kernel(x, r1, r2, kind: str, deriv: int = 0, cutoff: bool = True) -> np.ndarray:
    """Boundary kernel ``d^n/dx^n K(x)`` on an (x, node) mesh.

    ``kind`` is ``"D"`` (Dirichlet) or ``"N"`` (Neumann). For x < 0 the kernel
    is multiplied by a smooth cutoff that equals 1 on [0, inf) and vanishes for
    x <= -1 (only when ``deriv == 0``; derivatives are for x >= 0 use).
    """
    x = np.asarray(x, dtype=float)[:, None]
    r1 = np.asarray(r1)[None, :]
    r2 = np.asarray(r2)[None, :]
    e1 = np.exp(r1 * x)
    e2 = np.exp(r2 * x)
    d = r2 - r1
    if kind == "D":
        k = (r2 * r1**deriv * e1 - r1 * r2**deriv * e2) / d
    elif kind == "N":
        k = (r2**deriv * e2 - r1**deriv * e1) / d
    else:
        raise ValueError(f"kind must be 'D' or 'N', got {kind!r}")
    if cutoff and deriv == 0 and np.any(x < 0):
        k = k * smoothstep(x + 1.0)
    return k


# ---------------------------------------------------------------- whole line

@dataclass(frozen=True)
class WholeLineGrid:
    """Periodic box used as a stand-in for the real line.

    Nodes are ``x_min + j*dx`` for ``j = 0..n-1`` and the period is ``n*dx``.
    """

    x_min: float
    dx: float
    n: int

    @property
    def points(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def xi(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @classmethod
    def around(cls, space_grid: Grid1D, pad_left: float, pad_right: float,
               fft_friendly: bool = True) -> tuple["WholeLineGrid", int]:
        """Box containing ``space_grid`` with padding; returns the grid and the
        index of x = space_grid.x_min inside it."""
        dx = space_grid.spacing
        n_left = int(np.ceil(pad_left / dx))
        n_right = int(np.ceil(pad_right / dx))
        n = n_left + space_grid.n_points + n_right
        if fft_friendly:
            from scipy.fft import next_fast_len
            m = next_fast_len(n)
            n_right += m - n
            n = m
        return cls(space_grid.x_min - n_left * dx, dx, n), n_left


def whole_line_symbol(xi, t):
    """Multiplier e^{-(i xi^3 + xi^2) t}."""
    xi = np.asarray(xi, dtype=float)
    return np.exp(-(1j * xi**3 + xi**2) * t)


def whole_line_propagate(u0, grid: Grid1D | WholeLineGrid, t):
    """Apply e^{-(i xi^3 + xi^2) t} to samples on a periodic box.

    A :class:`Grid1D` is read as one period without its duplicated right end
    point, i.e. samples at ``x_min + j*spacing`` for ``j < n_points``. ``t``
    may be a scalar or a 1-D array; with an array the output has a leading
    time axis. Real input gives real output.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("whole_line_propagate needs t >= 0 (the multiplier grows backward in time)")
    u0 = np.asarray(u0)
    dx = grid.spacing if isinstance(grid, Grid1D) else grid.dx
    n = u0.shape[-1]
    real = np.isrealobj(u0)
    if real:
        xi = 2.0 * np.pi * np.fft.rfftfreq(n, d=dx)
        c = np.fft.rfft(u0)
    else:
        xi = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
        c = np.fft.fft(u0)
    mult = np.exp(-(1j * xi**3 + xi**2) * t_arr[..., None])
    out = c * mult
    return np.fft.irfft(out, n=n) if real else np.fft.ifft(out)


# ---------------------------------------------------------------- boundary operators

@lru_cache(maxsize=8)
def _gauss(n: int):
    return np.polynomial.legendre.leggauss(n)


class BoundaryQuadrature:
    """Frequency quadrature for the boundary operators on one time grid.

    The data is extended past T by ``n_ext`` samples that fade to zero (C^2),
    its discrete-time Fourier transform is taken on the extended window of
    ``N`` samples and the inverse transform over ``[0, pi/dt]`` is done with
    Gauss-Legendre panels of width ``w = pi/(N dt)``; the first panel is split
    geometrically toward 0, where the kernel behaves like sqrt(omega). With
    K = 1 the value trace reduces to band-limited interpolation of the data,
    which returns the samples at the nodes.

    On the uniform panels the nodes are ``w (k + c_j)``, so both the forward
    sums and the synthesis at the time nodes are FFTs of length 2N, one per
    Gauss offset ``c_j``; only the graded panels are summed densely.
    """

    def __init__(self, time_grid: Grid1D, n_ext: int | None = None, gauss_points: int = 8,
                 grading_levels: int = 20):
        self.time_grid = time_grid
        nt = time_grid.n_points
        self.dt = time_grid.spacing
        self.n_ext = max(8, nt // 8) if n_ext is None else int(n_ext)
        self.n_span = n_span = nt + self.n_ext
        width = np.pi / (n_span * self.dt)
        xg, wg = _gauss(gauss_points)
        self.c = 0.5 * (1.0 + xg)
        self.k = np.arange(1, n_span)
        self.w_uniform = 0.5 * width * wg
        self.omega_uniform = width * (self.k[None, :] + self.c[:, None])      # (n_gauss, N-1)
        edges = np.array([0.0] + [width * 2.0**-m for m in range(grading_levels, 0, -1)] + [width])
        a, b = edges[:-1], edges[1:]
        half = 0.5 * (b - a)
        self.omega_graded = ((a + b)[:, None] / 2 + half[:, None] * xg[None, :]).ravel()
        self.w_graded = (half[:, None] * wg[None, :]).ravel()
        self.warnings: list[str] = []
        r1, r2 = decaying_roots(np.concatenate([self.omega_graded, self.omega_uniform.ravel()]),
                                self.warnings)
        ng = self.omega_graded.size
        self.r1g, self.r2g = r1[:ng], r2[:ng]
        self.r1u, self.r2u = r1[ng:].reshape(self.omega_uniform.shape), r2[ng:].reshape(self.omega_uniform.shape)
        self.t_rel = self.dt * np.arange(n_span)
        self._graded_analysis = np.exp(-1j * np.outer(self.omega_graded, self.t_rel))
        self._graded_synthesis = np.exp(1j * np.outer(self.omega_graded, self.t_rel[:nt]))
        n = np.arange(n_span)
        self._twiddle = np.exp(-1j * np.pi * self.c[:, None] * n[None, :] / n_span)   # (n_gauss, N)

    @property
    def omega(self) -> np.ndarray:
        return np.concatenate([self.omega_graded, self.omega_uniform.ravel()])

    @property
    def n_nodes(self) -> int:
        return self.omega_graded.size + self.omega_uniform.size

    def transform(self, samples):
        """Weighted spectra ``(graded, uniform)`` of the faded extension.

        Values are dt * sum_n s_n e^{-i w t_n} times the quadrature weight.
        Leading axes of ``samples`` are batch axes; time is the last axis.
        """
        s = np.asarray(samples, dtype=float)
        ext = smooth_extension(s, self.dt, self.n_ext)
        graded = self.dt * (ext @ self._graded_analysis.T) * self.w_graded
        seq = ext[..., None, :] * self._twiddle                                 # (..., g, N)
        spec = np.fft.fft(seq, n=2 * self.n_span, axis=-1)[..., 1:self.n_span]
        uniform = self.dt * spec * self.w_uniform[:, None]
        return graded, uniform

    def apply(self, x, h=None, g=None, deriv: int = 0, stride: int = 1,
              block: int | None = None) -> np.ndarray:
        """``d^n/dx^n (W_D h + W_N g)`` at points ``x`` and every ``stride``-th time node.

        ``h``/``g`` may carry leading batch axes; the output has shape
        ``batch + (len(x), n_out)``. Points are processed in blocks to bound
        memory.
        """
        x = np.asarray(x, dtype=float)
        parts = [(self.transform(d), kind) for d, kind in ((h, "D"), (g, "N")) if d is not None]
        if not parts:
            raise ValueError("need h or g")
        nt = self.time_grid.n_points
        idx = np.arange(0, nt, stride)
        phase = np.conj(self._twiddle[:, idx])                                  # (g, n_out)
        if block is None:
            block = max(1, int(4e6 // (2 * self.n_span * self.c.size)))
        chunks = []
        for lo in range(0, x.size, block):
            xb = x[lo:lo + block]
            acc_g = acc_u = None
            for (sg_, su), kind in parts:
                kg = kernel(xb, self.r1g, self.r2g, kind, deriv)
                ku = kernel(xb, self.r1u.ravel(), self.r2u.ravel(), kind, deriv)
                ku = ku.reshape((xb.size,) + self.omega_uniform.shape)
                tg = sg_[..., None, :] * kg
                tu = su[..., None, :, :] * ku
                acc_g = tg if acc_g is None else acc_g + tg
                acc_u = tu if acc_u is None else acc_u + tu
            out = acc_g @ self._graded_synthesis[:, idx]
            full = np.zeros(acc_u.shape[:-1] + (2 * self.n_span,), dtype=complex)
            full[..., 1:self.n_span] = acc_u
            syn = np.fft.ifft(full, axis=-1)[..., idx] * (2 * self.n_span)
            out = out + np.einsum("...gt,gt->...t", syn, phase)
            chunks.append(out.real / np.pi)
        return np.concatenate(chunks, axis=-2)


@lru_cache(maxsize=4)
def _cached_quadrature(time_grid: Grid1D, n_ext, gauss_points: int) -> BoundaryQuadrature:
    return BoundaryQuadrature(time_grid, n_ext, gauss_points)


def boundary_quadrature(time_grid: Grid1D, n_ext: int | None = None,
                        gauss_points: int = 8) -> BoundaryQuadrature:
    """Cached :class:`BoundaryQuadrature` for a time grid."""
    return _cached_quadrature(time_grid, n_ext, gauss_points)


def boundary_solution(data: BoundaryData, eval_grid: Grid1D, n_ext: int | None = None,
                      which: str = "DN") -> HalfLineState:
    """W_D h + W_N g sampled on ``eval_grid`` x the data's time grid.

    ``which`` selects the terms: ``"D"``, ``"N"`` or ``"DN"``. The analytic
    x-derivative traces at x = 0 are stored in the metadata for reference.
    """
    quad = boundary_quadrature(data.time_grid, n_ext)
    h = data.h if "D" in which else None
    g = data.g if "N" in which else None
    if h is not None and not np.any(h):
        h = None
    if g is not None and not np.any(g):
        g = None
    nx, nt = eval_grid.n_points, data.time_grid.n_points
    meta = {"n_frequency_nodes": quad.n_nodes, "n_ext": quad.n_ext,
            "warnings": list(quad.warnings)}
    if h is None and g is None:
        return HalfLineState(eval_grid, data.time_grid, np.zeros((nx, nt)), meta)
    vals = quad.apply(eval_grid.points, h, g)
    return HalfLineState(eval_grid, data.time_grid, vals, meta)


def boundary_dirichlet(h: BoundaryData, eval_grid: Grid1D, n_ext: int | None = None) -> HalfLineState:
    """W_D(t)h: half-line solution with u(0,t) = h(t), u_x(0,t) = 0 and zero initial data."""
    return boundary_solution(h, eval_grid, n_ext, which="D")


def boundary_neumann(g: BoundaryData, eval_grid: Grid1D, n_ext: int | None = None) -> HalfLineState:
    """W_N(t)g: half-line solution with u(0,t) = 0, u_x(0,t) = g(t) and zero initial data."""
    return boundary_solution(g, eval_grid, n_ext, which="N")


# ---------------------------------------------------------------- semigroup

def _modal_trace(c, xi, x0, x_min, n, t):
    # exact trace of the periodic interpolant at x0 (value and slope)
    phase = np.exp(1j * xi * (x0 - x_min))
    mult = np.exp(-(1j * xi**3 + xi**2) * t[:, None])
    coeff = c[None, :] * mult * phase[None, :] / n
    return coeff.sum(axis=1).real, (coeff * 1j * xi[None, :]).sum(axis=1).real


def halfline_semigroup(u0, space_grid: Grid1D, time_grid: Grid1D, pad: float | None = None,
                       extension: str = "zero", n_ext: int | None = None) -> HalfLineState:
    """W_0(t)u0: zero boundary data, initial profile ``u0`` on ``space_grid``.

    The profile is extended to x < 0 (by zero, or by a C^2 fade with
    ``extension="smooth"``), propagated on the whole line, and the traces at
    x = 0 are removed with the boundary operators. The data mismatch
    (u0(0), u0'(0)) is reported in ``metadata["compatibility_defect"]``.
    """
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (space_grid.n_points,):
        raise ValueError("u0 must be sampled on space_grid")
    if space_grid.x_min != 0.0:
        raise ValueError("space_grid must start at x = 0")
    pad = max(space_grid.length, 10.0) if pad is None else pad
    box, i0 = WholeLineGrid.around(space_grid, pad, pad)
    ext = extend_to_box(u0, space_grid, box, i0, extension)
    t = time_grid.points
    c = np.fft.fft(ext)
    xi = box.xi
    mult = np.exp(-(1j * xi**3 + xi**2) * t[:, None])
    free = np.fft.ifft(c[None, :] * mult, axis=1).real[:, i0:i0 + space_grid.n_points].T
    h_tr, g_tr = _modal_trace(c, xi, 0.0, box.x_min, box.n, t)
    corr = boundary_solution(BoundaryData(time_grid, h_tr, g_tr), space_grid, n_ext)
    slope0 = finite_diff(u0[:5], Grid1D(0.0, 4 * space_grid.spacing, 5), 1)[0]
    meta = {
        "compatibility_defect": (float(u0[0]), float(slope0)),
        "extension": extension,
        "box": {"x_min": box.x_min, "dx": box.dx, "n": box.n},
        "warnings": corr.metadata.get("warnings", []),
    }
    return HalfLineState(space_grid, time_grid, free - corr.values, meta)


def boundary_derivatives(values, spacing: float, order: int, fit_width: float = 1.0,
                         degree: int | None = None):
    """Estimates of d^k u/dx^k at the first sample, k = 0..order.

    A least-squares polynomial (default degree ``order + 4``) is fitted to the
    samples in ``[0, fit_width]`` and differentiated; if the window holds too
    few samples the degree is lowered. Leading axes are batch axes.
    """
    v = np.asarray(values, dtype=float)
    n_fit = min(v.shape[-1], max(int(round(fit_width / spacing)) + 1, order + 3))
    deg = min(order + 4 if degree is None else degree, n_fit - 2)
    s = np.arange(n_fit) / (n_fit - 1)
    basis = s[:, None] ** np.arange(deg + 1)[None, :]
    coef = v[..., :n_fit] @ np.linalg.pinv(basis).T
    width = (n_fit - 1) * spacing
    fact = np.cumprod(np.r_[1.0, np.arange(1, deg + 1)])
    out = np.zeros(v.shape[:-1] + (order + 1,))
    for k in range(min(order, deg) + 1):
        out[..., k] = coef[..., k] * fact[k] / width**k
    return out


def extend_to_box(values, space_grid: Grid1D, box: WholeLineGrid, i0: int,
                  extension: str = "zero", fade: float = 2.0, order: int = 2) -> np.ndarray:
    """Place half-line samples in a whole-line box.

    ``"zero"`` pads with zeros. ``"smooth"`` continues to x < 0 with a
    C^order Hermite fade of width ``fade`` (:func:`smooth_extension`). ``"taylor"``
    uses the degree-5 Taylor polynomial at x = 0 (derivatives from a local
    least-squares fit) times a C-infinity cutoff that is 1 on [-fade/4, 0]
    and 0 below -fade; it is C^5 at x = 0, which keeps the x = 0 traces of
    the propagated field compatible to higher order in t. The right end is
    zero-padded. Leading axes are batch axes.
    """
    v = np.asarray(values)
    n = space_grid.n_points
    dx = space_grid.spacing
    out = np.zeros(v.shape[:-1] + (box.n,), dtype=v.dtype)
    out[..., i0:i0 + n] = v
    if extension == "zero":
        return out
    m = min(i0, max(4, int(round(fade / dx))))
    if extension == "smooth":
        k = max(order + 2, 4)
        head = v[..., :k][..., ::-1]
        left = smooth_extension(head, dx, m, order=order)[..., k:]
        out[..., i0 - m:i0] = left[..., ::-1]
    elif extension == "taylor":
        order = 5
        d = boundary_derivatives(v, dx, order)
        y = -dx * np.arange(m, 0, -1)
        fact = np.cumprod(np.r_[1.0, np.arange(1, order + 1)])
        powers = (y[:, None] ** np.arange(order + 1)[None, :]) / fact[None, :]
        chi = 1.0 - smoothstep((-y - fade / 4) / (0.75 * fade))
        out[..., i0 - m:i0] = (d @ powers.T) * chi
    else:
        raise ValueError(f"unknown extension {extension!r}")
    return out


# ---------------------------------------------------------------- Duhamel

def _phi12(z):
    """phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, stable near 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    em1 = np.expm1(zs)
    phi1 = np.where(small, 1 + z / 2 + z**2 / 6 + z**3 / 24, em1 / zs)
    phi2 = np.where(small, 0.5 + z / 6 + z**2 / 24 + z**3 / 120, (em1 - zs) / zs**2)
    return phi1, phi2


def duhamel_forced(f, grid: Grid1D | WholeLineGrid, time_grid: Grid1D) -> np.ndarray:
    """int_0^t W_R(t - s) f(s) ds at every node of ``time_grid``.

    ``f`` has shape (n_t, n_x) on a periodic box. In each step the forcing is
    taken piecewise linear in time and integrated exactly against the
    multiplier (second-order exponential integrator). Returns (n_t, n_x).
    """
    f = np.asarray(f)
    nt = time_grid.n_points
    if f.ndim != 2 or f.shape[0] != nt:
        raise ValueError(f"forcing has shape {f.shape}, expected ({nt}, n_x)")
    dx = grid.spacing if isinstance(grid, Grid1D) else grid.dx
    n = f.shape[1]
    real = np.isrealobj(f)
    if real:
        xi = 2.0 * np.pi * np.fft.rfftfreq(n, d=dx)
        fh = np.fft.rfft(f, axis=1)
    else:
        xi = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
        fh = np.fft.fft(f, axis=1)
    dt = time_grid.spacing
    z = -(1j * xi**3 + xi**2) * dt
    ez = np.exp(z)
    p1, p2 = _phi12(z)
    a = dt * (p1 - p2)
    b = dt * p2
    w = np.zeros_like(fh, dtype=complex)
    for k in range(nt - 1):
        w[k + 1] = ez * w[k] + a * fh[k] + b * fh[k + 1]
    return np.fft.irfft(w, n=n, axis=1) if real else np.fft.ifft(w, axis=1)


# ---------------------------------------------------------------- traces

def trace_extract(state: HalfLineState):
    """(u(0,.), u_x(0,.), u_xx(0,.)) from one-sided second-order stencils."""
    nx = state.space_grid.n_points
    if nx < 4:
        raise ValueError("trace extraction needs at least 4 points near x = 0")
    m = min(nx, 5)
    sub = Grid1D(state.space_grid.x_min, state.space_grid.x_min + (m - 1) * state.space_grid.spacing, m)
    v = state.values[:m]
    u = v[0].copy()
    ux = finite_diff(v, sub, 1, axis=0)[0]
    uxx = finite_diff(v, sub, 2, axis=0)[0]
    return u, ux, uxx
