"""Shared numerical kernels: grids, unitary DFT, quadrature, stencils,
discrete Sobolev norms and a vectorised cubic solver."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

__all__ = [
    "Grid1D",
    "SpectralCoeffs",
    "dft",
    "idft",
    "quadrature",
    "finite_diff",
    "sobolev_norm",
    "cubic_roots",
    "smooth_extension",
    "smoothstep",
]


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on ``[x_min, x_max]`` with ``n_points`` nodes (endpoints included)."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 4:
            raise ValueError(f"Grid1D needs an integer n_points >= 4, got {self.n_points}")
        if not np.isfinite(self.x_min) or not np.isfinite(self.x_max):
            raise ValueError("Grid1D bounds must be finite")
        if self.x_max <= self.x_min:
            raise ValueError(f"Grid1D needs x_max > x_min, got [{self.x_min}, {self.x_max}]")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def refined(self, factor: int = 2) -> "Grid1D":
        """Same interval, spacing divided by ``factor``."""
        return Grid1D(self.x_min, self.x_max, (self.n_points - 1) * factor + 1)

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n_points": self.n_points}


@dataclass(frozen=True)
class SpectralCoeffs:
    """Unitary DFT coefficients.

    ``coeffs[j]`` belongs to the integer frequency ``k[j]``; the arrays are
    ordered from the most negative frequency upwards (``fftshift`` order).
    ``base_length`` is the period of the underlying sample window.
    """

    coeffs: np.ndarray
    k: np.ndarray
    base_length: float

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers ``2 pi k / base_length``."""
        return 2.0 * np.pi * self.k / self.base_length


def _check_uniform(x: np.ndarray, rtol: float = 1e-9) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("sample coordinates must be a 1-D array with at least 2 entries")
    dx = np.diff(x)
    h = dx.mean()
    if h <= 0 or np.max(np.abs(dx - h)) > rtol * abs(h):
        raise ValueError("non-uniform grid: the transform requires equally spaced samples")
    return float(h)


def dft(values, grid: Grid1D | np.ndarray | None = None) -> SpectralCoeffs:
    """Unitary forward DFT (``1/sqrt(N)`` normalisation), so Parseval is an equality.

    ``grid`` may be a :class:`Grid1D` or raw sample coordinates; raw
    coordinates are checked for uniform spacing.
    """
    v = np.asarray(values)
    n = v.shape[-1]
    if grid is None:
        h = 1.0
    elif isinstance(grid, Grid1D):
        if grid.n_points != n:
            raise ValueError(f"values have length {n}, grid has {grid.n_points} points")
        h = grid.spacing
    else:
        if np.asarray(grid).size != n:
            raise ValueError("values and coordinates differ in length")
        h = _check_uniform(grid)
    c = np.fft.fftshift(np.fft.fft(v, norm="ortho"), axes=-1)
    k = np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
    return SpectralCoeffs(c, k, n * h)


def idft(spec: SpectralCoeffs) -> np.ndarray:
    """Inverse of :func:`dft`."""
    return np.fft.ifft(np.fft.ifftshift(spec.coeffs, axes=-1), norm="ortho")


def quadrature(samples, grid: Grid1D, method: str = "simpson", axis: int = -1):
    """Integrate samples over the grid.

    ``"simpson"`` (default) is the composite Simpson rule, order 4 for smooth
    integrands (scipy's even-count correction keeps order 3 on even point
    counts). ``"trapezoid"`` is the composite trapezoid rule, order 2.
    """
    y = np.asarray(samples)
    if y.shape[axis] != grid.n_points:
        raise ValueError(
            f"samples have length {y.shape[axis]} along axis {axis}, grid has {grid.n_points}"
        )
    if method == "simpson":
        return integrate.simpson(y, dx=grid.spacing, axis=axis)
    if method == "trapezoid":
        return integrate.trapezoid(y, dx=grid.spacing, axis=axis)
    raise ValueError(f"unknown quadrature method {method!r}")


@lru_cache(maxsize=None)
def _stencil(offsets: tuple[int, ...], order: int) -> np.ndarray:
    # weights w with sum_j w_j f(x + o_j h) ~ h^order f^(order)(x)
    o = np.asarray(offsets, dtype=float)
    m = len(o)
    vander = np.vander(o, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(vander, rhs)


def _row_offsets(i: int, n: int, order: int) -> tuple[int, ...]:
    # centered where possible, otherwise the nearest one-sided window
    width = 3 if order < 3 else 5
    half = width // 2
    if order < 3 and (i == 0 or i == n - 1):
        width = order + 2
    start = min(max(i - half, 0), n - width)
    if order < 3 and (i == 0 or i == n - 1):
        start = 0 if i == 0 else n - width
    return tuple(range(start - i, start - i + width))


def finite_diff(values, grid: Grid1D, order: int, axis: int = -1) -> np.ndarray:
    """Derivative of order 1, 2 or 3 with second-order accurate stencils.

    Interior points use centered stencils (3 points for orders 1 and 2, 5 for
    order 3); boundary points use second-order one-sided stencils.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    v = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = v.shape[-1]
    if n != grid.n_points:
        raise ValueError(f"values have length {n}, grid has {grid.n_points} points")
    if n < order + 2 or (order == 3 and n < 5):
        raise ValueError(f"need at least {max(order + 2, 5 if order == 3 else 0)} points for order {order}")
    h = grid.spacing
    out = np.empty_like(v)
    if order == 1:
        out[..., 1:-1] = (v[..., 2:] - v[..., :-2]) / (2 * h)
        edge = [0, n - 1]
    elif order == 2:
        out[..., 1:-1] = (v[..., 2:] - 2 * v[..., 1:-1] + v[..., :-2]) / h**2
        edge = [0, n - 1]
    else:
        out[..., 2:-2] = (
            -v[..., :-4] + 2 * v[..., 1:-3] - 2 * v[..., 3:-1] + v[..., 4:]
        ) / (2 * h**3)
        edge = [0, 1, n - 2, n - 1]
    for i in edge:
        offs = _row_offsets(i, n, order)
        w = _stencil(offs, order)
        idx = [i + o for o in offs]
        out[..., i] = v[..., idx] @ w / h**order
    return np.moveaxis(out, -1, axis)


def sobolev_norm(values, s: float, length: float | None = None, extension: str = "periodic",
                 pad: int = 0) -> float:
    """Discrete H^s norm of a sampled field through its periodic surrogate.

    With ``length=None`` the weights use the integer frequency, so
    ``sobolev_norm(v, 0) == ||v||_2`` and a unit single mode at ``k=1`` has
    H^1 norm ``sqrt(2)``. With ``length`` given, samples are taken on a window
    of that length, weights use angular wavenumbers and the result
    approximates the continuous norm.

    ``extension``: ``"periodic"`` transforms the samples as they are,
    ``"zero"`` appends ``pad`` zeros (windowed extension by zero) and
    ``"even"`` mirrors the samples, which keeps the surrogate continuous and
    reports the norm of the original window.
    """
    v = np.asarray(values)
    n = v.size
    if extension == "zero":
        v = np.concatenate([v, np.zeros(pad, dtype=v.dtype)])
    elif extension == "even":
        v = np.concatenate([v, v[-2:0:-1]])
    elif extension != "periodic":
        raise ValueError(f"unknown extension {extension!r}")
    spec = dft(v)
    if length is None:
        weight = 1.0 + spec.k.astype(float) ** 2
        total = np.sum(weight**s * np.abs(spec.coeffs) ** 2)
    else:
        h = length / (n - 1)
        period = v.size * h
        xi = 2.0 * np.pi * spec.k / period
        total = h * np.sum((1.0 + xi**2) ** s * np.abs(spec.coeffs) ** 2)
    if extension == "even":
        # the mirrored window holds the samples twice
        total = total / 2.0
    return float(np.sqrt(total))


def _polish(z, a2, a1, a0, mult, steps: int):
    """Guarded Newton steps z <- z - mult * p/p'; a step is kept only if it lowers |p|."""
    for _ in range(steps):
        f = ((z + a2) * z + a1) * z + a0
        df = (3.0 * z + 2.0 * a2) * z + a1
        ok = (df != 0) & (f != 0)
        if not np.any(ok):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(ok, f / np.where(ok, df, 1.0), 0.0)
        cand = z - mult * step
        fc = ((cand + a2) * cand + a1) * cand + a0
        z = np.where(np.abs(fc) < np.abs(f), cand, z)
    return z


def cubic_roots(c2, c1, c0, polish: int = 2):
    """Roots of the monic cubic ``z^3 + c2 z^2 + c1 z + c0`` (vectorised).

    Cardano's formula followed by ``polish`` Newton steps per root. Returns
    ``(roots, multiplicity)`` where ``roots`` has a trailing axis of length 3
    sorted by real part then imaginary part, and ``multiplicity[..., j]`` counts
    the roots that coincide with root ``j`` to relative tolerance 1e-6.
    """
    c2, c1, c0 = np.broadcast_arrays(*(np.asarray(c, dtype=complex) for c in (c2, c1, c0)))
    shift = c2 / 3.0
    p = c1 - c2 * shift
    q = 2.0 * shift**3 - shift * c1 + c0
    disc = np.sqrt(q * q / 4.0 + p**3 / 27.0)
    u1 = -q / 2.0 + disc
    u2 = -q / 2.0 - disc
    u = np.where(np.abs(u1) >= np.abs(u2), u1, u2)
    cbrt = np.where(u == 0, 0.0, np.abs(u) ** (1.0 / 3.0) * np.exp(1j * np.angle(u) / 3.0))
    omega = np.exp(2j * np.pi / 3.0)
    ys = []
    for j in range(3):
        cj = cbrt * omega**j
        with np.errstate(divide="ignore", invalid="ignore"):
            yj = np.where(cj == 0, 0.0, cj - p / (3.0 * cj))
        ys.append(yj)
    z = np.stack(ys, axis=-1) - shift[..., None]

    a2, a1, a0 = c2[..., None], c1[..., None], c0[..., None]
    z = _polish(z, a2, a1, a0, 1.0, polish)
    # Newton is only linear at a multiple root; the step scaled by the
    # cluster size restores quadratic convergence there
    tol = 1e-5 * (1.0 + np.abs(z))
    m = (np.abs(z[..., :, None] - z[..., None, :]) <= tol[..., :, None]).sum(axis=-1)
    if np.any(m > 1):
        z = _polish(z, a2, a1, a0, m, 30)

    order = np.lexsort((z.imag, np.round(z.real, 12)), axis=-1)
    z = np.take_along_axis(z, order, axis=-1)
    tol = 1e-6 * (1.0 + np.abs(z))
    close = np.abs(z[..., :, None] - z[..., None, :]) <= np.maximum(tol[..., :, None], tol[..., None, :])
    mult = close.sum(axis=-1)
    return z, mult


def smoothstep(x):
    """C-infinity step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    x = np.asarray(x, dtype=float)

    def bump(y):
        out = np.zeros_like(y)
        pos = y > 0
        out[pos] = np.exp(-1.0 / y[pos])
        return out

    a = bump(x)
    b = bump(1.0 - x)
    return a / (a + b)


@lru_cache(maxsize=None)
def _fade_matrix(order: int) -> np.ndarray:
    # Hermite basis on [0, 1]: p^(k)(0) = d_k, p^(k)(1) = 0 for k <= order
    deg = 2 * order + 1
    rows = []
    for point in (0.0, 1.0):
        for k in range(order + 1):
            row = np.zeros(deg + 1)
            for j in range(k, deg + 1):
                coef = np.prod(np.arange(j - k + 1, j + 1, dtype=float))
                row[j] = coef * point ** (j - k)
            rows.append(row)
    return np.linalg.inv(np.array(rows))


def smooth_extension(values, spacing: float, n_ext: int, axis: int = -1, order: int = 2) -> np.ndarray:
    """Continue samples past their last entry and fade them to zero.

    The continuation is the Hermite polynomial of degree ``2*order + 1`` that
    matches the derivatives up to ``order`` at the last sample (estimated
    with one-sided second-order stencils) and reaches zero, flat to the same
    order, after ``n_ext`` steps. The result is C^order across the junction.
    """
    v = np.moveaxis(np.asarray(values), axis, -1)
    need = order + 2
    if v.shape[-1] < max(need, 4):
        raise ValueError(f"need at least {max(need, 4)} samples to extend")
    h = spacing
    width = n_ext * h
    tail = v[..., ::-1][..., :need]
    derivs = [tail[..., 0]]
    for k in range(1, order + 1):
        offs = tuple(range(0, -(k + 2), -1))
        w = _stencil(offs, k)
        derivs.append(tail[..., : k + 2] @ w / h**k * width**k)
    d = np.stack(derivs + [np.zeros_like(derivs[0])] * (order + 1), axis=-1)
    coeffs = d @ _fade_matrix(order).T
    s = np.arange(1, n_ext + 1) / n_ext
    powers = s[:, None] ** np.arange(2 * order + 2)[None, :]
    ext = coeffs @ powers.T
    out = np.concatenate([v, ext.astype(v.dtype, copy=False)], axis=-1)
    return np.moveaxis(out, -1, axis)
