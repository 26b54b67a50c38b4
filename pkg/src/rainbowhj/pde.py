"""Finite-difference solver for the multi-asset Black-Scholes equation.

The pricing equation

    V_t + sum_i 1/2 sigma_i^2 s_i^2 V_{s_i s_i}
        + sum_{i<j} rho_ij sigma_i sigma_j s_i s_j V_{s_i s_j}
        + sum_i r s_i V_{s_i} - r V = 0

is solved in log-prices ``x_i = ln s_i`` and time-to-maturity ``tau = T - t``,
where it has constant coefficients (see :func:`to_log_coordinates`).

Boundary conditions, per coordinate: zero gradient at ``x_min`` (the payoff is
flat far out of the money in that asset) and linearity in ``s`` at ``x_max``
(``V_ss = 0``, imposed as linear extrapolation in spot space).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import solve_banded
from scipy.special import ndtr

from .errors import (
    BoundaryPoint,
    CflViolation,
    GridTooCoarse,
    InvalidGrid,
    UnsupportedDimension,
)
from .market_model import OptionSpec, ValidatedModel, payoff_max_call

SCHEMES = ("theta-1d", "adi-2d", "explicit-2d")


@dataclass(frozen=True)
class GridSpec:
    """Rectangular log-price grid and time discretization.

    ``theta`` weights the implicit part of the 1-D scheme.  ``adi`` selects the
    2-D splitting ("mcs" or "douglas", see :func:`_adi_2d`).  ``rannacher``
    replaces that many leading steps by two implicit half steps each; 0
    disables it.
    """

    x_min: tuple[float, ...]
    x_max: tuple[float, ...]
    nodes: tuple[int, ...]
    time_steps: int
    scheme: str = "theta-1d"
    theta: float = 0.5
    rannacher: int = 0
    adi: str = "mcs"

    def __post_init__(self) -> None:
        for name in ("x_min", "x_max", "nodes"):
            val = getattr(self, name)
            if np.ndim(val) == 0:
                val = (val,)
            object.__setattr__(self, name, tuple(val))
        object.__setattr__(self, "nodes", tuple(int(m) for m in self.nodes))
        if not len(self.x_min) == len(self.x_max) == len(self.nodes):
            raise InvalidGrid("x_min, x_max and nodes must have one entry per dimension")
        if self.scheme not in SCHEMES:
            raise InvalidGrid(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        for d, (lo, hi, m) in enumerate(zip(self.x_min, self.x_max, self.nodes)):
            if not lo < hi:
                raise InvalidGrid(f"x_min[{d}] = {lo!r} must be below x_max[{d}] = {hi!r}")
            if m < 3:
                raise GridTooCoarse(f"nodes[{d}] = {m} but at least 3 nodes are required")
        if self.time_steps < 1:
            raise InvalidGrid(f"time_steps = {self.time_steps} must be >= 1")
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidGrid(f"theta = {self.theta!r} must lie in [0, 1]")
        if self.adi not in ("mcs", "douglas"):
            raise InvalidGrid(f"unknown ADI variant {self.adi!r}; expected 'mcs' or 'douglas'")
        if self.rannacher < 0:
            raise InvalidGrid("rannacher must be nonnegative")

    @property
    def ndim(self) -> int:
        return len(self.nodes)

    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(np.linspace(lo, hi, m) for lo, hi, m in zip(self.x_min, self.x_max, self.nodes))

    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (m - 1) for lo, hi, m in zip(self.x_min, self.x_max, self.nodes))


def default_grid(
    model: ValidatedModel,
    option: OptionSpec,
    nodes: int | Sequence[int],
    time_steps: int,
    scheme: str | None = None,
    theta: float = 0.5,
    width: float | Sequence[float] | None = None,
    rannacher: int = 0,
) -> GridSpec:
    """Grid spanning spot and strike plus ``width`` log-units on each side.

    The default width is ``max(5 sigma_i sqrt(T), 0.5)`` per asset.
    """
    n = model.n
    if np.ndim(nodes) == 0:
        nodes = (int(nodes),) * n
    if width is None:
        width = [max(5.0 * v * math.sqrt(option.maturity), 0.5) for v in model.vol]
    elif np.ndim(width) == 0:
        width = [float(width)] * n
    lk = math.log(option.strike)
    ls = np.log(model.spot)
    lo = tuple(float(min(ls[i], lk) - width[i]) for i in range(n))
    hi = tuple(float(max(ls[i], lk) + width[i]) for i in range(n))
    if scheme is None:
        scheme = "theta-1d" if n == 1 else "adi-2d"
    return GridSpec(lo, hi, tuple(nodes), time_steps, scheme, theta, rannacher)


@dataclass(frozen=True)
class SurfaceSlice:
    """One time slice of a :class:`ValueSurface`."""

    axes: tuple[np.ndarray, ...]
    values: np.ndarray
    time: float
    log_price: bool = False

    def same_grid(self, other: "SurfaceSlice") -> bool:
        return len(self.axes) == len(other.axes) and all(
            a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.axes, other.axes)
        )

    def interpolate(self, points) -> np.ndarray:
        """Multilinear interpolation; ``points`` are spots when ``log_price``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if len(self.axes) == 1 and pts.shape[0] == 1 and pts.shape[1] != 1:
            pts = pts.T
        if self.log_price:
            pts = np.log(pts)
        interp = RegularGridInterpolator(self.axes, self.values, method="linear")
        return interp(pts)


@dataclass(frozen=True, eq=False)
class ValueSurface:
    """Values sampled on a rectangular grid at ascending times.

    ``values`` has shape ``(len(times), *grid_shape)``.  For pricing surfaces
    the axes hold log-prices (``log_price=True``).
    """

    axes: tuple[np.ndarray, ...]
    times: np.ndarray
    values: np.ndarray
    axis_names: tuple[str, ...]
    log_price: bool = False
    grid: GridSpec | None = None

    def __post_init__(self) -> None:
        shape = tuple(len(a) for a in self.axes)
        if self.values.shape != (len(self.times),) + shape:
            raise InvalidGrid(f"values shape {self.values.shape} does not match grid {shape}")
        if not np.all(np.isfinite(self.values)):
            raise InvalidGrid("surface contains non-finite values")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidGrid("surface times must be strictly ascending")
        for a in (self.times, self.values, *self.axes):
            a.setflags(write=False)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    def slice(self, index: int) -> SurfaceSlice:
        return SurfaceSlice(self.axes, self.values[index], float(self.times[index]), self.log_price)

    def spot_axes(self) -> tuple[np.ndarray, ...]:
        return tuple(np.exp(a) for a in self.axes) if self.log_price else self.axes

    def price_at(self, point, time_index: int = 0) -> float:
        return float(self.slice(time_index).interpolate(np.asarray(point, dtype=float)[None, :])[0])

    def to_csv(self, fh=None, time_indices: Sequence[int] | None = None) -> str | None:
        """Write one row per node, coordinates first, one column per time slice.

        Pricing surfaces additionally carry spot columns ``s1..sn`` after the
        log-price columns.  Floats use the shortest round-trip representation.
        Returns the text when ``fh`` is None.
        """
        idx = list(range(len(self.times))) if time_indices is None else list(time_indices)
        header = list(self.axis_names)
        if self.log_price:
            header += [f"s{d + 1}" for d in range(self.ndim)]
        header += [f"t={float(self.times[k])!r}" for k in idx]
        own = fh is None
        if own:
            fh = io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        mesh = np.meshgrid(*self.axes, indexing="ij")
        coords = [m.ravel() for m in mesh]
        if self.log_price:
            coords += [np.exp(c) for c in coords]
        cols = [self.values[k].ravel() for k in idx]
        for row in zip(*coords, *cols):
            w.writerow([repr(float(v)) for v in row])
        return fh.getvalue() if own else None


@dataclass(frozen=True)
class ConvectionDiffusionCoefficients:
    """Constant coefficients of ``u_tau = sum_ij A_ij u_ij + sum_i b_i u_i + c u``.

    ``diffusion`` is the symmetric matrix ``A`` with ``A_ii = sigma_i^2 / 2`` and
    ``A_ij = rho_ij sigma_i sigma_j / 2`` for ``i != j``; each unordered pair is
    counted twice in the double sum, so the mixed derivative carries the full
    ``rho_ij sigma_i sigma_j``.
    """

    diffusion: np.ndarray
    convection: np.ndarray
    reaction: float

    def cross(self, i: int, j: int) -> float:
        """Coefficient of ``u_{x_i x_j}`` for the unordered pair ``i != j``."""
        return 2.0 * float(self.diffusion[i, j])


def to_log_coordinates(model: ValidatedModel) -> ConvectionDiffusionCoefficients:
    A = 0.5 * model.covariance
    b = model.rate - 0.5 * model.vol**2
    return ConvectionDiffusionCoefficients(A, np.array(b), -model.rate)


def norm_cdf(x):
    """Standard normal cumulative distribution function."""
    out = ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def bs_closed_form_1d(spot, strike, rate, vol, maturity):
    """Black-Scholes price of a European call on one asset."""
    spot = np.asarray(spot, dtype=float)
    disc_k = strike * math.exp(-rate * maturity)
    if vol == 0:
        out = np.maximum(spot - disc_k, 0.0)
    else:
        sd = vol * math.sqrt(maturity)
        d1 = (np.log(spot / strike) + (rate + 0.5 * vol * vol) * maturity) / sd
        out = spot * ndtr(d1) - disc_k * ndtr(d1 - sd)
    return float(out) if out.ndim == 0 else out


def closed_form_surface(model: ValidatedModel, option: OptionSpec, x_axis, times) -> ValueSurface:
    """Sample the one-asset closed form on a log-price axis at calendar ``times`` < T."""
    if model.n != 1:
        raise UnsupportedDimension(model.n, "1")
    x_axis = np.asarray(x_axis, dtype=float)
    times = np.asarray(times, dtype=float)
    s = np.exp(x_axis)
    rows = [
        bs_closed_form_1d(s, option.strike, model.rate, float(model.vol[0]), option.maturity - t)
        if t < option.maturity
        else payoff_max_call(s[:, None], option.strike)
        for t in times
    ]
    return ValueSurface((x_axis,), times, np.stack(rows), ("x1",), log_price=True)


def bs_delta_1d(spot, strike, rate, vol, maturity):
    sd = vol * math.sqrt(maturity)
    d1 = (np.log(np.asarray(spot, dtype=float) / strike) + (rate + 0.5 * vol * vol) * maturity) / sd
    return norm_cdf(d1)


# -- line operators ---------------------------------------------------------

@dataclass(frozen=True)
class _Line:
    """Three-point operator along one axis with boundary rows eliminated."""

    lo: float
    di: float
    up: float
    ratio: float  # upper-boundary extrapolation factor (s_{N-1}-s_{N-2})/(s_{N-2}-s_{N-3})
    m: int  # interior nodes

    @classmethod
    def build(cls, a: float, b: float, c: float, dx: float, nodes: int) -> "_Line":
        return cls(
            lo=a / dx**2 - b / (2 * dx),
            di=-2 * a / dx**2 + c,
            up=a / dx**2 + b / (2 * dx),
            ratio=math.exp(dx),
            m=nodes - 2,
        )

    def apply(self, u: np.ndarray, axis: int) -> np.ndarray:
        """Operator applied at interior nodes along ``axis``; zeros on the edges."""
        u = np.moveaxis(u, axis, 0)
        out = np.zeros_like(u)
        out[1:-1] = self.lo * u[:-2] + self.di * u[1:-1] + self.up * u[2:]
        return np.moveaxis(out, 0, axis)

    def implicit_banded(self, scale: float) -> np.ndarray:
        """Banded form of ``I - scale * A`` on interior nodes, boundaries substituted."""
        m = self.m
        sub = np.full(m, -scale * self.lo)
        diag = np.full(m, 1.0 - scale * self.di)
        sup = np.full(m, -scale * self.up)
        # lower edge: u_0 = u_1
        diag[0] += -scale * self.lo
        # upper edge: u_{N-1} = (1 + k) u_{N-2} - k u_{N-3}
        k = self.ratio
        diag[-1] += -scale * self.up * (1 + k)
        if m >= 2:
            sub[-1] += scale * self.up * k
        else:
            diag[-1] += scale * self.up * k
        ab = np.zeros((3, m))
        ab[0, 1:] = sup[:-1]
        ab[1] = diag
        ab[2, :-1] = sub[1:]
        return ab


def _fill_edges(u: np.ndarray, axis: int, ratio: float) -> None:
    v = np.moveaxis(u, axis, 0)
    v[0] = v[1]
    v[-1] = (1 + ratio) * v[-2] - ratio * v[-3]


def _fill_bc(u: np.ndarray, lines: Sequence[_Line]) -> np.ndarray:
    if u.ndim == 1:
        _fill_edges(u, 0, lines[0].ratio)
        return u
    k1, k2 = lines[0].ratio, lines[1].ratio
    inner = u[1:-1, 1:-1]
    u[0, 1:-1] = inner[0]
    u[-1, 1:-1] = (1 + k1) * u[-2, 1:-1] - k1 * u[-3, 1:-1]
    u[1:-1, 0] = inner[:, 0]
    u[1:-1, -1] = (1 + k2) * u[1:-1, -2] - k2 * u[1:-1, -3]
    # corners: average the two one-dimensional extrapolations (keeps swap symmetry)
    lo1 = lambda j: u[1, j]
    hi1 = lambda j: (1 + k1) * u[-2, j] - k1 * u[-3, j]
    lo2 = lambda i: u[i, 1]
    hi2 = lambda i: (1 + k2) * u[i, -2] - k2 * u[i, -3]
    c00 = 0.5 * (lo1(0) + lo2(0))
    c10 = 0.5 * (hi1(0) + lo2(-1))
    c01 = 0.5 * (lo1(-1) + hi2(0))
    c11 = 0.5 * (hi1(-1) + hi2(-1))
    u[0, 0], u[-1, 0], u[0, -1], u[-1, -1] = c00, c10, c01, c11
    return u


def _implicit_solve(ab: np.ndarray, rhs: np.ndarray, axis: int, out: np.ndarray) -> None:
    """Solve along ``axis`` for interior nodes; writes into the interior of ``out``."""
    r = np.moveaxis(rhs, axis, 0)
    o = np.moveaxis(out, axis, 0)
    if r.ndim == 1:
        o[1:-1] = solve_banded((1, 1), ab, r[1:-1], check_finite=False)
    else:
        o[1:-1, 1:-1] = solve_banded((1, 1), ab, r[1:-1, 1:-1], check_finite=False)


def _mixed(u: np.ndarray, coef: float, dx1: float, dx2: float) -> np.ndarray:
    out = np.zeros_like(u)
    if coef != 0.0:
        out[1:-1, 1:-1] = coef * (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * dx1 * dx2)
    return out


# -- solvers ----------------------------------------------------------------

def _theta_1d(u0, line: _Line, dt: float, steps: int, theta: float, rannacher: int, save):
    u = u0.copy()
    ab_cache: dict[float, np.ndarray] = {}

    def step(u, h, th):
        key = h * th
        if key not in ab_cache:
            ab_cache[key] = line.implicit_banded(key)
        rhs = u + (1 - th) * h * line.apply(u, 0) if th < 1 else u.copy()
        new = np.empty_like(u)
        _implicit_solve(ab_cache[key], rhs, 0, new)
        return _fill_bc(new, [line])

    for k in range(1, steps + 1):
        if k <= rannacher:
            u = step(step(u, 0.5 * dt, 1.0), 0.5 * dt, 1.0)
        elif theta == 0:
            u = _fill_bc(u + dt * line.apply(u, 0), [line])
        else:
            u = step(u, dt, theta)
        save(k, u)
    return u


def _adi_2d(u0, lines, cross: float, dx, dt: float, steps: int, rannacher: int, save, variant: str = "mcs"):
    """Douglas-type splitting with the mixed term explicit.

    ``variant="douglas"`` is the plain Douglas scheme (theta = 1/2, first
    order in time once the mixed term is present).  ``"mcs"`` adds the
    modified Craig-Sneyd correction stage (theta = 1/3), which restores second
    order.  Each step runs both sweep orders and averages them, so the solution
    inherits the swap symmetry of the problem.
    """
    u = u0.copy()
    cache: dict[tuple[int, float], np.ndarray] = {}

    def ab(axis, scale):
        if (axis, scale) not in cache:
            cache[(axis, scale)] = lines[axis].implicit_banded(scale)
        return cache[(axis, scale)]

    def ops(v):
        return _mixed(v, cross, dx[0], dx[1]), lines[0].apply(v, 0), lines[1].apply(v, 1)

    def sweeps(y, base, order, theta, h):
        # y_j = y_{j-1} + theta h (F_j(y_j) - F_j(u))
        for axis in order:
            rhs = y - theta * h * base[1 + axis]
            new = np.empty_like(y)
            _implicit_solve(ab(axis, theta * h), rhs, axis, new)
            y = _fill_bc(new, lines)
        return y

    def step(u, h, theta, corrected):
        f0, f1, f2 = ops(u)
        base = (f0, f1, f2)
        y0 = _fill_bc(u + h * (f0 + f1 + f2), lines)
        results = []
        for order in ((0, 1), (1, 0)):
            y = sweeps(y0, base, order, theta, h)
            if corrected:
                g0, g1, g2 = ops(y)
                z0 = y0 + theta * h * (g0 - f0) + (0.5 - theta) * h * ((g0 + g1 + g2) - (f0 + f1 + f2))
                y = sweeps(_fill_bc(z0, lines), base, order, theta, h)
            results.append(y)
        return 0.5 * (results[0] + results[1])

    theta, corrected = (1.0 / 3.0, True) if variant == "mcs" else (0.5, False)
    for k in range(1, steps + 1):
        if k <= rannacher:
            u = step(step(u, 0.5 * dt, 1.0, False), 0.5 * dt, 1.0, False)
        else:
            u = step(u, dt, theta, corrected)
        save(k, u)
    return u


def _explicit_2d(u0, lines, cross: float, dx, dt: float, steps: int, save):
    u = u0.copy()
    for k in range(1, steps + 1):
        du = lines[0].apply(u, 0) + lines[1].apply(u, 1) + _mixed(u, cross, dx[0], dx[1])
        u = _fill_bc(u + dt * du, lines)
        save(k, u)
    return u


def explicit_stability_number(coef: ConvectionDiffusionCoefficients, dx, dt: float) -> float:
    """Half the forward-Euler spectral bound times dt; the scheme is stable when <= 1."""
    A = coef.diffusion
    lam = 4 * A[0, 0] / dx[0] ** 2 + 4 * A[1, 1] / dx[1] ** 2
    lam += 2 * abs(coef.cross(0, 1)) / (dx[0] * dx[1]) + abs(coef.reaction)
    return 0.5 * dt * lam


def solve_bs_pde(
    model: ValidatedModel, option: OptionSpec, grid: GridSpec, save_every: int | None = 1
) -> ValueSurface:
    """Price the max-call on ``grid``; returns the value surface in calendar time.

    Args:
        save_every: keep every k-th time level; ``None`` keeps only ``t = 0``
            and ``t = T``.  Both ends are always kept.

    Raises:
        UnsupportedDimension: more than two assets, or a scheme for the wrong n.
        CflViolation: explicit-2d with an unstable time step.
    """
    n = model.n
    if n > 2:
        raise UnsupportedDimension(n)
    if grid.ndim != n:
        raise InvalidGrid(f"grid has {grid.ndim} dimensions but the model has {n} assets")
    if (n == 1) != (grid.scheme == "theta-1d"):
        raise UnsupportedDimension(n, "1 (theta-1d)" if grid.scheme == "theta-1d" else "2 (adi-2d, explicit-2d)")

    T = option.maturity
    steps = grid.time_steps
    dt = T / steps
    axes = grid.axes()
    dx = grid.spacing()
    coef = to_log_coordinates(model)

    mesh = np.meshgrid(*[np.exp(a) for a in axes], indexing="ij")
    u0 = payoff_max_call(np.stack(mesh, axis=-1), option.strike)
    u0 = np.asarray(u0, dtype=float)

    saved: dict[int, np.ndarray] = {0: u0.copy()}

    def save(k, u):
        if k == steps or (save_every is not None and k % save_every == 0):
            saved[k] = u.copy()

    c_share = coef.reaction / n
    lines = [
        _Line.build(coef.diffusion[d, d], coef.convection[d], c_share, dx[d], grid.nodes[d])
        for d in range(n)
    ]
    if grid.scheme == "theta-1d":
        _theta_1d(u0, lines[0], dt, steps, grid.theta, grid.rannacher, save)
    elif grid.scheme == "adi-2d":
        _adi_2d(u0, lines, coef.cross(0, 1), dx, dt, steps, grid.rannacher, save, grid.adi)
    else:
        ratio = explicit_stability_number(coef, dx, dt)
        if ratio > 1.0:
            raise CflViolation(ratio)
        _explicit_2d(u0, lines, coef.cross(0, 1), dx, dt, steps, save)

    ks = sorted(saved, reverse=True)  # tau descending == calendar time ascending
    times = np.array([T - k * dt for k in ks])
    times[0] = 0.0
    values = np.stack([saved[k] for k in ks])
    names = tuple(f"x{d + 1}" for d in range(n))
    return ValueSurface(tuple(axes), times, values, names, log_price=True, grid=grid)


def delta_vector(surface: ValueSurface, time_index: int, point) -> np.ndarray:
    """Hedge ratios dV/ds_i at a spot vector, one per asset.

    Central differences in log-price are taken on the grid, converted with the
    chain rule ``dV/ds = (dV/dx) / s`` and interpolated multilinearly.

    Raises:
        BoundaryPoint: the point is not strictly inside the interior nodes.
    """
    point = np.atleast_1d(np.asarray(point, dtype=float))
    xs = np.log(point) if surface.log_price else point
    vals = surface.values[time_index]
    out = np.empty(surface.ndim)
    for d, ax in enumerate(surface.axes):
        if not ax[1] <= xs[d] <= ax[-2]:
            raise BoundaryPoint(f"coordinate {d} = {point[d]!r} is outside the interior nodes")
    for d, ax in enumerate(surface.axes):
        g = np.gradient(vals, ax, axis=d, edge_order=2)
        interp = RegularGridInterpolator(surface.axes, g, method="linear")
        out[d] = interp(xs[None, :])[0]
    if surface.log_price:
        out = out / point
    return out
