"""Legendre transform and Hopf-Lax solver for ``U_t + H(DU) = 0, U(., 0) = g``.

For convex, superlinear ``H`` and Lipschitz ``g`` the weak solution is

    U(x, t) = min_y { t L((x - y) / t) + g(y) },   L(q) = sup_p { p.q - H(p) }.

Both optimizations are carried out on rectangular grids followed by a local
quadratic step around the best node.  Refined candidates are always evaluated
with the true objective and only accepted when they improve on the best node,
so a refinement can never overshoot the grid optimum (important at kinks such
as ``g = |x|``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator
from scipy.sparse.linalg import spsolve

from .errors import (
    CoincidentPair,
    LagrangianGapped,
    MinimizerOnBoundary,
    SupremumNotBracketed,
    ValidationError,
)
from .pde import ValueSurface

_CHUNK = 1 << 22  # max entries of one (points x grid) work matrix


def as_axes(grid) -> tuple[np.ndarray, ...]:
    """Normalize a 1-D array or a sequence of 1-D arrays into a tuple of axes."""
    if isinstance(grid, np.ndarray) and grid.ndim == 1:
        return (grid.astype(float),)
    if isinstance(grid, (list, tuple)) and grid and np.ndim(grid[0]) == 0:
        return (np.asarray(grid, dtype=float),)
    return tuple(np.asarray(a, dtype=float) for a in grid)


def grid_points(axes: Sequence[np.ndarray]) -> np.ndarray:
    """All nodes of a rectangular grid as an (N, n) array in C order."""
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    return x


@dataclass(frozen=True)
class HamiltonianSpec:
    """``H: R^n -> R`` given by a vectorized evaluator over the last axis."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    dimension: int = 1
    declared_convex: bool = True
    name: str = "custom"

    def __call__(self, p) -> np.ndarray:
        return np.asarray(self.evaluator(_points(p, self.dimension)), dtype=float)

    def probe(self, p_grid) -> "ConvexityReport":
        """Convexity probe on ``p_grid``; raises if ``declared_convex`` is contradicted."""
        axes = as_axes(p_grid)
        values = self(grid_points(axes)).reshape([len(a) for a in axes])
        report = verify_convex_superlinear(axes, values)
        if self.declared_convex and not report.convex:
            raise ValidationError(
                f"Hamiltonian {self.name!r} declared convex but the midpoint test fails "
                f"(worst excess {report.worst_violation:.3g})"
            )
        return report


def quadratic_hamiltonian(n: int = 1) -> HamiltonianSpec:
    return HamiltonianSpec(lambda p: 0.5 * np.sum(p * p, axis=-1), n, True, "quadratic")


def power4_hamiltonian(n: int = 1) -> HamiltonianSpec:
    return HamiltonianSpec(lambda p: 0.25 * np.sum(p * p, axis=-1) ** 2, n, True, "power-4")


def abs_hamiltonian(n: int = 1) -> HamiltonianSpec:
    return HamiltonianSpec(lambda p: np.sqrt(np.sum(p * p, axis=-1)), n, True, "abs")


def polynomial_hamiltonian(coefficients: Sequence[float]) -> HamiltonianSpec:
    """One-dimensional ``H(p) = sum_k c_k p**k`` (coefficients in ascending order)."""
    coef = np.asarray(coefficients, dtype=float)
    return HamiltonianSpec(
        lambda p: np.polynomial.polynomial.polyval(p[..., 0], coef), 1, True, "polynomial"
    )


# -- Legendre transform ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class LagrangianTable:
    """``L`` sampled on a rectangular velocity grid; ``+inf`` marks empty suprema."""

    axes: tuple[np.ndarray, ...]
    values: np.ndarray
    unbracketed: tuple[tuple[float, ...], ...] = ()
    _interp: object = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if np.any(np.isnan(self.values)) or np.any(self.values == -np.inf):
            raise ValidationError("Lagrangian table contains NaN or -inf")
        object.__setattr__(self, "_interp", self._build_interpolant())

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def closed(self) -> bool:
        """True when every node on the outer shell is ``+inf``.

        The effective domain of a convex function is convex, so ``L`` is then
        known to be ``+inf`` outside the table as well.
        """
        return bool(np.all(np.isinf(self.values[_shell_mask(self.values.shape)])))

    def _build_interpolant(self):
        finite = np.isfinite(self.values)
        if self.dimension == 1:
            idx = np.flatnonzero(finite)
            if idx.size >= 4 and np.all(np.diff(idx) == 1):
                return CubicSpline(self.axes[0][idx], self.values[idx])
            return None
        if finite.all() and all(len(a) >= 4 for a in self.axes):
            # direct solve: the default iterative spline fit misses nodes by ~1e-6
            return RegularGridInterpolator(self.axes, self.values, method="cubic", solver=spsolve)
        return None

    def __call__(self, q) -> np.ndarray:
        """Interpolated ``L(q)``; ``+inf`` outside the effective domain, NaN off-table."""
        q = _points(q, self.dimension)
        shape = q.shape[:-1]
        q = q.reshape(-1, self.dimension)
        out = np.full(q.shape[0], np.nan)
        inside = np.ones(q.shape[0], dtype=bool)
        for d, ax in enumerate(self.axes):
            inside &= (q[:, d] >= ax[0]) & (q[:, d] <= ax[-1])
        if self.closed:
            out[~inside] = np.inf
        if self.dimension == 1 and isinstance(self._interp, CubicSpline):
            lo, hi = self._interp.x[0], self._interp.x[-1]
            qi = q[inside, 0]
            vals = np.full(qi.shape, np.inf)
            dom = (qi >= lo) & (qi <= hi)
            vals[dom] = self._interp(qi[dom])
            out[inside] = vals
        elif self._interp is not None:
            out[inside] = self._interp(q[inside])
        else:
            with np.errstate(invalid="ignore"):
                vals = RegularGridInterpolator(self.axes, self.values, method="linear")(q[inside])
            out[inside] = np.where(np.isnan(vals), np.inf, vals)
        return out.reshape(shape)

    def to_surface(self) -> ValueSurface:
        """Single-slice surface (time 0) for CSV export; ``+inf`` becomes the largest finite float."""
        vals = np.where(np.isfinite(self.values), self.values, np.finfo(float).max)
        names = tuple(f"q{d + 1}" for d in range(self.dimension))
        return ValueSurface(self.axes, np.array([0.0]), vals[None], names)


def _shell_mask(shape) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for d in range(len(shape)):
        idx = [slice(None)] * len(shape)
        idx[d] = 0
        mask[tuple(idx)] = True
        idx[d] = -1
        mask[tuple(idx)] = True
    return mask


def _parabolic_offsets(f_minus, f0, f_plus, h):
    """Vertex offset of the parabola through three equispaced samples (0 if degenerate)."""
    denom = f_minus - 2.0 * f0 + f_plus
    with np.errstate(divide="ignore", invalid="ignore"):
        off = 0.5 * h * (f_minus - f_plus) / denom
    off = np.where(np.isfinite(off) & (denom != 0), off, 0.0)
    return np.clip(off, -h, h)


def legendre_transform(
    H: HamiltonianSpec, p_grid, q_grid, unbracketed: str = "raise"
) -> LagrangianTable:
    """Numerical convex conjugate ``L(q) = max_p { p.q - H(p) }`` over ``p_grid``.

    A node ``q`` whose grid maximizer lies on the edge of ``p_grid`` has no
    bracketed supremum.  With ``unbracketed="raise"`` this raises
    :class:`SupremumNotBracketed`; with ``"inf"`` the node is stored as ``+inf``
    (the conjugate of a Hamiltonian with bounded slope, e.g. ``|p|``, is
    infinite there).
    """
    if unbracketed not in ("raise", "inf"):
        raise ValueError("unbracketed must be 'raise' or 'inf'")
    p_axes, q_axes = as_axes(p_grid), as_axes(q_grid)
    n = H.dimension
    if len(p_axes) != n or len(q_axes) != n:
        raise ValidationError(f"grids must have {n} axes to match the Hamiltonian")
    P = grid_points(p_axes)
    Hp = H(P)
    Q = grid_points(q_axes)
    p_shape = tuple(len(a) for a in p_axes)
    h = np.array([a[1] - a[0] for a in p_axes])

    interior_p = ~_shell_mask(p_shape).ravel()
    values = np.empty(Q.shape[0])
    flagged = np.zeros(Q.shape[0], dtype=bool)
    chunk = max(1, _CHUNK // P.shape[0])
    for start in range(0, Q.shape[0], chunk):
        q = Q[start : start + chunk]
        obj = q @ P.T - Hp[None, :]
        inner = np.where(interior_p[None, :], obj, -np.inf)
        best = np.argmax(inner, axis=1)
        rows = np.arange(q.shape[0])
        f0 = inner[rows, best]
        # ties with the edge (flat objectives such as H = |p|) count as bracketed
        edge_max = np.max(np.where(interior_p[None, :], -np.inf, obj), axis=1)
        edge = edge_max > f0 + 1e-12 * (1.0 + np.abs(f0))
        multi = np.unravel_index(best, p_shape)
        p_star = P[best].copy()
        for d in range(n):
            lo = list(multi)
            hi = list(multi)
            lo[d] = multi[d] - 1
            hi[d] = multi[d] + 1
            fm = obj[rows, np.ravel_multi_index(lo, p_shape)]
            fp = obj[rows, np.ravel_multi_index(hi, p_shape)]
            # objective is concave in p: negate to reuse the minimizing vertex formula
            p_star[:, d] += _parabolic_offsets(-fm, -f0, -fp, h[d])
        refined = np.sum(p_star * q, axis=1) - H(p_star)
        values[start : start + chunk] = np.maximum(f0, np.where(np.isfinite(refined), refined, -np.inf))
        flagged[start : start + chunk] = edge

    q_shape = tuple(len(a) for a in q_axes)
    bad = [tuple(float(v) for v in Q[i]) for i in np.flatnonzero(flagged)]
    if bad and unbracketed == "raise":
        raise SupremumNotBracketed([b[0] if n == 1 else b for b in bad])
    values[flagged] = np.inf
    return LagrangianTable(q_axes, values.reshape(q_shape), tuple(bad))


# -- convexity / superlinearity probe ---------------------------------------

@dataclass(frozen=True)
class ConvexityReport:
    convex: bool
    superlinear: bool
    worst_violation: float
    violations: tuple[tuple[tuple[float, ...], tuple[float, ...]], ...]
    growth_ratio: float
    pairs_checked: int


def verify_convex_superlinear(
    grid, values, tol: float = 1e-9, max_pairs: int = 200_000, seed: int = 0
) -> ConvexityReport:
    """Midpoint-convexity and superlinear-growth probe of a sampled function.

    Convexity: ``f((a+b)/2) <= (f(a)+f(b))/2 + tol`` for node pairs whose
    midpoint is again a node (all such pairs when few, otherwise a seeded
    random sample plus every adjacent triple along each grid line).

    Superlinearity (heuristic): ``min f(q)/|q|`` over the outermost node shell
    must be at least 1.2 times the same minimum over the shell halfway to the
    grid center.  Linear growth gives a ratio near 1.
    """
    axes = as_axes(grid)
    f = np.asarray(values, dtype=float)
    shape = tuple(len(a) for a in axes)
    if f.shape != shape:
        raise ValidationError(f"values shape {f.shape} does not match grid {shape}")
    if min(shape) < 5:
        raise ValidationError("convexity probe needs at least 5 nodes per dimension")
    n = len(axes)
    pts = grid_points(axes)
    flat = f.ravel()
    total = pts.shape[0]

    # candidate pairs (index multi-vectors with even differences)
    rng = np.random.default_rng(seed)
    idx = np.indices(shape).reshape(n, -1).T
    if total * total // 2 <= max_pairs:
        a, b = np.triu_indices(total, k=1)
    else:
        a = rng.integers(0, total, size=max_pairs)
        b = rng.integers(0, total, size=max_pairs)
    ia, ib = idx[a], idx[b]
    even = np.all((ia - ib) % 2 == 0, axis=1) & (a != b)
    a, b = a[even], b[even]
    mid = (idx[a] + idx[b]) // 2
    # adjacent triples along each axis
    trip_a, trip_b, trip_m = [a], [b], [mid]
    for d in range(n):
        base = idx[idx[:, d] <= shape[d] - 3]
        lo = base
        hi = base.copy()
        hi[:, d] += 2
        m = base.copy()
        m[:, d] += 1
        trip_a.append(np.ravel_multi_index(lo.T, shape))
        trip_b.append(np.ravel_multi_index(hi.T, shape))
        trip_m.append(m)
    a = np.concatenate(trip_a)
    b = np.concatenate(trip_b)
    m = np.ravel_multi_index(np.concatenate(trip_m).T, shape)

    fa, fb, fm = flat[a], flat[b], flat[m]
    with np.errstate(invalid="ignore"):
        excess = fm - 0.5 * (fa + fb)
    finite_ends = np.isfinite(fa) & np.isfinite(fb)
    excess = np.where(finite_ends, excess, -np.inf)
    bad = excess > tol
    worst = float(np.max(excess)) if excess.size else -np.inf
    violations = tuple(
        (tuple(pts[i]), tuple(pts[j])) for i, j in zip(a[bad][:10], b[bad][:10])
    )

    # growth probe
    centre = (np.array(shape) - 1) / 2.0
    level = np.max(np.abs(idx - centre) / np.maximum(centre, 1e-12), axis=1)
    radius = np.linalg.norm(pts, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(radius > 0, flat / radius, np.nan)
    outer = ratio[(level >= 1.0 - 1e-12) & np.isfinite(ratio)]
    inner_level = level[np.argmin(np.abs(level - 0.5))]
    inner = ratio[(np.abs(level - inner_level) < 1e-12) & np.isfinite(ratio)]
    if outer.size == 0 or inner.size == 0:
        growth, superlinear = float("nan"), False
    else:
        o, i = float(outer.min()), float(inner.min())
        if i <= 0:
            growth = math.inf if o > 0 else float("nan")
            superlinear = o > 0
        else:
            growth = o / i
            superlinear = growth >= 1.2
    return ConvexityReport(
        convex=not bool(np.any(bad)),
        superlinear=bool(superlinear),
        worst_violation=worst,
        violations=violations,
        growth_ratio=growth,
        pairs_checked=int(a.size),
    )


# -- Hopf-Lax ----------------------------------------------------------------

@dataclass(frozen=True)
class HJProblem:
    """Cauchy problem: Hamiltonian, scalar initial datum ``g`` and its Lipschitz bound."""

    hamiltonian: HamiltonianSpec
    initial: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    dimension: int = 1

    def __post_init__(self) -> None:
        if self.hamiltonian.dimension != self.dimension:
            raise ValidationError(
                f"Hamiltonian dimension {self.hamiltonian.dimension} != problem dimension {self.dimension}"
            )
        if not self.lipschitz >= 0:
            raise ValidationError(f"declared Lipschitz bound {self.lipschitz!r} must be >= 0")

    def g(self, x) -> np.ndarray:
        return np.asarray(self.initial(_points(x, self.dimension)), dtype=float)

    def check_lipschitz(self, pairs) -> float:
        """Probe estimate of Lip(g); raises if it exceeds the declared bound."""
        est = lipschitz_estimate(self.g, pairs)
        if est > self.lipschitz * (1 + 1e-9) + 1e-12:
            raise ValidationError(
                f"declared Lipschitz bound {self.lipschitz} is below the probe estimate {est}"
            )
        return est


def affine_initial(slope, intercept: float = 0.0):
    a = np.atleast_1d(np.asarray(slope, dtype=float))
    return lambda x: x @ a + intercept


def abs_initial():
    return lambda x: np.sqrt(np.sum(x * x, axis=-1))


def max_call_initial(strike: float):
    return lambda x: np.maximum(np.max(x, axis=-1) - strike, 0.0)


@dataclass(frozen=True)
class HopfLaxResult:
    value: float
    argmin: np.ndarray
    radius: float


def bracket_radius(L: LagrangianTable, lipschitz: float) -> float:
    """Velocity radius ``R`` outside of which no Hopf-Lax minimizer can lie.

    A minimizer velocity ``q*`` must satisfy ``L(q*) - Lip(g)|q*| <= L(0)``;
    ``R`` is the largest table velocity meeting that test plus one cell
    diagonal.  Raises :class:`LagrangianGapped` when the set reaches the table
    edge (unless the table is closed by ``+inf``) or when ``0`` is off-table.
    """
    L0 = float(L(np.zeros(L.dimension))[()])
    if not np.isfinite(L0):
        raise LagrangianGapped("L(0) is not available from the Lagrangian table")
    Q = grid_points(L.axes)
    vals = L.values.ravel()
    norm = np.linalg.norm(Q, axis=1)
    with np.errstate(invalid="ignore"):
        feasible = np.isfinite(vals) & (vals - lipschitz * norm <= L0 + 1e-12)
    shell = _shell_mask(L.values.shape).ravel()
    if np.any(feasible & shell):
        raise LagrangianGapped(
            "minimizer velocities are not bracketed by the Lagrangian table; "
            "widen q_grid or the momentum range"
        )
    cell = math.sqrt(sum((a[1] - a[0]) ** 2 for a in L.axes))
    radius = float(norm[feasible].max()) + cell
    if not L.closed:
        reach = min(min(-a[0], a[-1]) for a in L.axes)
        radius = min(radius, reach)
    return radius


def _extend_axes(axes, margin: float):
    out = []
    for a in axes:
        h = a[1] - a[0]
        k = int(math.ceil(margin / h - 1e-9)) + 1
        out.append(np.concatenate([a[0] - h * np.arange(k, 0, -1), a, a[-1] + h * np.arange(1, k + 1)]))
    return tuple(out)


def _hopf_lax_batch(problem: HJProblem, L: LagrangianTable, xs: np.ndarray, t: float, y_axes, radius: float):
    n = problem.dimension
    Y = grid_points(y_axes)
    gY = problem.g(Y)
    y_shape = tuple(len(a) for a in y_axes)
    h = np.array([a[1] - a[0] for a in y_axes])
    lo_edge = np.array([a[0] for a in y_axes])
    hi_edge = np.array([a[-1] for a in y_axes])
    ball = t * radius
    values = np.empty(xs.shape[0])
    argmins = np.empty_like(xs)
    chunk = max(1, _CHUNK // Y.shape[0])

    def objective(x, y):
        q = (x - y) / t
        Lq = L(q)
        if np.any(np.isnan(Lq)):
            raise LagrangianGapped(f"velocity (x - y) / t leaves the Lagrangian table at x = {x[0].tolist()}")
        with np.errstate(invalid="ignore"):
            return t * Lq + problem.g(y)

    for start in range(0, xs.shape[0], chunk):
        x = xs[start : start + chunk]
        diff = x[:, None, :] - Y[None, :, :]
        inball = np.linalg.norm(diff, axis=-1) <= ball
        obj = np.full(inball.shape, np.inf)
        rows, cols = np.nonzero(inball)
        obj[rows, cols] = objective(x[rows], Y[cols])
        # y = x is always admissible and uses L(0) exactly
        own = t * L(np.zeros((x.shape[0], n))) + problem.g(x)
        best = np.argmin(obj, axis=1)
        r = np.arange(x.shape[0])
        f0 = obj[r, best]
        y0 = Y[best].copy()
        use_own = own < f0
        multi = np.unravel_index(best, y_shape)

        for i in np.flatnonzero(~use_own):
            for d in range(n):
                k = multi[d][i]
                on_edge = k == 0 or k == y_shape[d] - 1
                leaves = (x[i, d] - ball < lo_edge[d] - 1e-12) if k == 0 else (x[i, d] + ball > hi_edge[d] + 1e-12)
                if on_edge and leaves and np.isfinite(f0[i]):
                    raise MinimizerOnBoundary(x[i].tolist(), Y[best[i]].tolist())

        # one parabolic step per axis, accepted only if it lowers the true objective
        y_ref = y0.copy()
        for d in range(n):
            lo = list(multi)
            hi = list(multi)
            lo[d] = np.clip(multi[d] - 1, 0, y_shape[d] - 1)
            hi[d] = np.clip(multi[d] + 1, 0, y_shape[d] - 1)
            fm = obj[r, np.ravel_multi_index(lo, y_shape)]
            fp = obj[r, np.ravel_multi_index(hi, y_shape)]
            ok = (multi[d] > 0) & (multi[d] < y_shape[d] - 1) & np.isfinite(fm) & np.isfinite(fp)
            off = _parabolic_offsets(fm, f0, fp, h[d])
            y_ref[:, d] += np.where(ok, off, 0.0)
        moved = np.any(y_ref != y0, axis=1) & ~use_own
        f_ref = np.full(x.shape[0], np.inf)
        if np.any(moved):
            okball = np.linalg.norm(x[moved] - y_ref[moved], axis=-1) <= ball
            sub = np.flatnonzero(moved)[okball]
            if sub.size:
                f_ref[sub] = objective(x[sub], y_ref[sub])
        val = np.where(use_own, own, f0)
        arg = np.where(use_own[:, None], x, y0)
        better = f_ref < val
        val = np.where(better, f_ref, val)
        arg = np.where(better[:, None], y_ref, arg)
        values[start : start + chunk] = val
        argmins[start : start + chunk] = arg
    return values, argmins


def hopf_lax_evaluate(problem: HJProblem, L: LagrangianTable, x, t: float, y_grid=None) -> HopfLaxResult:
    """``U(x, t)`` by grid minimization of ``t L((x-y)/t) + g(y)`` plus local refinement.

    ``y_grid`` defaults to a uniform grid covering the certified search ball.

    Raises:
        MinimizerOnBoundary: the best node sits on a ``y_grid`` edge that cuts the ball.
        LagrangianGapped: the search needs velocities outside the table.
    """
    if not t > 0:
        raise ValidationError(f"t = {t!r} must be positive")
    n = problem.dimension
    x = np.atleast_1d(np.asarray(x, dtype=float))
    radius = bracket_radius(L, problem.lipschitz)
    if y_grid is None:
        h = min(a[1] - a[0] for a in L.axes) * t
        k = max(int(math.ceil(t * radius / h)), 2)
        y_axes = tuple(x[d] + h * np.arange(-k, k + 1) for d in range(n))
    else:
        y_axes = as_axes(y_grid)
    v, a = _hopf_lax_batch(problem, L, x[None, :], t, y_axes, radius)
    return HopfLaxResult(float(v[0]), a[0], radius)


def hopf_lax_solve(problem: HJProblem, L: LagrangianTable, x_grid, times, y_grid=None) -> ValueSurface:
    """Hopf-Lax values on ``x_grid`` at ascending ``times``; ``t = 0`` gives ``g`` exactly.

    Without ``y_grid`` each time uses ``x_grid`` extended by the search-ball
    radius (same spacing), so minimizers never hit the edge.
    """
    x_axes = as_axes(x_grid)
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ValidationError("times must be nonnegative and strictly ascending")
    X = grid_points(x_axes)
    shape = tuple(len(a) for a in x_axes)
    radius = bracket_radius(L, problem.lipschitz) if np.any(times > 0) else 0.0
    slices = []
    for t in times:
        if t == 0:
            slices.append(problem.g(X).reshape(shape))
            continue
        y_axes = _extend_axes(x_axes, t * radius) if y_grid is None else as_axes(y_grid)
        v, _ = _hopf_lax_batch(problem, L, X, float(t), y_axes, radius)
        slices.append(v.reshape(shape))
    names = tuple(f"x{d + 1}" for d in range(len(x_axes)))
    return ValueSurface(x_axes, times.copy(), np.stack(slices), names)


def _grid_interpolant(axes, values):
    if len(axes) == 1:
        ax = axes[0]
        return lambda y: np.interp(y[..., 0], ax, values)
    interp = RegularGridInterpolator(axes, values, method="linear", bounds_error=False, fill_value=None)
    return lambda y: interp(y)


def semigroup_residual(problem: HJProblem, L: LagrangianTable, x_grid, t1: float, t2: float) -> float:
    """Max gap between ``U(., t2)`` and the solution restarted from ``U(., t1)``.

    The restart uses linear interpolation of the ``t1`` slice on ``x_grid``
    extended by the restart search radius, so the dynamic-programming identity
    is checked without edge effects.
    """
    if not 0 < t1 <= t2:
        raise ValidationError("need 0 < t1 <= t2")
    if t1 == t2:
        return 0.0
    x_axes = as_axes(x_grid)
    radius = bracket_radius(L, problem.lipschitz)
    direct = hopf_lax_solve(problem, L, x_axes, [t2]).values[0]
    y_axes = _extend_axes(x_axes, (t2 - t1) * radius)
    mid = hopf_lax_solve(problem, L, y_axes, [t1]).values[0]
    restart = HJProblem(problem.hamiltonian, _grid_interpolant(y_axes, mid), problem.lipschitz, problem.dimension)
    again = hopf_lax_solve(restart, L, x_axes, [t2 - t1], y_grid=y_axes).values[0]
    return float(np.max(np.abs(direct - again)))


def lipschitz_estimate(f, sample_pairs, ord=2) -> float:
    """``max |f(x) - f(y)| / ||x - y||`` over the pairs (a lower bound on Lip(f)).

    Args:
        f: vectorized function of points along the last axis.
        sample_pairs: array of shape (m, 2, n) or (m, 2) for scalar inputs.
        ord: vector norm, Euclidean by default (``np.inf`` for the sup norm).
    """
    pairs = np.asarray(sample_pairs, dtype=float)
    if pairs.ndim == 2:
        pairs = pairs[..., None]
    x, y = pairs[:, 0, :], pairs[:, 1, :]
    dist = np.linalg.norm(x - y, ord=ord, axis=-1)
    if np.any(dist == 0):
        raise CoincidentPair(f"pair {int(np.flatnonzero(dist == 0)[0])} has identical points")
    diff = np.abs(np.asarray(f(x), dtype=float) - np.asarray(f(y), dtype=float))
    return float(np.max(diff / dist)) if dist.size else 0.0
