"""Checks tying the pricing equation to its Hamilton-Jacobi reading.

Writing the pricing equation as ``V_t + H(DV) = 0`` makes ``H`` the full
spatial operator (diffusion, cross, drift and discount terms).  Since ``H``
contains second derivatives it is a differential operator rather than a
function of the gradient alone, so the residual below checks the pricing
equation itself; it does not claim a first-order HJ equivalence.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .errors import BoundaryPoint, CoincidentPair, GridMismatch, InsufficientSlices
from .market_model import ValidatedModel
from .pde import SurfaceSlice, ValueSurface, to_log_coordinates


@dataclass(frozen=True)
class ResidualReport:
    max_abs: float
    mean_abs: float
    worst_node: tuple[int, ...]  # (time index, *grid indices)
    interior_margin: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _uniform_step(axis: np.ndarray) -> float:
    h = np.diff(axis)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise GridMismatch("residual assembly needs uniformly spaced axes")
    return float(h[0])


def hamiltonian_field(model: ValidatedModel, surface: ValueSurface, time_index: int) -> np.ndarray:
    """``H(DV)`` on one slice; NaN on the outermost node layer.

    Log-price surfaces use ``sum A_ij V_ij + sum b_i V_i - r V`` with the
    coefficients of :func:`to_log_coordinates`; spot-coordinate surfaces use
    the equivalent form with ``s_i s_j`` factors.
    """
    n = surface.ndim
    if model.n != n:
        raise GridMismatch(f"model has {model.n} assets but the surface has {n} axes")
    u = np.asarray(surface.values[time_index], dtype=float)
    h = [_uniform_step(a) for a in surface.axes]
    inner = (slice(1, -1),) * n

    def shifted(offsets):
        return u[tuple(slice(1 + o, u.shape[d] - 1 + o) for d, o in enumerate(offsets))]

    def unit(d, k):
        return tuple(k if e == d else 0 for e in range(n))

    def mixed(i, j):
        pp = tuple(1 if e in (i, j) else 0 for e in range(n))
        pm = tuple(1 if e == i else -1 if e == j else 0 for e in range(n))
        return (shifted(pp) - shifted(pm) - shifted(tuple(-o for o in pm)) + shifted(tuple(-o for o in pp))) / (
            4 * h[i] * h[j]
        )

    first, second = [], []
    for d in range(n):
        up, dn = shifted(unit(d, 1)), shifted(unit(d, -1))
        first.append((up - dn) / (2 * h[d]))
        second.append((up - 2 * u[inner] + dn) / h[d] ** 2)

    if surface.log_price:
        coef = to_log_coordinates(model)
        out = coef.reaction * u[inner]
        for d in range(n):
            out = out + coef.diffusion[d, d] * second[d] + coef.convection[d] * first[d]
        for i in range(n):
            for j in range(i + 1, n):
                out = out + coef.cross(i, j) * mixed(i, j)
    else:
        mesh = np.meshgrid(*[a[1:-1] for a in surface.axes], indexing="ij")
        r = model.rate
        out = -r * u[inner]
        for d in range(n):
            s = mesh[d]
            out = out + 0.5 * model.vol[d] ** 2 * s * s * second[d] + r * s * first[d]
        for i in range(n):
            for j in range(i + 1, n):
                rho = model.corr[i, j]
                out = out + rho * model.vol[i] * model.vol[j] * mesh[i] * mesh[j] * mixed(i, j)

    full = np.full(u.shape, np.nan)
    full[inner] = out
    return full


def hamiltonian_residual(
    model: ValidatedModel,
    surface: ValueSurface,
    interior_margin: int = 1,
    t_max: float | None = None,
) -> ResidualReport:
    """Max and mean of ``|V_t + H(DV)|`` over interior nodes and interior slices.

    ``V_t`` uses second-order differences on the (possibly uneven) time axis;
    the first and last slices, and any slice later than ``t_max``, are
    excluded.  ``interior_margin`` node layers are dropped on every side.
    """
    if interior_margin < 1:
        raise ValueError("interior_margin must be >= 1")
    times = np.asarray(surface.times)
    if len(times) < 3:
        raise InsufficientSlices(f"need >= 3 time slices, surface has {len(times)}")
    if any(len(a) <= 2 * interior_margin for a in surface.axes):
        raise InsufficientSlices("grid has no interior nodes for this margin")
    vt = np.gradient(np.asarray(surface.values), times, axis=0, edge_order=2)
    keep = [k for k in range(1, len(times) - 1) if t_max is None or times[k] <= t_max]
    if not keep:
        raise InsufficientSlices("no interior time slice inside the requested window")
    m = interior_margin
    window = tuple(slice(m, len(a) - m) for a in surface.axes)
    resid = np.stack([np.abs(vt[k] + hamiltonian_field(model, surface, k))[window] for k in keep])
    flat = int(np.argmax(resid))
    where = np.unravel_index(flat, resid.shape)
    worst = (keep[where[0]],) + tuple(int(i) + m for i in where[1:])
    return ResidualReport(
        max_abs=float(resid.max()),
        mean_abs=float(resid.mean()),
        worst_node=worst,
        interior_margin=m,
    )


def lagrangian_value(model: ValidatedModel, surface: ValueSurface, point, time_index: int, phi: float) -> float:
    """``phi - H(DV)`` at a grid node, ``phi`` standing for the momentum term ``P . s_dot``."""
    point = tuple(int(i) for i in np.atleast_1d(point))
    for d, (i, a) in enumerate(zip(point, surface.axes)):
        if not 0 < i < len(a) - 1:
            raise BoundaryPoint(f"node index {i} on axis {d} is not interior")
    return float(phi - hamiltonian_field(model, surface, time_index)[point])


def _values(a) -> tuple[np.ndarray, SurfaceSlice | None]:
    if isinstance(a, SurfaceSlice):
        return np.asarray(a.values), a
    return np.asarray(a, dtype=float), None


def solution_metric(a, b) -> float:
    """Sup-norm distance ``max |a - b|`` between two slices on the same grid."""
    va, sa = _values(a)
    vb, sb = _values(b)
    if va.shape != vb.shape or (sa is not None and sb is not None and not sa.same_grid(sb)):
        raise GridMismatch(f"slices live on different grids ({va.shape} vs {vb.shape})")
    return float(np.max(np.abs(va - vb))) if va.size else 0.0


@dataclass(frozen=True)
class ShortMapReport:
    max_ratio: float
    passed: bool
    bound: float
    worst_pair: tuple[tuple[float, ...], tuple[float, ...]] | None


def short_map_check(f: Callable | SurfaceSlice, pairs, bound: float = 1.0) -> ShortMapReport:
    """Largest ``|f(x) - f(y)| / max_i |x_i - y_i|`` over spot-vector pairs.

    ``f`` is a vectorized function of spot vectors or a surface slice, which is
    interpolated multilinearly.  Passes when the ratio stays within ``bound + 1e-9``.
    """
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim == 2:
        pairs = pairs[..., None]
    x, y = pairs[:, 0, :], pairs[:, 1, :]
    dist = np.max(np.abs(x - y), axis=-1)
    if np.any(dist == 0):
        raise CoincidentPair(f"pair {int(np.flatnonzero(dist == 0)[0])} has identical points")
    evaluate = f.interpolate if isinstance(f, SurfaceSlice) else f
    fx = np.asarray(evaluate(x), dtype=float).reshape(-1)
    fy = np.asarray(evaluate(y), dtype=float).reshape(-1)
    ratio = np.abs(fx - fy) / dist
    k = int(np.argmax(ratio))
    mr = float(ratio[k])
    return ShortMapReport(
        max_ratio=mr,
        passed=mr <= bound + 1e-9,
        bound=bound,
        worst_pair=(tuple(x[k]), tuple(y[k])),
    )
