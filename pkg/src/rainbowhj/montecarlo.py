"""Risk-neutral Monte Carlo pricing over exactly sampled correlated GBM.

Normals come from a counter-based generator: draws are produced in blocks of
``BLOCK_SIZE`` samples and block ``b`` is generated by a Philox stream keyed
with the seed whose counter starts at ``b * 2**128``.  Sample ``k`` is thus a
pure function of ``(seed, k)``; any worker may produce any block and the
final reduction always walks blocks in index order, so results do not depend
on the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ValidationError
from .market_model import OptionSpec, ValidatedModel, payoff_max_call

BLOCK_SIZE = 1 << 15
_U64_TO_UNIT = 2.0 ** -53


@dataclass(frozen=True)
class PathConfig:
    n_paths: int
    seed: int = 0
    antithetic: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValidationError(f"n_paths = {self.n_paths!r} must be a positive integer")
        if self.antithetic and self.n_paths % 2:
            raise ValidationError(f"n_paths = {self.n_paths} must be even with antithetic variates")
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed = {self.seed!r} must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ValidationError(f"workers = {self.workers!r} must be >= 1")

    @property
    def n_draws(self) -> int:
        return self.n_paths // 2 if self.antithetic else self.n_paths


@dataclass(frozen=True)
class McEstimate:
    price: float
    std_error: float
    n_paths: int


def _block_normals(seed: int, block: int, dim: int) -> np.ndarray:
    bitgen = np.random.Philox(key=seed, counter=[0, 0, block, 0])
    raw = bitgen.random_raw(BLOCK_SIZE * dim).reshape(BLOCK_SIZE, dim)
    # Midpoint of the 2**-53 cell: strictly inside (0, 1), so ndtri stays finite.
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _U64_TO_UNIT
    return ndtri(u)


def _blocks(start: int, count: int):
    """Yield (block index, lo, hi) slices covering sample indices [start, start+count)."""
    stop = start + count
    b = start // BLOCK_SIZE
    while b * BLOCK_SIZE < stop:
        lo = max(start, b * BLOCK_SIZE) - b * BLOCK_SIZE
        hi = min(stop, (b + 1) * BLOCK_SIZE) - b * BLOCK_SIZE
        yield b, lo, hi
        b += 1


def _map_ordered(fn, items, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sample_correlated_normals(
    factor, count: int, seed: int, start: int = 0, workers: int = 1
) -> np.ndarray:
    """Return ``count`` correlated normal vectors ``L @ z`` as a (count, n) array.

    Rows are samples ``start, ..., start + count - 1`` of the stream for ``seed``.
    """
    L = np.asarray(factor, dtype=float)
    dim = L.shape[0]

    def work(item):
        b, lo, hi = item
        return _block_normals(seed, b, dim)[lo:hi]

    parts = _map_ordered(work, list(_blocks(start, count)), workers)
    z = np.concatenate(parts, axis=0) if parts else np.empty((0, dim))
    return z @ L.T


def _terminal(model: ValidatedModel, T: float, z: np.ndarray) -> np.ndarray:
    drift = (model.rate - 0.5 * model.vol**2) * T
    return model.spot * np.exp(drift + model.vol * math.sqrt(T) * z)


def simulate_terminal_spots(model: ValidatedModel, T: float, config: PathConfig) -> np.ndarray:
    """Terminal spot vectors, shape (n_paths, n), under the risk-neutral measure.

    With antithetic variates the first half of the rows uses ``+z`` and the
    second half the mirrored ``-z``.
    """
    if not T > 0:
        raise ValidationError(f"maturity T = {T!r} must be positive")
    _require_validated(model)
    z = sample_correlated_normals(model.chol, config.n_draws, config.seed, workers=config.workers)
    if config.antithetic:
        z = np.concatenate([z, -z], axis=0)
    return _terminal(model, T, z)


def mc_price(model: ValidatedModel, option: OptionSpec, config: PathConfig) -> McEstimate:
    """Discounted mean payoff with its standard error.

    The standard error uses the unbiased sample variance.  With antithetic
    variates it is computed from the pair averages, which are the i.i.d.
    quantities of that estimator.
    """
    _require_validated(model)
    T = option.maturity
    disc = math.exp(-model.rate * T)
    dim = model.n

    def work(item):
        b, lo, hi = item
        z = _block_normals(config.seed, b, dim)[lo:hi] @ model.chol.T
        pay = payoff_max_call(_terminal(model, T, z), option.strike)
        if config.antithetic:
            pay = 0.5 * (pay + payoff_max_call(_terminal(model, T, -z), option.strike))
        return disc * pay

    blocks = list(_blocks(0, config.n_draws))
    samples = np.concatenate(_map_ordered(work, blocks, config.workers))
    m = samples.shape[0]
    if np.all(samples == samples[0]):
        return McEstimate(price=float(samples[0]), std_error=0.0, n_paths=config.n_paths)
    price = float(np.mean(samples))
    std_error = float(np.std(samples, ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return McEstimate(price=price, std_error=std_error, n_paths=config.n_paths)


def _require_validated(model) -> None:
    if not isinstance(model, ValidatedModel):
        raise TypeError("pricing requires a ValidatedModel; call validate_model first")
