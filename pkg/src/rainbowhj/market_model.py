"""Market and contract data for rainbow (max-of-n) call options.

Raw user input lives in :class:`MarketModel` and :class:`OptionSpec`.
Pricing routines only accept a :class:`ValidatedModel`, which is produced by
:func:`validate_model` and carries the Cholesky factor of the correlation
matrix alongside numpy views of the data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    CorrelationOutOfRange,
    DimensionMismatch,
    EmptySpotVector,
    InvalidOption,
    NegativeVol,
    NonPositiveSpot,
    NotPositiveSemidefinite,
    ValidationError,
)

PIVOT_TOL = 1e-12
SYMMETRY_TOL = 1e-12

MAX_CALL = "max-call"


@dataclass(frozen=True)
class MarketModel:
    """n correlated lognormal assets and a flat risk-free rate.

    Attributes:
        spot: current prices, one per asset.
        vol: annualized volatilities.
        rate: continuously compounded risk-free rate.
        corr: n x n correlation matrix (nested sequences).
        drift: real-world drifts; stored only, pricing is risk-neutral.
    """

    spot: tuple[float, ...]
    vol: tuple[float, ...]
    rate: float
    corr: tuple[tuple[float, ...], ...]
    drift: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "spot", tuple(float(s) for s in self.spot))
        object.__setattr__(self, "vol", tuple(float(v) for v in self.vol))
        object.__setattr__(self, "rate", float(self.rate))
        object.__setattr__(
            self, "corr", tuple(tuple(float(c) for c in row) for row in self.corr)
        )
        if self.drift is not None:
            object.__setattr__(self, "drift", tuple(float(m) for m in self.drift))

    @property
    def n(self) -> int:
        return len(self.spot)

    @classmethod
    def single(cls, spot: float, vol: float, rate: float) -> "MarketModel":
        return cls(spot=(spot,), vol=(vol,), rate=rate, corr=((1.0,),))

    @classmethod
    def uniform(
        cls, spot: Sequence[float], vol: Sequence[float], rate: float, rho: float = 0.0
    ) -> "MarketModel":
        """Model whose off-diagonal correlations all equal ``rho``."""
        n = len(spot)
        corr = tuple(
            tuple(1.0 if i == j else rho for j in range(n)) for i in range(n)
        )
        return cls(spot=tuple(spot), vol=tuple(vol), rate=rate, corr=corr)


@dataclass(frozen=True)
class OptionSpec:
    """European option contract: payoff kind, strike and maturity (years)."""

    strike: float
    maturity: float
    kind: str = MAX_CALL

    def __post_init__(self) -> None:
        if self.kind != MAX_CALL:
            raise InvalidOption(f"unsupported payoff kind {self.kind!r}")
        if not self.strike > 0:
            raise InvalidOption(f"strike = {self.strike!r} must be strictly positive")
        if not self.maturity > 0:
            raise InvalidOption(f"maturity = {self.maturity!r} must be strictly positive")

    def payoff(self, spots: np.ndarray) -> np.ndarray:
        return payoff_max_call(spots, self.strike)


@dataclass(frozen=True, eq=False)
class ValidatedModel:
    """Immutable, checked market model. Build with :func:`validate_model`."""

    source: MarketModel
    spot: np.ndarray
    vol: np.ndarray
    rate: float
    corr: np.ndarray
    chol: np.ndarray
    drift: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.spot.shape[0]

    @property
    def covariance(self) -> np.ndarray:
        return self.corr * np.outer(self.vol, self.vol)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def check_correlation(corr: np.ndarray) -> list[ValidationError]:
    """Symmetry, unit diagonal and range checks (no PSD check)."""
    problems: list[ValidationError] = []
    n = corr.shape[0]
    if corr.ndim != 2 or corr.shape != (n, n):
        return [DimensionMismatch("corr", n, corr.shape[-1] if corr.ndim else 0)]
    for i in range(n):
        if not np.isfinite(corr[i, i]) or abs(corr[i, i] - 1.0) > SYMMETRY_TOL:
            problems.append(CorrelationOutOfRange(i, i, corr[i, i], "diagonal must equal 1"))
        for j in range(i + 1, n):
            c = corr[i, j]
            if not np.isfinite(c) or not -1.0 <= c <= 1.0:
                problems.append(CorrelationOutOfRange(i, j, c))
            elif abs(c - corr[j, i]) > SYMMETRY_TOL:
                problems.append(
                    CorrelationOutOfRange(i, j, c, f"is not symmetric (corr[{j}][{i}] = {corr[j, i]!r})")
                )
        for j in range(i):
            c = corr[i, j]
            if not np.isfinite(c) or not -1.0 <= c <= 1.0:
                problems.append(CorrelationOutOfRange(i, j, c))
    return problems


def check_model(model: MarketModel) -> list[ValidationError]:
    """Return every violated invariant of ``model`` (empty when valid)."""
    problems: list[ValidationError] = []
    n = model.n
    if n == 0:
        return [EmptySpotVector()]
    for i, s in enumerate(model.spot):
        if not (np.isfinite(s) and s > 0):
            problems.append(NonPositiveSpot(i, s))
    if len(model.vol) != n:
        problems.append(DimensionMismatch("vol", n, len(model.vol)))
    for i, v in enumerate(model.vol):
        if not (np.isfinite(v) and v >= 0):
            problems.append(NegativeVol(i, v))
    if model.drift is not None and len(model.drift) != n:
        problems.append(DimensionMismatch("drift", n, len(model.drift)))
    if len(model.corr) != n or any(len(row) != n for row in model.corr):
        got = len(model.corr) if all(len(r) == len(model.corr) for r in model.corr) else -1
        problems.append(DimensionMismatch("corr", n, got))
        return problems
    corr = np.array(model.corr, dtype=float)
    corr_problems = check_correlation(corr)
    problems.extend(corr_problems)
    if not corr_problems:
        try:
            cholesky_factor(corr)
        except NotPositiveSemidefinite as exc:
            problems.append(exc)
    return problems


def validate_model(model: MarketModel) -> ValidatedModel:
    """Check every invariant of ``model`` and freeze it for pricing.

    Raises:
        ValidationError: the first violated invariant; its ``violations``
            attribute lists all of them.
    """
    problems = check_model(model)
    if problems:
        first = problems[0]
        first.violations = problems
        raise first
    corr = np.array(model.corr, dtype=float)
    n = model.n
    drift = np.array(model.drift if model.drift is not None else [model.rate] * n, dtype=float)
    return ValidatedModel(
        source=model,
        spot=_frozen(model.spot),
        vol=_frozen(model.vol),
        rate=model.rate,
        corr=_frozen(corr),
        chol=_frozen(cholesky_factor(corr)),
        drift=_frozen(drift),
    )


def cholesky_factor(corr) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == corr`` for a PSD matrix.

    Pivots in ``[-PIVOT_TOL, 0]`` are clamped to zero so that rank-deficient
    matrices (perfect correlation) factor cleanly; the corresponding column
    below the pivot is zero.
    """
    a = np.asarray(corr, dtype=float)
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - np.dot(L[j, :j], L[j, :j])
        if pivot < -PIVOT_TOL:
            raise NotPositiveSemidefinite(j, pivot)
        if pivot <= PIVOT_TOL:
            # Zero pivot: the remainder of the column must vanish as well.
            for i in range(j + 1, n):
                resid = a[i, j] - np.dot(L[i, :j], L[j, :j])
                if abs(resid) > 1e-9:
                    raise NotPositiveSemidefinite(j, pivot)
            continue
        d = np.sqrt(pivot)
        L[j, j] = d
        for i in range(j + 1, n):
            L[i, j] = (a[i, j] - np.dot(L[i, :j], L[j, :j])) / d
    return L


def payoff_max_call(spots, strike: float):
    """max(max_i s_i - K, 0), taking the max over the last axis of ``spots``."""
    s = np.asarray(spots, dtype=float)
    if s.size == 0 or (s.ndim > 0 and s.shape[-1] == 0):
        raise EmptySpotVector()
    best = s.max(axis=-1) if s.ndim > 0 else s
    out = np.maximum(best - strike, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def term_count(n: int) -> int:
    """Number of terms in the n-asset pricing equation: 4, 7, 11, 16, 22, ..."""
    if n < 1:
        raise ValueError(f"asset count must be >= 1, got {n}")
    return (n * n + 3 * n + 4) // 2
