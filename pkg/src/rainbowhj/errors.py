"""Exception hierarchy shared across the package.

Validation problems subclass :class:`ValidationError`; numerical domain
problems raised by the Hamilton-Jacobi solver subclass :class:`HJDomainError`.
The CLI maps these families onto exit codes.
"""

from __future__ import annotations


class RainbowError(Exception):
    """Base class for all package errors."""


class ValidationError(RainbowError, ValueError):
    """Input data violates a documented invariant."""


class NonPositiveSpot(ValidationError):
    def __init__(self, index: int, value: float):
        self.index = index
        super().__init__(f"spot[{index}] = {float(value)!r} must be strictly positive")


class NegativeVol(ValidationError):
    def __init__(self, index: int, value: float):
        self.index = index
        super().__init__(f"vol[{index}] = {float(value)!r} must be nonnegative")


class CorrelationOutOfRange(ValidationError):
    def __init__(self, i: int, j: int, value: float, reason: str = "outside [-1, 1]"):
        self.index = (i, j)
        super().__init__(f"corr[{i}][{j}] = {float(value)!r} {reason}")


class NotPositiveSemidefinite(ValidationError):
    def __init__(self, index: int, pivot: float):
        self.index = index
        super().__init__(
            f"correlation matrix is not positive semidefinite: pivot {index} = {float(pivot)!r}"
        )


class DimensionMismatch(ValidationError):
    def __init__(self, field: str, expected: int, got: int):
        self.field = field
        super().__init__(f"{field} has dimension {got}, expected {expected}")


class InvalidOption(ValidationError):
    pass


class EmptySpotVector(ValidationError):
    def __init__(self):
        super().__init__("spot vector is empty")


class InvalidGrid(ValidationError):
    pass


class GridTooCoarse(InvalidGrid):
    pass


class UnsupportedDimension(RainbowError):
    def __init__(self, n: int, supported: str = "1 or 2"):
        self.n = n
        super().__init__(f"PDE solver supports n = {supported} assets, got n = {n}")


class CflViolation(RainbowError):
    def __init__(self, ratio: float):
        self.ratio = ratio
        super().__init__(
            f"explicit scheme unstable: stability number {ratio:.4g} exceeds 1; "
            "increase time_steps"
        )


class BoundaryPoint(RainbowError, ValueError):
    """A point lies on (or outside) the outer layer of grid nodes."""


class GridMismatch(RainbowError, ValueError):
    """Two surfaces or slices are sampled on different grids."""


class InsufficientSlices(RainbowError, ValueError):
    """Too few time slices for a centered time derivative."""


class CoincidentPair(RainbowError, ValueError):
    """A Lipschitz probe pair consists of two identical points."""


class HJDomainError(RainbowError):
    """Base class for failures of the Hamilton-Jacobi solver's search domains."""


class SupremumNotBracketed(HJDomainError):
    def __init__(self, nodes):
        self.nodes = list(nodes)
        shown = ", ".join(repr(q) for q in self.nodes[:5])
        more = "" if len(self.nodes) <= 5 else f" (+{len(self.nodes) - 5} more)"
        super().__init__(f"supremum over the momentum grid not bracketed at q = {shown}{more}")


class MinimizerOnBoundary(HJDomainError):
    def __init__(self, x, y):
        self.x = x
        self.y = y
        super().__init__(f"Hopf-Lax minimizer for x = {x!r} sits on the y-grid edge at {y!r}")


class LagrangianGapped(HJDomainError):
    pass
