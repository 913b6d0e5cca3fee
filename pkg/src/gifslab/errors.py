"""Exception hierarchy for gifslab.

Every library-specific failure derives from :class:`GifsError` so callers
(and the CLI) can map failures to exit codes without catching broad
built-ins.
"""

from __future__ import annotations


class GifsError(Exception):
    """Base class for all gifslab errors."""


class IndexOutOfRange(GifsError, IndexError):
    """A map, weight or word index is outside the system's range."""


class PointOutsideDomain(GifsError, ValueError):
    """A point (input or computed image) left the declared domain box."""


class WeightBelowDelta(GifsError, ValueError):
    """A weight evaluated below its declared positive lower bound."""


class SumNotOne(GifsError, ValueError):
    """Weights at a point do not sum to one within tolerance."""


class E1Violation(GifsError, ValueError):
    """Declared per-argument Lipschitz sums do not certify contraction."""


class WordSpaceTooLarge(GifsError, ValueError):
    """n**k exceeds the configured word-enumeration cap."""


class NotEventuallyContractive(GifsError, RuntimeError):
    """No power k <= degree had all sampled word stretches below one."""


class CellBudgetExceeded(GifsError, RuntimeError):
    """A grid step would enumerate more cell tuples than the budget allows."""


class AtomBudgetExceeded(GifsError, RuntimeError):
    """A measure step would create more atoms than the budget allows."""


class SupportTooLarge(GifsError, RuntimeError):
    """Exact transport was asked for supports beyond the flow cap; prune first."""


class EmptySet(GifsError, ValueError):
    """An operation requires a nonempty grid set."""


class NoConvergence(GifsError, RuntimeError):
    """Fixed-point iteration hit max_iter with gap above tolerance.

    The partially converged result is attached as ``.partial`` when
    available.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class SystemFileError(GifsError, ValueError):
    """A system/FDE description file is malformed or has unknown keys."""
