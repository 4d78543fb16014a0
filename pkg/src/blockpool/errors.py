"""Exception hierarchy for the blockpool package."""


class BlockpoolError(Exception):
    """Base class for all blockpool errors."""


# --- dense linear algebra -------------------------------------------------

class NotPositiveDefinite(BlockpoolError):
    """A matrix required to be SPD produced a non-positive pivot."""


class NoConvergence(BlockpoolError):
    """An iterative routine hit its iteration cap without converging."""


class ZeroMatrix(BlockpoolError):
    """A matrix required to be nonzero was (numerically) zero."""


# --- problem model --------------------------------------------------------

class TooFewRows(BlockpoolError):
    """Not enough rows for the requested number of centers (need n >= b >= 2)."""


class SingularBlock(BlockpoolError):
    """A per-center Gram matrix is singular where positive definiteness is required."""


class LengthMismatch(BlockpoolError):
    """Two vectors expected to have equal length did not."""


class ZeroBaseline(BlockpoolError):
    """The baseline loss in a relative ratio is zero."""


# --- structure generators -------------------------------------------------

class InfeasibleSpectrum(BlockpoolError):
    """The requested target spectrum cannot be realised."""


class InfeasibleParameters(BlockpoolError):
    """Generator parameters violate the construction's feasibility conditions."""


class BadEpsilon(BlockpoolError):
    """epsilon outside the admissible range (0, 1]."""


# --- data sharing ---------------------------------------------------------

class PoolTooSmall(BlockpoolError):
    """The shared pool is too small for the consumer that requested it."""


class EmptyResidualBlock(BlockpoolError):
    """Reallocating the pool would leave some center with no rows."""


# --- solvers ---------------------------------------------------------------

class InnerNoConvergence(BlockpoolError):
    """A per-center inner solve (Newton) failed to reach its tolerance."""


class LineSearchFailure(BlockpoolError):
    """A safeguarded one-dimensional search could not locate the root."""


class Divergence(BlockpoolError):
    """Iterates blew up (norm above the divergence threshold)."""


class SingularHessian(BlockpoolError):
    """A Newton step hit a (numerically) singular Hessian."""


# --- spectral analysis ----------------------------------------------------

class BlockCountTooLarge(BlockpoolError):
    """Operation requires enumerating b! orders and b is too large."""


class OutOfRange(BlockpoolError):
    """A scalar argument is outside the range the formula is valid on."""


# --- PCG ---------------------------------------------------------------

class EmptyContribution(BlockpoolError):
    """Some other center contributed no pooled rows to a global preconditioner."""


class Stagnation(BlockpoolError):
    """PCG residual failed to decrease for too many consecutive iterations."""


# --- CSV ingestion ----------------------------------------------------------

class ParseError(BlockpoolError):
    """CSV cell or structure could not be parsed.

    Carries the 1-based line number and column index of the offending cell.
    """

    def __init__(self, message, line, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class RaggedRows(ParseError):
    """CSV rows have inconsistent field counts."""


class NonNumericCell(ParseError):
    """A CSV cell expected to be numeric could not be converted."""
