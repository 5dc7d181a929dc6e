"""Exception and warning types shared across the library."""


class CclustError(Exception):
    """Base class for all library errors."""


# --- simplex construction / validation ---

class NegativeEntryError(CclustError, ValueError):
    """A probability vector entry is below zero."""


class SumOutOfToleranceError(CclustError, ValueError):
    """Entries of a probability vector do not sum to 1 within tolerance."""


class NonFiniteInputError(CclustError, ValueError):
    """Input contains NaN or infinity."""


class InvalidOrderError(CclustError, ValueError):
    """Entropy/divergence order must be positive and different from 1."""


class EmptyBatchError(CclustError, ValueError):
    """An operation received an empty batch of distributions."""


class ShapeMismatchError(CclustError, ValueError):
    """Array shapes passed to an operation do not agree."""


# --- M-step solver ---

class ZeroWeightError(CclustError, ValueError):
    """The interior-solution branch requires strictly positive support weights."""


class MaxIterationsExceededError(CclustError, RuntimeError):
    """Root-finding safeguard: iteration cap reached without convergence."""


class BoundaryPointError(CclustError, ValueError):
    """Gradient undefined: mean pseudo-label has a zero entry where prior is positive."""


# --- evaluation ---

class NonSquareError(CclustError, ValueError):
    """Confusion matrix must be square for one-to-one matching."""


class LengthMismatchError(CclustError, ValueError):
    """Prediction and label sequences have different lengths."""


class DegeneratePartitionWarning(UserWarning):
    """A partition is degenerate (single cluster); metric returned as 0 by convention."""


# --- data / pipeline ---

class InvalidParamsError(CclustError, ValueError):
    """Dataset generator parameters out of range."""


class IndexOutOfRangeError(CclustError, ValueError):
    """A class index lies outside [0, K)."""


class NotADistributionError(CclustError, ValueError):
    """A transition-matrix row is not a valid distribution."""


class ParseError(CclustError, ValueError):
    """CSV cell could not be parsed; carries 1-based row and column."""

    def __init__(self, row, col, message):
        super().__init__(f"row {row}, column {col}: {message}")
        self.row = row
        self.col = col


class RaggedRowsError(CclustError, ValueError):
    """CSV row has a different number of fields than the header; carries 1-based row."""

    def __init__(self, row, expected, got):
        super().__init__(f"row {row}: expected {expected} fields, got {got}")
        self.row = row
