"""Exception hierarchy shared by all estimation modules.

Every error carries a short machine-parsable ``category`` used by the CLI
to emit single-line diagnostics.
"""


class AdrfError(Exception):
    """Base class for all library errors."""

    category = "error"


class GridMismatchError(AdrfError):
    category = "grid-mismatch"


class EmptyInputError(AdrfError):
    category = "empty-input"


class ParameterError(AdrfError):
    category = "parameter"


class DataError(AdrfError):
    category = "data"


class DegenerateCovariateError(AdrfError):
    category = "degenerate-covariate"


class CollinearityError(AdrfError):
    category = "collinearity"


class ConvergenceError(AdrfError):
    category = "convergence"

    def __init__(self, message, grad_norm=None, index=None):
        super().__init__(message)
        self.grad_norm = grad_norm
        self.index = index


class AlignmentError(AdrfError):
    category = "alignment"


class RankError(AdrfError):
    category = "rank"


class FoldSizeError(AdrfError):
    category = "fold-size"


class PreconditionError(AdrfError):
    category = "precondition"


class ParseError(AdrfError):
    category = "parse"
