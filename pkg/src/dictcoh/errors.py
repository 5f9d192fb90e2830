"""Exception types raised across the package."""


class DictcohError(Exception):
    """Base class for all package errors."""


class DimensionError(DictcohError, ValueError):
    """Matrix dimensions violate a precondition (e.g. m >= n)."""


class ZeroColumnError(DictcohError, ValueError):
    """A dictionary column is the zero vector."""

    def __init__(self, column, message=None):
        self.column = int(column)
        super().__init__(message or f"column {self.column} is the zero vector")


class DomainError(DictcohError, ValueError):
    """A scalar argument lies outside its admissible range."""


class MalformedFileError(DictcohError, ValueError):
    """A serialized matrix file has an invalid header or payload."""


class RankDeficiencyError(DictcohError, ArithmeticError):
    """The matrix is not of full row rank to working tolerance."""

    def __init__(self, sigma_min, sigma_max, message=None):
        self.sigma_min = float(sigma_min)
        self.sigma_max = float(sigma_max)
        super().__init__(
            message
            or f"matrix is rank deficient: sigma_min={self.sigma_min:.3e}, "
            f"sigma_max={self.sigma_max:.3e}"
        )


class AsymmetryError(DictcohError, ValueError):
    """Input to a symmetric eigensolver is not symmetric."""


class NonConvergenceError(DictcohError, ArithmeticError):
    """An iterative method hit its iteration cap."""


class EnsembleError(DictcohError, ValueError):
    """The dictionary does not belong to the ensemble a method requires."""


class CoherenceOneError(DictcohError, ValueError):
    """mu(A) == 1: two columns are parallel, no left preconditioner helps."""


class DegenerateError(DictcohError, ArithmeticError):
    """The elementary perturbation cannot pick a step for this matrix."""


class X1DegenerateError(DegenerateError):
    """Both the constant and linear quartic terms vanish at an argmax pair."""


class X2DegenerateError(DegenerateError):
    """Several argmax pairs require perturbation steps of opposite sign."""
