"""Exception hierarchy.

Two families matter to callers: structural problems with the input
(`GraphSpecError`, `ConditionError`) and domain singularities hit during a
numerical evaluation (`DomainError` and its subclasses).  The CLI maps the
first family to exit code 4 and the second to exit code 3.
"""


class QGraphError(Exception):
    """Base class for all errors raised by this package."""

    def details(self):
        """Machine readable payload, merged into CLI error reports."""
        return {}


class GraphSpecError(QGraphError, ValueError):
    """Invalid graph structure or graph file contents."""


class ConditionError(QGraphError, ValueError):
    """A vertex condition fails validation.

    Parameters
    ----------
    message : str
    vertex : str, optional
        Id of the offending vertex, when known.
    """

    def __init__(self, message, vertex=None):
        if vertex is not None:
            message = f"vertex {vertex!r}: {message}"
        super().__init__(message)
        self.vertex = vertex

    def details(self):
        return {"vertex": self.vertex} if self.vertex is not None else {}


class DomainError(QGraphError, ArithmeticError):
    """A quantity is singular or undefined at the requested wavenumber."""


class PoleError(DomainError):
    """The Green's function has a pole at the requested energy."""

    def __init__(self, message, nearest_k=None):
        super().__init__(message)
        self.nearest_k = nearest_k

    def details(self):
        return {"nearest_k": self.nearest_k}


class ScarPresentError(DomainError):
    """``I - U_BB`` is singular because of a bound state in the continuum.

    The detected `ScarBasis` travels with the exception so that callers can
    switch to the regularized evaluation without detecting it again.
    """

    def __init__(self, message, scar):
        super().__init__(message)
        self.scar = scar

    def details(self):
        return {"k0": self.scar.k0, "eigenvalue_gap": self.scar.gap}


class DegeneracyError(DomainError):
    """A degenerate root or scar was found where a simple one is required."""

    def __init__(self, message, k=None, multiplicity=None):
        super().__init__(message)
        self.k = k
        self.multiplicity = multiplicity

    def details(self):
        return {"k": self.k, "multiplicity": self.multiplicity}


class ScanResolutionError(DomainError):
    """The root count did not stabilise when the scan step was refined."""


class SeriesDivergenceError(DomainError):
    """A path-sum expansion was requested where it cannot converge."""
