"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class InvalidResultError(ValueError):
    """An operation would produce an object that violates its invariants."""


class SingularSystemError(ArithmeticError):
    """The local moment matrix is singular to working precision.

    Usually the stencil is not unisolvent for the polynomial space, e.g.
    collinear nodes with a linear basis in 2D.
    """

    def __init__(self, message, point=None, indices=None):
        super().__init__(message)
        self.point = point
        self.indices = indices
