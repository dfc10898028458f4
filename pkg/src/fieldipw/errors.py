class DataError(ValueError):
    """Input data violates a documented precondition."""


class NumericalError(RuntimeError):
    """A fit failed to produce a usable optimum."""


class ConvergenceError(NumericalError):
    def __init__(self, message, last_iterate=None, n_iter=None, grad_norm=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.n_iter = n_iter
        self.grad_norm = grad_norm


class SingularInformationError(NumericalError):
    pass
