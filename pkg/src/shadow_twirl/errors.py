"""Exception hierarchy shared by every engine."""


class ShadowTwirlError(Exception):
    """Base class for all errors raised by this package."""


class InputError(ShadowTwirlError, ValueError):
    """Invalid parameters or malformed input files (CLI exit code 2)."""


class NonConvergenceError(ShadowTwirlError, RuntimeError):
    """An iterative numerical routine failed to converge (CLI exit code 1)."""


class NumericalDegeneracyError(NonConvergenceError):
    """An SVD failed while evolving the kappa MPS."""

    def __init__(self, layer, message="SVD did not converge"):
        self.layer = layer
        super().__init__(f"{message} at layer {layer}")


class DepthCapReached(NonConvergenceError):
    """A depth scan hit ``t_cap`` while the objective was still decreasing.

    ``best_t`` holds the best depth seen so far and ``table`` the scanned values.
    """

    def __init__(self, t_cap, best_t=None, table=None):
        self.t_cap = t_cap
        self.best_t = best_t
        self.table = table
        super().__init__(f"unbounded (t_cap reached: {t_cap})")
