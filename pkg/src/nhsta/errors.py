"""Exception hierarchy.

Configuration problems subclass ``ValueError``; failures that arise while
computing subclass :class:`NumericalError`. The CLI maps the first family to
exit code 2 and the second to exit code 3.
"""


class NumericalError(RuntimeError):
    """Base class for failures raised during a computation."""


class OnCutError(NumericalError):
    """Chart point lies exactly on the branch cut {x = 0, 0 < |y| <= 1}."""

    def __init__(self, x: float, y: float):
        super().__init__(f"chart point ({x!r}, {y!r}) lies on the branch cut x=0, 0<|y|<=1")
        self.x = x
        self.y = y


class DegenerateError(NumericalError):
    """Operator has (numerically) coalescing eigenvalues."""


class UndersampledError(NumericalError):
    """Phase series has a jump that is neither small nor a clean cut crossing."""


class OverflowGuardError(NumericalError):
    def __init__(self, t: float, norm: float, bounds=(1e-12, 1e12)):
        super().__init__(f"state norm {norm:.3e} left [{bounds[0]:g}, {bounds[1]:g}] at t={t!r}")
        self.t = t
        self.norm = norm


class StepSizeError(NumericalError):
    def __init__(self, t: float, h: float):
        super().__init__(f"step size underflow (h={h:.3e}) at t={t!r}")
        self.t = t
        self.h = h


class NonRealOmegaError(NumericalError):
    """Counter-diabatic coupling would need a complex amplitude."""
