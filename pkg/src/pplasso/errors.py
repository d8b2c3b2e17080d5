"""Exception hierarchy shared by all pplasso modules."""


class PPLassoError(Exception):
    """Base class for all library errors."""

    #: short machine-parseable code used by the CLI
    code = "E_GENERIC"


class EmptyErosionError(PPLassoError):
    """Eroding a window by r would leave an empty or degenerate rectangle."""

    code = "E_EMPTY_EROSION"


class OutOfWindowError(PPLassoError):
    """A location lies outside the model window."""

    code = "E_OUT_OF_WINDOW"


class OutOfExtentError(PPLassoError):
    """A location lies outside a raster's georeferenced extent."""

    code = "E_OUT_OF_EXTENT"


class MissingPatternError(PPLassoError):
    """An interaction model was evaluated without a point configuration."""

    code = "E_MISSING_PATTERN"


class SingularDesignError(PPLassoError):
    """The (weighted) design matrix is rank deficient."""

    code = "E_SINGULAR"


class DivergedError(PPLassoError):
    """An iterative fit failed to meet its tolerance within the iteration cap."""

    code = "E_DIVERGED"


class NonFiniteError(PPLassoError):
    """A numerical evaluation overflowed or produced non-finite values."""

    code = "E_NON_FINITE"


class NoPenalizedCoefficientsError(PPLassoError):
    """A penalty plan has no coefficient with a positive multiplier."""

    code = "E_NO_PENALIZED"


class ZeroTauError(PPLassoError):
    """cERIC was requested at tau = 0 where its penalty term diverges."""

    code = "E_ZERO_TAU"


class NoConvergedPointError(PPLassoError):
    """Model selection found no converged path point to rank."""

    code = "E_NO_CONVERGED"


class UnstableModelError(PPLassoError):
    """The model is not locally stable (unbounded conditional intensity)."""

    code = "E_UNSTABLE"


class SingularActiveHessianError(PPLassoError):
    """The Hessian restricted to the active set is singular."""

    code = "E_SINGULAR_HESSIAN"


class WeightSumError(PPLassoError):
    """Quadrature weights failed the sum-to-domain-area invariant."""

    code = "E_WEIGHT_SUM"
