"""Exception types.  Every error carries a module-qualified ``code`` so the CLI
can report failures uniformly."""


class LyapgapError(Exception):
    code = "lyapgap.error"


class ConstructionError(LyapgapError):
    code = "hyperbolic.construction"


class TangencyError(LyapgapError):
    """A tracked geodesic passed within tolerance of a polygon vertex."""

    code = "hyperbolic.tangency"


class NonHyperbolicError(LyapgapError):
    code = "hyperbolic.non_hyperbolic"


class DegenerateCurveError(LyapgapError):
    code = "hyperbolic.degenerate_curve"


class RepresentationError(LyapgapError):
    code = "representation.invalid"


class RepFileError(LyapgapError):
    code = "representation.parse"


class ConvergenceError(LyapgapError):
    code = "representation.convergence"


class SamplingError(LyapgapError):
    """Too many samples aborted (tangency retries exhausted)."""

    code = "lyapunov.sampling"


class NoConvergenceError(LyapgapError):
    code = "anosov.no_convergence"


class DegenerateInputError(LyapgapError):
    code = "anosov.degenerate_input"


class DimensionError(LyapgapError):
    code = "anosov.dimension"


class InsufficientDataError(LyapgapError):
    code = "thermo.insufficient_data"


class ConfigError(LyapgapError):
    code = "cli.config"
