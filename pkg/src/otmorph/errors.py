"""Exception hierarchy shared by all otmorph modules."""


class OtmorphError(Exception):
    """Base class for all errors raised by this package."""


# --- measures ---------------------------------------------------------------


class AllZeroInput(OtmorphError):
    """Every pixel of the input is zero; no measure can be formed."""


class NegativeInput(OtmorphError):
    """Input contains a significantly negative entry."""


class IndexOutOfRange(OtmorphError):
    """Pixel index outside the grid."""


class ShapeMismatch(OtmorphError):
    """Operands are defined on different grids or have inconsistent lengths."""


# --- transport --------------------------------------------------------------


class InstanceTooLarge(OtmorphError):
    """Problem size exceeds the limit of the exact LP oracle."""


class NotConverged(OtmorphError):
    """Operation requires converged dual potentials."""


# --- barycenter -------------------------------------------------------------


class EmptyInputs(OtmorphError):
    """An input list that must be non-empty is empty."""


class StepNotPositive(OtmorphError):
    """Mirror-descent step size must be positive."""


# --- sparse coding / priors -------------------------------------------------


class SparsityOutOfRange(OtmorphError):
    """Requested sparsity level is invalid for the dictionary."""


class TooFewSamples(OtmorphError):
    """Not enough training samples to initialize the dictionary."""


class ProcessUnavailable(OtmorphError):
    """External projector process could not be started or has exited."""


class ProtocolViolation(OtmorphError):
    """External projector response violates the wire protocol."""


class Timeout(OtmorphError):
    """External projector did not respond within the deadline."""


# --- ADMM -------------------------------------------------------------------


class InconsistentState(OtmorphError):
    """ADMM state fields do not satisfy their mutual invariants."""


# --- I/O --------------------------------------------------------------------


class BadMagic(OtmorphError):
    """File does not start with the expected magic number."""


class TruncatedFile(OtmorphError):
    """File ends before the declared payload is complete."""


class IoError(OtmorphError):
    """Underlying I/O failure while reading or writing a file."""


class ConfigError(OtmorphError):
    """Run configuration contains unknown keys or invalid values."""
