"""Exception hierarchy shared by all heraldlab modules."""


class HeraldLabError(Exception):
    """Base class for all heraldlab errors."""


class ConfigError(HeraldLabError):
    """A parameter or configuration value violates its domain."""


class TruncationError(HeraldLabError):
    """Fock-space truncation too small for the requested squeezing."""


class ZeroHeraldError(HeraldLabError):
    """Conditioning on a herald outcome that has zero probability."""


class UndefinedG2Error(HeraldLabError):
    """g2(0) is undefined because the mean photon number vanishes."""


class DivergentRatioError(HeraldLabError):
    """Ideal-PNR improvement ratio diverges (unit-efficiency PNR has g2 = 0)."""


class EstimatorError(HeraldLabError):
    """A counting estimator cannot be evaluated from the given tallies."""


class TraceError(HeraldLabError):
    """A waveform lacks the structure required by the analysis."""


class MixtureFitError(HeraldLabError):
    """Gaussian-mixture fit failed or its inputs are inadequate."""


class EmptyAcceptanceError(HeraldLabError):
    """A discrimination threshold rejected every herald event."""


class ConsistencyError(HeraldLabError):
    """Monte Carlo results disagree with the analytic model beyond tolerance."""


class SchemaError(HeraldLabError):
    """Dataset, file, or matrix shape does not match the expected schema."""
