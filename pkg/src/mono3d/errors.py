"""Exception hierarchy shared by all modules."""


class Mono3DError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(Mono3DError, ValueError):
    """Bad user input: files, flags or parameters."""


class AlgorithmError(Mono3DError):
    """The estimator ran but could not produce a result."""


# geometry
class BehindCamera(AlgorithmError):
    pass


class InvalidFov(ConfigError):
    pass


# scenario / replay files
class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    def __init__(self, field, message=""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)


# filter
class InvalidResolution(ConfigError):
    pass


class EmptyDetections(AlgorithmError):
    pass


class DegenerateField(AlgorithmError):
    pass


class InsufficientViewpoints(AlgorithmError):
    pass


# clustering
class NoSurvivors(AlgorithmError):
    pass


class TooFewPoints(AlgorithmError):
    pass


class EmptyCluster(AlgorithmError):
    pass


class ZeroWeightSum(AlgorithmError):
    pass


class NoDetections(AlgorithmError):
    pass


# metrics
class CountMismatch(AlgorithmError):
    pass


class EmptyInput(Mono3DError, ValueError):
    pass


# bench
class InvalidInput(ConfigError):
    pass


class NondeterministicOutput(AlgorithmError):
    pass
