"""Exception types raised across curvlab."""


class CurvlabError(Exception):
    pass


class NonPositiveMetric(CurvlabError):
    pass


class OutOfDomain(CurvlabError):
    pass


class RankDeficientSeed(CurvlabError):
    pass


class ZeroVector(CurvlabError):
    pass


class VectorNotInSubspace(CurvlabError):
    pass


class InvalidWeights(CurvlabError):
    pass


class UnknownFunctional(CurvlabError):
    pass


class DegenerateDenominator(CurvlabError):
    pass


class DegreeOverflow(CurvlabError):
    pass


class NotHolomorphic(CurvlabError):
    pass


class NotKahler(CurvlabError):
    pass


class NotTorusModel(CurvlabError):
    pass


class WrongDimension(CurvlabError):
    pass


class ConfigSyntaxError(CurvlabError):
    """Malformed config line."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class RangeError(CurvlabError):
    """Config value outside its documented range."""

    def __init__(self, field: str, message: str, line: int = 0):
        self.field = field
        self.line = line
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{field}: {message}")


class ConfigError(CurvlabError):
    """Collects every problem found in a config; ``errors`` holds one issue per entry."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))
