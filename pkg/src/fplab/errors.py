"""Exception types raised across fplab."""


class FplabError(Exception):
    pass


class NonFiniteLoss(FplabError, FloatingPointError):
    """An objective evaluation produced NaN or Inf."""


class DimensionMismatch(FplabError, ValueError):
    pass


class EmptyDataset(FplabError, ValueError):
    pass


class NonDescentDirection(FplabError, ValueError):
    """The directional derivative at the line-search origin is not negative."""


class SwarmTooLarge(FplabError, ValueError):
    pass


class ZeroTargetFrequency(FplabError, ValueError):
    pass


class DegenerateDenominator(FplabError, ZeroDivisionError):
    pass


class BadMagic(FplabError, ValueError):
    pass


class TruncatedFile(FplabError, ValueError):
    pass


class CountMismatch(FplabError, ValueError):
    pass


class CountTooLarge(FplabError, ValueError):
    pass


class ConfigError(FplabError, ValueError):
    pass
