"""Exception types shared across the package."""


class ShapeError(ValueError):
    """A tensor, map, or layer geometry does not fit where it is used."""


class FormatError(ValueError):
    """A file (PGM, FSEQ, NNW1, model spec) is malformed or truncated."""


class ConfigError(ValueError):
    """Network spec, states, and weights do not agree with each other."""
