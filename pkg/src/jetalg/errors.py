"""Exceptions raised by the engine."""


class EngineError(Exception):
    """Base class for all engine errors."""


class ParityError(EngineError):
    """A parity-homogeneity requirement was violated."""


class ArityError(EngineError):
    """A tuple or matrix dimension does not match the declared one."""
