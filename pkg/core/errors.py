from __future__ import annotations


class FractalBenchError(Exception):
    """Base class for computation errors; the CLI maps these to exit status 1."""


class InvalidSpec(FractalBenchError, ValueError):
    pass


class UnsupportedVariant(FractalBenchError, ValueError):
    pass


class CapacityExceeded(FractalBenchError):
    pass


class EmptyInput(FractalBenchError, ValueError):
    pass


class NoHoles(FractalBenchError, ValueError):
    pass


class NoPlateau(FractalBenchError, ValueError):
    pass


class ScaleMismatch(FractalBenchError, ValueError):
    pass


class DegenerateFit(FractalBenchError):
    pass


class InsufficientScales(DegenerateFit):
    pass


class NoFixedPoint(FractalBenchError):
    pass


class DegenerateFixedPoint(NoFixedPoint):
    pass


class IrrelevantFixedPoint(FractalBenchError):
    pass


class MeasureOverflow(FractalBenchError, OverflowError):
    pass


class Undersampled(FractalBenchError, ValueError):
    pass


class MalformedInput(FractalBenchError, ValueError):
    """Input file could not be parsed (PGM header, CSV columns)."""
