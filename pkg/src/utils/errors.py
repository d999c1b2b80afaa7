"""
Exception hierarchy shared by every package under src/

Sampling failures are never raised; they come back as SampleStatus.FAIL.
"""


class SketchError(Exception):
    """Base class for all errors raised by this project"""


class InvalidParamsError(SketchError, ValueError):
    """Bad machine, sketch, ingestion or extraction parameters"""


class PermutationError(SketchError, ValueError):
    """A permutation target is not a bijection on [len]"""


class VertexRangeError(SketchError, ValueError):
    """Vertex id outside [0, V), or an illegal hyperedge"""


class StreamFormatError(SketchError, ValueError):
    """Malformed stream file or a stream-legality violation"""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class CorruptSketchError(SketchError):
    """Sketch array header does not match what the reader expects"""


class RamBudgetExceeded(SketchError, AssertionError):
    """Live simulated RAM buffers exceed M words"""


class PreconditionError(SketchError):
    """An algorithm precondition checked after the stream failed"""


class SaturationError(SketchError):
    """Every subsampling level still has connectivity >= k"""


class BucketOverflowError(SketchError):
    """A densest-subgraph bucket holds more edges than 4 eps^2 E / V"""
