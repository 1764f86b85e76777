"""Exception types shared by the library and the command line.

Every error carries a short machine-readable ``code`` and a process
``exit_code`` so the CLI can report failures without stack traces.
"""


class RcdimError(Exception):
    code = "error"
    exit_code = 1

    def to_dict(self):
        return {"code": self.code, "message": str(self)}


class InvalidRadius(RcdimError, ValueError):
    code = "invalid_radius"
    exit_code = 10


class IndexOutOfRange(RcdimError, IndexError):
    code = "index_out_of_range"
    exit_code = 11


class InvalidParameter(RcdimError, ValueError):
    code = "invalid_parameter"
    exit_code = 12


class InvalidCount(InvalidParameter):
    code = "invalid_count"


class InvalidS(InvalidParameter):
    code = "invalid_s"


class InvalidSampleCount(InvalidParameter):
    code = "invalid_sample_count"


class DegenerateCloud(RcdimError, ValueError):
    code = "degenerate_cloud"
    exit_code = 13


class DegenerateGraph(RcdimError, ValueError):
    code = "degenerate_graph"
    exit_code = 14


class RadiusMismatch(RcdimError, ValueError):
    code = "radius_mismatch"
    exit_code = 15


class OutOfRange(RcdimError, ValueError):
    code = "out_of_range"
    exit_code = 16


class NonMonotone(RcdimError, ValueError):
    code = "non_monotone"
    exit_code = 17


class InsufficientVertices(RcdimError, ValueError):
    code = "insufficient_vertices"
    exit_code = 18


class InsufficientBlocks(RcdimError, ValueError):
    code = "insufficient_blocks"
    exit_code = 19


class DegenerateProbability(RcdimError, ValueError):
    code = "degenerate_probability"
    exit_code = 20


class NestednessViolation(RcdimError, ValueError):
    code = "nestedness_violation"
    exit_code = 21


class ParseError(RcdimError, ValueError):
    code = "parse_error"
    exit_code = 22


class UsageError(RcdimError, ValueError):
    code = "usage_error"
    exit_code = 2


class SaturatedGraph(UserWarning):
    """Both graphs are complete; the estimate is 0 but carries no information."""
