"""Exception hierarchy shared across tsgen."""

from __future__ import annotations


class TsgenError(Exception):
    """Base class for every error raised by tsgen."""


class CycleError(TsgenError):
    """Intra-slice (lag-0) parent relations contain a cycle."""

    def __init__(self, nodes, epoch=None):
        self.nodes = list(nodes)
        self.epoch = epoch
        where = f" in epoch {epoch}" if epoch is not None else ""
        path = " -> ".join(str(n) for n in self.nodes + self.nodes[:1])
        super().__init__(f"lag-0 cycle{where}: {path}")


class RangeError(TsgenError, ValueError):
    """A discrete value lies outside 1..radix."""


class InvalidDistribution(TsgenError, ValueError):
    """Probabilities or Gaussian parameters fail their preconditions."""


class ParseError(TsgenError):
    """The spec document is not well-formed JSON."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        loc = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(loc + message)


class SchemaError(TsgenError):
    """The document is JSON but has wrong types, missing or unknown keys."""

    def __init__(self, message: str, path: str = "$"):
        self.path = path
        super().__init__(f"{path}: {message}")


class SemanticError(TsgenError):
    """The document parsed but the declared network violates an invariant."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class StructureMismatch(TsgenError):
    """A dataset's shape or cell kinds disagree with the network spec."""


class NotAnHmm(TsgenError):
    """The network is not the two-node Gaussian-emission HMM special case."""


class InternalError(TsgenError):
    """An invariant of the sampler was breached (a bug, not a user error)."""
