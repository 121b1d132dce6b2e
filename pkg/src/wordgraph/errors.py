"""Exception hierarchy shared by every stage of the pipeline."""


class WordGraphError(Exception):
    """Base class for all errors raised by :mod:`wordgraph`."""


class ParseError(WordGraphError, ValueError):
    """Malformed input file.

    ``kind`` is a short machine-readable tag (``"header"``, ``"dimension"``,
    ``"duplicate"``, ...) and ``lineno`` the 1-based line that triggered it.
    """

    def __init__(self, kind, message, lineno=None):
        self.kind = kind
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(f"{where}{message}")


class DomainError(WordGraphError, ValueError):
    """Input is well formed but outside the domain of the computation."""


class UndefinedModularityError(DomainError):
    """Modularity requested on a graph with zero total edge weight."""


class ConfigError(WordGraphError, ValueError):
    """Invalid configuration key or value."""
