"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class ParseError(ValueError):
    """Malformed input text; carries a 1-based line and column."""

    def __init__(self, message, line=0, column=0, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = f"{source or '<input>'}:{line}:{column}"
        super().__init__(f"{where}: {message}")
        self.message = message


class DegenerateContextError(ValueError):
    """A sub-pair has weight exactly zero, so the sign tests are undefined."""

    def __init__(self, small, big, value):
        self.small = frozenset(small)
        self.big = frozenset(big)
        self.value = value
        super().__init__(
            f"zero weight on sub-pair {sorted(self.small)} <= {sorted(self.big)} ({value!r})"
        )


class InternalConsistencyError(RuntimeError):
    pass


class IrrationalityViolation(ValueError):
    def __init__(self, small, big, value):
        self.small = frozenset(small)
        self.big = frozenset(big)
        self.value = value
        super().__init__(
            f"zero beta on minimal pair {sorted(self.small)} < {sorted(self.big)} ({value!r})"
        )


class HypothesisViolation(ValueError):
    """An input fails the hypothesis an inequality check relies on."""

    def __init__(self, clause, detail=""):
        self.clause = clause
        self.detail = detail
        super().__init__(f"hypothesis violated: {clause}" + (f" ({detail})" if detail else ""))
