"""Weight calculus, closures, random expansions and census checks for sparse random structures."""

__version__ = "0.1.0"
