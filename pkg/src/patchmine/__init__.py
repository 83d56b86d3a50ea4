"""Mine recurring fix patterns from bug-fix patches and apply them as repairs."""

__version__ = "0.1.0"
