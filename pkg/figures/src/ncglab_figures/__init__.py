"""Read-only figure rendering for ncglab CSV bundles."""

__version__ = "0.1.0"
