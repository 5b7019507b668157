"""Git history extraction into an embedded property graph, with query miners."""
__version__ = "0.1.0"
