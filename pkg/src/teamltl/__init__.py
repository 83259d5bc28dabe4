"""LTL under synchronous team semantics."""
