class NumericalFailure(RuntimeError):
    """An iterative or linear-algebra routine failed to meet its contract."""
