"""Global numerical tolerance.

All comparisons default to one tolerance (1e-9).  Functions accept an
explicit ``tol`` that overrides it; ``None`` means "use the default".
"""

from contextlib import contextmanager

_DEFAULT_TOL = 1e-9


def get_tol():
    return _DEFAULT_TOL


def set_tol(value):
    global _DEFAULT_TOL
    value = float(value)
    if not value > 0:
        raise ValueError(f"tolerance must be positive, got {value}")
    _DEFAULT_TOL = value


def resolve(tol):
    return _DEFAULT_TOL if tol is None else float(tol)


@contextmanager
def tolerance(value):
    """Temporarily replace the default tolerance."""
    old = _DEFAULT_TOL
    set_tol(value)
    try:
        yield
    finally:
        set_tol(old)
