"""Class numbers and L(1, chi_d) statistics for the real quadratic fields
Q(sqrt(d)), d = 4m^2+1 squarefree, next to their random Euler product model."""

__version__ = "0.1.0"

from . import arith, family, lfun, model, stats  # noqa: F401
