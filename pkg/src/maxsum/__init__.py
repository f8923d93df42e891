"""Sums versus maxima of i.i.d. generalized gamma variables.

Numerical machinery for deciding whether ``S_n = C * M_n`` in distribution,
where ``S_n`` is the sum and ``M_n`` the maximum of ``n`` i.i.d. copies.
"""

__version__ = "0.1.0"

from .errors import DomainError, MaxSumError, NumericalError  # noqa: F401
from .gengamma import GenGammaParams  # noqa: F401
