"""Exception types shared across the package."""

import numpy as np


class SingularGramError(np.linalg.LinAlgError):
    """An r-by-r Gram matrix was numerically singular where an SPD solve was needed."""


class DegeneratePointError(RuntimeError):
    """A factor pair lost full column rank (rank-deficient Gram)."""


class LinesearchFailureError(RuntimeError):
    """No acceptable step size was found along the given direction."""
