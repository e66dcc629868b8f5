"""Input coercion helpers shared by the public functions."""

import numpy as np

from .exceptions import InvalidInputError, ShapeError


def as_matrix(A, name="A"):
    """Return ``A`` as a finite 2-D float64 array with at least one entry."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ShapeError(f"{name} must have at least one row and column")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return A


def as_vector(x, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {x.shape}")
    if x.size < 1:
        raise ShapeError(f"{name} must be non-empty")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return x


def as_square(A, name="A"):
    A = as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {A.shape}")
    return A


def check_positive(value, name):
    if not (value > 0):
        raise InvalidInputError(f"{name} must be positive, got {value!r}")
    return value
