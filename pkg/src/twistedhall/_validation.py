"""Error types and small input checks shared by every module."""

from __future__ import annotations

import numbers

import numpy as np


class ValidationError(ValueError):
    """Bad user input: malformed signature, out-of-range parameter, etc."""


class NumericalFailure(ArithmeticError):
    """A computation ran but could not meet its numerical contract."""


def check_int(value, name: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_real(value, name: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a real number, got {value!r}") from None
    if not np.isfinite(out):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return out


def check_hermitian(M: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {M.shape}")
    if M.size and np.abs(M - M.conj().T).max() > tol * max(1.0, np.abs(M).max()):
        raise ValidationError("matrix is not Hermitian")
    return M
