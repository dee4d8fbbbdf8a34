"""Twisted group algebras of Fuchsian groups: invariants, Harper spectra and Hall conductance."""

from ._validation import NumericalFailure, ValidationError
from .signatures import Signature

__all__ = ["Signature", "ValidationError", "NumericalFailure"]
__version__ = "0.1.0"
