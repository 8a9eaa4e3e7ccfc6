"""
This module provides the type annotations shared across the identification workflow.

Variables:
    - `Codeword`: A float64 numpy array of length n with entries in [0, A]
      (molecule release rates, molecules/second).
    - `Observation`: An int64 numpy array of length n with the molecule counts
      seen by the receiver.
    - `MessageIndex`: A 1-based message number i in [1, L].

Classes:
    - `ParameterError`: Raised for any input outside the ranges the channel,
      code or decoder accept.
"""

from typing import Sequence, Union

import numpy as np

Codeword = np.ndarray
Observation = np.ndarray
MessageIndex = int

ArrayLike = Union[np.ndarray, Sequence[float]]


class ParameterError(ValueError):
    """An argument falls outside its admissible range."""
