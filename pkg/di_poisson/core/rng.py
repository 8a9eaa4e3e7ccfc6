"""
Seeded, counter-based random streams.

Every random draw in the package comes from a ``RandomStream``: a global seed plus
a key of non-negative integers naming *what* the draws are for (purpose, codeword
length, repeat, block or target index). The key is fed to
``numpy.random.SeedSequence`` as its spawn key and the resulting state drives a
``numpy.random.Philox`` counter-based bit generator. Two streams with the same
seed and key always yield the same numbers, no matter which worker thread asks
for them or in which order, so Monte Carlo results do not depend on the degree of
parallelism.

Classes:
    RandomStream: Immutable (seed, key) pair with ``child`` and ``generator``.

Constants:
    Purpose labels that follow (n, repeat) in the keys used by the simulator
    and the codebook generator.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

SEED_MASK = (1 << 64) - 1

# purpose labels, appended below the (n, repeat) key
CODEBOOK = 1
TYPE1 = 2
TYPE2 = 3
PAIR_SELECTION = 4


@dataclass(frozen=True)
class RandomStream:
    """
    A deterministic source of random generators keyed by integer labels.

    Attributes
    ----------
    seed : int
        The 64-bit global seed.
    key : Tuple[int, ...]
        Labels identifying this stream below the seed.
    """

    seed: int
    key: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if any(label < 0 for label in self.key):
            raise ValueError(f"stream labels must be non-negative, got {self.key}")

    @classmethod
    def from_seed(cls, seed: int) -> "RandomStream":
        return cls(int(seed) & SEED_MASK)

    def child(self, *labels: int) -> "RandomStream":
        """Return the sub-stream whose key extends this one by ``labels``."""
        return RandomStream(self.seed, self.key + tuple(int(label) for label in labels))

    def generator(self) -> np.random.Generator:
        """
        Build a fresh generator positioned at the start of this stream.

        Returns
        -------
        np.random.Generator
            A Philox-backed generator; calling this twice gives identical draws.
        """
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(sequence))
