# Convenience imports for the package
from di_poisson.core import (
    analysis,
    channel,
    codebook,
    decoder,
    simulation,
)
from di_poisson.data import file_repository
