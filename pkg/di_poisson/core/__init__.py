"""
di_poisson.core
---------------

Channel model, codebooks, decoding, analytic bounds and the Monte Carlo harness.

Modules:
    - domain: Shared type aliases and the base parameter error.
    - rng: Keyed counter-based random streams.
    - channel: The discrete-time Poisson channel (pmf and exact sampling).
    - codebook: Codebook parameters, rejection-sampling generation and validation.
    - decoder: The threshold distance decoder.
    - analysis: Closed-form error and rate bounds.
    - report: Error-rate reports and the sweep log.
    - simulation: Empirical type I / type II error rates.

For more intricate details, consult the docstrings within each module.
"""
