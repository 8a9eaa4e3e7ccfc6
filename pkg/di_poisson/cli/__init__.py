"""
di_poisson.cli
--------------

The command line interface of di_poisson.

Modules:
    - main: The typer app with the generate, simulate, bounds and verify commands.
    - config: RunConfig and the defaults < JSON file < flags resolution.

For more specific details, refer to the docstrings within each module.
"""
