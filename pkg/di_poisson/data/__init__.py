"""
di_poisson.data
---------------

Modules:
    - file_repository

"""
