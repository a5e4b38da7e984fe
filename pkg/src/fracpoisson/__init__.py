"""Fractional Poisson processes, mixed variants, and planar random fields.

Modules
-------
specfun      Mittag-Leffler / Wright functions, stable and inverse-stable densities
sampling     seedable splittable randomness and exact stable-law samplers
subordinate  grid simulation of (mixed) stable subordinators and their inverses
processes    FPP / MFPP / MFNPP simulation, pmfs, moments, Hurst index
fields       planar Poisson and fractional Poisson random fields
fraccalc     Caputo L1 schemes, Laplace inversion, governing-equation residuals
stats        Monte Carlo estimators and statistical validation tests
validate     named validation suites behind the CLI ``validate`` subcommand
"""

__version__ = "0.1.0"
