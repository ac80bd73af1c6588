"""Monotone convolution and monotone Levy processes, numerically.

Modules
-------
measure
    Discretised probability measures (atoms plus gridded density).
transform
    Cauchy and reciprocal Cauchy transforms; Stieltjes inversion.
convolution
    Monotone convolution by shift-kernel mixtures and by composition.
semigroup
    Convolution semigroups from characteristic pairs via the Pick flow.
markov
    Transition kernels, the Markov semigroup, its generator and paths.
matrix_oracle
    Finite-dimensional monotone products used as an independent oracle.
cli
    Batch command line front end.
"""
from .errors import InputError, MonolevError, NumericalError
from .functions import BlackBox, Polynomial, Resolvent
from .measure import DiscretizedMeasure, make_measure
from .semigroup import CharacteristicPair, brownian_pair, drift_pair, poisson_pair

__all__ = [
    "BlackBox", "CharacteristicPair", "DiscretizedMeasure", "InputError", "MonolevError",
    "NumericalError", "Polynomial", "Resolvent", "brownian_pair", "drift_pair", "make_measure",
    "poisson_pair",
]
__version__ = "0.1.0"
