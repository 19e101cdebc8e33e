"""
opjensen

Numerical verification of Jensen-type inequalities for h-convex functions
of self-adjoint operators.
"""

__version__ = '1.0.0'
__license__ = 'MIT'

from opjensen.core import (
    CoefficientPolicy,
    HermitianMatrix,
    InequalityReport,
    UnitVector,
    compute_constants,
    jensen_coefficient,
    mond_pecaric_check,
    parse_f,
    parse_h,
)

from opjensen.processing import (
    BatchRunner,
    ConcurrentRunner
)

__all__ = [
    'CoefficientPolicy',
    'HermitianMatrix',
    'InequalityReport',
    'UnitVector',
    'compute_constants',
    'jensen_coefficient',
    'mond_pecaric_check',
    'parse_f',
    'parse_h',
    'BatchRunner',
    'ConcurrentRunner',
]
