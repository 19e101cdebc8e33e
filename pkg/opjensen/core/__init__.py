"""opjensen - Core Package"""

from opjensen.core.errors import OpJensenError
from opjensen.core.models import (
    CoefficientPolicy,
    HermitianMatrix,
    InequalityReport,
    SpectrumInterval,
    UnitVector,
    VectorFamily,
)
from opjensen.core.parsers import parse_f, parse_h, parse_policy
from opjensen.core.coefficients import check_h_convex, jensen_coefficient
from opjensen.core.inequalities import mond_pecaric_check
from opjensen.core.converse import compute_constants

__all__ = [
    'OpJensenError',
    'CoefficientPolicy',
    'HermitianMatrix',
    'InequalityReport',
    'SpectrumInterval',
    'UnitVector',
    'VectorFamily',
    'parse_f',
    'parse_h',
    'parse_policy',
    'check_h_convex',
    'jensen_coefficient',
    'mond_pecaric_check',
    'compute_constants',
]
