"""
Unit tests for the dense linear algebra layer.
Eigensolver contract, functional calculus and instance generation.
"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from opjensen.core.errors import (
    DomainError,
    EigenSolverError,
    PreconditionError,
    SpectrumError,
)
from opjensen.core.functions import ScalarFunction
from opjensen.core.models import HermitianMatrix, SpectrumInterval, UnitVector
from opjensen.core.spectral import (
    barycenter_instance,
    block_diag,
    boundary_instance,
    eigh,
    ensure_contained,
    jacobi_eigh,
    matrix_function,
    quadratic_form,
    random_family,
    random_instance,
    random_operator,
    scalar_value,
    spectrum_bounds,
)


def random_symmetric(n, seed):
    """Symmetric matrix with standard normal entries"""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    return HermitianMatrix(entries=a + a.T)


def assert_eigen_contract(A, eig):
    n = A.dim
    assert_allclose(eig.reconstruct(), A.entries, atol=1e-10 * max(1.0, A.max_abs))
    assert np.max(np.abs(eig.eigenvectors.T @ eig.eigenvectors - np.eye(n))) <= 1e-10
    assert np.all(np.diff(eig.eigenvalues) >= 0)


@pytest.fixture
def unit_interval():
    """The working interval [1, 2]"""
    return SpectrumInterval(m=1.0, M=2.0)


class TestModels:
    """Validation of operators and vectors"""

    def test_matrix_is_symmetrized(self):
        """Construction averages v and its transpose"""
        A = HermitianMatrix(entries=[[1.0, 2.0], [0.0, 3.0]])
        assert_allclose(A.entries, [[1.0, 1.0], [1.0, 3.0]])

    def test_matrix_rejects_non_square(self):
        """A 2 x 3 array is not an operator"""
        with pytest.raises(ValidationError):
            HermitianMatrix(entries=np.ones((2, 3)))

    def test_matrix_rejects_oversized(self):
        """Dimensions above 64 are refused"""
        with pytest.raises(ValidationError):
            HermitianMatrix(entries=np.eye(65))

    def test_vector_needs_unit_norm(self):
        """||x|| must be 1 within 1e-12"""
        with pytest.raises(ValidationError):
            UnitVector(components=[1.0, 1.0])
        assert UnitVector.normalized([3.0, 4.0]).components.tolist() == pytest.approx([0.6, 0.8])

    def test_interval_requires_positive_m(self):
        """m <= 0 needs the positivity override"""
        with pytest.raises(ValidationError):
            SpectrumInterval(m=0.0, M=1.0)
        assert SpectrumInterval(m=0.0, M=1.0, positivity_override=True).width == 1.0

    def test_interval_requires_m_below_M(self):
        """Empty and reversed intervals are refused"""
        with pytest.raises(ValidationError):
            SpectrumInterval(m=2.0, M=1.0)


class TestEigensolver:
    """Jacobi and LAPACK paths satisfy the same contract"""

    @pytest.mark.parametrize('method', ['lapack', 'jacobi'])
    def test_diagonal_matrix(self, method):
        """A diagonal matrix returns its sorted diagonal"""
        eig = eigh(HermitianMatrix.diagonal([3.0, 1.0, 2.0]), method=method)
        assert_allclose(eig.eigenvalues, [1.0, 2.0, 3.0])

    @pytest.mark.parametrize('n', [1, 2, 5, 16])
    def test_jacobi_matches_lapack(self, n):
        """Both solvers agree on the spectrum"""
        A = random_symmetric(n, seed=n)
        assert_allclose(jacobi_eigh(A).eigenvalues, eigh(A).eigenvalues, atol=1e-10)

    def test_jacobi_reports_sweeps(self):
        """The Jacobi path records how many sweeps it used"""
        eig = jacobi_eigh(random_symmetric(8, seed=3))
        assert 0 < eig.sweeps <= 100

    def test_jacobi_sweep_limit(self):
        """Running out of sweeps raises with the residual"""
        with pytest.raises(EigenSolverError) as excinfo:
            jacobi_eigh(random_symmetric(4, seed=1), max_sweeps=0)
        assert excinfo.value.residual > 0

    def test_unknown_method(self):
        """Only lapack and jacobi exist"""
        with pytest.raises(PreconditionError):
            eigh(HermitianMatrix.diagonal([1.0, 2.0]), method='qr')

    @pytest.mark.slow
    @pytest.mark.parametrize('method', ['lapack', 'jacobi'])
    def test_contract_on_random_matrices(self, method):
        """500 random symmetric matrices up to 16 x 16"""
        for seed in range(500):
            A = random_symmetric(1 + seed % 16, seed)
            assert_eigen_contract(A, eigh(A, method=method))


class TestMatrixFunction:
    """Functional calculus f(A) = U diag(f(lambda)) U^T"""

    def test_square_is_matrix_product(self):
        """square(A) equals A @ A"""
        A, _ = random_instance(6, SpectrumInterval(m=1.0, M=2.0), seed=7)
        assert_allclose(matrix_function(A, ScalarFunction.square()).entries,
                        A.entries @ A.entries, atol=1e-12)

    def test_sqrt_squares_back(self):
        """sqrt(A)^2 recovers A"""
        A, _ = random_instance(5, SpectrumInterval(m=1.0, M=4.0), seed=11)
        root = matrix_function(A, ScalarFunction.sqrt()).entries
        assert_allclose(root @ root, A.entries, atol=1e-12)

    @pytest.mark.parametrize('f', [ScalarFunction.exp(), ScalarFunction.sqrt(), ScalarFunction.power(3.0)],
                             ids=['exp', 'sqrt', 'power3'])
    def test_commutes_with_block_diag(self, unit_interval, f):
        """f(diag(A_1, ..., A_k)) is diag(f(A_1), ..., f(A_k))"""
        for seed in range(20):
            rng = np.random.default_rng(seed)
            As = [random_operator(int(n), unit_interval, rng) for n in rng.integers(1, 6, 3)]
            expected = block_diag([matrix_function(A, f) for A in As]).entries
            actual = matrix_function(block_diag(As), f).entries
            assert_allclose(actual, expected, atol=1e-10 * max(1.0, np.max(np.abs(expected))))

    def test_eigenvalue_outside_domain(self):
        """sqrt of a negative eigenvalue names that eigenvalue"""
        with pytest.raises(DomainError) as excinfo:
            matrix_function(HermitianMatrix.diagonal([-1.0, 1.0]), ScalarFunction.sqrt())
        assert excinfo.value.value == -1.0

    def test_boundary_eigenvalue_is_clamped(self):
        """A rounding error below 0 is clamped onto the domain"""
        result = matrix_function(HermitianMatrix.diagonal([-1e-14, 1.0]), ScalarFunction.sqrt())
        assert_allclose(np.diag(result.entries), [0.0, 1.0])

    def test_scalar_value(self):
        """Scalars follow the same domain rules"""
        assert scalar_value(ScalarFunction.sqrt(), 4.0) == 2.0
        assert scalar_value(ScalarFunction.sqrt(), -1e-13) == 0.0
        with pytest.raises(DomainError):
            scalar_value(ScalarFunction.power(-1.0), 0.0)


class TestQuadraticForms:
    """Quadratic forms, spectrum bounds and block operators"""

    def test_quadratic_form(self):
        """<Ax, x> for a diagonal operator"""
        x = UnitVector.normalized([1.0, 1.0])
        assert quadratic_form(HermitianMatrix.diagonal([1.0, 2.0]), x) == pytest.approx(1.5)

    def test_dimension_mismatch(self):
        """Operator and vector sizes must agree"""
        with pytest.raises(PreconditionError):
            quadratic_form(HermitianMatrix.diagonal([1.0, 2.0]), UnitVector.normalized([1.0, 1.0, 1.0]))

    def test_spectrum_bounds(self):
        """Hull of the spectrum"""
        bounds = spectrum_bounds(HermitianMatrix.diagonal([2.0, 1.0, 1.5]))
        assert (bounds.m, bounds.M) == (1.0, 2.0)

    def test_nonpositive_spectrum(self):
        """lambda_min <= 0 is refused unless allowed"""
        A = HermitianMatrix.diagonal([0.0, 1.0])
        with pytest.raises(SpectrumError):
            spectrum_bounds(A)
        assert spectrum_bounds(A, allow_nonpositive=True).m == 0.0

    def test_degenerate_spectrum(self):
        """m == M leaves no interval"""
        with pytest.raises(SpectrumError):
            spectrum_bounds(HermitianMatrix.diagonal([2.0, 2.0]))

    def test_ensure_contained(self, unit_interval):
        """The spectrum must lie inside the interval"""
        ensure_contained(HermitianMatrix.diagonal([1.0, 2.0]), unit_interval)
        with pytest.raises(SpectrumError):
            ensure_contained(HermitianMatrix.diagonal([1.0, 2.5]), unit_interval)

    def test_block_diag(self):
        """Blocks are placed along the diagonal"""
        block = block_diag([HermitianMatrix.diagonal([1.0, 2.0]), HermitianMatrix.diagonal([3.0])])
        assert_allclose(block.entries, np.diag([1.0, 2.0, 3.0]))

    def test_block_diag_size_limit(self):
        """The block operator is subject to the dimension limit"""
        blocks = [HermitianMatrix(entries=np.eye(40)), HermitianMatrix(entries=np.eye(40))]
        with pytest.raises(PreconditionError):
            block_diag(blocks)


class TestInstances:
    """Seeded instance generation"""

    def test_deterministic_per_seed(self, unit_interval):
        """The same seed yields the same instance"""
        A1, x1 = random_instance(5, unit_interval, seed=42)
        A2, x2 = random_instance(5, unit_interval, seed=42)
        assert np.array_equal(A1.entries, A2.entries)
        assert np.array_equal(x1.components, x2.components)

    def test_spectrum_inside_interval(self, unit_interval):
        """Eigenvalues are drawn in [m, M]"""
        for seed in range(50):
            A, _ = random_instance(1 + seed % 8, unit_interval, seed)
            ensure_contained(A, unit_interval)

    def test_dimension_limits(self, unit_interval):
        """n outside [1, 64] is refused"""
        with pytest.raises(PreconditionError):
            random_instance(0, unit_interval, seed=0)

    def test_barycenter_instance(self, unit_interval):
        """<Ax, x> hits the target and m, M are eigenvalues"""
        for seed in range(20):
            A, x = barycenter_instance(4, unit_interval, 1.3, seed)
            assert quadratic_form(A, x) == pytest.approx(1.3, abs=1e-12)
            bounds = spectrum_bounds(A)
            assert bounds.m == pytest.approx(1.0, abs=1e-12)
            assert bounds.M == pytest.approx(2.0, abs=1e-12)

    def test_barycenter_outside_interval(self, unit_interval):
        """The target must lie in [m, M]"""
        with pytest.raises(PreconditionError):
            barycenter_instance(3, unit_interval, 2.5, seed=0)

    def test_random_family_norms(self, unit_interval):
        """Vectors of a family have squared norms summing to 1"""
        As, xs = random_family(3, 4, unit_interval, seed=5)
        assert len(As) == 3
        assert sum(float(x @ x) for x in xs.vectors) == pytest.approx(1.0, abs=1e-12)

    def test_boundary_instance(self):
        """diag(1, 0) with the normalized all-ones vector"""
        A, x = boundary_instance()
        assert quadratic_form(A, x) == pytest.approx(0.5)
        assert x.components.tolist() == pytest.approx([1 / math.sqrt(2), 1 / math.sqrt(2)])
