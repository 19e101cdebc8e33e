"""
Dense symmetric linear algebra: eigendecomposition, functional calculus,
quadratic forms, block composition and seeded instance generation.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from opjensen.core.errors import (
    DomainError,
    EigenSolverError,
    PreconditionError,
    SpectrumError,
)
from opjensen.core.functions import ScalarFunction
from opjensen.core.models import (
    MAX_DIM,
    EigenDecomposition,
    HermitianMatrix,
    SpectrumInterval,
    UnitVector,
    VectorFamily,
)


logger = logging.getLogger(__name__)

JACOBI_THRESHOLD = 1e-13
JACOBI_MAX_SWEEPS = 100

# Probability that a random spectrum is pinned to both endpoints
ENDPOINT_PROBABILITY = 0.25


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude component is positive"""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _off_diagonal_norm(a: np.ndarray) -> float:
    return math.sqrt(max(float(np.sum(a * a) - np.sum(np.diag(a) ** 2)), 0.0))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int):
    """Jacobi rotation in the (p, q) plane annihilating a[p, q], in place"""
    tau = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
    t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
    c = 1.0 / math.hypot(1.0, t)
    s = t * c

    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q

    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q

    a[p, q] = a[q, p] = 0.0

    vec_p = v[:, p].copy()
    vec_q = v[:, q].copy()
    v[:, p] = c * vec_p - s * vec_q
    v[:, q] = s * vec_p + c * vec_q


def jacobi_eigh(A: HermitianMatrix, threshold: float = JACOBI_THRESHOLD,
                max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomposition:
    """
    Cyclic Jacobi eigensolver.

    Sweeps over the strict upper triangle until the off-diagonal Frobenius
    norm drops below threshold * max(1, ||A||_F).

    Raises:
        EigenSolverError: If max_sweeps is reached first
    """
    a = np.array(A.entries, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    limit = threshold * max(1.0, float(np.linalg.norm(a)))

    sweeps = 0
    off = _off_diagonal_norm(a)
    while off > limit:
        if sweeps >= max_sweeps:
            raise EigenSolverError(
                f'Jacobi did not converge after {max_sweeps} sweeps: '
                f'off-diagonal residual {off:.3e} > {limit:.3e}',
                residual=off
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] != 0.0:
                    _rotate(a, v, p, q)
        sweeps += 1
        off = _off_diagonal_norm(a)

    eigenvalues = np.diag(a)
    order = np.argsort(eigenvalues, kind='stable')
    return EigenDecomposition(
        eigenvalues=eigenvalues[order],
        eigenvectors=_canonical_signs(v[:, order]),
        sweeps=sweeps
    )


def eigh(A: HermitianMatrix, method: str = 'lapack') -> EigenDecomposition:
    """
    Eigendecomposition of a symmetric matrix.

    Args:
        A: Operator, at most 64 x 64
        method: 'lapack' (numpy) or 'jacobi'

    Returns:
        EigenDecomposition with ascending eigenvalues
    """
    if method == 'jacobi':
        return jacobi_eigh(A)
    if method != 'lapack':
        raise PreconditionError(f'Unknown eigensolver {method!r}')

    try:
        eigenvalues, eigenvectors = np.linalg.eigh(A.entries)
    except np.linalg.LinAlgError as e:
        off = _off_diagonal_norm(A.entries)
        raise EigenSolverError(
            f'LAPACK eigh failed ({e}); off-diagonal residual {off:.3e}', residual=off
        ) from e

    return EigenDecomposition(
        eigenvalues=eigenvalues,
        eigenvectors=_canonical_signs(eigenvectors)
    )


def matrix_function(A: HermitianMatrix, f: ScalarFunction,
                    domain_tol: float = 1e-12) -> HermitianMatrix:
    """
    Functional calculus f(A) = U diag(f(lambda_i)) U^T.

    Eigenvalues within domain_tol of the lower domain boundary are
    clamped onto it.

    Raises:
        DomainError: Naming the first eigenvalue outside the domain of f
    """
    eig = A.eigen
    values = np.array(eig.eigenvalues)

    lo, _, lo_closed = f.domain
    if lo_closed and math.isfinite(lo):
        near = (values < lo) & (values >= lo - domain_tol)
        values[near] = lo

    outside = np.flatnonzero(~f.in_domain(values))
    if outside.size:
        bad = float(eig.eigenvalues[outside[0]])
        raise DomainError(f'Eigenvalue {bad!r} is outside the domain of {f.spec}', value=bad)

    mapped = f(values)
    U = eig.eigenvectors
    return HermitianMatrix(entries=(U * mapped) @ U.T)


def scalar_value(f: ScalarFunction, t: float, domain_tol: float = 1e-12) -> float:
    """f(t) for a scalar, with the same boundary clamping as matrix_function"""
    lo, _, lo_closed = f.domain
    if lo_closed and math.isfinite(lo) and lo - domain_tol <= t < lo:
        t = lo
    if not f.in_domain(t):
        raise DomainError(f'{t!r} is outside the domain of {f.spec}', value=t)
    return float(f(t))


def quadratic_form(A: HermitianMatrix, x: UnitVector) -> float:
    """<Ax, x>"""
    if A.dim != x.dim:
        raise PreconditionError(f'Dimension mismatch: operator {A.dim}, vector {x.dim}')
    c = x.components
    return float(c @ A.entries @ c)


def spectrum_bounds(A: HermitianMatrix, allow_nonpositive: bool = False) -> SpectrumInterval:
    """
    Spectrum hull [lambda_min, lambda_max].

    Raises:
        SpectrumError: If lambda_min <= 0 (unless allowed) or the operator is scalar
    """
    eigenvalues = A.eigen.eigenvalues
    lo, hi = float(eigenvalues[0]), float(eigenvalues[-1])

    if lo <= 0 and not allow_nonpositive:
        raise SpectrumError(f'Spectrum must be positive, lambda_min={lo!r}')
    if hi - lo <= 1e-12 * max(1.0, abs(hi)):
        raise SpectrumError(f'Degenerate spectrum: m == M == {lo!r}')

    return SpectrumInterval(m=lo, M=hi, positivity_override=allow_nonpositive)


def ensure_positive(A: HermitianMatrix, override: bool = False):
    """Raise SpectrumError if lambda_min <= 0, unless the override is set"""
    lo = float(A.eigen.eigenvalues[0])
    if lo <= 0 and not override:
        raise SpectrumError(
            f'Spectrum must be positive, lambda_min={lo!r} (use the positivity override)'
        )


def ensure_contained(A: HermitianMatrix, interval: SpectrumInterval, tol: float = 1e-10):
    """Raise SpectrumError unless Sp(A) lies in the interval"""
    eigenvalues = A.eigen.eigenvalues
    lo, hi = float(eigenvalues[0]), float(eigenvalues[-1])
    if not (interval.contains(lo, tol) and interval.contains(hi, tol)):
        raise SpectrumError(f'Spectrum [{lo!r}, {hi!r}] is not contained in {interval}')


def block_diag(As: Sequence[HermitianMatrix]) -> HermitianMatrix:
    """Block-diagonal operator with the given blocks"""
    if not As:
        raise PreconditionError('block_diag needs at least one block')

    size = sum(A.dim for A in As)
    if size > MAX_DIM:
        raise PreconditionError(f'Block-diagonal dimension {size} exceeds {MAX_DIM}')

    out = np.zeros((size, size))
    offset = 0
    for A in As:
        out[offset:offset + A.dim, offset:offset + A.dim] = A.entries
        offset += A.dim

    return HermitianMatrix(entries=out)


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix from the QR of a Gaussian matrix"""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def random_unit(n: int, rng: np.random.Generator) -> UnitVector:
    while True:
        z = rng.standard_normal(n)
        if np.linalg.norm(z) > 1e-8:
            return UnitVector.normalized(z)


def _random_spectrum(n: int, interval: SpectrumInterval,
                     rng: np.random.Generator, pin_endpoints: Optional[bool] = None) -> np.ndarray:
    eigenvalues = rng.uniform(interval.m, interval.M, n)
    if pin_endpoints is None:
        pin_endpoints = rng.random() < ENDPOINT_PROBABILITY
    if pin_endpoints and n >= 2:
        eigenvalues[0] = interval.m
        eigenvalues[1] = interval.M
    return eigenvalues


def _conjugate(eigenvalues: np.ndarray, Q: np.ndarray) -> HermitianMatrix:
    return HermitianMatrix(entries=(Q * eigenvalues) @ Q.T)


def random_operator(n: int, interval: SpectrumInterval,
                    rng: np.random.Generator) -> HermitianMatrix:
    """Q diag(lambda) Q^T with lambda drawn in the interval"""
    return _conjugate(_random_spectrum(n, interval, rng), random_orthogonal(n, rng))


def random_instance(n: int, interval: SpectrumInterval,
                    seed: int) -> Tuple[HermitianMatrix, UnitVector]:
    """
    Random operator with Sp(A) in [m, M] and a uniform unit vector.

    Eigenvalues are uniform in [m, M]; with probability 1/4 two of them are
    pinned to m and M. Deterministic per seed.
    """
    if not 1 <= n <= MAX_DIM:
        raise PreconditionError(f'n must lie in [1, {MAX_DIM}], got {n}')

    rng = np.random.default_rng(seed)
    A = random_operator(n, interval, rng)
    x = random_unit(n, rng)
    return A, x


def barycenter_instance(n: int, interval: SpectrumInterval, target: float,
                        seed: int) -> Tuple[HermitianMatrix, UnitVector]:
    """
    Operator with m and M in its spectrum and x with <Ax, x> = target.

    x mixes the eigenvectors of m and M with weights (M - t)/(M - m)
    and (t - m)/(M - m).
    """
    if n < 2:
        raise PreconditionError('A barycenter instance needs n >= 2')
    if not interval.m <= target <= interval.M:
        raise PreconditionError(f'Target {target!r} lies outside {interval}')

    rng = np.random.default_rng(seed)
    eigenvalues = _random_spectrum(n, interval, rng, pin_endpoints=True)
    Q = random_orthogonal(n, rng)
    A = _conjugate(eigenvalues, Q)

    a = math.sqrt((interval.M - target) / interval.width)
    b = math.sqrt((target - interval.m) / interval.width)
    x = UnitVector.normalized(a * Q[:, 0] + b * Q[:, 1])
    return A, x


def random_family(k: int, n: int, interval: SpectrumInterval,
                  seed: int) -> Tuple[List[HermitianMatrix], VectorFamily]:
    """k operators of size n and vectors with sum ||x_i||^2 = 1"""
    rng = np.random.default_rng(seed)
    As = [random_operator(n, interval, rng) for _ in range(k)]
    stacked = random_unit(k * n, rng).components
    return As, VectorFamily(vectors=np.split(stacked, k))


def random_weights(k: int, rng: np.random.Generator) -> np.ndarray:
    """Nonnegative weights summing to one"""
    weights = rng.dirichlet(np.ones(k))
    weights[-1] = max(0.0, 1.0 - float(np.sum(weights[:-1])))
    return weights


def boundary_instance() -> Tuple[HermitianMatrix, UnitVector]:
    """diag(1, 0) with x = (1/sqrt 2, 1/sqrt 2); needs the positivity override"""
    return HermitianMatrix.diagonal([1.0, 0.0]), UnitVector.normalized([1.0, 1.0])
