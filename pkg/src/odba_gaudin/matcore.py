"""Dense complex linear algebra shared by the rest of the package.

Conventions: the site-local basis is (|0> = spin up, |1> = spin down) and the
global basis is big-endian in the site index, so site 1 is the most
significant bit of a basis label.  Operators are plain ``numpy`` arrays of
dtype ``complex128``; ``Op`` is only a type alias.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

Op = np.ndarray

ID2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

#: permutation operator on C^2 (x) C^2
PERM = np.array([[1, 0, 0, 0],
                 [0, 0, 1, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1]], dtype=complex)


class EigenSolverError(RuntimeError):
    """Eigendecomposition failed or the eigenvector matrix is ill-conditioned."""

    def __init__(self, message, condition=np.inf):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class DegreeViolationError(ValueError):
    """Samples are not consistent with a polynomial of the claimed degree."""

    def __init__(self, message, mismatch):
        super().__init__(f"{message} (mismatch {mismatch:.3e})")
        self.mismatch = mismatch


def unit_matrix(i: int, j: int) -> np.ndarray:
    """Matrix unit ``E_ij`` on C^2."""
    m = np.zeros((2, 2), dtype=complex)
    m[i, j] = 1.0
    return m


def pauli_dot(v) -> np.ndarray:
    """Return ``v . sigma`` for a (possibly complex) 3-vector ``v``."""
    v = np.asarray(v)
    return v[0] * SIGMA_X + v[1] * SIGMA_Y + v[2] * SIGMA_Z


def embed(a, site: int, n_sites: int) -> Op:
    """Embed a 2x2 matrix at ``site`` (1-based) of an ``n_sites`` chain.

    Returns ``id (x) ... (x) a (x) ... (x) id`` acting on the 2**n_sites space.
    """
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} out of range [1, {n_sites}]")
    a = np.asarray(a, dtype=complex)
    if a.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {a.shape}")
    left = 2 ** (site - 1)
    right = 2 ** (n_sites - site)
    return np.kron(np.kron(np.eye(left, dtype=complex), a), np.eye(right, dtype=complex))


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, factors)


def commutator(a: Op, b: Op) -> Op:
    return a @ b - b @ a


def relative_commutator(a: Op, b: Op) -> float:
    """``||[a, b]|| / (||a|| ||b||)`` in Frobenius norm (0 for a zero operand)."""
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(commutator(a, b)) / denom)


@dataclass(frozen=True)
class AuxBlockMatrix:
    """2x2 matrix in the auxiliary space whose entries are quantum operators.

    ``blocks`` has shape ``(2, 2, dim, dim)``; ``blocks[a, b]`` is the
    quantum-space operator multiplying the auxiliary matrix unit ``E_ab``.
    """

    blocks: np.ndarray

    def __post_init__(self):
        b = self.blocks
        if b.ndim != 4 or b.shape[:2] != (2, 2) or b.shape[2] != b.shape[3]:
            raise ValueError(f"bad block shape {b.shape}")

    @property
    def dim(self) -> int:
        return self.blocks.shape[2]

    @classmethod
    def from_scalar(cls, k, dim: int) -> "AuxBlockMatrix":
        """Lift an auxiliary 2x2 c-number matrix ``k`` to ``k (x) id``."""
        k = np.asarray(k, dtype=complex)
        return cls(k[:, :, None, None] * np.eye(dim, dtype=complex))

    def __matmul__(self, other: "AuxBlockMatrix") -> "AuxBlockMatrix":
        # (AB)_ac = sum_b A_ab B_bc, quantum factors kept in order
        return AuxBlockMatrix(np.einsum("abij,bcjk->acik", self.blocks, other.blocks))

    def trace(self) -> Op:
        """Partial trace over the auxiliary space."""
        return self.blocks[0, 0] + self.blocks[1, 1]

    def full(self) -> Op:
        """Operator on aux (x) quantum with the auxiliary space leftmost."""
        d = self.dim
        return self.blocks.transpose(0, 2, 1, 3).reshape(2 * d, 2 * d)

    @classmethod
    def from_full(cls, m: Op) -> "AuxBlockMatrix":
        d = m.shape[0] // 2
        return cls(np.asarray(m).reshape(2, d, 2, d).transpose(0, 2, 1, 3).copy())


@dataclass(frozen=True)
class EigResult:
    values: np.ndarray
    vectors: np.ndarray
    condition: float
    residual: float


def eig_general(m: Op, cond_cap: float = 1e12, residual_tol: float = 1e-10) -> EigResult:
    """Eigendecomposition of a general complex dense matrix.

    Backed by LAPACK ``zgeev`` (Hessenberg reduction + shifted QR).  The
    returned factors are rechecked: ``||m V - V diag(w)|| / ||m||`` must not
    exceed ``residual_tol``, and the 2-norm condition number of ``V`` must
    stay below ``cond_cap``.  Both failures raise :class:`EigenSolverError`;
    a large condition number usually means a near-defective input, so the
    caller should re-randomize its parameters.
    """
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    try:
        w, v = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver did not converge: {exc}") from exc
    cond = float(np.linalg.cond(v))
    norm = np.linalg.norm(m)
    resid = float(np.linalg.norm(m @ v - v * w) / norm) if norm > 0 else 0.0
    if not np.isfinite(cond) or cond > cond_cap:
        raise EigenSolverError("eigenvector matrix is ill-conditioned", cond)
    if resid > residual_tol:
        raise EigenSolverError(f"eigen residual {resid:.3e} above {residual_tol:.1e}", cond)
    return EigResult(w, v, cond, resid)


@dataclass(frozen=True)
class Poly:
    """Polynomial with complex coefficients stored lowest degree first."""

    coeffs: np.ndarray
    mismatch: float = 0.0
    degenerate: bool = field(default=False)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> complex:
        return complex(self.coeffs[-1])

    def __call__(self, u):
        # Horner, highest coefficient first
        return np.polyval(self.coeffs[::-1], u)


def poly_interp(points, degree: int, tol: float = 1e-9, truncation: float = 1e-12) -> Poly:
    """Interpolate ``(u, value)`` samples by a polynomial of ``degree``.

    The first ``degree + 1`` samples determine the coefficients; any further
    samples are consistency checks.  Errors are measured relative to the
    largest sample magnitude.  Raises :class:`DegreeViolationError` if any
    sample is off by more than ``tol``.  The result is flagged ``degenerate``
    when the leading coefficient is below ``truncation`` times the largest
    coefficient.
    """
    pts = list(points)
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if len(pts) < degree + 1:
        raise ValueError(f"need at least {degree + 1} samples, got {len(pts)}")
    u = np.array([p[0] for p in pts], dtype=complex)
    y = np.array([p[1] for p in pts], dtype=complex)
    gaps = np.abs(u[:, None] - u[None, :]) + np.eye(len(u))
    if np.min(gaps) == 0.0:
        raise ValueError("duplicate interpolation nodes")
    n = degree + 1
    vander = np.vander(u[:n], n, increasing=True)
    coeffs = np.linalg.solve(vander, y[:n])
    fitted = np.polyval(coeffs[::-1], u)
    scale = max(np.max(np.abs(y)), np.finfo(float).tiny)
    mismatch = float(np.max(np.abs(fitted - y)) / scale)
    if mismatch > tol:
        raise DegreeViolationError(f"samples are not a degree-{degree} polynomial", mismatch)
    cmax = np.max(np.abs(coeffs))
    degenerate = bool(cmax == 0.0 or abs(coeffs[-1]) < truncation * cmax)
    return Poly(coeffs, mismatch, degenerate)


def circle_nodes(count: int, radius: float, phase: float = 0.1) -> np.ndarray:
    """``count`` equispaced nodes on a circle; keeps Vandermonde solves well conditioned."""
    k = np.arange(count)
    return radius * np.exp(1j * (2 * np.pi * k / count + phase))
