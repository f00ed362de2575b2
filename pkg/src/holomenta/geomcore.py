"""Small dense linear algebra and finite-difference calculus on charts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Field = Callable[[np.ndarray], np.ndarray]

DEFAULT_TOL = 1e-9
_EPS = np.finfo(float).eps
_CBRT_EPS = _EPS ** (1.0 / 3.0)


class NonFiniteError(ValueError):
    pass


class DirectSumViolation(ValueError):
    pass


def _steps(x: np.ndarray) -> np.ndarray:
    return _CBRT_EPS * (1.0 + np.abs(x))


def jacobian(fn: Field, q) -> np.ndarray:
    """Central-difference Jacobian, entry (i, j) = d fn_i / d q_j."""
    q = np.asarray(q, dtype=float)
    h = _steps(q)
    cols = []
    for j in range(q.size):
        qp = q.copy()
        qm = q.copy()
        qp[j] += h[j]
        qm[j] -= h[j]
        fp = np.asarray(fn(qp), dtype=float)
        fm = np.asarray(fn(qm), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise NonFiniteError(f"non-finite field value near q[{j}]")
        cols.append((fp - fm) / (qp[j] - qm[j]))
    if not cols:
        return np.zeros((np.asarray(fn(q)).size, 0))
    return np.stack(cols, axis=-1)


def gradient(fn: Callable[[np.ndarray], float], x) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    return jacobian(lambda y: np.atleast_1d(fn(y)), x)[0]


def lie_bracket(a: Field, b: Field, q) -> np.ndarray:
    """[A, B](q) = JB(q) A(q) - JA(q) B(q)."""
    q = np.asarray(q, dtype=float)
    return jacobian(b, q) @ np.asarray(a(q)) - jacobian(a, q) @ np.asarray(b(q))


@dataclass(frozen=True)
class SubspaceBasis:
    """Linearly independent vectors (rows) spanning a subspace of R^ambient_dim."""

    ambient_dim: int
    vectors: np.ndarray = field(repr=False)
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=float).reshape(-1, self.ambient_dim)
        object.__setattr__(self, "vectors", vecs)
        if vecs.shape[0] > self.ambient_dim:
            raise ValueError("more vectors than the ambient dimension")
        if vecs.shape[0] and _rank(vecs.T, self.tol) < vecs.shape[0]:
            raise ValueError("basis vectors are linearly dependent at tolerance")

    @classmethod
    def span(cls, vectors, ambient_dim: int | None = None, tol: float = DEFAULT_TOL) -> "SubspaceBasis":
        """Orthonormal basis of the span of arbitrary (possibly dependent) vectors."""
        vecs = np.asarray(vectors, dtype=float)
        if ambient_dim is None:
            ambient_dim = vecs.shape[-1]
        vecs = vecs.reshape(-1, ambient_dim)
        return cls(ambient_dim, _orth(vecs.T, tol).T, tol)

    @property
    def rank(self) -> int:
        return self.vectors.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Basis vectors as columns."""
        return self.vectors.T

    def orthonormalized(self) -> "SubspaceBasis":
        return SubspaceBasis.span(self.vectors, self.ambient_dim, self.tol)

    def contains(self, vec, atol: float = 1e-9) -> bool:
        vec = np.asarray(vec, dtype=float)
        if self.rank == 0:
            return bool(np.linalg.norm(vec) <= atol)
        c, *_ = np.linalg.lstsq(self.matrix, vec, rcond=None)
        return bool(np.linalg.norm(self.matrix @ c - vec) <= atol * max(1.0, np.linalg.norm(vec)))


def _rank(mat: np.ndarray, tol: float) -> int:
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def _orth(mat: np.ndarray, tol: float) -> np.ndarray:
    if mat.size == 0:
        return np.zeros((mat.shape[0], 0))
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s[0] == 0:
        return np.zeros((mat.shape[0], 0))
    return u[:, s > tol * s[0]]


def null_space(mat: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal null-space basis (columns), rank cut relative to the largest singular value."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    m, n = mat.shape
    if n == 0:
        return np.zeros((0, 0))
    if m == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(mat, full_matrices=True)
    if s[0] == 0:
        return np.eye(n)
    rank = int(np.sum(s > tol * s[0]))
    return vt[rank:].T


def rank(vectors, tol: float = DEFAULT_TOL) -> int:
    """Rank of a set of vectors given as rows."""
    return _rank(np.atleast_2d(np.asarray(vectors, dtype=float)).T, tol)


def subspace_intersection(a: SubspaceBasis, b: SubspaceBasis) -> SubspaceBasis:
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("ambient dimensions differ")
    n = a.ambient_dim
    tol = max(a.tol, b.tol)
    if a.rank == 0 or b.rank == 0:
        return SubspaceBasis(n, np.zeros((0, n)), tol)
    # Orthonormal inputs keep the singular-value cut meaningful.
    qa = a.orthonormalized().matrix
    qb = b.orthonormalized().matrix
    ns = null_space(np.hstack([qa, -qb]), tol)
    return SubspaceBasis.span((qa @ ns[: qa.shape[1]]).T, n, tol)


def decompose(vec, a: SubspaceBasis, b: SubspaceBasis) -> tuple[np.ndarray, np.ndarray]:
    """Unique coefficients with vec = A coeffs_a + B coeffs_b (bases as given)."""
    vec = np.asarray(vec, dtype=float)
    tol = max(a.tol, b.tol)
    stacked = np.hstack([a.matrix, b.matrix])
    if stacked.shape[1] == 0:
        if np.linalg.norm(vec) > 0:
            raise DirectSumViolation("vector lies outside the zero subspace")
        return np.zeros(0), np.zeros(0)
    if _rank(stacked, tol) < stacked.shape[1]:
        raise DirectSumViolation("subspaces are not in direct sum")
    if stacked.shape[0] == stacked.shape[1]:
        coeffs = np.linalg.solve(stacked, vec)
    else:
        coeffs, *_ = np.linalg.lstsq(stacked, vec, rcond=None)
    scale = max(np.linalg.norm(vec), np.linalg.norm(stacked) * np.linalg.norm(coeffs), 1e-300)
    if np.linalg.norm(stacked @ coeffs - vec) > 1e3 * _EPS * scale + tol * np.linalg.norm(vec):
        raise DirectSumViolation("vector lies outside A + B")
    return coeffs[: a.rank], coeffs[a.rank :]
