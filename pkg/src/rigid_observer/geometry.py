"""SO(3) / SE(3) primitives and small matrix utilities."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

TOL_ORTH = 1e-9
TOL_ORTH_MEASURED = 1e-6
TOL_SKEW = 1e-9
TOL_SYM = 1e-9
_SMALL_ANGLE = 1e-8
_MIN_SINGULAR = 1e-12


class NotSkew(ValueError):
    """Matrix is not skew-symmetric within tolerance."""


class NotSymmetric(ValueError):
    """Matrix is not symmetric within tolerance."""


class SingularBlock(ValueError):
    """Rotation block of a 4x4 matrix is (numerically) singular."""


class RankDeficient(ValueError):
    """Homogeneous point set does not have rank 4."""


def hat(v: ArrayLike) -> NDArray[np.float64]:
    """Skew-symmetric matrix such that ``hat(v) @ w == np.cross(v, w)``."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(A: ArrayLike, tol: float = TOL_SKEW) -> NDArray[np.float64]:
    """Inverse of :func:`hat`.

    Raises
    ------
    NotSkew
        If the symmetric part of `A` exceeds `tol` in max-norm.
    """
    A = np.asarray(A, dtype=float)
    if np.max(np.abs(A + A.T)) > tol:
        raise NotSkew("matrix is not skew-symmetric")
    return np.array([A[2, 1], A[0, 2], A[1, 0]])


def project_skew(A: ArrayLike) -> NDArray[np.float64]:
    """Orthogonal projection onto so(3): ``(A - A.T) / 2``."""
    A = np.asarray(A, dtype=float)
    return 0.5 * (A - A.T)


def vee_skew(A: ArrayLike) -> NDArray[np.float64]:
    """``vee(project_skew(A))`` without the skew check (hot path)."""
    A = np.asarray(A, dtype=float)
    return 0.5 * np.array([A[2, 1] - A[1, 2], A[0, 2] - A[2, 0], A[1, 0] - A[0, 1]])


def exp_so3(v: ArrayLike) -> NDArray[np.float64]:
    """Rotation matrix for the rotation vector `v` (Rodrigues formula)."""
    v = np.asarray(v, dtype=float)
    theta = float(np.linalg.norm(v))
    K = hat(v)
    if theta < _SMALL_ANGLE:
        # second-order Taylor expansion; remainder is O(theta^3)
        return np.eye(3) + K + 0.5 * (K @ K)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * K + b * (K @ K)


def nearest_rotation(M: ArrayLike) -> NDArray[np.float64]:
    """Closest rotation matrix to `M` in the Frobenius norm.

    Uses the SVD polar factor with a determinant sign correction,
    ``U @ diag(1, 1, det(U V^T)) @ V^T``.
    """
    M = np.asarray(M, dtype=float)
    U, s, Vt = np.linalg.svd(M)
    if s[-1] < _MIN_SINGULAR:
        raise SingularBlock(f"smallest singular value {s[-1]:.3e} below {_MIN_SINGULAR}")
    d = np.sign(np.linalg.det(U @ Vt))
    return (U * np.array([1.0, 1.0, d])) @ Vt


def project_se3(A: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Project a 4x4 matrix onto SE(3).

    Returns the nearest rotation to the top-left 3x3 block and the
    top-right 3x1 translation block, which is passed through unchanged.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {A.shape}")
    return nearest_rotation(A[:3, :3]), A[:3, 3].copy()


def check_point_set(b: ArrayLike) -> NDArray[np.float64]:
    """Validate a 4 x l homogeneous point set and return it as an array."""
    b = np.asarray(b, dtype=float)
    if b.ndim != 2 or b.shape[0] != 4:
        raise ValueError(f"expected a 4 x l matrix, got shape {b.shape}")
    if b.shape[1] < 4:
        raise RankDeficient(f"need at least 4 points, got {b.shape[1]}")
    if not np.all(b[3] == 1.0):
        raise ValueError("last row of a homogeneous point set must be all ones")
    return b


def pseudo_inverse(b: ArrayLike) -> NDArray[np.float64]:
    """Moore-Penrose pseudo-inverse (l x 4) of a homogeneous point set.

    Raises
    ------
    RankDeficient
        If `b` has rank below 4 (e.g. coplanar points).
    """
    b = check_point_set(b)
    if np.linalg.matrix_rank(b) < 4:
        raise RankDeficient("landmark matrix has rank < 4")
    return np.linalg.pinv(b)


def eig_bounds(S: ArrayLike, tol: float = TOL_SYM) -> tuple[float, float]:
    """Smallest and largest eigenvalues of a symmetric matrix."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    if np.max(np.abs(S - S.T), initial=0.0) > tol:
        raise NotSymmetric("matrix is not symmetric")
    w = np.linalg.eigvalsh(0.5 * (S + S.T))
    return float(w[0]), float(w[-1])


def is_rotation(R: ArrayLike, tol: float = TOL_ORTH) -> bool:
    R = np.asarray(R, dtype=float)
    return (
        R.shape == (3, 3)
        and np.linalg.norm(R.T @ R - np.eye(3)) <= tol
        and np.linalg.det(R) > 0.0
    )
