"""Small-matrix kernel for the rotation group SO(3).

Everything here operates on plain numpy arrays: vectors are shape (3,),
matrices shape (3, 3), rotations are orthonormal 3x3 matrices with unit
determinant.  The kernel provides the hat/vee isomorphism between R^3 and
skew-symmetric matrices, the Rodrigues exponential map, and the attitude
error functions used by the tracking controllers:

    psi(R_e)  = 1/2 tr(I - R_e)          trace error, gradient e_R
    psi_m     = 1/2 tr(P (I - R_e))      weighted trace error, gradient e_Rm

For symmetric positive definite P with distinct eigenvalues, psi_m has
exactly four critical points on SO(3): the identity plus the three half
turns about the eigenvectors of P.  That structure is what gives the
attitude controller its almost-global convergence, so the kernel exposes
the critical set and validates the gradient actually vanishes there.
"""

from __future__ import annotations

import numpy as np

ROT_TOL = 1e-9  # orthonormality / determinant tolerance for rotations


class NotSkew(ValueError):
    """Matrix handed to vee() is not skew-symmetric within tolerance."""


class NotSymmetric(ValueError):
    """Matrix handed to sym_eigen3() is not symmetric within tolerance."""


class BadP(ValueError):
    """Weight matrix P is not SPD with distinct eigenvalues."""


def hat(v: np.ndarray) -> np.ndarray:
    """Map a 3-vector to the skew-symmetric matrix with hat(v) @ w = v x w."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(m: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Inverse of hat().  Requires ||m + m^T|| < tol."""
    sym = np.linalg.norm(m + m.T)
    if not sym < tol:
        raise NotSkew(f"matrix is not skew-symmetric: ||m + m.T|| = {sym:.3e}")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def vee_skew(m: np.ndarray) -> np.ndarray:
    """vee of the skew part of m, with no symmetry check."""
    return 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def expm(v: np.ndarray) -> np.ndarray:
    """Exponential map R^3 -> SO(3) in Rodrigues form.

    R = I + sin(phi)/phi * v^ + (1 - cos(phi))/phi^2 * v^2 with phi = ||v||.
    Below phi = 1e-6 the two coefficients switch to their Taylor series to
    avoid 0/0 cancellation.
    """
    phi2 = float(v @ v)
    phi = np.sqrt(phi2)
    if phi < 1e-6:
        a = 1.0 - phi2 / 6.0
        b = 0.5 - phi2 / 24.0
    else:
        a = np.sin(phi) / phi
        b = (1.0 - np.cos(phi)) / phi2
    vh = hat(v)
    return np.eye(3) + a * vh + b * (vh @ vh)


def is_rotation(R: np.ndarray, tol: float = ROT_TOL) -> bool:
    return (np.linalg.norm(R.T @ R - np.eye(3)) < tol
            and abs(np.linalg.det(R) - 1.0) < tol)


def rotation_error(R_d: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Attitude error R_e = R_d^T R (current attitude seen from the desired frame)."""
    return R_d.T @ R


def psi(R_e: np.ndarray) -> float:
    """Trace attitude error 1/2 tr(I - R_e), in [0, 2]."""
    return 0.5 * (3.0 - np.trace(R_e))


def e_R(R_e: np.ndarray) -> np.ndarray:
    """Gradient vector of psi: e_R = 1/2 (R_e - R_e^T)^vee, so d psi/dt = e_R . e_omega."""
    return vee_skew(R_e)


def transport_B(R_e: np.ndarray) -> np.ndarray:
    """Transport matrix B(R_e) = 1/2 (tr(R_e^T) I - R_e^T) with e_R_dot = B e_omega."""
    return 0.5 * (np.trace(R_e) * np.eye(3) - R_e.T)


def _check_P(P: np.ndarray, gap_tol: float = 1e-9):
    """Validate P is SPD with distinct eigenvalues; return (eigvals, eigvecs)."""
    scale = np.linalg.norm(P)
    if np.linalg.norm(P - P.T) > 1e-9 * max(1.0, scale):
        raise BadP("P must be symmetric")
    w, V = sym_eigen3(P)
    if w[0] <= 0.0:
        raise BadP(f"P must be positive definite (min eigenvalue {w[0]:.3e})")
    gap = min(w[1] - w[0], w[2] - w[1])
    if gap < gap_tol * max(1.0, scale):
        raise BadP(f"P eigenvalues not distinct (gap {gap:.3e})")
    return w, V


def psi_m(P: np.ndarray, R_e: np.ndarray) -> float:
    """Weighted trace attitude error 1/2 tr(P (I - R_e))."""
    _check_P(P)
    return 0.5 * float(np.trace(P @ (np.eye(3) - R_e)))


def e_Rm(P: np.ndarray, R_e: np.ndarray) -> np.ndarray:
    """Gradient vector of psi_m: 1/2 (P R_e - R_e^T P)^vee."""
    _check_P(P)
    return grad_psi_m(P, R_e)


def grad_psi_m(P: np.ndarray, R_e: np.ndarray) -> np.ndarray:
    """e_Rm without the P validation, for hot loops that pre-validated P."""
    # P R_e - R_e^T P = X - X^T for X = P R_e, so the formula reduces to vee_skew(X)
    return vee_skew(P @ R_e)


def critical_points(P: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The four critical points of psi_m: identity plus half turns about P's eigenvectors.

    Returns (I, expm(pi v1), expm(pi v2), expm(pi v3)) with v_i the unit
    eigenvectors of P in ascending eigenvalue order.  Raises BadP when the
    distinct-eigenvalue hypothesis fails (the critical set degenerates).
    """
    _, V = _check_P(P)
    points = [np.eye(3)]
    for i in range(3):
        points.append(expm(np.pi * V[:, i]))
    for R_eq in points:
        g = np.linalg.norm(grad_psi_m(P, R_eq))
        if not g < 1e-9:
            raise BadP(f"gradient does not vanish at computed critical point (|e_Rm| = {g:.3e})")
    return tuple(points)


def sym_eigen3(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric 3x3 matrix.

    Returns ascending eigenvalues and orthonormal eigenvector columns
    (P @ V[:, i] = w[i] V[:, i]).
    """
    if np.linalg.norm(P - P.T) > 1e-9 * max(1.0, np.linalg.norm(P)):
        raise NotSymmetric("matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (P + P.T))
    return w, V
