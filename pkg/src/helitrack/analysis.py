"""Stability analysis of the structure-preserving closed loop.

With exact parameters and no exogenous torque, the tracking error of the
structure-preserving controller obeys the autonomous system

    R_e_dot   = R_e hat(e_omega)
    J e_w_dot = -k_R e_Rm + e_M
    e_M_dot   = A e_M - K e_omega

whose equilibria are exactly the four critical points of the weighted
trace error (zero velocities).  This module evaluates that vector field,
linearizes it about each equilibrium in the exponential chart
R = R_eq expm(eps hat(eta)), classifies the eigenvalues (one stable
equilibrium, three unstable saddles is what almost-global convergence
requires), and provides the Lyapunov functions of both controllers plus
the time-constant-mismatch perturbation term entering the rotor error
equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import so3
from .control import BrcGains, ReferenceSample, SprGains, SprController, TrackingError, ultimate_bound
from .model import DerivedMatrices, PlantState, UncertaintySpec, VehicleParams, assumed_matrices, derive_matrices
from .so3 import critical_points, grad_psi_m, hat, psi, psi_m, vee_skew


class NotEquilibrium(ValueError):
    """Rotation handed to linearize() is not a critical point of the error function."""


class NoConvergence(RuntimeError):
    """Dense eigenvalue iteration failed to converge."""


class OutsideSublevel(ValueError):
    """Backstepping Lyapunov function is only quadratic for psi(R_e) <= xi_2."""


@dataclass
class ErrorState:
    """Error coordinates of the structure-preserving loop."""

    R_e: np.ndarray
    e_omega: np.ndarray
    e_M: np.ndarray


@dataclass
class EquilibriumInfo:
    rotation: np.ndarray
    S: np.ndarray                 # 9x9 linearization in chart order (eta, e_omega, e_M)
    eigenvalues: np.ndarray       # 9 complex values, sorted by (re, im)
    classification: str           # asymptotically-stable | unstable | non-hyperbolic


@dataclass
class StabilityReport:
    equilibria: list[EquilibriumInfo]

    def to_dict(self) -> dict:
        return {
            "equilibria": [
                {
                    "rotation": [float(x) for x in e.rotation.ravel()],
                    "S": [float(x) for x in e.S.ravel()],
                    "eigenvalues": [[float(z.real), float(z.imag)] for z in e.eigenvalues],
                    "classification": e.classification,
                }
                for e in self.equilibria
            ]
        }


def _k_R_matrix(k_R) -> np.ndarray:
    return float(k_R) * np.eye(3) if np.ndim(k_R) == 0 else np.asarray(k_R, dtype=float)


def spr_error_field(e: ErrorState, k_R, P: np.ndarray, m: DerivedMatrices,
                    J: np.ndarray):
    """Autonomous closed-loop error dynamics (exact parameters, no disturbance)."""
    K_R = _k_R_matrix(k_R)
    R_e_dot = e.R_e @ hat(e.e_omega)
    e_w_dot = np.linalg.solve(J, -K_R @ grad_psi_m(P, e.R_e) + e.e_M)
    e_M_dot = m.A @ e.e_M - m.K @ e.e_omega
    return R_e_dot, e_w_dot, e_M_dot


def e_Rm_chart_jacobian(P: np.ndarray, R_eq: np.ndarray) -> np.ndarray:
    """Derivative of e_Rm w.r.t. the exponential-chart coordinate at R_eq.

    B(R_eq) = -1/2 sum_i hat(e_i) P R_eq hat(e_i); at the identity with
    diagonal P this is diag((p2+p3)/2, (p1+p3)/2, (p1+p2)/2).
    """
    B = np.zeros((3, 3))
    for i in range(3):
        ei = np.zeros(3)
        ei[i] = 1.0
        Ei = hat(ei)
        B -= 0.5 * Ei @ P @ R_eq @ Ei
    return B


def linearize(R_eq: np.ndarray, k_R, P: np.ndarray, m: DerivedMatrices,
              J: np.ndarray) -> np.ndarray:
    """9x9 linearization S(R_eq) of the error field about an equilibrium.

        S = [[0,            I,  0     ]
             [-J^-1 k_R B,  0,  J^-1  ]
             [0,           -K,  A     ]]
    """
    field = spr_error_field(ErrorState(R_eq, np.zeros(3), np.zeros(3)), k_R, P, m, J)
    residual = np.sqrt(sum(float(np.sum(np.square(f))) for f in field))
    if residual > 1e-9:
        raise NotEquilibrium(f"error field does not vanish there (|field| = {residual:.3e})")
    K_R = _k_R_matrix(k_R)
    B = e_Rm_chart_jacobian(P, R_eq)
    Jinv = np.linalg.inv(J)
    S = np.zeros((9, 9))
    S[0:3, 3:6] = np.eye(3)
    S[3:6, 0:3] = -Jinv @ K_R @ B
    S[3:6, 6:9] = Jinv
    S[6:9, 3:6] = -m.K
    S[6:9, 6:9] = m.A
    return S


def eig9(S: np.ndarray) -> np.ndarray:
    """Eigenvalues of a dense real matrix, residual-checked, sorted by (re, im)."""
    if not np.all(np.isfinite(S)):
        raise ValueError("matrix has non-finite entries")
    try:
        w, V = np.linalg.eig(S)
    except np.linalg.LinAlgError as err:
        raise NoConvergence(str(err)) from err
    scale = max(1.0, float(np.linalg.norm(S)))
    for i in range(len(w)):
        v = V[:, i]
        res = np.linalg.norm(S @ v - w[i] * v) / np.linalg.norm(v)
        if not res < 1e-7 * scale:
            raise NoConvergence(f"eigenpair residual {res:.3e} exceeds tolerance")
    order = np.lexsort((w.imag, w.real))
    return w[order]


def classify_equilibria(k_R, P: np.ndarray, m: DerivedMatrices,
                        J: np.ndarray) -> StabilityReport:
    """Linearize and classify all four equilibria of the error dynamics.

    An equilibrium is flagged non-hyperbolic when any eigenvalue sits within
    1e-9 * ||S|| of the imaginary axis; the center-manifold argument behind
    almost-global convergence needs hyperbolicity, so we report instead of
    guessing.
    """
    report = []
    for R_eq in critical_points(P):
        S = linearize(R_eq, k_R, P, m, J)
        w = eig9(S)
        tol = 1e-9 * max(1.0, float(np.linalg.norm(S)))
        if np.any(np.abs(w.real) < tol):
            cls = "non-hyperbolic"
        elif np.all(w.real < 0.0):
            cls = "asymptotically-stable"
        else:
            cls = "unstable"
        report.append(EquilibriumInfo(rotation=R_eq, S=S, eigenvalues=w,
                                      classification=cls))
    return StabilityReport(report)


def lyapunov_spr(e: ErrorState, k_R: float, P: np.ndarray, J: np.ndarray,
                 K: np.ndarray, A: np.ndarray) -> tuple[float, float]:
    """Energy-like function of the structure-preserving loop and its rate.

    V = k_R psi_m + 1/2 e_w . J e_w + 1/2 e_M . K^-1 e_M,
    V_dot = e_M . K^-1 A e_M  (depends on e_M alone and is never positive,
    because the rotor keeps its own damping;  K^-1 A has negative definite
    symmetric part).  Scalar k_R only; the decrease certificate does not
    extend to unequal per-axis gains.
    """
    V = (float(k_R) * psi_m(P, e.R_e)
         + 0.5 * float(e.e_omega @ (J @ e.e_omega))
         + 0.5 * float(e.e_M @ np.linalg.solve(K, e.e_M)))
    Vdot = float(e.e_M @ np.linalg.solve(K, A @ e.e_M))
    return V, Vdot


def lyapunov_brc(err: TrackingError, gains: BrcGains, J: np.ndarray,
                 A_tau: np.ndarray, require_sublevel: bool = True
                 ) -> tuple[float, float]:
    """Backstepping Lyapunov function V3 and its guaranteed decrease bound.

    V3 = psi(R_e) + 1/2 e_tilde . J e_tilde + 1/2 e_M . e_M, and along the
    closed loop V3_dot < -z . W z + eps with z = (|e_R|, |e_tilde|, |e_M|).
    Returns (V3, -z . W z + eps).  The quadratic sandwich behind that bound
    only holds for psi <= xi_2; outside the sublevel set this raises unless
    require_sublevel is False (diagnostic logging).
    """
    p = psi(err.R_e)
    if require_sublevel and p > gains.xi_2:
        raise OutsideSublevel(f"psi(R_e) = {p:.4f} > xi_2 = {gains.xi_2}")
    V3 = (p + 0.5 * float(err.e_tilde @ (J @ err.e_tilde))
          + 0.5 * float(err.e_M @ err.e_M))
    z = np.array([np.linalg.norm(err.e_R), np.linalg.norm(err.e_tilde),
                  np.linalg.norm(err.e_M)])
    W = np.diag([gains.k_R, gains.k_omega, float(np.min(np.diag(A_tau)))])
    bound = -float(z @ (W @ z)) + gains.eps
    return V3, bound


def brc_s_set_value(err: TrackingError, J: np.ndarray) -> float:
    """Initial-condition functional of the ultimate-boundedness region.

    Membership requires psi(R_e) + 1/2 e_tilde . J e_tilde
    + 1/2 e_M . e_M <= xi_2.
    """
    return (psi(err.R_e) + 0.5 * float(err.e_tilde @ (J @ err.e_tilde))
            + 0.5 * float(err.e_M @ err.e_M))


def iss_disturbance(state: PlantState, ref: ReferenceSample, gains: SprGains,
                    assumed: UncertaintySpec, p: VehicleParams) -> np.ndarray:
    """Perturbation entering the rotor error equation under time-constant mismatch.

    Delta_r = (A_tau A_bar_tau^-1 - I)(-A M_d + M_d_dot + K R_e^T omega_d)
    with the true matrices inside the inner term; its norm is bounded by
    alpha/(1-alpha) times the inner term, vanishing as alpha -> 0, which is
    the local input-to-state stability statement for the passive loop.
    """
    m = derive_matrices(p)
    m_hat = assumed_matrices(p, assumed)
    ctl = SprController(p, gains)   # exact-parameter desired moment
    M_d, Md_dot = ctl.desired_moment(state, ref)
    R_e = ref.R_d.T @ state.R
    inner = -m.A @ M_d + Md_dot + m.K @ (R_e.T @ ref.omega_d)
    mismatch = m.A_tau @ np.linalg.inv(m_hat.A_tau) - np.eye(3)
    return mismatch @ inner
