"""Coupled rotor-fuselage attitude plant for a small-scale helicopter.

The fuselage is a rigid body and the rotor a first-order system producing
the control moment, so the full rotational state is (R, omega, M):

    R_dot     = R @ hat(omega)
    J w_dot   = -omega x J omega + M + Delta_f(t)
    M_dot     = A M - K omega + K A_tau theta

A bundles the rotor lags and the cyclic cross-coupling,

    A = [[-1/tau_m, -k,       0      ],
         [ k,       -1/tau_m, 0      ],
         [ 0,        0,      -1/tau_t]],   k = k_beta / (2 Omega I_beta),

A_tau = diag(1/tau_m, 1/tau_m, 1/tau_t) is its (negated) symmetric part,
and K = diag(K_beta, K_beta, K_t) with K_beta = h*T + k_beta the equivalent
hub stiffness.  The -K omega term is the large aerodynamic damping that
sets helicopter attitude dynamics apart from rigid spacecraft: body rate
builds opposing rotor flap, hence opposing moment.

theta is the pseudo control input: cyclic pitch pre-mixed with gyroscopic
rate corrections, theta = [theta_b + w_y/Omega, theta_a - w_x/Omega,
K_t0 theta_t], which is what makes the rotor equation linear.  M maps to
the physical flap angles through M_x = K_beta * b, M_y = K_beta * a.

Delta_f is an exogenous fuselage torque (slung load, cg offset) bounded by
delta_f; the simulated form is A_d * [cos(Omega_d t), 0, 0].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .so3 import hat

GRAVITY = 9.81


class BadParams(ValueError):
    """Vehicle parameter set violates positivity requirements."""


class AlphaTooLarge(ValueError):
    """Fractional time-constant uncertainty must satisfy |alpha| < 1."""


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the vehicle.

    Inertia and main-rotor values default to the identified 10 kg class
    model.  Tail constants (tau_t, K_t, K_t0) and the nominal thrust are
    not part of that identification: the defaults below are plausible
    engineering values, documented as such, and the roll/pitch quantities
    compared against reference behavior do not depend on them.
    """

    J: np.ndarray = field(default_factory=lambda: np.diag([0.095, 0.397, 0.303]))  # kg m^2
    tau_m: float = 0.06        # main rotor time constant [s]
    tau_t: float = 0.02        # tail time constant [s] (non-identified default)
    k_beta: float = 129.09     # blade root stiffness [N m]
    I_beta: float = 0.0327     # blade flap inertia [kg m^2]
    Omega: float = 157.07      # rotor speed [rad/s]
    h: float = 0.174           # hub offset above cg [m]
    thrust_T: float = 10.0 * GRAVITY  # nominal thrust [N] (10 kg class hover)
    K_t: float = 20.0          # tail stiffness gain [N m] (non-identified default)
    K_t0: float = 1.0          # steady-state yaw-rate-per-input gain (non-identified default)

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        object.__setattr__(self, "J", J)
        positives = {
            "tau_m": self.tau_m, "tau_t": self.tau_t, "k_beta": self.k_beta,
            "I_beta": self.I_beta, "Omega": self.Omega, "h": self.h,
            "thrust_T": self.thrust_T, "K_t": self.K_t,
        }
        for name, value in positives.items():
            if not value > 0.0:
                raise BadParams(f"{name} must be positive, got {value}")
        if self.K_t0 == 0.0:
            raise BadParams("K_t0 must be nonzero")
        if not np.all(np.diag(J) > 0.0):
            raise BadParams("inertia diagonal must be positive")

    @property
    def k(self) -> float:
        """Cyclic cross-coupling rate k = k_beta / (2 Omega I_beta) [1/s]."""
        return self.k_beta / (2.0 * self.Omega * self.I_beta)

    @property
    def K_beta(self) -> float:
        """Equivalent hub stiffness h*T + k_beta [N m]."""
        return self.h * self.thrust_T + self.k_beta


@dataclass(frozen=True)
class DerivedMatrices:
    """Rotor-dynamics matrices derived from VehicleParams."""

    A: np.ndarray       # rotor system matrix
    A_tau: np.ndarray   # diag(1/tau_m, 1/tau_m, 1/tau_t), = -sym(A)
    A_k: np.ndarray     # skew part of A (cyclic cross coupling)
    K: np.ndarray       # diag(K_beta, K_beta, K_t)


def derive_matrices(p: VehicleParams) -> DerivedMatrices:
    """Build A = -A_tau + A_k, A_tau, A_k and K from the vehicle parameters."""
    k = p.k
    A_tau = np.diag([1.0 / p.tau_m, 1.0 / p.tau_m, 1.0 / p.tau_t])
    A_k = np.array([[0.0, -k, 0.0], [k, 0.0, 0.0], [0.0, 0.0, 0.0]])
    A = -A_tau + A_k
    K = np.diag([p.K_beta, p.K_beta, p.K_t])
    return DerivedMatrices(A=A, A_tau=A_tau, A_k=A_k, K=K)


@dataclass
class PlantState:
    """Attitude R, body angular velocity omega [rad/s], rotor moment M [N m]."""

    R: np.ndarray
    omega: np.ndarray
    M: np.ndarray

    def copy(self) -> "PlantState":
        return PlantState(self.R.copy(), self.omega.copy(), self.M.copy())


@dataclass(frozen=True)
class UncertaintySpec:
    """Fractional error of the controller's time-constant estimates.

    The controller believes tau_bar = (1 + alpha) * tau; the plant always
    integrates with the true tau.  alpha = max(|alpha_m|, |alpha_t|) is the
    bound fed to the robust compensator.
    """

    alpha_m: float = 0.0
    alpha_t: float = 0.0

    def __post_init__(self):
        if not (abs(self.alpha_m) < 1.0 and abs(self.alpha_t) < 1.0):
            raise AlphaTooLarge(
                f"|alpha| must be < 1, got alpha_m={self.alpha_m}, alpha_t={self.alpha_t}")

    @property
    def alpha(self) -> float:
        return max(abs(self.alpha_m), abs(self.alpha_t))


def assumed_matrices(p: VehicleParams, u: UncertaintySpec) -> DerivedMatrices:
    """Matrices as the controller believes them: built from (1+alpha)*tau."""
    k = p.k
    A_tau = np.diag([1.0 / ((1.0 + u.alpha_m) * p.tau_m),
                     1.0 / ((1.0 + u.alpha_m) * p.tau_m),
                     1.0 / ((1.0 + u.alpha_t) * p.tau_t)])
    A_k = np.array([[0.0, -k, 0.0], [k, 0.0, 0.0], [0.0, 0.0, 0.0]])
    return DerivedMatrices(A=-A_tau + A_k, A_tau=A_tau, A_k=A_k,
                           K=np.diag([p.K_beta, p.K_beta, p.K_t]))


@dataclass(frozen=True)
class DisturbanceSpec:
    """Exogenous fuselage torque A_d * [cos(Omega_d t), 0, 0], or a constant vector.

    Either way the magnitude never exceeds the declared bound delta_f.
    """

    amplitude: float = 0.0      # A_d [N m]
    frequency: float = 0.0      # Omega_d [rad/s]
    bound: float = 0.0          # delta_f [N m]
    constant: np.ndarray | None = None  # fixed torque, test form

    def __post_init__(self):
        if self.constant is not None:
            object.__setattr__(self, "constant", np.asarray(self.constant, dtype=float))


def disturbance_torque(t: float, d: DisturbanceSpec) -> np.ndarray:
    """Evaluate Delta_f(t), clamped to ||Delta_f|| <= delta_f by construction."""
    if d.constant is not None:
        raw = d.constant
    else:
        raw = np.array([d.amplitude * np.cos(d.frequency * t), 0.0, 0.0])
    if d.bound > 0.0:
        n = np.linalg.norm(raw)
        if n > d.bound:
            raw = raw * (d.bound / n)
    return raw


def plant_derivative(s: PlantState, theta: np.ndarray, t: float,
                     d: DisturbanceSpec | None, m: DerivedMatrices,
                     p: VehicleParams):
    """Time derivative (R_dot, w_dot, M_dot) of the plant under pseudo-control theta."""
    delta_f = disturbance_torque(t, d) if d is not None else np.zeros(3)
    J = p.J
    R_dot = s.R @ hat(s.omega)
    w_dot = np.linalg.solve(J, -np.cross(s.omega, J @ s.omega) + s.M + delta_f)
    M_dot = m.A @ s.M - m.K @ s.omega + m.K @ m.A_tau @ theta
    return R_dot, w_dot, M_dot


def flap_to_moment(a: float, b: float, p: VehicleParams) -> tuple[float, float]:
    """Rolling/pitching moment from rotor flap angles: M_x = K_beta b, M_y = K_beta a."""
    return p.K_beta * b, p.K_beta * a


def moment_to_flap(M: np.ndarray, p: VehicleParams) -> tuple[float, float]:
    """Inverse of flap_to_moment: (a, b) recovered from the moment vector."""
    return M[1] / p.K_beta, M[0] / p.K_beta


def pseudo_to_physical(theta: np.ndarray, omega: np.ndarray,
                       p: VehicleParams) -> tuple[float, float, float]:
    """Unmix pseudo-control into physical (theta_a, theta_b, theta_t) blade pitch angles."""
    theta_b = theta[0] - omega[1] / p.Omega
    theta_a = theta[1] + omega[0] / p.Omega
    theta_t = theta[2] / p.K_t0
    return theta_a, theta_b, theta_t


def physical_to_pseudo(theta_a: float, theta_b: float, theta_t: float,
                       omega: np.ndarray, p: VehicleParams) -> np.ndarray:
    """Mix physical inputs into the pseudo-control vector (inverse of pseudo_to_physical)."""
    return np.array([theta_b + omega[1] / p.Omega,
                     theta_a - omega[0] / p.Omega,
                     p.K_t0 * theta_t])


def flap_dynamics_check(a: float, b: float, omega: np.ndarray,
                        theta_a: float, theta_b: float,
                        p: VehicleParams) -> tuple[float, float]:
    """First-order tip-path-plane flap rates, written in the raw flap variables.

    Used only as a cross-check that the moment-form rotor equation and the
    flap-form equations agree under the linear flap-to-moment map:

        a_dot = -a/tau_m + k b - w_y + (theta_a - w_x/Omega)/tau_m
        b_dot = -b/tau_m - k a - w_x + (theta_b + w_y/Omega)/tau_m
    """
    k = p.k
    a_dot = -a / p.tau_m + k * b - omega[1] + (theta_a - omega[0] / p.Omega) / p.tau_m
    b_dot = -b / p.tau_m - k * a - omega[0] + (theta_b + omega[1] / p.Omega) / p.tau_m
    return a_dot, b_dot
