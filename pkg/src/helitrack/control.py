"""Attitude tracking control laws for the rotor-fuselage plant.

Three controllers share the tracking-error machinery:

  * nominal backstepping: moment-level backstepping with exact cancellation
    of the rotor damping term, no robustification,
  * BRC, the backstepping robust compensator: the nominal law augmented
    with two smooth compensators, mu_f against bounded exogenous fuselage
    torque and mu_r against fractional error in the rotor time constants,
  * SPR, the structure-preserving robust controller: keeps the rotor's own
    -K omega damping instead of cancelling it, so the only error feedback
    is the attitude term -k_R e_Rm.  No angular velocity or flap feedback.

All laws act through the pseudo-control theta of the rotor equation
M_dot = A M - K omega + K A_tau theta.  Both backstepping laws require the
time derivative of the desired moment M_d; md_dot() evaluates it in closed
form by differentiating the control law term by term (using the nominal
J w_dot = -omega x J omega + M for the unknown angular acceleration), with
a filtered backward difference as a fallback for references that lack a
second angular-rate derivative.

The backstepping error coordinates are

    R_e = R_d^T R,   e_omega = omega - R_e^T omega_d,
    e_tilde = e_omega + k_R e_R,   e_M = M - M_d,

and the BRC ultimate bound on z = (|e_R|, |e_tilde|, |e_M|) follows from
the quadratic sandwich z.U1 z <= V3 <= z.U2 z and the decrease rate
V3_dot < -z.W z + eps; see ultimate_bound().
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import so3
from .model import (DerivedMatrices, PlantState, UncertaintySpec, VehicleParams,
                    assumed_matrices, derive_matrices)
from .so3 import hat, transport_B, vee_skew


class EpsilonTooLarge(ValueError):
    """eps_f + eps_r violates the sublevel-set condition for ultimate boundedness."""


class NeedsHistory(RuntimeError):
    """Filtered-numeric M_d derivative has no previous sample yet."""


@dataclass(frozen=True)
class ReferenceSample:
    """Attitude command and its body-rate derivatives at one time instant."""

    R_d: np.ndarray
    omega_d: np.ndarray
    omega_d_dot: np.ndarray
    omega_d_ddot: np.ndarray


def hover_reference() -> ReferenceSample:
    z = np.zeros(3)
    return ReferenceSample(np.eye(3), z, z, z)


@dataclass(frozen=True)
class BrcGains:
    """Gains of the backstepping laws (robust and nominal)."""

    k_R: float = 2.8
    k_omega: float = 2.5
    eps_f: float = 0.1      # fuselage compensator smoothing
    eps_r: float = 0.1      # rotor compensator smoothing
    delta_f: float = 5.0    # assumed bound on the exogenous torque [N m]
    xi_2: float = 1.9       # sublevel parameter, in (0, 2)

    def __post_init__(self):
        if not (self.k_R > 0.0 and self.k_omega > 0.0):
            raise ValueError("k_R and k_omega must be positive")
        if not (self.eps_f > 0.0 and self.eps_r > 0.0):
            raise ValueError("eps_f and eps_r must be positive")
        if not 0.0 < self.xi_2 < 2.0:
            raise ValueError("xi_2 must lie in (0, 2)")

    @property
    def eps(self) -> float:
        return self.eps_f + self.eps_r


@dataclass(frozen=True)
class SprGains:
    """Gains of the structure-preserving controller.

    k_R may be a positive scalar or a positive-diagonal 3x3 matrix (per-axis
    handling qualities).  P must be SPD with distinct eigenvalues so the
    attitude error function has the minimal critical set.
    """

    k_R: float | np.ndarray = 2.8
    P: np.ndarray = field(default_factory=lambda: np.diag([1.0, 1.1, 1.2]))

    def __post_init__(self):
        object.__setattr__(self, "P", np.asarray(self.P, dtype=float))
        so3._check_P(self.P)
        K_R = self.k_R_matrix
        if not (np.allclose(K_R, np.diag(np.diag(K_R))) and np.all(np.diag(K_R) > 0.0)):
            raise ValueError("k_R must be a positive scalar or positive diagonal matrix")

    @property
    def k_R_matrix(self) -> np.ndarray:
        if np.ndim(self.k_R) == 0:
            return float(self.k_R) * np.eye(3)
        return np.asarray(self.k_R, dtype=float)


@dataclass(frozen=True)
class TrackingError:
    R_e: np.ndarray
    e_omega: np.ndarray
    e_M: np.ndarray
    e_R: np.ndarray
    e_tilde: np.ndarray


def tracking_error(state: PlantState, ref: ReferenceSample, M_d: np.ndarray,
                   k_R: float) -> TrackingError:
    """Tracking errors of the full rotor-fuselage loop at one instant."""
    R_e = ref.R_d.T @ state.R
    e_omega = state.omega - R_e.T @ ref.omega_d
    e_R = vee_skew(R_e)
    return TrackingError(R_e=R_e, e_omega=e_omega, e_M=state.M - M_d,
                         e_R=e_R, e_tilde=e_omega + k_R * e_R)


def mu_f(e_tilde: np.ndarray, delta_f: float, eps_f: float) -> np.ndarray:
    """Fuselage disturbance compensator, smooth everywhere incl. zero error.

    Accepts (..., 3) stacks for bulk property checks.
    """
    n = np.linalg.norm(e_tilde, axis=-1, keepdims=True)
    return -delta_f**2 * e_tilde / (delta_f * n + eps_f)


def mu_r(delta_r: np.ndarray, e_M: np.ndarray, alpha: float,
         eps_r: float) -> np.ndarray:
    """Rotor-uncertainty compensator; zero when alpha = 0.  Accepts (..., 3) stacks."""
    nd = np.linalg.norm(delta_r, axis=-1, keepdims=True)
    nm = np.linalg.norm(e_M, axis=-1, keepdims=True)
    return (-alpha / (1.0 - alpha)) * nd**2 * e_M / (nd * nm + eps_r)


class MdDotFilter:
    """First-order-filtered backward difference of M_d, time constant tau_filt."""

    def __init__(self, tau_filt: float = 0.01):
        self.tau_filt = tau_filt
        self._t = None
        self._M_d = None
        self._value = None

    def update(self, M_d: np.ndarray, t: float) -> np.ndarray:
        if self._t is None or t <= self._t:
            self._t, self._M_d = t, np.array(M_d, dtype=float)
            raise NeedsHistory("no previous M_d sample to difference against")
        dt = t - self._t
        raw = (M_d - self._M_d) / dt
        if self._value is None:
            self._value = raw
        else:
            self._value += min(dt / self.tau_filt, 1.0) * (raw - self._value)
        self._t, self._M_d = t, np.array(M_d, dtype=float)
        return self._value.copy()


class _Common:
    """Kinematic quantities and their rates shared by both control laws.

    The angular-acceleration estimate deliberately uses the nominal fuselage
    model (no exogenous torque): the controller cannot know Delta_f, and the
    induced M_d-rate error is part of what the compensators absorb.
    """

    def __init__(self, state: PlantState, ref: ReferenceSample, J: np.ndarray):
        R_e = ref.R_d.T @ state.R
        w = state.omega
        self.R_e = R_e
        self.rtw = R_e.T @ ref.omega_d       # reference rate seen in body frame
        self.rtwd = R_e.T @ ref.omega_d_dot
        self.e_omega = w - self.rtw
        Jw = J @ w
        self.gyro = np.cross(w, Jw)
        self.ff = J @ (np.cross(self.e_omega, self.rtw) - self.rtwd)
        self.w_dot = np.linalg.solve(J, -self.gyro + state.M)
        # transported derivatives along R_e_dot = R_e hat(e_omega)
        self.d_rtw = -np.cross(self.e_omega, self.rtw) + self.rtwd
        self.d_rtwd = -np.cross(self.e_omega, self.rtwd) + R_e.T @ ref.omega_d_ddot
        self.de_omega = self.w_dot - self.d_rtw
        self.d_gyro = np.cross(self.w_dot, Jw) + np.cross(w, J @ self.w_dot)
        self.d_ff = J @ (np.cross(self.de_omega, self.rtw)
                         + np.cross(self.e_omega, self.d_rtw) - self.d_rtwd)


class BrcController:
    """Backstepping law; robust=True adds the mu_f / mu_r compensators.

    The controller is built from the vehicle parameters it BELIEVES
    (assumed time-constant error applied), while the plant integrates with
    the true values; that split is the whole structured-uncertainty story.
    """

    def __init__(self, p: VehicleParams, gains: BrcGains,
                 assumed: UncertaintySpec = UncertaintySpec(),
                 robust: bool = True):
        self.p = p
        self.gains = gains
        self.assumed = assumed
        self.robust = robust
        self.J = p.J
        m_hat = assumed_matrices(p, assumed)
        self.A_bar = m_hat.A
        self.A_k = m_hat.A_k            # cross-coupling block, stiffness-based, known exactly
        self.K_diag = np.diag(m_hat.K)
        self.inv_KAtau_diag = 1.0 / (self.K_diag * np.diag(m_hat.A_tau))
        self.alpha = assumed.alpha

    def desired_moment(self, state: PlantState, ref: ReferenceSample,
                       c: _Common | None = None):
        """M_d and mu_f; also returns the rate M_d_dot used by the rotor loop."""
        g = self.gains
        c = c or _Common(state, ref, self.J)
        e_R = vee_skew(c.R_e)
        B = transport_B(c.R_e)
        e_tilde = c.e_omega + g.k_R * e_R
        de_R = B @ c.e_omega
        de_tilde = c.de_omega + g.k_R * de_R

        if self.robust:
            n = np.linalg.norm(e_tilde)
            D = g.delta_f * n + g.eps_f
            mu = -g.delta_f**2 * e_tilde / D
            # d/dt of mu_f; the n_dot term vanishes continuously as e_tilde -> 0
            dmu = -g.delta_f**2 * de_tilde / D
            if n > 0.0:
                dn = float(e_tilde @ de_tilde) / n
                dmu += g.delta_f**3 * dn * e_tilde / D**2
        else:
            mu = np.zeros(3)
            dmu = np.zeros(3)

        JB_e = self.J @ (B @ c.e_omega)
        M_d = -g.k_omega * e_tilde - e_R - g.k_R * JB_e + c.gyro - c.ff + mu

        Ew_Rt = hat(c.e_omega) @ c.R_e.T
        B_dot = 0.5 * (-np.trace(Ew_Rt) * np.eye(3) + Ew_Rt)
        Md_dot = (-g.k_omega * de_tilde - de_R
                  - g.k_R * (self.J @ (B_dot @ c.e_omega + B @ c.de_omega))
                  + c.d_gyro - c.d_ff + dmu)
        return M_d, mu, Md_dot, e_tilde

    def output(self, state: PlantState, ref: ReferenceSample):
        c = _Common(state, ref, self.J)
        M_d, mu, Md_dot, e_tilde = self.desired_moment(state, ref, c)
        Kw = self.K_diag * state.omega
        if self.robust and self.alpha > 0.0:
            delta_r = e_tilde + self.A_k @ M_d - Md_dot - Kw
            m_comp = mu_r(delta_r, state.M - M_d, self.alpha, self.gains.eps_r)
        else:
            m_comp = np.zeros(3)
        theta = self.inv_KAtau_diag * (-self.A_bar @ M_d + Md_dot - e_tilde + Kw + m_comp)
        return theta, M_d


class SprController:
    """Structure-preserving law: attitude feedback only, rotor damping kept.

    theta = (K A_tau)^-1 (-A M_d + M_d_dot + K R_e^T omega_d) with
    M_d = -k_R e_Rm + omega x J omega - J(hat(e_omega) R_e^T omega_d
    - R_e^T omega_d_dot).  With exact parameters the closed error dynamics
    is autonomous and inherits the -K e_omega damping.
    """

    def __init__(self, p: VehicleParams, gains: SprGains,
                 assumed: UncertaintySpec = UncertaintySpec()):
        self.p = p
        self.gains = gains
        self.assumed = assumed
        self.J = p.J
        self.P = gains.P
        self.K_R = gains.k_R_matrix
        m_hat = assumed_matrices(p, assumed)
        self.A_bar = m_hat.A
        self.K_diag = np.diag(m_hat.K)
        self.inv_KAtau_diag = 1.0 / (self.K_diag * np.diag(m_hat.A_tau))

    def desired_moment(self, state: PlantState, ref: ReferenceSample,
                       c: _Common | None = None):
        c = c or _Common(state, ref, self.J)
        e_Rm = vee_skew(self.P @ c.R_e)
        M_d = -self.K_R @ e_Rm + c.gyro - c.ff
        de_Rm = vee_skew(self.P @ c.R_e @ hat(c.e_omega))
        Md_dot = -self.K_R @ de_Rm + c.d_gyro - c.d_ff
        return M_d, Md_dot

    def output(self, state: PlantState, ref: ReferenceSample):
        c = _Common(state, ref, self.J)
        M_d, Md_dot = self.desired_moment(state, ref, c)
        theta = self.inv_KAtau_diag * (-self.A_bar @ M_d + Md_dot + self.K_diag * c.rtw)
        return theta, M_d


def brc_desired_moment(state: PlantState, ref: ReferenceSample, gains: BrcGains,
                       p: VehicleParams) -> tuple[np.ndarray, np.ndarray]:
    """Desired fuselage moment of the robust backstepping law and its mu_f part."""
    M_d, mu, _, _ = BrcController(p, gains).desired_moment(state, ref)
    return M_d, mu


def brc_control(state: PlantState, ref: ReferenceSample, M_d: np.ndarray,
                Md_dot: np.ndarray, gains: BrcGains, assumed: UncertaintySpec,
                p: VehicleParams, robust: bool = True) -> np.ndarray:
    """Pseudo-control of the backstepping law, given M_d and its rate.

    Built on the controller's assumed (possibly wrong) time constants.
    """
    ctl = BrcController(p, gains, assumed, robust=robust)
    c = _Common(state, ref, p.J)
    e_tilde = c.e_omega + gains.k_R * vee_skew(c.R_e)
    Kw = ctl.K_diag * state.omega
    if robust and assumed.alpha > 0.0:
        delta_r = e_tilde + ctl.A_k @ M_d - Md_dot - Kw
        m_comp = mu_r(delta_r, state.M - M_d, assumed.alpha, gains.eps_r)
    else:
        m_comp = np.zeros(3)
    return ctl.inv_KAtau_diag * (-ctl.A_bar @ M_d + Md_dot - e_tilde + Kw + m_comp)


def spr_control(state: PlantState, ref: ReferenceSample, gains: SprGains,
                assumed: UncertaintySpec = UncertaintySpec(),
                p: VehicleParams = None) -> np.ndarray:
    """Pseudo-control of the structure-preserving law."""
    theta, _ = SprController(p or VehicleParams(), gains, assumed).output(state, ref)
    return theta


def md_dot(state: PlantState, ref: ReferenceSample, gains: BrcGains | SprGains,
           p: VehicleParams, mode: str = "analytic",
           history: MdDotFilter | None = None, t: float | None = None) -> np.ndarray:
    """Rate of the desired moment for the law selected by the gains type.

    analytic: closed-form term-by-term differentiation (default).
    filtered-numeric: first-order-filtered backward difference through
    `history`; raises NeedsHistory on the first sample.
    """
    if mode == "analytic":
        if isinstance(gains, SprGains):
            _, Md_dot = SprController(p, gains).desired_moment(state, ref)
        else:
            _, _, Md_dot, _ = BrcController(p, gains).desired_moment(state, ref)
        return Md_dot
    if mode == "filtered-numeric":
        if history is None or t is None:
            raise NeedsHistory("filtered-numeric mode needs a MdDotFilter and time")
        if isinstance(gains, SprGains):
            M_d, _ = SprController(p, gains).desired_moment(state, ref)
        else:
            M_d, _, _, _ = BrcController(p, gains).desired_moment(state, ref)
        return history.update(M_d, t)
    raise ValueError(f"unknown md_dot mode {mode!r}")


def ultimate_bound(gains: BrcGains, J: np.ndarray, A_tau: np.ndarray):
    """Ultimate bound b on ||z||, z = (|e_R|, |e_tilde|, |e_M|), plus U1, U2, W.

    Raises EpsilonTooLarge (reporting the maximal admissible value) when
    eps_f + eps_r is too big for the sublevel set xi_2 to confine V3.
    """
    lam_min_J = float(np.min(np.linalg.eigvalsh(J)))
    lam_max_J = float(np.max(np.linalg.eigvalsh(J)))
    U1 = 0.5 * np.diag([1.0, lam_min_J, 1.0])
    U2 = 0.5 * np.diag([2.0 / (2.0 - gains.xi_2), lam_max_J, 1.0])
    W = np.diag([gains.k_R, gains.k_omega, float(np.min(np.diag(A_tau)))])
    lam_min_W = float(np.min(np.diag(W)))
    lam_max_U2 = float(np.max(np.diag(U2)))
    lam_min_U1 = float(np.min(np.diag(U1)))
    eps_max = gains.xi_2 * lam_min_W / lam_max_U2
    if not gains.eps < eps_max:
        raise EpsilonTooLarge(
            f"eps_f + eps_r = {gains.eps:.4g} must be < {eps_max:.4g}")
    b = np.sqrt(lam_max_U2 * gains.eps / (lam_min_U1 * lam_min_W))
    return b, U1, U2, W


def make_controller(tag: str, p: VehicleParams, gains,
                    assumed: UncertaintySpec = UncertaintySpec()):
    """Controller instance from its scenario tag.

    Tags: "nominal" (backstepping, no compensators), "brc", "spr",
    "open-loop" (theta = 0, free plant).
    """
    if tag == "brc":
        return BrcController(p, gains, assumed, robust=True)
    if tag == "nominal":
        return BrcController(p, gains, assumed, robust=False)
    if tag == "spr":
        return SprController(p, gains, assumed)
    if tag == "open-loop":
        return OpenLoop()
    raise ValueError(f"unknown controller tag {tag!r}")


class OpenLoop:
    """No control input; logs M_d = 0 so e_M is the raw rotor moment."""

    def output(self, state: PlantState, ref: ReferenceSample):
        return np.zeros(3), np.zeros(3)
