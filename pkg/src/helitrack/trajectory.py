"""Reference trajectory generation: sinusoids and minimum-effort flips.

Sinusoidal single-axis attitude references are closed form.  Flip
references solve the rest-to-rest optimal control problem

    min  integral of |u|^2 dt
    s.t. omega = phidot * v                    (single-axis rotation)
         J omega_dot + omega x J omega = M    (fuselage)
         M_dot = A M - K omega + K A_tau theta (rotor)
         theta_dot = u,  |u| <= u_max,  |theta| <= theta_max

with boundary conditions pinning angle, rate, moment and input to their
trim values at both ends.  u is the blade-pitch rate, so u_max encodes the
servo speed limit and theta_max the cyclic authority.

Transcription is trapezoidal collocation on N knots: decision vector is
all knot states (phi, phidot, M, theta) plus controls u (11 per knot),
dynamics become defect equalities, and the axis constraint folds the
fuselage equation into a scalar angle acceleration plus two off-axis
moment equalities per knot.  The resulting problem (linear constraints for
principal-axis flips, convex quadratic objective, box bounds) is solved by
an augmented-Lagrangian outer loop around a projected quasi-Newton inner
minimizer (L-BFGS-B).

Solved trajectories are sampled through a C1 cubic Hermite interpolant and
can be compressed to piecewise polynomials (degree 7 over the maneuver,
degree 1 over the holds) for storage-constrained autopilots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .control import ReferenceSample
from .model import VehicleParams, derive_matrices
from .so3 import expm


class BadSpec(ValueError):
    """Flip specification violates its invariants."""


class Infeasible(RuntimeError):
    """Constrained solve stalled; carries the worst constraint and violation."""

    def __init__(self, name: str, violation: float):
        super().__init__(f"infeasible: {name} violated by {violation:.3e}")
        self.constraint = name
        self.violation = violation


class MaxIterations(RuntimeError):
    """Outer iteration cap reached before convergence."""


class OutOfRange(ValueError):
    """Sample time outside the trajectory's domain."""


class TolNotMet(RuntimeError):
    """Polynomial compression could not reach the error bound."""


@dataclass(frozen=True)
class SinusoidSpec:
    """Single-axis sinusoidal angle reference phi(t) = A sin(w t + phase)."""

    axis: np.ndarray
    amplitude: float        # rad
    frequency: float        # rad/s
    phase: float = 0.0

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        object.__setattr__(self, "axis", axis)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ValueError("axis must be a unit vector")


def sinusoid_reference(spec: SinusoidSpec, t: float) -> ReferenceSample:
    """Reference sample at time t; single axis, so body rates align with it."""
    arg = spec.frequency * t + spec.phase
    A, w = spec.amplitude, spec.frequency
    phi = A * np.sin(arg)
    dphi = A * w * np.cos(arg)
    ddphi = -A * w**2 * np.sin(arg)
    dddphi = -A * w**3 * np.cos(arg)
    return ReferenceSample(R_d=expm(phi * spec.axis),
                           omega_d=dphi * spec.axis,
                           omega_d_dot=ddphi * spec.axis,
                           omega_d_ddot=dddphi * spec.axis)


@dataclass(frozen=True)
class FlipSpec:
    """Rest-to-rest single-axis flip through total_angle in duration seconds."""

    axis: np.ndarray
    total_angle: float              # rad
    duration: float                 # s
    u_max: float = np.deg2rad(200.0)    # blade pitch rate bound [rad/s], not an identified value
    theta_max: float = np.deg2rad(9.8)  # cyclic authority [rad]
    knots: int = 61
    M_start: np.ndarray = field(default_factory=lambda: np.zeros(3))
    M_end: np.ndarray = field(default_factory=lambda: np.zeros(3))
    theta_start: np.ndarray = field(default_factory=lambda: np.zeros(3))
    theta_end: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        object.__setattr__(self, "axis", axis)
        for name in ("M_start", "M_end", "theta_start", "theta_end"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise BadSpec("axis must be a unit vector")
        if not self.duration > 0.0:
            raise BadSpec("duration must be positive")
        if self.knots < 10:
            raise BadSpec("need at least 10 knots")
        if not self.theta_max > 0.0:
            raise BadSpec("theta_max must be positive")
        if not self.u_max > 0.0:
            raise BadSpec("u_max must be positive")


# state slots per knot: [phi, phidot, M(3), theta(3)]
_NS = 8
_NU = 3


class FlipNlp:
    """Transcribed collocation problem: objective, equality constraints, bounds.

    Decision vector x = [states (N x 8) | controls (N x 3)], flattened row
    major.  Equalities are the trapezoidal defects, boundary conditions and
    per-knot off-axis moment conditions; each row carries a physical scale
    used for the (scaled) feasibility measure.
    """

    def __init__(self, spec: FlipSpec, p: VehicleParams):
        self.spec = spec
        self.p = p
        m = derive_matrices(p)
        self.A, self.A_tau, self.K = m.A, m.A_tau, m.K
        self.KA_tau_diag = np.diag(m.K) * np.diag(m.A_tau)
        self.v = spec.axis
        self.Jv = p.J @ self.v
        self.vJv = float(self.v @ self.Jv)
        self.gyro_axis = np.cross(self.v, self.Jv)   # zero for principal axes
        # orthonormal pair spanning the plane normal to the flip axis
        w1 = np.eye(3)[int(np.argmin(np.abs(self.v)))]
        w1 = w1 - (w1 @ self.v) * self.v
        w1 /= np.linalg.norm(w1)
        self.w1 = w1
        self.w2 = np.cross(self.v, w1)

        N = spec.knots
        self.N = N
        self.h = spec.duration / (N - 1)
        self.t = np.linspace(0.0, spec.duration, N)
        self.n_var = N * (_NS + _NU)
        self.n_states = N * _NS

        lb = np.full(self.n_var, -np.inf)
        ub = np.full(self.n_var, np.inf)
        s = lb[:self.n_states].reshape(N, _NS)  # views
        su = lb[self.n_states:].reshape(N, _NU)
        s[:, 5:8] = -spec.theta_max
        su[:, :] = -spec.u_max
        s = ub[:self.n_states].reshape(N, _NS)
        su = ub[self.n_states:].reshape(N, _NU)
        s[:, 5:8] = spec.theta_max
        su[:, :] = spec.u_max
        self.lb, self.ub = lb, ub

        self._build_constraints()

    # -- raw dynamics ------------------------------------------------------

    def dynamics(self, states: np.ndarray, controls: np.ndarray) -> np.ndarray:
        """State rates f(z, u) for stacked knot arrays (N x 8), (N x 3)."""
        phidot = states[:, 1]
        M = states[:, 2:5]
        theta = states[:, 5:8]
        f = np.empty_like(states)
        f[:, 0] = phidot
        f[:, 1] = (M @ self.v) / self.vJv
        f[:, 2:5] = (M @ self.A.T - np.outer(phidot, np.diag(self.K) * self.v)
                     + theta * self.KA_tau_diag)
        f[:, 5:8] = controls
        return f

    # -- constraint assembly ----------------------------------------------

    def _build_constraints(self):
        N, h = self.N, self.h
        n = self.n_var
        rows = []
        names = []
        scales = []

        def state_col(k, j):
            return k * _NS + j

        def control_col(k, j):
            return self.n_states + k * _NU + j

        # Jacobian of f w.r.t. (z, u) per knot (constant: dynamics are linear
        # in the decision variables; the phidot^2 gyroscopic term only enters
        # the off-axis path rows below)
        Fz = np.zeros((_NS, _NS))
        Fu = np.zeros((_NS, _NU))
        Fz[0, 1] = 1.0
        Fz[1, 2:5] = self.v / self.vJv
        Fz[2:5, 1] = -np.diag(self.K) * self.v
        Fz[2:5, 2:5] = self.A
        Fz[2:5, 5:8] = np.diag(self.KA_tau_diag)
        Fu[5:8, :] = np.eye(3)

        C = []
        b = []
        M_scale = max(1.0, float(np.max(np.diag(self.K))) * self.spec.theta_max)
        state_scale = np.array([1.0, 1.0, M_scale, M_scale, M_scale, 1.0, 1.0, 1.0])

        # trapezoidal defects z_{k+1} - z_k - h/2 (f_k + f_{k+1}) = 0
        for k in range(N - 1):
            block = np.zeros((_NS, n))
            for j in range(_NS):
                block[j, state_col(k + 1, j)] += 1.0
                block[j, state_col(k, j)] -= 1.0
            for j in range(_NS):
                for i in range(_NS):
                    if Fz[j, i] != 0.0:
                        block[j, state_col(k, i)] -= 0.5 * h * Fz[j, i]
                        block[j, state_col(k + 1, i)] -= 0.5 * h * Fz[j, i]
                for i in range(_NU):
                    if Fu[j, i] != 0.0:
                        block[j, control_col(k, i)] -= 0.5 * h * Fu[j, i]
                        block[j, control_col(k + 1, i)] -= 0.5 * h * Fu[j, i]
            C.append(block)
            b.append(np.zeros(_NS))
            names.extend(f"defect[{k}].{nm}" for nm in
                         ("phi", "phidot", "Mx", "My", "Mz", "th1", "th2", "th3"))
            scales.extend(state_scale)

        # off-axis moment rows: w_i . (M_k - phidot_k^2 v x Jv) = 0
        for k in range(N):
            for w, tag in ((self.w1, "offaxis1"), (self.w2, "offaxis2")):
                row = np.zeros(n)
                for j in range(3):
                    row[state_col(k, 2 + j)] = w[j]
                C.append(row[None, :])
                b.append(np.zeros(1))
                names.append(f"{tag}[{k}]")
                scales.append(M_scale)

        # boundary conditions
        bc = [
            (state_col(0, 0), 0.0, "phi(0)", 1.0),
            (state_col(0, 1), 0.0, "phidot(0)", 1.0),
            (state_col(N - 1, 0), self.spec.total_angle, "phi(Tf)", 1.0),
            (state_col(N - 1, 1), 0.0, "phidot(Tf)", 1.0),
        ]
        for j in range(3):
            bc.append((state_col(0, 2 + j), self.spec.M_start[j], f"M(0)[{j}]", M_scale))
            bc.append((state_col(N - 1, 2 + j), self.spec.M_end[j], f"M(Tf)[{j}]", M_scale))
            bc.append((state_col(0, 5 + j), self.spec.theta_start[j], f"theta(0)[{j}]", 1.0))
            bc.append((state_col(N - 1, 5 + j), self.spec.theta_end[j], f"theta(Tf)[{j}]", 1.0))
        for col, val, nm, sc in bc:
            row = np.zeros(n)
            row[col] = 1.0
            C.append(row[None, :])
            b.append(np.array([val]))
            names.append(nm)
            scales.append(sc)

        self.C = np.vstack(C)
        self.b = np.concatenate(b)
        self.names = names
        self.scales = np.asarray(scales, dtype=float)
        self.n_con = len(self.b)
        # row indices of the off-axis path rows (the only nonlinear ones)
        self.path_rows = []
        for i, nm in enumerate(names):
            if nm.startswith("offaxis"):
                self.path_rows.append(i)
        self.path_rows = np.asarray(self.path_rows, dtype=int)

    def split(self, x: np.ndarray):
        states = x[:self.n_states].reshape(self.N, _NS)
        controls = x[self.n_states:].reshape(self.N, _NU)
        return states, controls

    def constraints(self, x: np.ndarray) -> np.ndarray:
        c = self.C @ x - self.b
        g = self.gyro_axis
        if g @ g > 0.0:  # non-principal axis: quadratic gyroscopic correction
            states, _ = self.split(x)
            pd2 = states[:, 1] ** 2
            corr = np.empty(2 * self.N)
            corr[0::2] = -(self.w1 @ g) * pd2
            corr[1::2] = -(self.w2 @ g) * pd2
            c[self.path_rows] += corr
        return c

    def constraint_gradient_extra(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Gradient contribution of the nonlinear path terms for adjoint y."""
        g = self.gyro_axis
        out = np.zeros(self.n_var)
        if g @ g > 0.0:
            states, _ = self.split(x)
            pd = states[:, 1]
            y1 = y[self.path_rows[0::2]]
            y2 = y[self.path_rows[1::2]]
            coeff = -2.0 * pd * ((self.w1 @ g) * y1 + (self.w2 @ g) * y2)
            cols = np.arange(self.N) * _NS + 1
            out[cols] = coeff
        return out

    def objective(self, x: np.ndarray) -> float:
        _, u = self.split(x)
        usq = np.sum(u * u, axis=1)
        return float(self.h * (np.sum(usq) - 0.5 * usq[0] - 0.5 * usq[-1]))

    def objective_gradient(self, x: np.ndarray) -> np.ndarray:
        _, u = self.split(x)
        w = np.full(self.N, 2.0 * self.h)
        w[0] = w[-1] = self.h
        g = np.zeros(self.n_var)
        g[self.n_states:] = (u * w[:, None]).ravel()
        return g

    def initial_guess(self) -> np.ndarray:
        """Dynamics-consistent smooth guess: quintic angle profile, rotor inverted."""
        sp = self.spec
        T = sp.duration
        s = self.t / T
        phi = sp.total_angle * (10 * s**3 - 15 * s**4 + 6 * s**5)
        dphi = sp.total_angle * (30 * s**2 - 60 * s**3 + 30 * s**4) / T
        ddphi = sp.total_angle * (60 * s - 180 * s**2 + 120 * s**3) / T**2
        dddphi = sp.total_angle * (60 - 360 * s + 360 * s**2) / T**3
        M = (np.outer(ddphi, self.Jv)
             + np.outer(dphi**2, np.cross(self.v, self.Jv)))
        Mdot = (np.outer(dddphi, self.Jv)
                + np.outer(2 * dphi * ddphi, np.cross(self.v, self.Jv)))
        omega = np.outer(dphi, self.v)
        theta = (Mdot - M @ self.A.T + omega * np.diag(self.K)) / self.KA_tau_diag
        theta = np.clip(theta, -sp.theta_max, sp.theta_max)
        u = np.gradient(theta, self.h, axis=0)
        u = np.clip(u, -sp.u_max, sp.u_max)
        x = np.zeros(self.n_var)
        states, controls = self.split(x)
        states[:, 0] = phi
        states[:, 1] = dphi
        states[:, 2:5] = M
        states[:, 5:8] = theta
        controls[:, :] = u
        return np.clip(x, self.lb, self.ub)


def flip_transcribe(spec: FlipSpec, p: VehicleParams) -> FlipNlp:
    """Transcribe the flip optimal control problem (trapezoidal collocation)."""
    return FlipNlp(spec, p)


@dataclass
class CollocationSolution:
    """Solved flip: knot trajectories, objective, and solver diagnostics."""

    t: np.ndarray
    phi: np.ndarray
    phidot: np.ndarray
    M: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    objective: float
    max_violation: float          # scaled feasibility measure
    spec: FlipSpec
    merit_histories: list[list[float]]
    outer_iterations: int


def _projected_newton(x: np.ndarray, G: np.ndarray, merit, grad,
                      lb: np.ndarray, ub: np.ndarray, gtol: float,
                      max_iter: int = 80) -> tuple[np.ndarray, list[float]]:
    """Box-constrained minimization by projected Newton steps.

    G is the (constant, PSD) Hessian of the merit; the free-variable block
    is factorized directly each iteration, with an Armijo-guarded projected
    line search, so the recorded merit history is monotone by construction.
    """
    from scipy.linalg import cho_factor, cho_solve

    x = np.clip(x, lb, ub)
    history = [merit(x)]
    n = len(x)
    for _ in range(max_iter):
        g = grad(x)
        at_lb = (x <= lb + 1e-12) & (g > 0.0)
        at_ub = (x >= ub - 1e-12) & (g < 0.0)
        free = ~(at_lb | at_ub)
        pg = np.where(free, g, 0.0)
        if float(np.max(np.abs(pg))) <= gtol:
            break
        d = np.zeros(n)
        idx = np.flatnonzero(free)
        Gff = G[np.ix_(idx, idx)]
        jitter = 1e-12 * max(1.0, float(np.max(np.abs(np.diag(Gff)))))
        try:
            fac = cho_factor(Gff + jitter * np.eye(len(idx)), lower=True)
            d[idx] = -cho_solve(fac, g[idx])
        except np.linalg.LinAlgError:
            d[idx] = -g[idx]
        f0 = history[-1]
        t = 1.0
        accepted = False
        while t >= 1e-13:
            xt = np.clip(x + t * d, lb, ub)
            ft = merit(xt)
            if ft <= f0 + 1e-4 * float(g @ (xt - x)):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        x = xt
        history.append(ft)
        if f0 - ft <= 1e-14 * (1.0 + abs(f0)):   # merit stalled at working precision
            break
    return x, history


def flip_solve(nlp: FlipNlp, feas_tol: float = 1e-6, opt_tol: float = 1e-8,
               max_outer: int = 40) -> CollocationSolution:
    """Solve the transcribed problem by an augmented-Lagrangian loop.

    Equalities are absorbed into the augmented Lagrangian; the bound-only
    inner problems go to a projected Newton minimizer (the AL of this
    transcription is a box-constrained convex quadratic for principal-axis
    flips, so the inner solves are essentially exact).  Convergence:
    scaled feasibility <= feas_tol and objective stall below opt_tol.
    Raises Infeasible when the penalty is exhausted without feasibility
    progress, MaxIterations at the outer cap.
    """
    scales = nlp.scales
    Cs = nlp.C / scales[:, None]
    lam = np.zeros(nlp.n_con)
    rho = 1e3
    rho_max = 1e8
    x = nlp.initial_guess()
    histories: list[list[float]] = []
    feas_prev = np.inf
    obj_prev = np.inf
    stalled = 0

    # d2/du2 of the trapezoid objective: 2 * (h or h/2) per control coordinate
    obj_hess_diag = np.zeros(nlp.n_var)
    w = np.full(nlp.N, 2.0 * nlp.h)
    w[0] = w[-1] = nlp.h
    obj_hess_diag[nlp.n_states:] = np.repeat(w, _NU)

    G = None
    rho_of_G = None
    gtol = 1e-4

    for outer in range(max_outer):
        if G is None or rho != rho_of_G:
            G = rho * (Cs.T @ Cs)
            G[np.diag_indices_from(G)] += obj_hess_diag
            rho_of_G = rho

        def merit(xv):
            c = nlp.constraints(xv) / scales
            return (nlp.objective(xv) + float(lam @ c)
                    + 0.5 * rho * float(c @ c))

        def grad(xv):
            c = nlp.constraints(xv) / scales
            y = lam + rho * c
            return (nlp.objective_gradient(xv) + nlp.C.T @ (y / scales)
                    + nlp.constraint_gradient_extra(xv, y / scales))

        x, history = _projected_newton(x, G, merit, grad, nlp.lb, nlp.ub, gtol)
        histories.append(history)
        gtol = max(1e-10, gtol * 0.2)

        c_scaled = nlp.constraints(x) / scales
        feas = float(np.max(np.abs(c_scaled)))
        obj = nlp.objective(x)

        if feas <= feas_tol:
            if abs(obj - obj_prev) <= max(opt_tol, 1e-10 * (1.0 + abs(obj))):
                break
            obj_prev = obj
        lam = lam + rho * c_scaled
        if feas > 0.25 * feas_prev and feas > feas_tol:
            rho = min(rho * 10.0, rho_max)
            if rho >= rho_max:
                # penalty exhausted: infeasible only if feasibility has
                # genuinely stopped improving, not merely improving slowly
                if feas > 0.9 * feas_prev:
                    stalled += 1
                else:
                    stalled = 0
                if stalled >= 5:
                    worst = int(np.argmax(np.abs(c_scaled)))
                    raise Infeasible(nlp.names[worst], abs(c_scaled[worst]))
        feas_prev = feas
    else:
        c_scaled = nlp.constraints(x) / scales
        feas = float(np.max(np.abs(c_scaled)))
        if feas > feas_tol:
            worst = int(np.argmax(np.abs(c_scaled)))
            raise MaxIterations(
                f"outer cap reached, worst {nlp.names[worst]} = {abs(c_scaled[worst]):.3e}")

    x = np.clip(x, nlp.lb, nlp.ub)
    states, controls = nlp.split(x)
    c_scaled = nlp.constraints(x) / scales
    return CollocationSolution(
        t=nlp.t.copy(), phi=states[:, 0].copy(), phidot=states[:, 1].copy(),
        M=states[:, 2:5].copy(), theta=states[:, 5:8].copy(), u=controls.copy(),
        objective=nlp.objective(x), max_violation=float(np.max(np.abs(c_scaled))),
        spec=nlp.spec, merit_histories=histories, outer_iterations=outer + 1)


def _hermite(sol: CollocationSolution, t: float):
    """C1 cubic Hermite evaluation of phi and three derivatives at t."""
    tt = sol.t
    k = int(np.clip(np.searchsorted(tt, t, side="right") - 1, 0, len(tt) - 2))
    h = tt[k + 1] - tt[k]
    s = (t - tt[k]) / h
    p0, p1 = sol.phi[k], sol.phi[k + 1]
    m0, m1 = sol.phidot[k] * h, sol.phidot[k + 1] * h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    phi = h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1
    d00 = 6 * s**2 - 6 * s
    d10 = 3 * s**2 - 4 * s + 1
    d01 = -6 * s**2 + 6 * s
    d11 = 3 * s**2 - 2 * s
    dphi = (d00 * p0 + d10 * m0 + d01 * p1 + d11 * m1) / h
    g00 = 12 * s - 6
    g10 = 6 * s - 4
    g01 = -12 * s + 6
    g11 = 6 * s - 2
    ddphi = (g00 * p0 + g10 * m0 + g01 * p1 + g11 * m1) / h**2
    dddphi = (12 * p0 + 6 * m0 - 12 * p1 + 6 * m1) / h**3
    return phi, dphi, ddphi, dddphi


def sample_flip(sol: CollocationSolution, spec: FlipSpec, t: float) -> ReferenceSample:
    """Reference sample on the flip at time t in [0, duration]."""
    if t < -1e-12 or t > spec.duration + 1e-12:
        raise OutOfRange(f"t = {t} outside [0, {spec.duration}]")
    t = min(max(t, 0.0), spec.duration)
    phi, dphi, ddphi, dddphi = _hermite(sol, t)
    v = spec.axis
    return ReferenceSample(R_d=expm(phi * v), omega_d=dphi * v,
                           omega_d_dot=ddphi * v, omega_d_ddot=dddphi * v)


@dataclass
class PiecewisePoly:
    """Piecewise polynomial storage of the flip angle.

    Per-segment coefficients are in the local unit variable
    s = (t - t_i) / (t_{i+1} - t_i), lowest order first.
    """

    breakpoints: np.ndarray
    coefficients: list[np.ndarray]
    degrees: list[int]
    fit_error: float              # max |poly - trajectory| over the fit grid [rad]

    def evaluate(self, t: float) -> float:
        bp = self.breakpoints
        k = int(np.clip(np.searchsorted(bp, t, side="right") - 1, 0, len(bp) - 2))
        s = (t - bp[k]) / (bp[k + 1] - bp[k])
        return float(np.polyval(self.coefficients[k][::-1], s))

    def to_dict(self) -> dict:
        return {
            "breakpoints": [float(x) for x in self.breakpoints],
            "degrees": [int(d) for d in self.degrees],
            "coefficients": [[float(c) for c in cs] for cs in self.coefficients],
            "fit_error": float(self.fit_error),
        }


def _fit_segment(ts: np.ndarray, ys: np.ndarray, a: float, b: float,
                 ya: float, yb: float, degree: int) -> np.ndarray:
    """Least-squares polynomial in local s with exact endpoint interpolation."""
    s = (ts - a) / (b - a)
    V = np.vander(s, degree + 1, increasing=True)
    if degree == 1:
        return np.array([ya, yb - ya])
    # eliminate c0 (value at s=0) and c_d (forces value at s=1)
    c0 = ya
    resid = ys - c0 - (yb - ya) * V[:, degree]
    A = V[:, 1:degree] - V[:, degree][:, None]
    sol, *_ = np.linalg.lstsq(A, resid, rcond=None)
    coeffs = np.zeros(degree + 1)
    coeffs[0] = c0
    coeffs[1:degree] = sol
    coeffs[degree] = yb - ya - np.sum(sol)
    return coeffs


def compress_poly(sol: CollocationSolution, max_err: float = np.deg2rad(0.1),
                  hold: float = 1.0, max_segments: int = 16) -> PiecewisePoly:
    """Compress the maneuver to degree-7 segments plus degree-1 hold segments.

    Raises TolNotMet when max_segments degree-7 pieces cannot reach max_err.
    A trajectory that is already affine in time collapses to a single
    degree-1 segment.
    """
    T = sol.spec.duration
    dense_t = np.linspace(0.0, T, max(400, 40 * len(sol.t)))
    dense_y = np.array([_hermite(sol, t)[0] for t in dense_t])

    # affine trajectories need no degree-7 machinery
    lin = _fit_segment(dense_t, dense_y, 0.0, T, dense_y[0], dense_y[-1], 1)
    lin_err = float(np.max(np.abs(lin[0] + lin[1] * (dense_t / T) - dense_y)))
    if lin_err <= min(max_err, 1e-12 * max(1.0, float(np.max(np.abs(dense_y))))):
        return PiecewisePoly(breakpoints=np.array([0.0, T]),
                             coefficients=[lin], degrees=[1], fit_error=lin_err)

    for n_seg in range(1, max_segments + 1):
        edges = np.linspace(0.0, T, n_seg + 1)
        coeffs = []
        worst = 0.0
        edge_vals = np.array([_hermite(sol, e)[0] for e in edges])
        for i in range(n_seg):
            mask = (dense_t >= edges[i] - 1e-15) & (dense_t <= edges[i + 1] + 1e-15)
            ts, ys = dense_t[mask], dense_y[mask]
            c = _fit_segment(ts, ys, edges[i], edges[i + 1],
                             edge_vals[i], edge_vals[i + 1], 7)
            s = (ts - edges[i]) / (edges[i + 1] - edges[i])
            err = float(np.max(np.abs(np.polyval(c[::-1], s) - ys)))
            worst = max(worst, err)
            coeffs.append(c)
        if worst <= max_err:
            pre = np.array([dense_y[0], 0.0])
            post = np.array([dense_y[-1], 0.0])
            return PiecewisePoly(
                breakpoints=np.concatenate([[-hold], edges, [T + hold]]),
                coefficients=[pre] + coeffs + [post],
                degrees=[1] + [7] * n_seg + [1],
                fit_error=worst)
    raise TolNotMet(
        f"{max_segments} degree-7 segments leave {np.rad2deg(worst):.3f} deg error; "
        "increase max_segments")


def collective_schedule(R: np.ndarray, theta0_hover: float) -> float:
    """Collective input over the flip: hover value scaled by body-z . world-z.

    Keeps thrust pointed up through inverted flight (negative collective
    when upside down).  Logged for completeness; no force model in scope.
    """
    return theta0_hover * float(R[2, 2])
