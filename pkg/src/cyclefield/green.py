"""Analytic transition kernels per phase.

Covariance propagation (ODE and closed form), the small-time transition
density with its technology potential factor, most-likely endpoints,
average paths, equilibria, linearized dynamics, and the Laplace-domain
propagator.

Two coefficient conventions coexist:

* *midpoint* coefficients ``alpha = delta - A_m F'(K_m)``,
  ``beta = 2 A_m F'(K_m) + r_c - delta`` with ``A_m, K_m`` the endpoint
  midpoints — used when evaluating the density between two given states;
* *reference* coefficients with ``A_m = A_bar_phase`` and ``K_m = K_bar``
  — used for covariance propagation, mean propagation, equilibria, and
  average paths, where the expansion point is the phase background.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from cyclefield.errors import ConvergenceError, DomainError, SingularityError, TrajectoryTerminated
from cyclefield.params import ModelParams
from cyclefield.paths import AgentPath, AgentState
from cyclefield.phases import PhaseSolution

_TWO_PI = 2.0 * math.pi


class SmallTimeWarning(UserWarning):
    """The requested time lies outside the small-time validity regime."""


@dataclass(frozen=True)
class GreenCoefficients:
    """Coefficients entering the transition kernels of one phase."""

    alpha: float     # alpha = delta - A_m F'(K_m)
    beta: float      # beta = 2 A_m F'(K_m) + r_c - delta  (appendix convention)
    Omega_sq: float  # mixed variance (varpi^2/lambda^2)(nu^2 + ...)
    b_coef: float    # capital variance rate 2(nu^2 + 2K^2eps/(lambda^2 a^2) + 3varpi^2/(2(2a+b)b))
    c_coef: float    # technology variance rate 2/lambda^2
    mass: float      # phase mass gap
    A_bar: float     # phase technology anchor
    C_bar: float     # phase consumption anchor


@dataclass(frozen=True)
class CovarianceState:
    """Propagated covariance H and linear response J at horizon s."""

    H: np.ndarray  # 3x3 symmetric covariance accumulator
    J: np.ndarray  # length-3 linear response vector
    s: float       # horizon


def coefficients(
    solution: PhaseSolution,
    params: ModelParams,
    from_state: AgentState | None = None,
    to_state: AgentState | None = None,
    maintext: bool = False,
) -> GreenCoefficients:
    """Kernel coefficients, midpoint if both endpoints are given.

    ``maintext=True`` selects the main-text convention
    ``beta = A_m F'(K_m) + r_c - delta``.
    """
    p = params
    if from_state is not None and to_state is not None:
        Am = 0.5 * (from_state.A + to_state.A)
        Km = 0.5 * (from_state.K + to_state.K)
        if Km <= 0.0:
            raise DomainError("midpoint capital must be positive")
    else:
        Am = solution.A_bar_phase
        Km = p.K_bar
    AFp = Am * p.epsilon * Km ** (p.epsilon - 1.0)
    alpha = p.delta - AFp
    beta = (AFp if maintext else 2.0 * AFp) + p.r_c - p.delta
    if alpha == 0.0:
        raise SingularityError("alpha")
    if beta == 0.0:
        raise SingularityError("beta")
    two_ab = 2.0 * alpha + beta
    if two_ab == 0.0:
        raise SingularityError("2*alpha + beta")
    lam_sq = p.lambda_sq
    K2e = p.K_bar ** (2.0 * p.epsilon)
    b_coef = 2.0 * (
        p.nu ** 2 + 2.0 * K2e / (lam_sq * alpha ** 2) + 3.0 * p.varpi ** 2 / (2.0 * two_ab * beta)
    )
    bb_aa = beta ** 2 - alpha ** 2
    if bb_aa == 0.0:
        raise SingularityError("beta^2 - alpha^2")
    Omega_sq = (p.varpi ** 2 / lam_sq) * (
        p.nu ** 2 + 2.0 * K2e / (lam_sq * alpha ** 2) + 3.0 * p.varpi ** 2 / (2.0 * bb_aa)
    )
    return GreenCoefficients(
        alpha=alpha,
        beta=beta,
        Omega_sq=Omega_sq,
        b_coef=b_coef,
        c_coef=2.0 / lam_sq,
        mass=solution.mass,
        A_bar=solution.A_bar_phase,
        C_bar=solution.C_bar_phase,
    )


def _reference_alpha_beta(solution: PhaseSolution, params: ModelParams):
    AFp = solution.A_bar_phase * params.epsilon * params.K_bar ** (params.epsilon - 1.0)
    return params.delta - AFp, 2.0 * AFp + params.r_c - params.delta


# ---------------------------------------------------------------------------
# covariance propagation
# ---------------------------------------------------------------------------


def _N_matrix(solution: PhaseSolution, params: ModelParams) -> np.ndarray:
    a0, b0 = _reference_alpha_beta(solution, params)
    Keps = params.K_bar ** params.epsilon
    return np.array(
        [
            [-2.0 * (a0 + b0), 0.0, 0.0],
            [-2.0, -2.0 * a0, 2.0 * Keps],
            [0.0, 0.0, 0.0],
        ]
    )


def _initial_J(solution: PhaseSolution, params: ModelParams, from_state: AgentState | None):
    if from_state is None:
        return np.zeros(3)
    return np.array(
        [from_state.C - solution.C_bar_phase, from_state.K - params.K_bar, from_state.A]
    )


def covariance_ode(
    solution: PhaseSolution,
    params: ModelParams,
    s: float,
    from_state: AgentState | None = None,
    n_steps: int | None = None,
) -> CovarianceState:
    """Integrate the covariance system with fixed-step RK4.

    ``dH/ds = 2 Omega_hat - N H - H N^T`` and ``dJ/ds = -N J / 2`` with
    ``Omega_hat = diag(varpi^2, nu^2, 1/lambda^2)``, ``H(0) = 0`` and
    ``J(0) = (C' - C_bar_phase, K' - K_bar, A')``.  The default step count
    is 1000 per unit of s.
    """
    if s < 0.0:
        raise DomainError(f"horizon s must be >= 0, got {s}")
    N = _N_matrix(solution, params)
    omega = np.diag([params.varpi ** 2, params.nu ** 2, 1.0 / params.lambda_sq])
    J0 = _initial_J(solution, params, from_state)
    if s == 0.0:
        return CovarianceState(H=np.zeros((3, 3)), J=J0, s=0.0)
    if n_steps is None:
        n_steps = max(1, math.ceil(1000.0 * s))
    h = s / n_steps

    def rhs(H, J):
        return 2.0 * omega - N @ H - H @ N.T, -0.5 * (N @ J)

    H = np.zeros((3, 3))
    J = J0.copy()
    for _ in range(n_steps):
        k1H, k1J = rhs(H, J)
        k2H, k2J = rhs(H + 0.5 * h * k1H, J + 0.5 * h * k1J)
        k3H, k3J = rhs(H + 0.5 * h * k2H, J + 0.5 * h * k2J)
        k4H, k4J = rhs(H + h * k3H, J + h * k3J)
        H = H + (h / 6.0) * (k1H + 2.0 * k2H + 2.0 * k3H + k4H)
        J = J + (h / 6.0) * (k1J + 2.0 * k2J + 2.0 * k3J + k4J)
    return CovarianceState(H=H, J=J, s=s)


def covariance_closed_form(
    solution: PhaseSolution,
    params: ModelParams,
    s: float,
    from_state: AgentState | None = None,
) -> CovarianceState:
    """Closed-form covariance entries (a, b, c, d, e, f) at horizon s.

    Integration constants are fixed by H(0) = 0.  Raises
    :class:`SingularityError` naming the offending factor when a
    denominator vanishes.  The J vector uses the exact exponential
    response (decaying capital mode).
    """
    if s < 0.0:
        raise DomainError(f"horizon s must be >= 0, got {s}")
    p = params
    a0, b0 = _reference_alpha_beta(solution, p)
    pp = a0 + b0          # r_c + A_bar eps K_bar^(eps-1)
    q = a0                # delta - A_bar eps K_bar^(eps-1)
    dpr = 2.0 * a0 + b0   # delta + r_c
    for name, val in (("r_c + AF'", pp), ("delta - AF'", q), ("beta0", b0), ("delta + r_c", dpr)):
        if val == 0.0:
            raise SingularityError(name)
    lam_sq = p.lambda_sq
    Keps = p.K_bar ** p.epsilon
    K2e = Keps * Keps
    w2 = p.varpi ** 2

    e4p = math.exp(4.0 * pp * s)
    e2q = math.exp(2.0 * q * s)
    e4q = math.exp(4.0 * q * s)
    edr = math.exp(2.0 * dpr * s)

    a = w2 * (e4p - 1.0) / (2.0 * pp)
    f = (2.0 / lam_sq) * s
    c = 0.0
    b = (
        -w2 * edr / (b0 * dpr)
        + w2 * e4p / (2.0 * pp * b0)
        + w2 / (2.0 * dpr * pp)
    )
    e = -Keps * (e2q - 1.0) / (lam_sq * q * q) + 2.0 * Keps * s / (lam_sq * q)

    dc_const = (
        -p.nu ** 2 / (2.0 * q)
        + 3.0 * K2e / (2.0 * lam_sq * q ** 3)
        - w2 / (2.0 * q * dpr * pp)
    )
    dc2 = -2.0 * K2e / (lam_sq * q ** 3)            # coefficient of e^{2 q s}
    dc3 = 2.0 * K2e / (lam_sq * q * q)              # coefficient of s
    dc6 = w2 / (2.0 * pp * b0 * b0)                 # coefficient of e^{4 p s}
    dc7 = -2.0 * w2 / (b0 * b0 * dpr)               # coefficient of e^{2(delta+r_c)s}
    a4 = -(dc_const + dc2 + dc6 + dc7)              # fixed by d(0) = 0
    d = dc_const + a4 * e4q + dc2 * e2q + dc3 * s + dc6 * e4p + dc7 * edr

    H = np.array([[a, b, c], [b, d, e], [c, e, f]])

    if from_state is None:
        J = np.zeros(3)
    else:
        dC = from_state.C - solution.C_bar_phase
        x1 = dC / b0
        x2 = Keps * from_state.A / q
        J = np.array(
            [
                dC * math.exp(pp * s),
                (from_state.K - p.K_bar - x1 - x2) * math.exp(q * s)
                + x1 * math.exp(pp * s)
                + x2,
                from_state.A,
            ]
        )
    return CovarianceState(H=H, J=J, s=s)


# ---------------------------------------------------------------------------
# transition density
# ---------------------------------------------------------------------------


def _gaussian_parts(from_state, to_state, t, solution, params, coeffs):
    p = params
    C_bar = coeffs.C_bar
    alpha, beta = coeffs.alpha, coeffs.beta
    Keps = p.K_bar ** p.epsilon
    off = (p.delta * p.K_bar + C_bar) / alpha
    X1 = (to_state.C - C_bar) - (from_state.C - C_bar) * (1.0 + (alpha + beta) * t)
    X2 = (to_state.K - p.K_bar + off) - (
        (from_state.K - p.K_bar + off) * (1.0 - alpha * t)
        - (from_state.C - C_bar) * t
        + from_state.A * Keps * t
    )
    X3 = to_state.A - from_state.A
    v1 = p.varpi ** 2 * t
    v2 = 0.5 * coeffs.b_coef * t
    v3 = 0.5 * coeffs.c_coef * t
    if v2 <= 0.0:
        raise SingularityError("capital variance rate b")
    return (X1, X2, X3), (v1, v2, v3)


def _check_small_time(t, coeffs, small_s_threshold):
    scale = t * max(abs(coeffs.alpha), abs(coeffs.beta))
    if scale > small_s_threshold:
        warnings.warn(
            f"t*max(|alpha|,|beta|)={scale:.3g} exceeds the small-time regime "
            f"threshold {small_s_threshold:.3g}",
            SmallTimeWarning,
            stacklevel=3,
        )


def transition_density(
    from_state: AgentState,
    to_state: AgentState,
    t: float,
    solution: PhaseSolution,
    params: ModelParams,
    maintext: bool = False,
    small_s_threshold: float = 0.05,
):
    """Small-time transition density between two states.

    Returns ``(density, log_density)``.  The Gaussian factor is a
    normalized probability density in the final state; the technology
    potential factor ``exp(-((A+A')/2 - A_bar)^2 t/2 - m t)`` multiplies
    it and is excluded from the normalization.  With ``maintext=True``
    the printed (unnormalized) prefactor and the main-text beta
    convention are used instead.
    """
    if t <= 0.0:
        raise DomainError(f"t must be > 0, got {t}")
    coeffs = coefficients(solution, params, from_state, to_state, maintext=maintext)
    _check_small_time(t, coeffs, small_s_threshold)
    (X1, X2, X3), (v1, v2, v3) = _gaussian_parts(from_state, to_state, t, solution, params, coeffs)
    quad = X1 * X1 / (2.0 * v1) + X2 * X2 / (2.0 * v2) + X3 * X3 / (2.0 * v3)
    if maintext:
        log_norm = -math.log(2.0) - 0.5 * math.log(
            _TWO_PI * (params.varpi ** 2 / params.lambda_sq) * (0.5 * coeffs.b_coef) * t
        )
    else:
        log_norm = -0.5 * math.log(_TWO_PI ** 3 * v1 * v2 * v3)
    a_mid = 0.5 * (from_state.A + to_state.A)
    potential = 0.5 * (a_mid - coeffs.A_bar) ** 2 * t + coeffs.mass * t
    log_density = -quad + log_norm - potential
    return math.exp(log_density) if log_density > -745.0 else 0.0, log_density


def gaussian_factor(
    from_state: AgentState,
    to_state: AgentState,
    t: float,
    solution: PhaseSolution,
    params: ModelParams,
):
    """The normalized Gaussian factor of the transition density alone."""
    if t <= 0.0:
        raise DomainError(f"t must be > 0, got {t}")
    coeffs = coefficients(solution, params, from_state, to_state)
    (X1, X2, X3), (v1, v2, v3) = _gaussian_parts(from_state, to_state, t, solution, params, coeffs)
    quad = X1 * X1 / (2.0 * v1) + X2 * X2 / (2.0 * v2) + X3 * X3 / (2.0 * v3)
    log_norm = -0.5 * math.log(_TWO_PI ** 3 * v1 * v2 * v3)
    val = log_norm - quad
    return math.exp(val) if val > -745.0 else 0.0


def dmcvr_residuals(from_state, to_state, t, solution, params):
    """Residuals of the three zero-exponent (most-likely-endpoint) relations.

    Coefficients are evaluated at the endpoint midpoints; the technology
    relation is the printed linear form
    ``lambda^2 (A - A') + ((A+A')/2 - A_bar) t/2``.
    """
    coeffs = coefficients(solution, params, from_state, to_state)
    (X1, X2, _), _ = _gaussian_parts(from_state, to_state, t, solution, params, coeffs)
    a_mid = 0.5 * (from_state.A + to_state.A)
    r3 = params.lambda_sq * (to_state.A - from_state.A) + 0.5 * (a_mid - coeffs.A_bar) * t
    return X1, X2, r3


def most_likely_endpoint(
    from_state: AgentState,
    t: float,
    solution: PhaseSolution,
    params: ModelParams,
    tol: float = 1e-13,
    max_iter: int = 200,
) -> AgentState:
    """Solve the zero-exponent relations for the most likely endpoint.

    The coefficients are held fixed during each solve and re-evaluated at
    the updated midpoint until self-consistency.
    """
    if t <= 0.0:
        raise DomainError(f"t must be > 0, got {t}")
    p = params
    Keps = p.K_bar ** p.epsilon
    to = from_state
    for _ in range(max_iter):
        coeffs = coefficients(solution, p, from_state, to)
        alpha, beta = coeffs.alpha, coeffs.beta
        C_bar, A_bar = coeffs.C_bar, coeffs.A_bar
        off = (p.delta * p.K_bar + C_bar) / alpha
        C = C_bar + (from_state.C - C_bar) * (1.0 + (alpha + beta) * t)
        K = (
            p.K_bar
            - off
            + (from_state.K - p.K_bar + off) * (1.0 - alpha * t)
            - (from_state.C - C_bar) * t
            + from_state.A * Keps * t
        )
        A = (from_state.A * (p.lambda_sq - 0.25 * t) + 0.5 * t * A_bar) / (
            p.lambda_sq + 0.25 * t
        )
        new = AgentState(C=C, K=K, A=A)
        delta = max(abs(new.C - to.C), abs(new.K - to.K), abs(new.A - to.A))
        to = new
        if delta < tol:
            return to
    raise ConvergenceError("most-likely endpoint iteration did not converge", delta, max_iter)


# ---------------------------------------------------------------------------
# equilibrium, average path, linearized dynamics
# ---------------------------------------------------------------------------


def equilibrium(solution: PhaseSolution, params: ModelParams) -> AgentState:
    """Fixed point of the average dynamics.

    ``K_e = ((1-eps) A_bar K_bar^eps - C_bar_phase) / |delta - K_bar^(eps-1) A_bar eps|``
    (magnitude denominator, so the capital equilibrium is a positive
    stock; see the phase-module sign note), ``C_e = C_bar_phase``,
    ``A_e = A_bar_phase``.
    """
    p = params
    A_bar = solution.A_bar_phase
    denom = abs(p.delta - p.K_bar ** (p.epsilon - 1.0) * A_bar * p.epsilon)
    if denom == 0.0:
        raise SingularityError("delta - K_bar^(eps-1) A_bar eps")
    num = (1.0 - p.epsilon) * A_bar * p.K_bar ** p.epsilon - solution.C_bar_phase
    K_e = num / denom
    if K_e <= 0.0:
        raise DomainError("equilibrium capital is nonpositive")
    return AgentState(C=solution.C_bar_phase, K=K_e, A=A_bar)


def average_path_rhs(state, solution: PhaseSolution, params: ModelParams, K_e: float):
    """Right-hand side of the average-path ODEs with exact F'."""
    C, K, A = state
    if K <= 0.0:
        raise DomainError("capital must stay positive along the average path")
    p = params
    AFp = A * p.epsilon * K ** (p.epsilon - 1.0)
    dC = (C - solution.C_bar_phase) * (AFp + p.r_c - p.delta)
    dK = (AFp - p.delta) * (K - K_e) - (C - solution.C_bar_phase)
    dA = -(A - solution.A_bar_phase) / (2.0 * p.lambda_sq)
    return np.array([dC, dK, dA])


def average_path(
    initial: AgentState,
    t: float,
    solution: PhaseSolution,
    params: ModelParams,
    n_steps: int | None = None,
) -> AgentPath:
    """Integrate the average-path ODEs with fixed-step RK4.

    Terminates with :class:`TrajectoryTerminated` (carrying the partial
    path) if capital leaves the positive domain.
    """
    if t <= 0.0:
        raise DomainError(f"t must be > 0, got {t}")
    if n_steps is None:
        n_steps = max(1, math.ceil(1000.0 * t))
    K_e = equilibrium(solution, params).K
    h = t / n_steps
    states = np.empty((n_steps + 1, 3))
    states[0] = [initial.C, initial.K, initial.A]
    y = states[0].copy()
    for i in range(n_steps):
        try:
            k1 = average_path_rhs(y, solution, params, K_e)
            k2 = average_path_rhs(y + 0.5 * h * k1, solution, params, K_e)
            k3 = average_path_rhs(y + 0.5 * h * k2, solution, params, K_e)
            k4 = average_path_rhs(y + h * k3, solution, params, K_e)
        except DomainError as exc:
            partial = AgentPath(
                states[: i + 1, 0], states[: i + 1, 1], states[: i + 1, 2], dt=h
            ) if i >= 1 else None
            raise TrajectoryTerminated(
                f"average path left the admissible region at step {i}: {exc}", partial
            ) from exc
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[i + 1] = y
    return AgentPath(states[:, 0], states[:, 1], states[:, 2], dt=h)


def linearized_eigenvalues(solution: PhaseSolution, params: ModelParams) -> dict:
    """Eigenvalues of the (C, K) block linearized at the equilibrium.

    Returns both the numeric Jacobian eigenvalues (authoritative) and the
    literal printed closed-form pair (kept for reference; it disagrees
    with the Jacobian in general).
    """
    p = params
    eq = equilibrium(solution, params)
    AFp_e = solution.A_bar_phase * p.epsilon * eq.K ** (p.epsilon - 1.0)
    jac = np.array([[AFp_e + p.r_c - p.delta, 0.0], [-1.0, AFp_e - p.delta]])
    eigs = np.linalg.eigvals(jac)
    eigs = np.sort_complex(eigs)
    root = complex(p.r_c ** 2 - 4.0 * solution.A_bar_phase) ** 0.5
    printed = (
        0.5 * p.r_c - p.delta - 0.5 * root + AFp_e,
        0.5 * p.r_c - p.delta + 0.5 * root + AFp_e,
    )
    return {"jacobian": jac, "jacobian_eigenvalues": eigs, "printed_eigenvalues": printed}


def mean_state(
    from_state: AgentState,
    t: float,
    solution: PhaseSolution,
    params: ModelParams,
    n_steps: int | None = None,
) -> np.ndarray:
    """Mean of the transition kernel via the linearized drift at K_bar.

    Integrates the affine mean system (reference coefficients) with RK4:
    the consumption mode grows at ``alpha+beta``, the capital mode decays
    at ``alpha`` with consumption/technology coupling, the technology
    mode relaxes at ``1/(2 lambda^2)``.
    """
    if t < 0.0:
        raise DomainError(f"t must be >= 0, got {t}")
    p = params
    a0, b0 = _reference_alpha_beta(solution, p)
    Keps = p.K_bar ** p.epsilon
    C_bar, A_bar = solution.C_bar_phase, solution.A_bar_phase
    G0 = A_bar * Keps - p.delta * p.K_bar - C_bar  # affine drift offset at the anchor

    def rhs(y):
        C, K, A = y
        dC = (a0 + b0) * (C - C_bar)
        dK = -a0 * (K - p.K_bar) + Keps * (A - A_bar) - (C - C_bar) + G0
        dA = -(A - A_bar) / (2.0 * p.lambda_sq)
        return np.array([dC, dK, dA])

    if n_steps is None:
        n_steps = max(1, math.ceil(1000.0 * t))
    y = from_state.as_array()
    if t == 0.0:
        return y
    h = t / n_steps
    for _ in range(n_steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


# ---------------------------------------------------------------------------
# Laplace-domain propagator
# ---------------------------------------------------------------------------


def laplace_propagator(
    from_state: AgentState,
    to_state: AgentState,
    solution: PhaseSolution,
    params: ModelParams,
    alpha_rate: float | None = None,
) -> float:
    """Propagator over an exponential lifespan with rate ``alpha_rate``.

    The small-time kernel is Gaussian in each coordinate with variance
    rate ``v_i`` and drift velocity ``Y_i``, damped at the constant rate
    ``m~ = m + ((A+A')/2 - A_bar)^2 / 2``; its Laplace transform over the
    horizon is exact:

    ``exp(CT - sqrt(2(m~+alpha) + P) sqrt(Q)) / (2 pi sqrt(v1 v2 v3 Q))``

    with ``P = sum Y_i^2/v_i``, ``Q = sum X_i^2/v_i``,
    ``CT = sum X_i Y_i/v_i`` and displacement ``X = to - from``.  The
    rate defaults to ``params.alpha_laplace``.  Coincident endpoints make
    the transform diverge (``Q = 0``) and raise :class:`DomainError`.
    """
    p = params
    if alpha_rate is None:
        alpha_rate = p.alpha_laplace
    coeffs = coefficients(solution, p, from_state, to_state)
    alpha, beta = coeffs.alpha, coeffs.beta
    Keps = p.K_bar ** p.epsilon
    v = (p.varpi ** 2, 0.5 * coeffs.b_coef, 0.5 * coeffs.c_coef)
    X = (
        to_state.C - from_state.C,
        to_state.K - from_state.K,
        to_state.A - from_state.A,
    )
    Y = (
        (alpha + beta) * (from_state.C - coeffs.C_bar),
        -(
            alpha * (from_state.K - p.K_bar)
            + p.delta * p.K_bar
            + from_state.C
            - from_state.A * Keps
        ),
        0.0,
    )
    P = sum(y * y / vi for y, vi in zip(Y, v))
    Q = sum(x * x / vi for x, vi in zip(X, v))
    CT = sum(x * y / vi for x, y, vi in zip(X, Y, v))
    if Q == 0.0:
        raise DomainError("Laplace propagator diverges at coincident endpoints")
    a_mid = 0.5 * (from_state.A + to_state.A)
    m_eff = coeffs.mass + 0.5 * (a_mid - coeffs.A_bar) ** 2
    rate = 2.0 * (m_eff + alpha_rate) + P
    if rate <= 0.0:
        raise DomainError("Laplace propagator decay rate must be positive")
    prefactor = _TWO_PI * math.sqrt(v[0] * v[1] * v[2] * Q)
    return math.exp(CT - math.sqrt(rate) * math.sqrt(Q)) / prefactor
