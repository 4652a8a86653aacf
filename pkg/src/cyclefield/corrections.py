"""First-order interaction corrections to the transition kernels.

Everything here is first order in the interaction strength ``gamma``.
The kernel coefficients ``alpha``, ``beta``, ``b``, ``c`` entering the
corrections are evaluated at zeroth order (phase reference values).

The closed-form deviation polynomials reproduce the compact published
display; the appendix-route matrix reconstruction differs from it on
three coefficients (its rescaling ``gamma -> gamma/(A_bar^2 K^eps)`` is
not applied uniformly in the compact display), so the term-by-term
cross-check is restricted to the coefficients both routes share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cyclefield.errors import DomainError
from cyclefield.green import GreenCoefficients, coefficients, transition_density
from cyclefield.params import ModelParams
from cyclefield.paths import AgentState
from cyclefield.phases import PhaseSolution


@dataclass(frozen=True)
class DeviationQuery:
    """Initial conditions for a path-deviation evaluation."""

    x0: AgentState          # initial state (C, K, A)
    v0: tuple               # initial velocities (dC, dK, dA)
    t: float                # horizon

    def __post_init__(self):
        if len(self.v0) != 3:
            raise DomainError(f"v0 must have three components, got {len(self.v0)}")
        for v in self.v0:
            if not math.isfinite(float(v)):
                raise DomainError(f"v0 components must be finite, got {self.v0!r}")
        if not (math.isfinite(self.t) and self.t >= 0.0):
            raise DomainError(f"t must be finite and >= 0, got {self.t!r}")
        object.__setattr__(self, "v0", tuple(float(v) for v in self.v0))
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class TwoAgentQuery:
    """Endpoint pairs for a two-agent interaction evaluation."""

    from1: AgentState  # agent 1 initial state
    to1: AgentState    # agent 1 final state
    from2: AgentState  # agent 2 initial state
    to2: AgentState    # agent 2 final state
    t: float           # shared horizon

    def __post_init__(self):
        if not (math.isfinite(self.t) and self.t >= 0.0):
            raise DomainError(f"t must be finite and >= 0, got {self.t!r}")
        object.__setattr__(self, "t", float(self.t))


# ---------------------------------------------------------------------------
# single-agent correction potential
# ---------------------------------------------------------------------------


def correction_potential(
    from_state: AgentState,
    to_state: AgentState,
    t: float,
    solution: PhaseSolution,
    params: ModelParams,
) -> float:
    """First-order correction potential V between two states.

    Unprimed variables are the final state, primed the initial one.  The
    corrected kernel is ``G * exp(-gamma V)``.
    """
    if t < 0.0:
        raise DomainError(f"t must be >= 0, got {t}")
    Keps = params.K_bar ** params.epsilon
    C, K, A = to_state.C, to_state.K, to_state.A
    dC = C - from_state.C
    dK = K - from_state.K
    dA = A - from_state.A
    t2, t3 = t * t, t ** 3
    V = (
        2.0 * t2 * A * K
        + (t3 / 12.0) * dA * dC
        + (t3 / 2.0) * dA * dK
        - (t3 / 12.0) * Keps * dA * dA
    )
    V += A * ((t3 / 3.0) * dC + t2 * dK - (t3 / 3.0) * Keps * dA)
    V += params.gamma * t2 * dA * K
    return V


def corrected_density(
    from_state: AgentState,
    to_state: AgentState,
    t: float,
    solution: PhaseSolution,
    params: ModelParams,
    maintext: bool = False,
):
    """Transition density with the first-order correction factor.

    Returns ``(density, log_density)`` for ``G * exp(-gamma V)``.
    """
    _, log_g = transition_density(from_state, to_state, t, solution, params, maintext=maintext)
    V = correction_potential(from_state, to_state, t, solution, params)
    log_density = log_g - params.gamma * V
    return math.exp(log_density) if log_density > -745.0 else 0.0, log_density


# ---------------------------------------------------------------------------
# average-path deviations
# ---------------------------------------------------------------------------


def path_deviation(
    query: DeviationQuery, solution: PhaseSolution, params: ModelParams
) -> tuple[float, float, float]:
    """Deviations (dC, dK, dA) from the average path due to self-interaction.

    Closed-form polynomials in the horizon, linear in the initial state
    and the initial velocities, and proportional to ``gamma``.
    """
    coeffs = coefficients(solution, params)
    b, c = coeffs.b_coef, coeffs.c_coef
    A2 = solution.A_bar_phase ** 2
    Keps = params.K_bar ** params.epsilon
    g = params.gamma
    t = query.t
    C0, K0, A0 = query.x0.C, query.x0.K, query.x0.A
    dC0, dK0, dA0 = query.v0
    t3, t4, t5, t6 = t ** 3, t ** 4, t ** 5, t ** 6

    dC = 0.0
    dK = g * (
        7.0 * c * t5 / (720.0 * A2) * C0
        + c * t4 / (48.0 * A2) * K0
        + (b * t3 / (6.0 * Keps * A2) + Keps * c * t5 / 90.0) * A0
    )
    dK += g * (
        -7.0 * c * t6 / (1440.0 * A2) * dC0
        + c * t5 / (60.0 * A2) * dK0
        + (b * t4 / (24.0 * Keps * A2) + 3.0 * Keps * c * t6 / (160.0 * A2)) * dA0
    )
    dA = g * (c * t3 / (6.0 * Keps * A2) * K0)
    dA += g * (c * t4 / 24.0 * dK0 + t * dA0)
    return dC, dK, dA


def elasticity_table(t: float, solution: PhaseSolution, params: ModelParams) -> dict:
    """All nonzero partials of the path deviations at horizon t.

    These are the exact derivatives of :func:`path_deviation` (each
    carries the overall ``gamma``); the signs encode the synergy and
    eviction effects.
    """
    coeffs = coefficients(solution, params)
    b, c = coeffs.b_coef, coeffs.c_coef
    A2 = solution.A_bar_phase ** 2
    Keps = params.K_bar ** params.epsilon
    g = params.gamma
    t3, t4, t5, t6 = t ** 3, t ** 4, t ** 5, t ** 6
    return {
        "dK_dC0": g * 7.0 * c * t5 / (720.0 * A2),
        "dK_dK0": g * c * t4 / (48.0 * A2),
        "dK_dA0": g * (b * t3 / (6.0 * Keps * A2) + Keps * c * t5 / 90.0),
        "dA_dK0": g * c * t3 / (6.0 * Keps * A2),
        "dK_dCdot0": -g * 7.0 * c * t6 / (1440.0 * A2),
        "dK_dKdot0": g * c * t5 / (60.0 * A2),
        "dK_dAdot0": g * (b * t4 / (24.0 * Keps * A2) + 3.0 * Keps * c * t6 / (160.0 * A2)),
        "dA_dKdot0": g * c * t4 / 24.0,
        "dA_dAdot0": g * t,
    }


# ---------------------------------------------------------------------------
# modified propagation matrices
# ---------------------------------------------------------------------------


def modified_matrices(s: float, solution: PhaseSolution, params: ModelParams) -> dict:
    """First-order modified drift and covariance matrices at horizon s.

    Builds the interaction moment matrices R1, R2, R3 and returns
    ``M_bar = (1 - gamma H R1)(M + gamma H R2)`` (with the unscaled
    H = diag(a, b, c), matching the compact display) and
    ``H_bar = H(s) - gamma H(s) R1 H(s)`` (with the horizon-scaled
    H(s) = diag(as, bs, cs)).  ``H_bar`` is returned as the symmetric
    algebraic product; the compact display zeroes its (3,1) entry while
    keeping (1,3), an asymmetry flagged here and not reproduced.  The
    quadratic source matrix ``gamma (R3 - M^T (2 R2 - R1))`` is included.
    """
    if s < 0.0:
        raise DomainError(f"s must be >= 0, got {s}")
    coeffs = coefficients(solution, params)
    alpha, beta = coeffs.alpha, coeffs.beta
    a = 2.0 * params.varpi ** 2
    b = coeffs.b_coef
    c = coeffs.c_coef
    Keps = params.K_bar ** params.epsilon
    g = params.gamma
    s2, s3 = s * s, s ** 3

    R1 = np.array(
        [
            [0.0, 0.0, s3 / 24.0],
            [0.0, 0.0, s2 / 4.0],
            [s3 / 24.0, s2 / 4.0, -Keps * s3 / 12.0],
        ]
    )
    R2 = np.array(
        [
            [0.0, 0.0, s3 / 6.0],
            [0.0, 0.0, s2 / 2.0],
            [0.0, s2 / 2.0, -Keps * s3 / 6.0],
        ]
    )
    R3 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, s2], [0.0, s2, 0.0]])
    M = np.array([[alpha + beta, 0.0, 0.0], [1.0, alpha, -Keps], [0.0, 0.0, 0.0]])
    H = np.diag([a, b, c])
    Hs = s * H

    M_bar = (np.eye(3) - g * H @ R1) @ (M + g * H @ R2)
    H_bar = Hs - g * Hs @ R1 @ Hs
    source = g * (R3 - M.T @ (2.0 * R2 - R1))
    return {"R1": R1, "R2": R2, "R3": R3, "M": M, "H": H, "M_bar": M_bar, "H_bar": H_bar, "source": source}


# ---------------------------------------------------------------------------
# two-agent corrections
# ---------------------------------------------------------------------------


def two_agent_correction(
    query: TwoAgentQuery, solution: PhaseSolution, params: ModelParams
) -> dict:
    """Two-agent interaction potential and mutual trajectory corrections.

    ``V_I`` multiplies the product kernel as ``exp(-V_I)``; the
    deviations ``d21`` (agent 2's path acting on agent 1) and ``d12``
    are linear in path means and variations, symmetric under the swap of
    agent labels.
    """
    coeffs = coefficients(solution, params)
    b, c = coeffs.b_coef, coeffs.c_coef
    Keps = params.K_bar ** params.epsilon
    g = params.gamma
    t = query.t
    t3 = t ** 3

    mean_A1 = 0.5 * (query.from1.A + query.to1.A)
    mean_K1 = 0.5 * (query.from1.K + query.to1.K)
    mean_A2 = 0.5 * (query.from2.A + query.to2.A)
    mean_K2 = 0.5 * (query.from2.K + query.to2.K)
    dC1 = query.to1.C - query.from1.C
    dC2 = query.to2.C - query.from2.C
    dA1 = query.to1.A - query.from1.A
    dA2 = query.to2.A - query.from2.A

    V_I = g * t * t * (mean_A1 * mean_K2 + mean_K1 * mean_A2)
    V_I += (g * t3 / 24.0) * (
        mean_A1 * dC2 + dC1 * mean_A2 - Keps * (mean_A1 * dA2 + dA1 * mean_A2)
    )

    dK21 = g * b * t * mean_A2
    dA21 = g * (c * dC2 / 12.0 - c * Keps * dA2 / 12.0) * t3 + g * c * t * mean_K2
    dK12 = g * b * t * mean_A1
    dA12 = g * (c * dC1 / 12.0 - c * Keps * dA1 / 12.0) * t3 + g * c * t * mean_K1
    return {"V_I": V_I, "d21": {"K": dK21, "A": dA21}, "d12": {"K": dK12, "A": dA12}}
