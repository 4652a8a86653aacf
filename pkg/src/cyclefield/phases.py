"""Saddle-point phase structure.

The collective background admits two phases: a trivial phase (zero
condensate, ``gamma_eta = 0``, zero mass) and a nontrivial phase with a
self-consistent condensate ``gamma_eta > 0``.  This module solves the
self-consistency system: the boundary shifts (C1, K1p, A1), the Gamma_3
fixed point, the compatibility quadratic fixing ``gamma_eta``, phase
averages, the mass gap, and the stability brackets.

Sign convention: ``Y = delta - Gamma_3 * eps * K_bar**(eps-1)`` is kept
signed everywhere it enters algebraically (it is negative in the regime of
interest); magnitudes ``|Y|`` appear exactly where the closed forms demand
them.  The signed capital average is recorded as-is, and its magnitude is
used wherever a positive capital scale is required (production average,
stability product, equilibrium quantities).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import erfc, erfcx

from cyclefield.errors import (
    ConvergenceError,
    DomainError,
    InfeasiblePhaseError,
    SingularityError,
)
from cyclefield.params import ModelParams

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class PhaseSolution:
    """Solved background for one phase."""

    phase: int            # 0 (trivial) or 1 (nontrivial)
    gamma_eta: float      # condensate strength gamma * eta
    Gamma1: float         # consumption background shift
    Gamma2: float         # capital background shift
    Gamma3: float         # technology background (fixed point)
    C1: float             # consumption boundary shift
    K1p: float            # capital boundary shift
    A1: float             # technology boundary shift
    A_bar_phase: float    # effective technology anchor of the phase
    C_bar_phase: float    # effective consumption anchor of the phase
    mass: float           # mass gap m of the phase (0 in the trivial phase)
    avg_A: float          # phase average of technology
    avg_C: float          # phase average of consumption
    avg_K: float          # phase average of capital (signed, see module note)
    avg_Y: float          # phase average of production
    feasible: bool        # existence conditions satisfied
    stable: bool          # stability brackets all positive
    Y_coef: float         # Y = delta - Gamma3 * eps * K_bar**(eps-1) (signed)


# ---------------------------------------------------------------------------
# boundary shifts
# ---------------------------------------------------------------------------


def _Y_of(params: ModelParams, gamma3: float) -> float:
    return params.delta - gamma3 * params.epsilon * params.K_bar ** (params.epsilon - 1.0)


def boundary_shifts(params: ModelParams, gamma3: float, paper_k1_approx: bool = False):
    """Boundary shifts (C1, K1p, A1) at technology background ``gamma3``.

    C1 is the truncated-Gaussian mean shift, evaluated stably through
    erfcx.  A1 underflows to zero whenever ``lam * gamma3**2`` is large.
    K1p defaults to the exact erf form (stable log-space evaluation); the
    surrogate fit is selected by ``paper_k1_approx``.
    """
    p = params
    # C1 = sqrt(2/pi) varpi exp(-Cbar^2/(2 varpi^2)) / (1 - erf(Cbar/(sqrt2 varpi)))
    xc = p.C_bar / (math.sqrt(2.0) * p.varpi)
    C1 = float(_SQRT_2_OVER_PI * p.varpi / erfcx(xc))

    # A1 = (2/sqrt(pi lam)) exp(-lam z^2/2) / (2 - erf(sqrt(lam) z / sqrt2))
    lam = p.lam
    z = gamma3
    expo = -0.5 * lam * z * z
    if expo < -745.0:  # exp underflow
        A1 = 0.0
    else:
        den = 2.0 - math.erf(math.sqrt(lam) * z / math.sqrt(2.0))
        A1 = 2.0 / math.sqrt(math.pi * lam) * math.exp(expo) / den

    Y = _Y_of(p, gamma3)
    if Y == 0.0:
        raise SingularityError("Y = delta - Gamma3 eps K_bar^(eps-1)")
    Yv = abs(Y)
    u = p.C_bar + _SQRT_2_OVER_PI * p.varpi - gamma3 * p.K_bar ** p.epsilon * (1.0 - p.epsilon)
    if paper_k1_approx:
        s2 = 2.0 * p.nu ** 2 * Yv
        expo = -u * u / s2
        num = 0.0 if expo < -745.0 else 2.0 * p.nu ** 2 * Yv * math.exp(expo)
        den = 2.0 - math.exp(-1.9 * (abs(u) / math.sqrt(s2)) ** 1.3)
        K1p = -num / den
    else:
        # exact: -sqrt(2/pi) sqrt|Y| nu exp(-u^2/(2|Y|nu^2)) / (erf(u/sqrt2) + 1)
        log_num = math.log(_SQRT_2_OVER_PI * math.sqrt(Yv) * p.nu) - u * u / (2.0 * Yv * p.nu ** 2)
        if u >= 0.0:
            log_den = math.log(erfc(-u / math.sqrt(2.0)))
        else:
            log_den = math.log(erfcx(-u / math.sqrt(2.0))) - u * u / 2.0
        expo = log_num - log_den
        K1p = 0.0 if expo < -745.0 else -math.exp(expo)
    return C1, K1p, A1


# ---------------------------------------------------------------------------
# Gamma_3 self-consistency
# ---------------------------------------------------------------------------


def _gamma3_rhs(params: ModelParams, g3: float, gamma_eta: float, paper_k1_approx: bool) -> float:
    p = params
    Y = _Y_of(p, g3)
    if Y == 0.0:
        raise SingularityError("Y = delta - Gamma3 eps K_bar^(eps-1)")
    C1, K1p, A1 = boundary_shifts(p, g3, paper_k1_approx=paper_k1_approx)
    AFp = g3 * p.epsilon * p.K_bar ** (p.epsilon - 1.0)
    ab = p.varpi ** 2 / (p.varsigma ** 2 * p.varpi ** 2 + (AFp + p.r_c) ** 2) + p.nu ** 2
    Keps1 = p.K_bar ** p.epsilon * (1.0 - p.epsilon)
    num = 2.0 * (
        2.0 * ((1.0 - p.kappa) * p.A0 + (2.0 - p.kappa) * p.kappa * g3 + A1) * Y * Y
        + ((p.C_bar + C1) - K1p) * gamma_eta * Y
    )
    den = 4.0 * Y * Y - ab * gamma_eta ** 2 * Y + 2.0 * gamma_eta * Keps1
    if den == 0.0:
        raise SingularityError("Gamma3 self-consistency denominator")
    return num / den


def gamma3_fixed_point(
    params: ModelParams,
    gamma_eta: float,
    tol: float = 1e-12,
    max_iter: int = 1000,
    damping: float = 0.5,
    paper_k1_approx: bool = False,
) -> float:
    """Solve the Gamma_3 self-consistency equation by damped iteration.

    Starts from ``A0 / (1 - kappa)`` and re-evaluates the boundary shifts
    on every sweep.  Raises :class:`ConvergenceError` (carrying the last
    residual) if the residual does not fall below ``tol``.
    """
    g = params.A_bar0
    residual = math.inf
    for it in range(1, max_iter + 1):
        rhs = _gamma3_rhs(params, g, gamma_eta, paper_k1_approx)
        residual = abs(rhs - g)
        if residual < tol:
            return (1.0 - damping) * g + damping * rhs
        g = (1.0 - damping) * g + damping * rhs
        if not math.isfinite(g):
            raise ConvergenceError("Gamma3 iteration diverged", residual, it)
    raise ConvergenceError("Gamma3 iteration did not converge", residual, max_iter)


def gamma3_first_order(params: ModelParams, gamma_eta: float, paper_k1_approx: bool = False) -> float:
    """First-order expansion of Gamma_3 in ``gamma_eta`` around A0/(1-kappa)."""
    p = params
    g0 = p.A_bar0
    Y0 = _Y_of(p, g0)
    C1, K1p, _ = boundary_shifts(p, g0, paper_k1_approx=paper_k1_approx)
    x = p.C_bar + C1 - K1p
    num = p.K_bar ** p.epsilon * p.A0 * (1.0 - p.epsilon) - x * Y0 * (1.0 - p.kappa)
    slope = -0.5 * num / (Y0 * Y0 * (1.0 - p.kappa) ** 3)
    return g0 + slope * gamma_eta


# ---------------------------------------------------------------------------
# compatibility condition -> gamma_eta
# ---------------------------------------------------------------------------


def c0_window(params: ModelParams) -> tuple[float, float]:
    """Admissible window (floor, floor + U) for the offset C0."""
    p = params
    floor = (
        p.alpha_laplace
        + math.sqrt(p.varsigma ** 2 * p.varpi ** 2 + p.r_c ** 2 * p.varpi ** 2)
        + 1.0 / p.lam
    )
    eps, Kb = p.epsilon, p.K_bar
    g0 = p.A_bar0
    Y0 = _Y_of(p, g0)
    t1 = (
        -(1.0 - p.kappa)
        * Kb
        * p.kappa
        * Y0
        * ((2.0 - p.kappa) * p.A0 + (3.0 - p.kappa) * p.kappa * p.delta / (eps * Kb ** (eps - 1.0)))
        / (eps * Kb ** eps)
    )
    S = (1.0 - p.kappa) * (p.A0 + p.kappa * p.delta * Kb ** (1.0 - eps) / eps) + (
        p.kappa * p.delta * Kb ** (1.0 - eps) / eps
    )
    t2 = (S * S - 2.0 * p.C_bar * S - p.C_bar ** 2) / ((1.0 - eps) * Kb ** eps)
    return floor, t1 + t2


def compatibility_root(params: ModelParams, paper_k1_approx: bool = False) -> dict:
    """Solve the compatibility quadratic for the condensate ``gamma_eta``.

    Returns a dict with ``gamma_eta``, the auxiliary root ``x``, the gate
    quantity ``D``, the C0 window, and the upper admissibility bound.
    Raises :class:`InfeasiblePhaseError` if the window, the ``D > 0``
    gate, or the ``gamma_eta`` bracket is violated.
    """
    p = params
    floor, U = c0_window(p)
    if U <= 0.0:
        raise InfeasiblePhaseError(f"C0 window has nonpositive width U={U:.6g}")
    if not (floor < p.C0 < floor + U):
        raise InfeasiblePhaseError(
            f"C0={p.C0:.6g} outside the admissible window ({floor:.6g}, {floor + U:.6g})"
        )
    g0 = p.A_bar0
    Y0 = _Y_of(p, g0)
    Keps1 = p.K_bar ** p.epsilon * (1.0 - p.epsilon)
    D = Keps1 * (
        p.alpha_laplace
        - p.C0
        + math.sqrt(p.varsigma ** 2 * p.varpi ** 2 + p.r_c ** 2)
        + 1.0 / p.lam
        + abs(Y0)
    )
    if D < 0.0:
        raise InfeasiblePhaseError(f"compatibility gate D={D:.6g} is negative")
    C1, K1p, _ = boundary_shifts(p, g0, paper_k1_approx=paper_k1_approx)
    Cq = p.C_bar + C1 - K1p  # redefined consumption anchor
    a2 = Cq * Cq + 2.0 * Cq * g0 - g0 * g0 - D
    b1 = 3.0 * Cq * Cq + 8.0 * Cq * g0 - 4.0 * g0 * g0 - 4.0 * D
    if a2 == 0.0:
        if b1 == 0.0:
            raise InfeasiblePhaseError("degenerate compatibility equation")
        x = 4.0 * D / b1
    else:
        disc = b1 * b1 + 16.0 * D * a2
        if disc < 0.0:
            raise InfeasiblePhaseError("compatibility quadratic has no real root")
        x = (-b1 - math.sqrt(disc)) / (2.0 * a2)
    gamma_eta = x * Y0 / Keps1
    bound = 8.0 * abs(Y0) * U / Keps1
    if gamma_eta < 0.0 or gamma_eta >= bound:
        raise InfeasiblePhaseError(
            f"gamma_eta={gamma_eta:.6g} outside the admissible bracket (0, {bound:.6g})"
        )
    return {
        "gamma_eta": gamma_eta,
        "x": x,
        "D": D,
        "window_floor": floor,
        "window_width": U,
        "gamma_eta_bound": bound,
    }


# ---------------------------------------------------------------------------
# existence report
# ---------------------------------------------------------------------------

LAMBDA_LARGE_THRESHOLD = 10.0


def phase_existence(params: ModelParams) -> dict:
    """Report the nontrivial-phase existence conditions.

    ``feasible`` conjoins the hard conditions; the stiffness-largeness
    check and the refined technology bound are reported as flags only.
    """
    p = params
    gamma_positive = p.gamma > 0.0
    a0_bound = (1.0 + math.sqrt(2.0)) * p.C_bar
    A0_large = p.A0 > a0_bound
    refined_bound = (
        a0_bound - (2.0 - p.kappa) * p.kappa * p.delta * p.K_bar ** (1.0 - p.epsilon) / p.epsilon
    ) / (1.0 - p.kappa)
    A0_large_refined = p.A0 > refined_bound
    lam_large = p.lam >= LAMBDA_LARGE_THRESHOLD
    spread = p.A0 * p.epsilon / ((1.0 - p.kappa) * p.K_bar ** (1.0 - p.epsilon)) - p.delta
    spread_ok = 0.0 < spread < 1.0
    try:
        floor, U = c0_window(p)
        window_ok = U > 0.0 and floor < p.C0 < floor + U
    except (DomainError, SingularityError):
        floor, U, window_ok = math.nan, math.nan, False
    feasible = gamma_positive and A0_large and spread_ok and window_ok
    return {
        "feasible": feasible,
        "gamma_positive": gamma_positive,
        "A0_large": A0_large,
        "A0_large_refined": A0_large_refined,
        "lambda_large": lam_large,
        "spread": spread,
        "spread_ok": spread_ok,
        "window_floor": floor,
        "window_width": U,
        "window_ok": window_ok,
    }


# ---------------------------------------------------------------------------
# averages, mass, stability
# ---------------------------------------------------------------------------


def _trivial_averages(params: ModelParams, K1p: float):
    """Trivial-phase averages and the signed capital base ratio."""
    p = params
    g0 = p.A_bar0
    Y0 = _Y_of(p, g0)
    avg_C = p.C_bar + _SQRT_2_OVER_PI * p.varpi
    x = avg_C - K1p
    Keps1 = p.K_bar ** p.epsilon * (1.0 - p.epsilon)
    avg_K = (g0 * Keps1 - x) / Y0
    base = abs(avg_K)  # magnitude is the capital scale (see module sign note)
    if base <= 0.0:
        raise DomainError("trivial-phase capital scale is nonpositive")
    avg_Y = g0 * base ** p.epsilon
    return g0, avg_C, avg_K, avg_Y, x, base


def production_average(params: ModelParams, phase: int, paper_k1_approx: bool = False) -> float:
    """Average production of a phase (upper bound in the nontrivial phase)."""
    sol = solve_phase(params, phase, paper_k1_approx=paper_k1_approx)
    return sol.avg_Y


def stability_check(
    params: ModelParams, gamma_eta: float, gamma3: float, avg_K: float, avg_A: float
) -> dict:
    """Evaluate the three stability brackets and the condensate product.

    The capital scale enters through its magnitude (see the module sign
    note).  Returns a dict with each bracket and the overall verdict.
    """
    p = params
    Y = _Y_of(p, gamma3)
    lam = p.lam
    Kmag = abs(avg_K) if avg_K != 0.0 else p.K_bar
    r_hat = p.epsilon * gamma3 * Kmag ** (p.epsilon - 1.0)
    s_ = math.sqrt(p.varsigma ** 2 * p.varpi ** 2 + (r_hat + p.r_c) ** 2)
    b1 = 2.0 * s_ - gamma_eta * p.varpi / math.sqrt(lam * s_)
    b2 = 2.0 * abs(Y) - gamma_eta * math.sqrt(abs(Y)) * p.nu / math.sqrt(lam)
    b3 = 1.0 / lam - gamma_eta * (
        math.sqrt(abs(Y)) * p.nu / (2.0 * math.sqrt(lam))
        + p.varpi / (2.0 * math.sqrt(lam * s_))
        + 2.0 * p.K_bar ** p.epsilon * (1.0 - p.epsilon) / (lam * abs(Y))
    )
    product = p.gamma * abs(avg_K) * avg_A
    stable = bool(b1 > 0.0 and b2 > 0.0 and b3 > 0.0 and product > 0.0)
    return {
        "stable": stable,
        "bracket_consumption": b1,
        "bracket_capital": b2,
        "bracket_technology": b3,
        "condensate_product": product,
    }


def solve_phase(params: ModelParams, phase: int, paper_k1_approx: bool = False) -> PhaseSolution:
    """Solve the full background for one phase.

    ``phase=0`` is the trivial phase (always exists; zero condensate and
    mass).  ``phase=1`` solves the compatibility condition for
    ``gamma_eta``, the Gamma_3 fixed point, the first-order shifts and
    averages, the mass gap, and the stability brackets.
    """
    p = params
    if phase == 0:
        g3 = gamma3_fixed_point(p, 0.0, paper_k1_approx=paper_k1_approx)
        C1, K1p, A1 = boundary_shifts(p, g3, paper_k1_approx=paper_k1_approx)
        g0, avg_C, avg_K, avg_Y, _, _ = _trivial_averages(p, K1p)
        return PhaseSolution(
            phase=0,
            gamma_eta=0.0,
            Gamma1=p.C_bar + C1,
            Gamma2=K1p,
            Gamma3=g3,
            C1=C1,
            K1p=K1p,
            A1=A1,
            A_bar_phase=g0,
            C_bar_phase=avg_C,
            mass=0.0,
            avg_A=g0,
            avg_C=avg_C,
            avg_K=avg_K,
            avg_Y=avg_Y,
            feasible=True,
            stable=True,
            Y_coef=_Y_of(p, g3),
        )
    if phase != 1:
        raise DomainError(f"phase must be 0 or 1, got {phase!r}")

    comp = compatibility_root(p, paper_k1_approx=paper_k1_approx)
    ge = comp["gamma_eta"]
    g3 = gamma3_fixed_point(p, ge, paper_k1_approx=paper_k1_approx)
    Y = _Y_of(p, g3)
    C1, K1p, A1 = boundary_shifts(p, g3, paper_k1_approx=paper_k1_approx)

    g0 = p.A_bar0
    Y0 = _Y_of(p, g0)
    C10, K1p0, _ = boundary_shifts(p, g0, paper_k1_approx=paper_k1_approx)
    eps, Kb = p.epsilon, p.K_bar
    Keps = Kb ** eps
    Keps1 = Keps * (1.0 - eps)

    AFp = g3 * eps * Kb ** (eps - 1.0)
    denomC = p.varsigma ** 2 * p.varpi ** 2 + (AFp + p.r_c) ** 2
    Gamma1 = p.C_bar + C1 - p.varpi ** 2 * g0 * ge / (2.0 * denomC * abs(Y))
    Gamma2 = K1p - (p.nu ** 2 * g0 * Y + Keps1 * (1.0 - Y) * K1p) * ge / (2.0 * Y * Y)

    # first-order averages, correction coefficients at zeroth order
    _, avg_C0, avg_K0, avg_Y0, x, base = _trivial_averages(p, K1p0)
    AFp0 = g0 * eps * Kb ** (eps - 1.0)
    denomC0 = p.varsigma ** 2 * p.varpi ** 2 + (AFp0 + p.r_c) ** 2
    slope_num = Keps * p.A0 * (1.0 - eps) - x * Y0 * (1.0 - p.kappa)
    avg_A = g0 - 0.5 * slope_num / (Y0 * Y0 * (1.0 - p.kappa) ** 3) * ge
    avg_C = avg_C0 - p.varpi ** 2 * g0 * ge / (2.0 * denomC0 * abs(Y0))
    t1 = (
        -0.5
        * Keps
        * slope_num
        * (eps * x - Kb * p.delta * (1.0 - eps))
        / (Y0 ** 4 * Kb * (1.0 - p.kappa) ** 3)
        * ge
    )
    t2 = -Keps1 * (1.0 - Y0) * K1p0 * ge / (2.0 * Y0 ** 3)
    t3 = -p.nu ** 2 * g0 * ge / (2.0 * Y0 * Y0)
    t4 = -p.varpi ** 2 * g0 * ge / (2.0 * denomC0 * Y0 * Y0)
    avg_K = avg_K0 + t1 + t2 + t3 + t4
    r_bar = eps * Keps * p.A0 / (1.0 - p.kappa)
    coef = (
        slope_num
        / (2.0 * Y0 * Y0 * (1.0 - p.kappa) ** 3)
        * (1.0 - eps * (1.0 + p.delta / r_bar))
    )
    avg_Y = avg_Y0 - coef * base ** eps * ge

    # mass gap
    A_bar1 = p.A0 + p.kappa * g3
    mix = (1.0 - p.kappa) * A_bar1 + p.kappa * g3
    mass = (
        A_bar1 ** 2
        - mix ** 2
        + (mix ** 2 - 2.0 * p.C_bar * ((1.0 - p.kappa) * A_bar1 + p.kappa * A_bar1) - Gamma1 ** 2)
        / ((1.0 - eps) * Keps)
    )

    existence = phase_existence(p)
    stab = stability_check(p, ge, g3, avg_K, avg_A)
    return PhaseSolution(
        phase=1,
        gamma_eta=ge,
        Gamma1=Gamma1,
        Gamma2=Gamma2,
        Gamma3=g3,
        C1=C1,
        K1p=K1p,
        A1=A1,
        A_bar_phase=A_bar1,
        C_bar_phase=Gamma1,
        mass=mass,
        avg_A=avg_A,
        avg_C=avg_C,
        avg_K=avg_K,
        avg_Y=avg_Y,
        feasible=existence["feasible"],
        stable=stab["stable"],
        Y_coef=Y,
    )
