import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from cyclefield import green
from cyclefield.errors import DomainError, SingularityError, TrajectoryTerminated
from cyclefield.params import ModelParams
from cyclefield.paths import AgentState
from cyclefield.phases import solve_phase


def anchor_state(solution, params):
    return AgentState(C=solution.C_bar_phase, K=params.K_bar, A=solution.A_bar_phase)


class TestCoefficients:
    def test_reference_vs_midpoint(self, trivial, params):
        ref = green.coefficients(trivial, params)
        mid = green.coefficients(
            trivial, params, anchor_state(trivial, params), anchor_state(trivial, params)
        )
        assert ref.alpha == pytest.approx(mid.alpha)
        assert ref.beta == pytest.approx(mid.beta)

    def test_maintext_beta_differs_by_marginal_product(self, trivial, params):
        appendix = green.coefficients(trivial, params)
        maintext = green.coefficients(trivial, params, maintext=True)
        AFp = trivial.A_bar_phase * params.epsilon * params.K_bar ** (params.epsilon - 1.0)
        assert appendix.beta - maintext.beta == pytest.approx(AFp)
        assert appendix.alpha == maintext.alpha

    def test_mass_carried_from_phase(self, trivial, nontrivial, params):
        assert green.coefficients(trivial, params).mass == 0.0
        assert green.coefficients(nontrivial, params).mass == nontrivial.mass


class TestCovariance:
    @pytest.mark.parametrize("phase", [0, 1])
    def test_ode_matches_closed_form(self, params, phase):
        sol = solve_phase(params, phase)
        for s in (0.05, 0.2, 0.5):
            ode = green.covariance_ode(sol, params, s)
            cf = green.covariance_closed_form(sol, params, s)
            scale = np.max(np.abs(cf.H))
            assert np.max(np.abs(ode.H - cf.H)) / scale < 1e-9

    def test_response_vector_matches(self, trivial, params):
        x = AgentState(C=1.3, K=11.5, A=9.0)
        ode = green.covariance_ode(trivial, params, 0.4, from_state=x)
        cf = green.covariance_closed_form(trivial, params, 0.4, from_state=x)
        np.testing.assert_allclose(ode.J, cf.J, rtol=1e-9, atol=1e-12)

    def test_small_horizon_limit(self, trivial, params):
        s = 1e-5
        H = green.covariance_ode(trivial, params, s, n_steps=10).H
        expected = 2.0 * s * np.diag(
            [params.varpi ** 2, params.nu ** 2, 1.0 / params.lambda_sq]
        )
        np.testing.assert_allclose(H, expected, rtol=1e-2, atol=1e-11)

    @given(st.floats(0.01, 1.0))
    def test_accumulator_symmetric_with_positive_diagonal(self, s):
        params = ModelParams()
        sol = solve_phase(params, 0)
        H = green.covariance_closed_form(sol, params, s).H
        np.testing.assert_allclose(H, H.T, rtol=0, atol=0)
        assert np.all(np.diag(H) > 0.0)

    def test_zero_horizon(self, trivial, params):
        state = green.covariance_ode(trivial, params, 0.0)
        assert np.all(state.H == 0.0)
        cf = green.covariance_closed_form(trivial, params, 0.0)
        np.testing.assert_allclose(cf.H, 0.0, atol=1e-12)


class TestTransitionDensity:
    def test_density_is_exp_of_log(self, trivial, params):
        x = anchor_state(trivial, params)
        y = AgentState(C=x.C + 0.01, K=x.K + 0.05, A=x.A)
        d, ld = green.transition_density(x, y, 0.01, trivial, params)
        assert d == pytest.approx(math.exp(ld))

    def test_mass_damps_nontrivial_phase(self, trivial, nontrivial, params):
        # with endpoints at each phase's own most likely point, the
        # density ratio reduces to the mass damping exp(-m1 t)
        t = 0.01
        x0 = anchor_state(trivial, params)
        x1 = anchor_state(nontrivial, params)
        y0 = green.most_likely_endpoint(x0, t, trivial, params)
        y1 = green.most_likely_endpoint(x1, t, nontrivial, params)
        _, ld0 = green.transition_density(x0, y0, t, trivial, params)
        _, ld1 = green.transition_density(x1, y1, t, nontrivial, params)
        assert ld1 < ld0
        assert ld0 - ld1 == pytest.approx(nontrivial.mass * t, rel=0.05)

    def test_small_time_warning(self, trivial, params):
        x = anchor_state(trivial, params)
        with pytest.warns(green.SmallTimeWarning):
            green.transition_density(x, x, 1.0, trivial, params)

    def test_zero_horizon_rejected(self, trivial, params):
        x = anchor_state(trivial, params)
        with pytest.raises(DomainError):
            green.transition_density(x, x, 0.0, trivial, params)

    def test_gaussian_factor_peaks_at_most_likely_endpoint(self, trivial, params):
        x = anchor_state(trivial, params)
        t = 0.01
        peak = green.most_likely_endpoint(x, t, trivial, params)
        f_peak = green.gaussian_factor(x, peak, t, trivial, params)
        rng = np.random.default_rng(0)
        for _ in range(20):
            off = rng.normal(scale=[0.01, 0.02, 0.01])
            other = AgentState(C=peak.C + off[0], K=peak.K + off[1], A=peak.A + off[2])
            assert green.gaussian_factor(x, other, t, trivial, params) <= f_peak * (1 + 1e-9)


class TestMostLikelyEndpoint:
    def test_zero_exponent_relations(self, trivial, params):
        x = AgentState(C=1.2, K=10.5, A=9.8)
        t = 0.02
        to = green.most_likely_endpoint(x, t, trivial, params)
        r1, r2, r3 = green.dmcvr_residuals(x, to, t, trivial, params)
        assert abs(r1) < 1e-10
        assert abs(r2) < 1e-10
        assert abs(r3) < 1e-10

    def test_anchor_is_almost_fixed(self, trivial, params):
        x = anchor_state(trivial, params)
        to = green.most_likely_endpoint(x, 0.01, trivial, params)
        assert to.C == pytest.approx(x.C, abs=1e-12)
        assert to.A == pytest.approx(x.A, abs=1e-12)


class TestEquilibrium:
    def test_average_path_rhs_vanishes(self, trivial, params):
        eq = green.equilibrium(trivial, params)
        rhs = green.average_path_rhs(eq.as_array(), trivial, params, eq.K)
        np.testing.assert_allclose(rhs, 0.0, atol=1e-12)

    def test_positive_capital_required(self, params):
        # a consumption anchor above sustainable production empties the stock
        p = params.replace(A0=0.1, C_bar=5.0, kappa=0.0)
        sol = solve_phase(p, 0)
        with pytest.raises(DomainError):
            green.equilibrium(sol, p)

    def test_jacobian_eigenvalue_signs_at_balanced_rates(self):
        p = ModelParams().replace(A0=0.6, kappa=0.0, C_bar=0.5, varpi=0.05, r_c=0.05)
        sol = solve_phase(p, 0)
        report = green.linearized_eigenvalues(sol, p)
        eigs = np.sort(np.real(report["jacobian_eigenvalues"]))
        assert eigs[0] < 0.0 < eigs[1]


class TestAveragePath:
    def test_stays_at_equilibrium(self, trivial, params):
        eq = green.equilibrium(trivial, params)
        path = green.average_path(eq, 0.5, trivial, params, n_steps=100)
        np.testing.assert_allclose(path.C, eq.C, rtol=1e-12)
        np.testing.assert_allclose(path.K, eq.K, rtol=1e-12)
        np.testing.assert_allclose(path.A, eq.A, rtol=1e-12)

    def test_capital_crash_terminates_with_partial(self, trivial, params):
        start = AgentState(C=10.0, K=2.0, A=trivial.A_bar_phase)
        with pytest.raises(TrajectoryTerminated) as err:
            green.average_path(start, 5.0, trivial, params, n_steps=500)
        assert err.value.partial_path is not None
        assert len(err.value.partial_path) >= 2


class TestMeanState:
    def test_zero_horizon_identity(self, trivial, params):
        x = AgentState(C=1.4, K=9.0, A=10.5)
        np.testing.assert_array_equal(green.mean_state(x, 0.0, trivial, params), x.as_array())

    def test_anchor_drift(self, trivial, params):
        # at the anchor only the affine capital offset acts
        x = anchor_state(trivial, params)
        t = 1e-3
        mu = green.mean_state(x, t, trivial, params)
        Keps = params.K_bar ** params.epsilon
        G0 = trivial.A_bar_phase * Keps - params.delta * params.K_bar - trivial.C_bar_phase
        assert mu[0] == pytest.approx(x.C, abs=1e-12)
        assert mu[2] == pytest.approx(x.A, abs=1e-12)
        assert (mu[1] - x.K) / t == pytest.approx(G0, rel=1e-3)


class TestLaplacePropagator:
    def test_matches_quadrature_in_t(self, trivial, params):
        x = AgentState(C=1.1, K=10.2, A=10.0)
        y = AgentState(C=1.15, K=10.4, A=10.05)
        value = green.laplace_propagator(x, y, trivial, params, alpha_rate=0.2)

        def integrand(t):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", green.SmallTimeWarning)
                d, _ = green.transition_density(x, y, t, trivial, params)
            return d * math.exp(-0.2 * t)

        # the integrand is sharply peaked near its saddle; steer the
        # quadrature through it
        numeric = quad(
            integrand, 0.0, 5.0, limit=800, points=[0.005, 0.02, 0.05, 0.2, 1.0]
        )[0]
        numeric += quad(integrand, 5.0, 80.0, limit=200)[0]
        assert value == pytest.approx(numeric, rel=2e-2)

    def test_coincident_endpoints_diverge(self, trivial, params):
        x = AgentState(C=1.1, K=10.2, A=10.0)
        with pytest.raises(DomainError):
            green.laplace_propagator(x, x, trivial, params)

    def test_default_rate_comes_from_params(self, trivial, params):
        x = AgentState(C=1.1, K=10.2, A=10.0)
        y = AgentState(C=1.15, K=10.4, A=10.05)
        explicit = green.laplace_propagator(x, y, trivial, params, alpha_rate=params.alpha_laplace)
        assert green.laplace_propagator(x, y, trivial, params) == explicit
