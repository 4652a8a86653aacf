import math

import numpy as np
import pytest

from cyclefield import green, montecarlo as mc
from cyclefield.errors import DomainError, ParameterError
from cyclefield.params import ModelParams
from cyclefield.paths import AgentState
from cyclefield.phases import solve_phase


@pytest.fixture(scope="module")
def quiet_setup():
    """A trivial-phase setup without interactions, used throughout."""
    p = ModelParams().replace(A0=1.0, gamma=0.0)
    sol = solve_phase(p, 0)
    x0 = AgentState(C=sol.C_bar_phase, K=p.K_bar, A=sol.A_bar_phase)
    return p, sol, x0


class TestConfig:
    def test_validation(self):
        with pytest.raises(ParameterError):
            mc.MCConfig(n_paths=0)
        with pytest.raises(ParameterError):
            mc.MCConfig(dt=-0.1)
        with pytest.raises(ParameterError):
            mc.MCConfig(scheme="milstein")

    def test_horizon_must_align_with_step(self, quiet_setup):
        p, sol, x0 = quiet_setup
        with pytest.raises(ParameterError):
            mc.sample_paths(x0, 0.1234, sol, p, mc.MCConfig(n_paths=2, dt=1e-3))
        with pytest.raises(DomainError):
            mc.sample_paths(x0, 0.0, sol, p, mc.MCConfig(n_paths=2, dt=1e-3))


class TestDeterminism:
    def test_identical_seeds_identical_ensembles(self, quiet_setup):
        p, sol, x0 = quiet_setup
        cfg = mc.MCConfig(n_paths=200, dt=1e-2, seed=11)
        a = mc.sample_paths(x0, 0.1, sol, p, cfg)
        b = mc.sample_paths(x0, 0.1, sol, p, cfg)
        np.testing.assert_array_equal(a.C, b.C)
        np.testing.assert_array_equal(a.K, b.K)
        np.testing.assert_array_equal(a.A, b.A)

    def test_block_size_invariance(self, quiet_setup):
        # per-path counter streams: the scheduling block cannot matter
        p, sol, x0 = quiet_setup
        cfg = mc.MCConfig(n_paths=100, dt=1e-2, seed=5)
        a = mc.sample_paths(x0, 0.1, sol, p, cfg, block_size=7)
        b = mc.sample_paths(x0, 0.1, sol, p, cfg, block_size=4096)
        np.testing.assert_array_equal(a.C, b.C)
        np.testing.assert_array_equal(a.K, b.K)
        np.testing.assert_array_equal(a.A, b.A)

    def test_different_seeds_differ(self, quiet_setup):
        p, sol, x0 = quiet_setup
        a = mc.sample_paths(x0, 0.1, sol, p, mc.MCConfig(n_paths=50, dt=1e-2, seed=1))
        b = mc.sample_paths(x0, 0.1, sol, p, mc.MCConfig(n_paths=50, dt=1e-2, seed=2))
        assert not np.array_equal(a.C, b.C)

    def test_antithetic_pairs_share_streams(self, quiet_setup):
        p, sol, x0 = quiet_setup
        cfg = mc.MCConfig(n_paths=4, dt=1e-2, seed=9, antithetic=True)
        ens = mc.sample_paths(x0, 0.05, sol, p, cfg)
        plain = mc.sample_paths(
            x0, 0.05, sol, p, mc.MCConfig(n_paths=4, dt=1e-2, seed=9)
        )
        # even antithetic paths reproduce the plain paths of streams 0, 1
        assert ens.C[0] == plain.C[0]
        assert ens.C[2] == plain.C[1]
        assert ens.C[1] != plain.C[1]


class TestDynamics:
    def test_drift_equilibrium_is_fixed_point_without_noise(self):
        # noise amplitudes ~1e-12: the sampler must hold the drift root
        p = ModelParams().replace(
            A0=1.0, gamma=0.0, kappa=0.0, varpi=1e-12, nu=1e-12, lambda_sq=1e24
        )
        sol = solve_phase(p, 0)
        A_bar = sol.A_bar_phase

        def k_drift(k):
            return A_bar * k ** p.epsilon - sol.C_bar_phase - p.delta * k

        lo = (A_bar * p.epsilon / p.delta) ** (1.0 / (1.0 - p.epsilon))
        hi = 10.0 * lo
        from scipy.optimize import brentq

        K_eq = brentq(k_drift, lo, hi, xtol=1e-13)
        x0 = AgentState(C=sol.C_bar_phase, K=K_eq, A=A_bar)
        ens = mc.sample_paths(x0, 1.0, sol, p, mc.MCConfig(n_paths=3, dt=1e-2))
        np.testing.assert_allclose(ens.C, x0.C, atol=1e-9)
        np.testing.assert_allclose(ens.K, x0.K, atol=1e-9)
        np.testing.assert_allclose(ens.A, x0.A, atol=1e-9)

    def test_euler_weak_order_one(self):
        # deterministic limit: endpoint error vs a fine-step reference
        # shrinks with fitted order ~1 in dt
        p = ModelParams().replace(
            A0=1.0, gamma=0.0, kappa=0.0, varpi=1e-12, nu=1e-12, lambda_sq=1e24
        )
        sol = solve_phase(p, 0)
        x0 = AgentState(C=sol.C_bar_phase + 0.2, K=8.0, A=sol.A_bar_phase + 0.5)
        t = 0.8

        def endpoint(dt):
            ens = mc.sample_paths(x0, t, sol, p, mc.MCConfig(n_paths=1, dt=dt))
            return np.array([ens.C[0], ens.K[0], ens.A[0]])

        ref = endpoint(t / 3200)
        errs = [np.max(np.abs(endpoint(t / n) - ref)) for n in (10, 20, 40, 80)]
        order = np.polyfit(np.log([10, 20, 40, 80]), np.log(errs), 1)[0]
        assert -1.25 < order < -0.85

    def test_variance_convention(self, quiet_setup):
        # Var(C(t)) ~ varpi^2 t at small horizons: the density convention
        p, sol, x0 = quiet_setup
        t = 0.05
        ens = mc.sample_paths(x0, t, sol, p, mc.MCConfig(n_paths=20000, dt=1e-3, seed=2))
        var_C = np.var(ens.C, ddof=1)
        assert var_C == pytest.approx(p.varpi ** 2 * t, rel=0.05)
        var_A = np.var(ens.A, ddof=1)
        assert var_A == pytest.approx(t / p.lambda_sq, rel=0.05)

    def test_negative_capital_flagged_and_retained(self, quiet_setup):
        p, sol, _ = quiet_setup
        noisy = p.replace(nu=5.0)
        start = AgentState(C=sol.C_bar_phase, K=0.05, A=sol.A_bar_phase)
        ens = mc.sample_paths(start, 0.1, sol, noisy, mc.MCConfig(n_paths=500, dt=1e-2, seed=0))
        assert ens.n_negative_K > 0
        assert ens.n_paths == 500  # nothing killed
        assert np.all(np.isfinite(ens.K))

    def test_moments_recomputable(self, quiet_setup):
        p, sol, x0 = quiet_setup
        ens = mc.sample_paths(x0, 0.1, sol, p, mc.MCConfig(n_paths=100, dt=1e-2))
        m = ens.moments()
        assert m["mean"]["C"] == pytest.approx(float(np.mean(ens.C)), abs=1e-12)
        assert m["var"]["K"] == pytest.approx(float(np.var(ens.K, ddof=1)), abs=1e-12)


class TestCompareToGreen:
    def test_self_test_passes(self, quiet_setup):
        # an ensemble drawn from the analytic marginals must pass
        p, sol, x0 = quiet_setup
        t = 0.05
        mu = green.mean_state(x0, t, sol, p)
        H = green.covariance_ode(sol, p, t, from_state=x0).H
        sd = np.sqrt(0.5 * np.diag(H))
        rng = np.random.default_rng(0)
        n = 20000
        ens = mc.PathEnsemble(
            C=mu[0] + sd[0] * rng.standard_normal(n),
            K=mu[1] + sd[1] * rng.standard_normal(n),
            A=mu[2] + sd[2] * rng.standard_normal(n),
            t=t,
            dt=1e-3,
            seed=0,
        )
        report = mc.compare_to_green(ens, x0, sol, p)
        assert report["pass"]

    def test_biased_ensemble_fails(self, quiet_setup):
        p, sol, x0 = quiet_setup
        t = 0.05
        mu = green.mean_state(x0, t, sol, p)
        H = green.covariance_ode(sol, p, t, from_state=x0).H
        sd = np.sqrt(0.5 * np.diag(H))
        rng = np.random.default_rng(1)
        n = 20000
        shift = 10.0 * sd[0] / math.sqrt(n)
        ens = mc.PathEnsemble(
            C=mu[0] + shift + sd[0] * rng.standard_normal(n),
            K=mu[1] + sd[1] * rng.standard_normal(n),
            A=mu[2] + sd[2] * rng.standard_normal(n),
            t=t,
            dt=1e-3,
            seed=0,
        )
        report = mc.compare_to_green(ens, x0, sol, p)
        assert not report["pass"]
        assert abs(report["zscores"]["mean_C"]) > 4.0

    def test_langevin_ensemble_passes(self, quiet_setup):
        p, sol, x0 = quiet_setup
        ens = mc.sample_paths(x0, 0.1, sol, p, mc.MCConfig(n_paths=20000, dt=1e-3, seed=7))
        assert mc.compare_to_green(ens, x0, sol, p)["pass"]


class TestBudgetBrownian:
    def test_increment_variance_and_whiteness(self):
        report = mc.budget_brownian_check(T=10000, seed=3, sigma_bar_sq=1.0, n_reps=10)
        assert report["variance"] == pytest.approx(2.0, rel=0.05)
        assert abs(report["autocorr_lag1"]) <= 0.02

    def test_exact_constraint_mode(self):
        report = mc.budget_brownian_check(T=10000, seed=4, sigma_bar_sq=0.0, n_reps=3)
        # float roundoff only; the sums involved are O(T^1.5)
        assert report["residual_max_abs"] <= 1e-6 * 10000

    def test_relaxed_residual_scales_with_slack(self):
        tight = mc.budget_brownian_check(T=2000, seed=5, sigma_bar_sq=1e-4, n_reps=20)
        loose = mc.budget_brownian_check(T=2000, seed=5, sigma_bar_sq=4.0, n_reps=20)
        assert tight["residual_max_abs"] < loose["residual_max_abs"]

    def test_short_series_rejected(self):
        with pytest.raises(ParameterError):
            mc.budget_brownian_check(T=1)


class TestAppendix5:
    def test_discounted_capital_term_negligible(self):
        p = ModelParams().replace(
            A0=1.0, gamma=0.0, kappa=0.0, r_c=0.0, varpi=0.05, nu=0.5
        )
        sol = solve_phase(p, 0)
        ratios = mc.appendix5_negligibility(
            p, sol, [0.0, 0.01, 0.05], T=40.0, dt=0.02, n_paths=100, seed=5
        )
        assert set(ratios) == {0.0, 0.01, 0.05}
        for r, ratio in ratios.items():
            assert ratio < 0.1, r

    def test_ratio_grows_with_discount_weighting(self):
        # larger r concentrates r_bar, but the integral shrinks; the
        # ratio stays finite and positive
        p = ModelParams().replace(
            A0=1.0, gamma=0.0, kappa=0.0, r_c=0.0, varpi=0.05, nu=0.5
        )
        sol = solve_phase(p, 0)
        ratios = mc.appendix5_negligibility(
            p, sol, [0.0, 0.05], T=20.0, dt=0.05, n_paths=50, seed=1
        )
        assert all(v > 0.0 for v in ratios.values())
