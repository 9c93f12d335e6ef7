"""Certification math: envelopes, restrictions, gains, small-gain bounds."""

import math

import numpy as np
import pytest

import tautuav as tu
from tautuav import analysis, control
from tautuav.analysis import SmallGainError, empirical_inner_peak_gain

from conftest import simulate_radial_batch


def tv_gamma_in(zeta: float, k_pt: float) -> float:
    """Independent closed form for the impulse-response L1 norm.

    The integrand is the derivative of g(t) = exp(-zeta*q*t)*sin(w*t)/w, so
    its L1 norm is the total variation of g: extrema at w*t = acos(zeta)+k*pi
    with |g| = exp(-zeta*q*t)/q there, summing to a geometric series.
    """
    q = math.sqrt(k_pt)
    e0 = math.exp(-zeta * math.acos(zeta) / math.sqrt(1.0 - zeta ** 2))
    rho = math.exp(-math.pi * zeta / math.sqrt(1.0 - zeta ** 2))
    return 2.0 * e0 / (q * (1.0 - rho))


class TestRadialEnvelope:
    def test_reference_experiment_branch(self, gains):
        env = tu.radial_envelope(1.0, 0.0, 0.5, gains)
        assert env.r_star == 1.0
        assert env.r_min == 0.5
        assert env.r_max == 1.0
        assert env.vel_bound == pytest.approx(
            max(gains.lambda1, gains.lambda2) / gains.k_dr)

    def test_degenerate_at_target(self, gains):
        env = tu.radial_envelope(0.8, 0.0, 0.8, gains)
        assert env.r_min == env.r_max == env.r_star == 0.8

    def test_rejects_excess_initial_speed(self, gains):
        with pytest.raises(ValueError, match="lambda1/k_dr"):
            tu.radial_envelope(1.0, 2.0 * gains.lambda1 / gains.k_dr, 0.5, gains)

    def test_overshoot_branch_matches_simulation(self, gains):
        # inward speed with tiny offset: the critically damped solution overshoots
        r0, rdot0, r_bar = 0.801, -0.03, 0.8
        assert math.sqrt(gains.k_pr) * (r0 - r_bar) + rdot0 < 0.0
        env = tu.radial_envelope(r0, rdot0, r_bar, gains)
        assert env.tau_star > 0.0
        assert env.r_min == env.r_star < r_bar
        rs, _ = simulate_radial_batch([r0], [rdot0], [r_bar], gains, t_final=4.0)
        assert rs.min() == pytest.approx(env.r_star, abs=1e-6)
        assert rs.min() >= env.r_min - 1e-6

    def test_envelope_soundness_random(self, gains):
        rng = np.random.default_rng(12)
        n = 100
        r0 = rng.uniform(0.2, 2.0, n)
        r_bar = rng.uniform(0.2, 2.0, n)
        v_adm = gains.lambda1 / gains.k_dr
        rdot0 = rng.uniform(-v_adm, v_adm, n)
        envs = [tu.radial_envelope(float(r0[i]), float(rdot0[i]),
                                   float(r_bar[i]), gains) for i in range(n)]
        rs, vs = simulate_radial_batch(r0, rdot0, r_bar, gains,
                                       t_final=20.0 / math.sqrt(gains.k_pr))
        lo = np.array([e.r_min for e in envs])
        hi = np.array([e.r_max for e in envs])
        assert (rs >= lo - 1e-6).all()
        assert (rs <= hi + 1e-6).all()
        assert np.abs(vs).max() <= max(gains.lambda1, gains.lambda2) / gains.k_dr + 1e-9

    def test_mission_envelope_covers_references(self, gains):
        env = analysis.mission_radial_envelope(1.0, 0.0, [0.5, 0.75, 1.0], gains)
        assert env.r_min < 0.5
        assert env.r_max > 1.0


class TestRestrictionAndBudget:
    def test_restriction_value(self):
        g = tu.GainConfig.from_primary(k_da=9.859, theta_tilde_max=0.5, nu=0.5)
        assert tu.restriction_r(g) == pytest.approx(17.669227953310603, rel=1e-12)

    def test_restriction_linear_in_nu(self):
        g1 = tu.GainConfig.from_primary(nu=0.2, theta_tilde_max=0.7)
        g2 = tu.GainConfig.from_primary(nu=0.4, theta_tilde_max=0.7)
        assert tu.restriction_r(g2) == pytest.approx(2.0 * tu.restriction_r(g1),
                                                     rel=1e-12)

    def test_restriction_decreasing_in_budget(self):
        values = [tu.restriction_r(tu.GainConfig.from_primary(theta_tilde_max=t))
                  for t in (0.3, 0.6, 0.9, 1.2, 1.5)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_budget_bracket_signs(self):
        # at x=0 the cubic side vanishes and -b(1-x)^2 < 0; at x=1 it equals a > 0
        for zeta, nu in ((0.9, 0.5), (0.5, 0.2), (1.0, 0.0)):
            a = (1 - nu) ** 2 * zeta ** 2
            b = 0.25 * (1 + 2 * (1 - nu) ** 2 * zeta ** 2) ** 2
            assert a * 0.0 ** 3 - b * 1.0 ** 2 < 0.0
            assert a * 1.0 ** 3 - b * 0.0 ** 2 > 0.0

    def test_budget_boundary_example(self):
        root = tu.theta_budget(1.0, 0.0)
        assert 0.6 < root < 0.7
        assert root == pytest.approx(0.6503518160382802, abs=1e-8)

    def test_budget_root_flips_inequality(self):
        for zeta, nu in ((0.9, 0.5), (0.7, 0.3)):
            root = tu.theta_budget(zeta, nu)
            a = (1 - nu) ** 2 * zeta ** 2
            b = 0.25 * (1 + 2 * (1 - nu) ** 2 * zeta ** 2) ** 2
            f = lambda x: a * x ** 3 - b * (1 - x) ** 2
            assert f(root + 1e-6) > 0.0
            assert f(root - 1e-6) < 0.0

    def test_budget_monotone_in_ratio(self):
        """The root grows with b/a: a harder damping inequality needs more budget."""
        entries = []
        for nu in (0.0, 0.2, 0.4, 0.6, 0.8):
            zeta = 0.9
            a = (1 - nu) ** 2 * zeta ** 2
            b = 0.25 * (1 + 2 * a) ** 2
            entries.append((b / a, tu.theta_budget(zeta, nu)))
        entries.sort()
        roots = [r for _, r in entries]
        assert all(y > x for x, y in zip(roots, roots[1:]))

    def test_default_budget_clears_root(self, gains):
        assert gains.theta_tilde_max > tu.theta_budget(gains.zeta, gains.nu)


class TestInnerGain:
    def test_bound_reference_value(self):
        g = tu.GainConfig.from_primary(k_pt=200.0, zeta=0.9)
        assert tu.gamma_in_bound(g) == pytest.approx(0.07856742013183861, rel=1e-12)

    def test_bound_inverse_square_root(self):
        g1 = tu.GainConfig.from_primary(k_pt=100.0, zeta=0.8)
        g2 = tu.GainConfig.from_primary(k_pt=400.0, zeta=0.8)
        assert tu.gamma_in_bound(g2) == pytest.approx(tu.gamma_in_bound(g1) / 2.0,
                                                      rel=1e-12)

    def test_l1_matches_total_variation_oracle(self):
        for zeta in (0.3, 0.6, 0.9, 0.99):
            for k_pt in (10.0, 200.0, 900.0):
                g = tu.GainConfig.from_primary(k_pt=k_pt, zeta=zeta)
                quad = tu.gamma_in_l1(g)
                assert quad == pytest.approx(tv_gamma_in(zeta, k_pt),
                                             rel=1e-5, abs=1e-9)

    def test_l1_below_bound_small_grid(self):
        for zeta in (0.2, 0.5, 0.8, 0.99):
            for k_pt in (2.0, 50.0, 1000.0):
                g = tu.GainConfig.from_primary(k_pt=k_pt, zeta=zeta)
                assert tu.gamma_in_bound(g) - tu.gamma_in_l1(g) >= 0.0

    def test_l1_near_critical_damping_stays_bounded(self):
        g = tu.GainConfig.from_primary(k_pt=200.0, zeta=0.99)
        q = math.sqrt(200.0)
        assert tu.gamma_in_l1(g) <= 1.0 / (0.99 * q) + 1e-6

    def test_l1_time_scaling(self):
        # quadrupling the stiffness halves the time scale and the norm
        g1 = tu.GainConfig.from_primary(k_pt=100.0, zeta=0.6)
        g2 = tu.GainConfig.from_primary(k_pt=400.0, zeta=0.6)
        assert tu.gamma_in_l1(g2) == pytest.approx(tu.gamma_in_l1(g1) / 2.0,
                                                   rel=1e-6)

    def test_l1_rejects_bad_quadrature_args(self, gains):
        with pytest.raises(ValueError):
            tu.gamma_in_l1(gains, t_horizon=-1.0)
        with pytest.raises(ValueError):
            tu.gamma_in_l1(gains, dt=0.0)

    def test_empirical_peak_below_l1(self, gains):
        q = math.sqrt(gains.k_pt)
        freqs = q * np.logspace(-1.0, 0.7, 12)
        peak = empirical_inner_peak_gain(gains, freqs=freqs)
        assert peak <= tu.gamma_in_l1(gains) + 1e-3
        # the peak is near the resonant value 1/(2*zeta*q)
        assert peak == pytest.approx(1.0 / (2.0 * gains.zeta * q), rel=0.05)


class TestLambda1Bound:
    def test_identity_with_restriction(self, gains):
        for r_min in (0.2, 0.5, 1.0):
            assert tu.lambda1_bound(gains, r_min) == pytest.approx(
                tu.restriction_r(gains) * gains.k_dr * r_min, rel=1e-12)

    def test_reference_gains_pass(self, gains):
        bound = tu.lambda1_bound(gains, r_min=0.5)
        assert bound > 0.0
        assert gains.lambda1 < bound

    def test_proportional_to_radius(self, gains):
        assert tu.lambda1_bound(gains, 1e-9) < 1e-6


class TestSmallGain:
    def test_zero_initials(self, gains):
        cert = tu.small_gain_certificate(gains, gamma_out=2.0,
                                         x_alpha0=0.0, x_theta0=0.0, r_min=0.5)
        assert cert.bound_alpha == 0.0
        assert cert.bound_theta == 0.0
        assert cert.init_ok
        assert cert.small_gain_ok

    def test_worked_bound_matrix(self, gains):
        cert = tu.small_gain_certificate(gains, gamma_out=1.0, x_alpha0=0.1,
                                         x_theta0=0.05, r_min=0.5,
                                         gamma_in=0.5)
        assert cert.bound_alpha == pytest.approx(0.3, rel=1e-12)
        assert cert.bound_theta == pytest.approx(0.2, rel=1e-12)

    def test_gain_product_at_or_above_one_raises(self, gains):
        with pytest.raises(SmallGainError):
            tu.small_gain_certificate(gains, gamma_out=2.0, x_alpha0=0.0,
                                      x_theta0=0.0, r_min=0.5, gamma_in=0.5)

    def test_stiffness_condition_flag(self, gains):
        cert = tu.small_gain_certificate(gains, gamma_out=14.0, x_alpha0=0.0,
                                         x_theta0=0.0, r_min=0.5)
        # k_pt = 200 < (14/0.9)^2 = 242: inner loop not stiff enough
        assert not cert.small_gain_ok

    def test_init_ball_value(self, gains):
        cert = tu.small_gain_certificate(gains, gamma_out=2.0, x_alpha0=0.0,
                                         x_theta0=0.0, r_min=0.5)
        product = cert.gamma_in * 2.0
        assert cert.init_ball == pytest.approx(
            (1.0 - product) * gains.theta_tilde_max, rel=1e-12)


class TestErrorTerms:
    def test_zero_pitch_error(self, plant):
        state = tu.FullState(0.8, 0.1, 1.0, 0.5, 0.0, 0.0)
        t_bar = 3.0
        delta, gamma, t_pred = analysis.error_terms(state, t_bar, 0.0,
                                                    u_t=10.0, u_alpha=-4.0, p=plant)
        assert delta == 0.0
        assert gamma == 0.0
        assert t_pred == pytest.approx(
            t_bar + plant.m * state.r * state.alpha_dot ** 2, rel=1e-12)

    def test_small_error_linearization(self, plant):
        state = tu.FullState(0.8, 0.1, 1.0, 0.5, 0.0, 0.0)
        tt = 1e-5
        _, gamma, _ = analysis.error_terms(state, 3.0, tt, u_t=10.0,
                                           u_alpha=-4.0, p=plant)
        assert gamma == pytest.approx(-10.0 * tt / (plant.m * state.r), rel=1e-4)

    def test_prediction_matches_raw_tension_along_run(self, plant, gains,
                                                      no_rg_log, ref_setpoint):
        t_bar = tu.equilibrium_tension(ref_setpoint, plant)
        log = no_rg_log
        for i in range(0, len(log), 53):
            state = tu.FullState(log.r[i], log.r_dot[i], log.alpha[i],
                                 log.alpha_dot[i], log.theta[i], log.theta_dot[i])
            r_ddot = control.radial_acceleration(state.r, state.r_dot,
                                                 ref_setpoint.r_bar, gains)
            _, theta_c, diag = control.outer_loop(state, ref_setpoint, r_ddot,
                                                  gains, plant)
            theta_err = state.theta - theta_c
            _, _, t_pred = analysis.error_terms(state, t_bar, theta_err,
                                                diag.u_t, diag.u_alpha, plant)
            assert t_pred == pytest.approx(log.tension[i], abs=1e-8)


def test_estimate_gamma_out_sane(plant, gains, ref_setpoint):
    freqs = math.sqrt(gains.k_pa) * np.logspace(-0.7, 0.7, 8)
    value = analysis.estimate_gamma_out(ref_setpoint, gains, plant, freqs=freqs)
    assert 0.0 < value < 50.0
    assert math.isfinite(value)


def test_bound_matrix_is_not_transient_tight(plant, gains):
    """The linear bound matrix understates transient pitch-error peaks.

    The asymptotic-gain composition bounds steady behaviour, but an
    elevation-error transient drives the commanded pitch rate with an
    amplification well above the steady-state gain, so the literal
    initial-norm bound on the peak pitch error is exceeded in simulation.
    This pins why governed-mission safety is certified by the interior
    margins of the ball construction plus the end-to-end simulation suite,
    not by the bound matrix alone (see the project decision notes).
    """
    ref = tu.Setpoint(0.8, 2.2, -0.05)
    a_err0 = 0.05
    state = tu.FullState(ref.r_bar, 0.0, ref.alpha_bar + a_err0, 0.0, 0.0, 0.0)
    r_ddot = control.radial_acceleration(state.r, state.r_dot, ref.r_bar, gains)
    _, theta_c0, _ = control.outer_loop(state, ref, r_ddot, gains, plant)
    init = tu.FullState(ref.r_bar, 0.0, ref.alpha_bar + a_err0, 0.0,
                        theta_c0 + 0.01, 0.0)
    cfg = tu.SimConfig(mode=tu.ScenarioMode.INNER_NO_RG, t_final=4.0,
                       initial=init, reference=ref)
    log = tu.run_scenario(cfg, gains, plant)
    peak_theta = np.hypot(log.theta - log.theta_c, log.theta_dot).max()
    cert = tu.small_gain_certificate(gains, gains.gamma_out,
                                     x_alpha0=a_err0, x_theta0=0.01, r_min=0.5)
    assert peak_theta > cert.bound_theta
    # the run itself stays healthy: taut throughout and convergent
    assert log.tension.min() > 0.0
    assert log.events.convergence_time is not None
