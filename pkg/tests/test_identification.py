import math

import numpy as np
import pytest

from pcapctl.identification import (
    FitError,
    StaticRun,
    fit_actuator,
    fit_static,
    fit_tau,
    pearson,
    r_squared,
)
from pcapctl.model import (
    PRESETS,
    delinearize_progress,
    linearize_pcap,
    static_progress,
    step_dynamics,
)
from pcapctl.trace import TraceRecord

GROS = PRESETS["gros"]


def brute_force_least_squares(samples):
    """Independent closed-form OLS oracle (mean-centered formulas)."""
    x = [s[0] for s in samples]
    y = [s[1] for s in samples]
    mx = sum(x) / len(x)
    my = sum(y) / len(y)
    sxx = sum((xi - mx) ** 2 for xi in x)
    sxy = sum((xi - mx) * (yi - my) for xi, yi in zip(x, y))
    a = sxy / sxx
    return a, my - a * mx


def synth_runs(model, pcaps, noise_sd=0.0, rng=None):
    runs = []
    for p in pcaps:
        prog = static_progress(model, p)
        if noise_sd:
            prog += rng.normal(0, noise_sd)
        time = 1000.0 / prog
        power = model.a * p + model.b
        runs.append(StaticRun(pcap=p, mean_power=power, mean_progress=prog,
                              execution_time=time, energy=power * time))
    return runs


class TestFitActuator:
    def test_exact_line_recovered(self):
        samples = [(p, 0.83 * p + 7.07) for p in (40, 60, 80, 100, 120)]
        a, b = fit_actuator(samples)
        assert a == pytest.approx(0.83, abs=1e-12)
        assert b == pytest.approx(7.07, abs=1e-10)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            samples = [(float(p), 0.9 * p + 3 + float(rng.normal(0, 0.5)))
                       for p in rng.uniform(40, 120, size=8)]
            got = fit_actuator(samples)
            want = brute_force_least_squares(samples)
            assert got == pytest.approx(want, rel=1e-9)

    def test_symmetric_noise_slope_within_bounds(self):
        rng = np.random.default_rng(3)
        slopes = []
        for _ in range(50):
            samples = [(p, 0.83 * p + 7.07 + float(rng.uniform(-0.5, 0.5)))
                       for p in (40, 60, 80, 100, 120)]
            slopes.append(fit_actuator(samples)[0])
        assert abs(np.mean(slopes) - 0.83) < 0.02

    def test_degenerate_input_rejected(self):
        with pytest.raises(FitError):
            fit_actuator([(80, 70), (80, 71), (80, 72)])
        with pytest.raises(FitError):
            fit_actuator([(80, 70)])


class TestFitStatic:
    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_noise_free_recovery(self, name):
        model = PRESETS[name]
        runs = synth_runs(model, (40, 60, 80, 100, 120))
        report = fit_static(runs, (model.a, model.b))
        assert report.model.alpha == pytest.approx(model.alpha, rel=1e-4)
        assert report.model.beta == pytest.approx(model.beta, rel=1e-4)
        assert report.model.k_l == pytest.approx(model.k_l, rel=1e-4)
        assert report.r_squared == pytest.approx(1.0, abs=1e-9)

    def test_noisy_fit_keeps_high_r_squared(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            runs = synth_runs(GROS, (40, 50, 60, 70, 80, 90, 100, 110, 120),
                              noise_sd=0.5, rng=rng)
            report = fit_static(runs, (GROS.a, GROS.b))
            assert report.r_squared >= 0.95

    def test_grid_search_oracle_agrees_on_basin(self):
        # brute-force grid over (alpha, beta) with closed-form gain must
        # not find a better optimum than the fit
        rng = np.random.default_rng(5)
        runs = synth_runs(GROS, (40, 60, 80, 100, 120), noise_sd=0.5, rng=rng)
        report = fit_static(runs, (GROS.a, GROS.b))
        power = np.array([GROS.a * r.pcap + GROS.b for r in runs])
        y = np.array([r.mean_progress for r in runs])

        def ss(alpha, beta):
            g = 1 - np.exp(-alpha * (power - beta))
            k = float(g @ y) / float(g @ g)
            return float(np.sum((y - k * g) ** 2))

        fit_ss = ss(report.model.alpha, report.model.beta)
        best_grid = min(ss(a, b)
                        for a in np.linspace(0.01, 0.2, 60)
                        for b in np.linspace(5, 39, 60))
        assert fit_ss <= best_grid + 1e-9

    def test_linear_plant_fits_with_shifted_beta(self):
        # non-saturating data: the fit succeeds and R^2 tells the story
        runs = []
        for p in (40, 60, 80, 100, 120):
            prog = 0.2 * p
            runs.append(StaticRun(pcap=p, mean_power=p, mean_progress=prog,
                                  execution_time=1000 / prog, energy=1000.0))
        report = fit_static(runs, (1.0, 0.0))
        assert report.r_squared > 0.99  # exponential approximates a line well here

    def test_preconditions(self):
        runs = synth_runs(GROS, (40, 60, 80))
        with pytest.raises(FitError):
            fit_static(runs, (GROS.a, GROS.b))
        with pytest.raises(FitError):
            fit_static(
                [StaticRun(pcap=40, mean_power=40, mean_progress=10,
                           execution_time=1, energy=1)] * 5,
                (GROS.a, GROS.b),
            )

    def test_determinism(self):
        rng = np.random.default_rng(2)
        runs = synth_runs(GROS, (40, 60, 80, 100, 120), noise_sd=0.5, rng=rng)
        r1 = fit_static(runs, (GROS.a, GROS.b))
        r2 = fit_static(runs, (GROS.a, GROS.b))
        assert r1 == r2


class TestFitTau:
    def synth_step_trace(self, tau, dt=0.1):
        model = GROS
        trace = []
        u = linearize_pcap(model, 60.0)
        state = model.k_l * u
        t = 0.0
        from dataclasses import replace
        m = replace(model, tau=tau) if tau != model.tau else model
        for i in range(120):
            pcap = 60.0 if t < 4.0 else 100.0
            u = linearize_pcap(m, pcap)
            state = step_dynamics(m, state, u, dt)
            t += dt
            trace.append(TraceRecord(
                time_s=t, pcap_requested_w=pcap, power_measured_w=m.a * pcap + m.b,
                progress_hz=delinearize_progress(m, state),
            ))
        return trace

    def test_recovers_one_third_second(self):
        tau = fit_tau(self.synth_step_trace(1 / 3))
        # oracle: exponential response crosses 63.2% at t = tau
        assert 0.28 <= tau <= 0.39

    def test_flat_trace_rejected(self):
        flat = [TraceRecord(time_s=i * 0.1, pcap_requested_w=80.0,
                            power_measured_w=70.0, progress_hz=20.0)
                for i in range(50)]
        with pytest.raises(FitError):
            fit_tau(flat)

    def test_instant_settling_reports_resolution_floor(self):
        tau = fit_tau(self.synth_step_trace(1e-6))
        assert tau <= 0.1 + 1e-9


class TestPearson:
    def test_perfect_linear(self):
        assert pearson([1, 2, 3, 4], [3, 5, 7, 9]) == pytest.approx(1.0)

    def test_perfect_anticorrelation(self):
        assert pearson([1, 2, 3], [-1, -2, -3]) == pytest.approx(-1.0)

    def test_hand_computed_value(self):
        # cov/sd computation by hand gives exactly 0.8
        assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)

    def test_affine_invariance_and_sign_flip(self):
        x = [1.0, 2.0, 5.0, 7.0]
        y = [2.0, 1.0, 6.0, 8.0]
        base = pearson(x, y)
        assert pearson([3 * v + 2 for v in x], y) == pytest.approx(base)
        assert pearson(x, [0.5 * v - 9 for v in y]) == pytest.approx(base)
        assert pearson([-2 * v for v in x], y) == pytest.approx(-base)

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError):
            pearson([1, 1, 1], [1, 2, 3])


class TestRSquared:
    def test_perfect_prediction(self):
        assert r_squared([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)

    def test_mean_prediction_scores_zero(self):
        assert r_squared([1, 2, 3], [2, 2, 2]) == pytest.approx(0.0)

    def test_hand_computed_value(self):
        # SS_res = 1, SS_tot = 2
        assert r_squared([1, 2, 3], [1, 2, 4]) == pytest.approx(0.5)

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError):
            r_squared([2, 2, 2], [1, 2, 3])
