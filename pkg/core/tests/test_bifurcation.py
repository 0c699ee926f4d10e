import math

import numpy as np
from django.test import SimpleTestCase, tag

from core.bifurcation import (
    DEFAULT_GRID_FACTORS, CycleMeasurement, default_grid, estimate_eta_c, fit_amplitude_law, hopf_horizon,
    hysteresis_check, make_run, measure_all, measure_cycle, predicted, single_link_network, sweep_and_fit,
)
from core.exceptions import BracketError, InsufficientWindowError
from core.stability import hopf_prediction

from .factories import synthetic_trace, three_links


class SingleLinkTests(SimpleTestCase):
    def test_predicted_threshold(self):
        prediction = predicted(single_link_network(alpha=1.0, tau=1.0))
        self.assertAlmostEqual(prediction.eta_c, math.pi / 2)
        self.assertEqual(prediction.period, 4.0)

    def test_rbar_is_fair_share(self):
        network = single_link_network(alpha=0.5, tau=2.0, capacity=3.0, routes=3)
        self.assertAlmostEqual(predicted(network).amplitude_coefficient,
                               hopf_prediction(0.5, 2.0, 1.0).amplitude_coefficient)
        self.assertEqual(predicted(network).period, 8.0)

    def test_requires_single_delay_link(self):
        with self.assertRaises(ValueError):
            predicted(three_links())

    def test_default_grid(self):
        network = single_link_network(alpha=1.0, tau=1.0)
        grid = default_grid(network)
        self.assertEqual(len(grid), len(DEFAULT_GRID_FACTORS))
        self.assertAlmostEqual(grid[0], 0.9 * math.pi / 2)

    def test_horizon(self):
        eta_c = math.pi / 2
        self.assertEqual(hopf_horizon(1.0, 1.0, eta_c, eta_c), 3000.0)
        self.assertEqual(hopf_horizon(1.0, 1.0, eta_c + 1.0, eta_c), 320.0)
        self.assertEqual(hopf_horizon(1.0, 2.0, eta_c + 1e-6, eta_c), 6000.0)

    def test_run_resolution(self):
        sweep_run = make_run(single_link_network(alpha=1.0, tau=1.0), eta=1.0)
        self.assertAlmostEqual(sweep_run.step, 0.02)
        self.assertEqual(sweep_run.stride, 2)
        self.assertEqual(sweep_run.perturbation, 0.01)


class MeasureCycleTests(SimpleTestCase):
    times = np.arange(0.0, 400.0, 0.05)

    def test_sustained_oscillation(self):
        values = 1 + 0.2 * np.sin(2 * np.pi * self.times / 4)
        measurement = measure_cycle(synthetic_trace(self.times, values, eta=2.0))
        self.assertFalse(measurement.converged)
        self.assertAlmostEqual(measurement.amplitude, 0.2, places=4)
        self.assertAlmostEqual(measurement.period, 4.0, places=3)
        self.assertEqual(measurement.eta, 2.0)
        self.assertGreaterEqual(measurement.crossings, 49)

    def test_decaying_oscillation_is_converged(self):
        values = 1 + 0.2 * np.exp(-0.01 * self.times) * np.sin(2 * np.pi * self.times / 4)
        measurement = measure_cycle(synthetic_trace(self.times, values))
        self.assertTrue(measurement.converged)
        self.assertLess(measurement.decay_ratio, 0.5)

    def test_amplitude_under_floor_is_converged(self):
        values = 1 + 1e-9 * np.sin(2 * np.pi * self.times / 4)
        self.assertTrue(measure_cycle(synthetic_trace(self.times, values)).converged)

    def test_too_few_crossings(self):
        times = np.arange(0.0, 100.0, 0.1)
        values = 1 + 0.5 * np.sin(2 * np.pi * times / 30)
        with self.assertRaises(InsufficientWindowError):
            measure_cycle(synthetic_trace(times, values), transient_fraction=0.5)

    def test_window_too_short(self):
        with self.assertRaises(InsufficientWindowError):
            measure_cycle(synthetic_trace(np.arange(6.0), np.ones(6)), transient_fraction=0.5)

    def test_transient_fraction_range(self):
        with self.assertRaises(ValueError):
            measure_cycle(synthetic_trace(self.times, np.ones_like(self.times)), transient_fraction=1.0)


class FitTests(SimpleTestCase):
    prediction = hopf_prediction(1.0, 1.0, 1.0)

    def measurements(self, slope=2.0):
        eta_c = self.prediction.eta_c
        below = [CycleMeasurement(f * eta_c, 1e-9, None, True) for f in (0.9, 0.95, 0.98)]
        above = [
            CycleMeasurement(f * eta_c, math.sqrt(slope * (f - 1) * eta_c), 4.0, False)
            for f in (1.005, 1.01, 1.02, 1.03, 1.04)
        ]
        return below + above

    def test_recovers_square_root_law(self):
        fit = fit_amplitude_law(self.measurements(), self.prediction.eta_c * 1.01, self.prediction)
        self.assertAlmostEqual(fit.eta_c_estimate, math.pi / 2, places=8)
        self.assertAlmostEqual(fit.slope, 2.0, places=8)
        self.assertAlmostEqual(fit.r_squared, 1.0, places=10)
        self.assertAlmostEqual(fit.loglog_slope, 0.5, places=6)
        self.assertEqual(fit.points, 5)
        self.assertAlmostEqual(fit.prefactor_ratio, math.sqrt(2.0) / self.prediction.amplitude_coefficient)

    def test_needs_two_points(self):
        with self.assertLogs('core.bifurcation', 'WARNING'):
            self.assertIsNone(fit_amplitude_law(self.measurements()[:4], self.prediction.eta_c, self.prediction))


class SweepRunTests(SimpleTestCase):
    network = single_link_network(alpha=1.0, tau=1.0)

    def test_below_threshold_converges(self):
        measurement = make_run(self.network, eta=0.5, horizon=200.0).measure()
        self.assertTrue(measurement.converged)
        self.assertEqual(measurement.eta, 0.5)

    def test_above_threshold_oscillates_near_four_delays(self):
        measurement = make_run(self.network, eta=1.2 * math.pi / 2).measure()
        self.assertFalse(measurement.converged)
        self.assertGreater(measurement.amplitude, 0.05)
        self.assertTrue(3.5 < measurement.period < 5.5, measurement.period)

    def test_parallel_measurements_keep_order(self):
        runs = [make_run(self.network, eta, horizon=100.0) for eta in (0.3, 0.6)]
        inline = measure_all(runs, workers=1)
        pooled = measure_all(runs, workers=2)
        self.assertEqual([m.eta for m in pooled], [0.3, 0.6])
        self.assertEqual([m.amplitude for m in pooled], [m.amplitude for m in inline])

    def test_bracket_must_separate_regimes(self):
        with self.assertRaises(BracketError):
            estimate_eta_c(self.network, bracket=(2.0, 3.0), horizon=200.0)


@tag('slow')
class SweepTests(SimpleTestCase):
    network = single_link_network(alpha=1.0, tau=1.0)

    def test_bisection_finds_threshold(self):
        for alpha in (0.5, 1.0, 2.0):
            eta_c = estimate_eta_c(single_link_network(alpha=alpha, tau=1.0))
            expected = math.pi / (2 * alpha)
            self.assertAlmostEqual(eta_c, expected, delta=0.02 * expected)

    def test_bisection_does_not_depend_on_perturbation_size(self):
        small = estimate_eta_c(self.network, perturbation=0.001)
        large = estimate_eta_c(self.network, perturbation=0.05)
        self.assertAlmostEqual(small, large, delta=0.02 * small)

    def test_period_is_four_delays(self):
        for tau in (0.5, 1.0, 2.0):
            measurement = make_run(single_link_network(alpha=1.0, tau=tau), eta=1.02 * math.pi / 2).measure()
            self.assertFalse(measurement.converged)
            self.assertAlmostEqual(measurement.period, 4 * tau, delta=0.02 * 4 * tau)

    def test_hysteresis_free_at_two_percent(self):
        result = hysteresis_check(self.network, 1.02 * math.pi / 2, workers=1)
        self.assertTrue(result.ok, result.amplitudes)

    def test_sweep_is_supercritical(self):
        result = sweep_and_fit(self.network, workers=1)
        self.assertIsNotNone(result.fit)
        self.assertAlmostEqual(result.fit.eta_c_estimate, math.pi / 2, delta=0.02 * math.pi / 2)
        self.assertGreaterEqual(result.fit.r_squared, 0.98)
        self.assertTrue(0.45 <= result.fit.loglog_slope <= 0.55, result.fit.loglog_slope)
        self.assertLessEqual(result.hysteresis.spread, 0.05)
        self.assertTrue(result.monotone)
        self.assertTrue(result.supercritical)
        self.assertTrue(all(m.converged for m in result.measurements if m.eta < 0.99 * math.pi / 2))
