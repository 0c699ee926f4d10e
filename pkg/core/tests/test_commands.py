import json
import math
import shutil
import tempfile
from io import StringIO
from pathlib import Path

import pandas as pd
from django.core.management import call_command, load_command_class
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from core.management.base import EXIT_INVALID, EXIT_PARSE, EXIT_SIMULATION

from .factories import scenario_path


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.out = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, self.out, ignore_errors=True)

    def call(self, name, scenario, *args):
        stdout, stderr = StringIO(), StringIO()
        call_command(name, '--scenario', str(scenario), '--out', str(self.out), *args,
                     stdout=stdout, stderr=stderr)
        return stdout.getvalue(), stderr.getvalue()

    def read_json(self, name):
        return json.loads((self.out / name).read_text(encoding='utf-8'))

    def write_scenario(self, data):
        path = self.out / 'scenario.json'
        path.write_text(json.dumps(data), encoding='utf-8')
        return path


class ValidateCommandTests(CommandTestCase):
    def test_valid(self):
        stdout, _ = self.call('validate', scenario_path('three_links'))
        self.assertIn('Escenario válido', stdout)
        self.assertEqual(self.read_json('resolved_scenario.json')['sim']['step'], 0.01)

    def test_json_format(self):
        stdout, _ = self.call('validate', scenario_path('single_link'), '--format', 'json')
        self.assertEqual(json.loads(stdout), {'valid': True, 'violations': []})

    def test_invalid_exit_code_names_route_and_link(self):
        stdout = StringIO()
        with self.assertRaises(CommandError) as caught:
            call_command('validate', '--scenario', str(scenario_path('invalid_rtt_mismatch')),
                         '--out', str(self.out), stdout=stdout)
        self.assertEqual(caught.exception.returncode, EXIT_INVALID)
        self.assertIn('[rtt_mismatch]', stdout.getvalue())
        self.assertIn('(r, l)', stdout.getvalue())
        self.assertFalse((self.out / 'resolved_scenario.json').exists())

    def test_parse_error_exit_code(self):
        path = self.out / 'broken.json'
        path.write_text('{"links": ', encoding='utf-8')
        with self.assertRaises(CommandError) as caught:
            self.call('validate', path)
        self.assertEqual(caught.exception.returncode, EXIT_PARSE)

    def test_structure_error_exit_code(self):
        with self.assertRaises(CommandError) as caught:
            self.call('equilibrium', self.write_scenario({'links': 'l'}))
        self.assertEqual(caught.exception.returncode, EXIT_PARSE)

    def test_seed_is_accepted_and_ignored(self):
        with self.assertLogs('core.management.base', 'WARNING'):
            self.call('equilibrium', scenario_path('single_link'), '--seed', '7')


class EquilibriumCommandTests(CommandTestCase):
    def test_json(self):
        stdout, _ = self.call('equilibrium', scenario_path('three_links'))
        document = json.loads(stdout)
        self.assertEqual(document['equilibrium']['rates'], {'r1': 1.0, 'r2': 1.0, 'r3': 3.0, 'r4': 4.0})
        self.assertTrue(document['bottlenecks']['ok'])
        self.assertEqual(self.read_json('equilibrium.json'), document)

    def test_csv(self):
        self.call('equilibrium', scenario_path('three_links'), '--format', 'csv')
        routes = pd.read_csv(self.out / 'equilibrium_routes.csv')
        self.assertEqual(list(routes['route']), ['r1', 'r2', 'r3', 'r4'])
        self.assertEqual(list(routes['bottleneck']), ['A', 'A', 'B', 'C'])
        links = pd.read_csv(self.out / 'equilibrium_links.csv')
        self.assertEqual(list(links['link_rate']), [1.0, 3.0, 4.0])

    def test_invalid_scenario(self):
        with self.assertRaises(CommandError) as caught:
            self.call('equilibrium', scenario_path('invalid_rtt_mismatch'))
        self.assertEqual(caught.exception.returncode, EXIT_INVALID)


class ReportCommandTests(CommandTestCase):
    def test_three_links(self):
        self.call('report', scenario_path('three_links'))
        report = self.read_json('report.json')
        links = report['stability']['links']
        self.assertAlmostEqual(links['A']['theorem3_lhs'], 0.5)
        self.assertAlmostEqual(links['B']['theorem3_lhs'], 0.3214, places=4)
        self.assertAlmostEqual(links['C']['theorem3_lhs'], 0.19876, places=5)
        self.assertTrue(report['assumption_ok'])
        self.assertIsNone(report['hopf_prediction'])
        self.assertEqual(set(report['recommended_alpha']), {'A', 'B', 'C'})

    def test_single_link_has_hopf_prediction(self):
        self.call('report', scenario_path('single_link'))
        prediction = self.read_json('report.json')['hopf_prediction']
        self.assertAlmostEqual(prediction['eta_c'], math.pi)
        self.assertAlmostEqual(prediction['period'], 4.0)
        self.assertAlmostEqual(prediction['amplitude_coefficient'], math.sqrt(20 * math.pi / (3 * math.pi - 2)))

    def test_round_trip_with_recommended_alpha(self):
        self.call('report', scenario_path('single_link_linear_queue'), '--round-trip')
        report = self.read_json('report.json')
        self.assertAlmostEqual(report['recommended_alpha']['l'], 0.5)
        second = report['round_trip']['stability']['links']['l']
        self.assertTrue(second['decentralized_ok'])
        self.assertTrue(report['round_trip']['stability']['decentralized_all_ok'])

    def test_tied_bottleneck_note(self):
        stdout, _ = self.call('report', scenario_path('two_identical_links'))
        report = json.loads(stdout)
        self.assertFalse(report['assumption_ok'])
        self.assertIsNotNone(report['stability']['note'])


class StabilityCheckCommandTests(CommandTestCase):
    def test_table(self):
        stdout, _ = self.call('stability_check', scenario_path('three_links_unstable'))
        self.assertIn('theorem3_lhs', stdout)
        self.assertIn('all_ok=False', stdout)
        document = self.read_json('stability.json')
        self.assertAlmostEqual(document['links']['A']['theorem3_lhs'], 2.5)
        self.assertFalse(document['links']['A']['theorem3_ok'])

    def test_json(self):
        stdout, _ = self.call('stability_check', scenario_path('single_link'), '--format', 'json')
        self.assertTrue(json.loads(stdout)['all_ok'])

    def test_help_names_the_subcommand(self):
        self.assertIn('stability-check', load_command_class('core', 'stability_check').help)


class SimulateCommandTests(CommandTestCase):
    def test_two_identical_links(self):
        stdout, _ = self.call('simulate', scenario_path('two_identical_links'))
        summary = json.loads(stdout)
        self.assertAlmostEqual(summary['final_rates']['j'], 6.0, delta=6e-3)
        self.assertAlmostEqual(summary['final_route_rates']['r'], 1.0, delta=1e-6)
        trace = pd.read_csv(self.out / 'trace.csv')
        self.assertEqual(list(trace.columns), ['time', 'R.l', 'R.j', 'x.r', 'y.l', 'y.j', 'q.l', 'q.j'])
        self.assertAlmostEqual(trace['time'].iloc[-1], 60.0)
        self.assertEqual(self.read_json('summary.json'), summary)

    def test_overrides(self):
        self.call('simulate', scenario_path('two_identical_links'), '--horizon', '2', '--step', '0.05',
                  '--format', 'json')
        resolved = self.read_json('resolved_scenario.json')
        self.assertEqual(resolved['sim']['horizon'], 2.0)
        self.assertEqual(resolved['sim']['step'], 0.05)
        trace = json.loads((self.out / 'trace.json').read_text(encoding='utf-8'))
        self.assertEqual(len(trace['data']), 41)

    def test_no_equilibrium_warning(self):
        stdout, stderr = self.call('simulate', scenario_path('no_equilibrium'))
        self.assertIn('Sin equilibrio', stderr)
        self.assertEqual(json.loads(stdout)['growing_links'], ['j'])

    def test_divergence_exit_code_and_partial_trace(self):
        with self.assertRaises(CommandError) as caught:
            self.call('simulate', scenario_path('no_equilibrium'), '--horizon', '40')
        self.assertEqual(caught.exception.returncode, EXIT_SIMULATION)
        self.assertIn('sin punto de equilibrio', str(caught.exception))
        partial = pd.read_csv(self.out / 'trace_partial.csv')
        self.assertLess(partial['time'].iloc[-1], 40.0)

    def test_invalid_override(self):
        with self.assertRaises(CommandError) as caught:
            self.call('simulate', scenario_path('three_links'), '--step', '0.5')
        self.assertEqual(caught.exception.returncode, EXIT_INVALID)

    def test_trace_is_reproducible(self):
        self.call('simulate', scenario_path('three_links'), '--horizon', '30')
        first = (self.out / 'trace.csv').read_bytes()
        self.call('simulate', scenario_path('three_links'), '--horizon', '30')
        self.assertEqual((self.out / 'trace.csv').read_bytes(), first)

    def test_plot_is_reproducible(self):
        self.call('simulate', scenario_path('two_identical_links'), '--horizon', '3', '--plot')
        first = (self.out / 'trace.svg').read_bytes()
        self.call('simulate', scenario_path('two_identical_links'), '--horizon', '3', '--plot')
        self.assertEqual((self.out / 'trace.svg').read_bytes(), first)
        self.assertTrue(first.lstrip().startswith(b'<?xml'))


class HopfSweepCommandTests(CommandTestCase):
    def test_requires_single_delay_link(self):
        with self.assertRaises(CommandError) as caught:
            self.call('hopf_sweep', scenario_path('three_links'))
        self.assertEqual(caught.exception.returncode, EXIT_INVALID)

    def test_help_names_the_subcommand(self):
        self.assertIn('hopf-sweep', load_command_class('core', 'hopf_sweep').help)

    def test_explicit_grid(self):
        data = json.loads(scenario_path('hopf_single_link').read_text(encoding='utf-8'))
        data['sweep'] = {'etas': [0.8, 2.0], 'workers': 1}
        stdout, _ = self.call('hopf_sweep', self.write_scenario(data))
        document = json.loads(stdout)
        self.assertAlmostEqual(document['prediction']['eta_c'], math.pi / 2)
        self.assertIsNone(document['fit'])
        self.assertIsNone(document['eta_c_bisection'])
        sweep = pd.read_csv(self.out / 'sweep.csv')
        self.assertEqual(list(sweep.columns), ['eta', 'amplitude', 'period', 'converged'])
        self.assertEqual(list(sweep['converged']), [True, False])
        self.assertTrue(4.0 < sweep['period'].iloc[1] < 5.5)
        self.assertTrue((self.out / 'fit.json').exists())
