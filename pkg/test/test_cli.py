##############################################################################
#
# Copyright (c) 2026 Descent Lab developers
#
# Licensed under the MIT license
# (see LICENSE or <http://opensource.org/licenses/MIT>) All files in the
# project carrying such notice may not be copied, modified, or distributed
# except according to those terms.
#
##############################################################################

__title__ = 'Descent Lab CLI Tester'
__author__ = 'Descent Lab developers'
__copyright__ = 'Copyright (c) 2026 Descent Lab developers'
__license__ = 'MIT License'
__description__ = 'Performs various tests of the Descent Lab command line.'

import sys
import os
import json
import tempfile
import subprocess as sp

import unittest
from unittest.mock import patch

sys.path.insert(0, os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))))

from scripts import csv_util
from scripts import field
from scripts import scurve
from scripts import utils
from scripts.exceptions import ConvergenceError

CLI_FN = os.path.join(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))), 'descent_lab_cli.py')


class TestDescentLabCli(unittest.TestCase):

    def _print_header(self, title):

        try:
            terminal_sizes = os.get_terminal_size()
            term_width = terminal_sizes.columns - 2
        except OSError:
            term_width = 80

        line = "#" * int(term_width / 2)

        print("\n" + line.center(term_width))
        print("Descent Lab - Command-line Test".center(term_width))
        print(title.center(term_width))
        print(line.center(term_width) + "\n")

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.env = dict(os.environ)
        # Keeps config.ini out of the real home folder
        self.env['HOME'] = self.tmp.name
        self.env['USERPROFILE'] = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def write_config(self, name, config):
        fn = os.path.join(self.tmp.name, name)
        with open(fn, 'w', encoding='utf-8') as f:
            json.dump(config, f, indent=2)
        return fn

    def out_dir(self, name):
        return os.path.join(self.tmp.name, name)

    def capture(self):

        process = sp.Popen(self.command, bufsize=1, stdout=sp.PIPE,
                           stderr=sp.STDOUT, encoding='utf-8',
                           errors='replace', env=self.env)
        while True:
            realtime_output = process.stdout.readline()
            if realtime_output == '' and process.poll() is not None:
                break
            if realtime_output:
                print(realtime_output.strip(), flush=False)
                sys.stdout.flush()

        out, err = process.communicate()

        return out, err, process.returncode

    def read_manifest(self, out):
        with open(os.path.join(out, 'manifest.json'), encoding='utf-8') as f:
            return json.load(f)

    def test_version(self):

        self._print_header("Version")

        self.command = [sys.executable, CLI_FN, '--version']
        out, err, exitcode = self.capture()
        self.assertEqual(exitcode, 0)

    def test_airy(self):

        self._print_header("Airy process")

        config = self.write_config('airy.json',
                                   {'schema_version': 1, 'process': 'airy',
                                    'grid': {'z': [0.0, 1.0]}})
        out = self.out_dir('airy')
        self.command = [sys.executable, CLI_FN, '-c', config, '-o', out,
                        '-f', 'json,csv,svg', '-s']
        out_str, err, exitcode = self.capture()
        self.assertEqual(exitcode, utils.EXIT_OK)

        header, rows = csv_util.import_csv(os.path.join(out, 'airy.csv'))
        self.assertEqual(header, ['z', 'deformed', 'series', 'laplace',
                                  'abs_error'])
        self.assertEqual(len(rows), 2)
        self.assertEqual(rows[0][3], '')
        self.assertLess(float(rows[1][4]), 1e-8)
        self.assertTrue(os.path.exists(os.path.join(out, 'airy_paths.svg')))

        manifest = self.read_manifest(out)
        self.assertEqual(manifest['exit_status'], 0)
        self.assertEqual(manifest['config']['process'], 'airy')
        names = sorted(f['name'] for f in manifest['files'])
        listed = sorted(n for n in os.listdir(out) if n != 'manifest.json')
        self.assertEqual(names, listed)
        for entry in manifest['files']:
            self.assertEqual(entry['sha256'], utils.sha256_file(
                os.path.join(out, entry['name'])))

    def test_rerun(self):

        self._print_header("Identical reruns")

        config = self.write_config('airy.json',
                                   {'schema_version': 1, 'process': 'airy',
                                    'seed': 5, 'grid': {'z': [0.5, 2.0]}})
        hashes = []
        for name in ('run1', 'run2'):
            self.command = [sys.executable, CLI_FN, '-c', config, '-o',
                            self.out_dir(name), '-s']
            out_str, err, exitcode = self.capture()
            self.assertEqual(exitcode, utils.EXIT_OK)
            manifest = self.read_manifest(self.out_dir(name))
            self.assertEqual(manifest['seed'], 5)
            hashes.append({f['name']: f['sha256']
                           for f in manifest['files']})

        self.assertEqual(hashes[0], hashes[1])

    def test_soliton(self):

        self._print_header("Soliton process")

        config = self.write_config('soliton.json',
                                   {'schema_version': 1,
                                    'process': 'soliton',
                                    'oracle': {'N': 4},
                                    'grid': {'x': [-1.0, 0.0, 1.0],
                                             't': [0.3]}})
        out = self.out_dir('soliton')
        self.command = [sys.executable, CLI_FN, '-c', config, '-o', out,
                        '-f', 'json', '-s']
        out_str, err, exitcode = self.capture()
        self.assertEqual(exitcode, utils.EXIT_OK)
        self.assertFalse(os.path.exists(os.path.join(out, 'soliton.csv')))

        with open(os.path.join(out, 'soliton.json'), encoding='utf-8') as f:
            res = json.load(f)
        self.assertEqual(res['ensemble']['N'], 4)
        values = [r['abs'] for r in res['rows']]
        self.assertEqual(len(values), 3)
        self.assertAlmostEqual(values[0], values[2], delta=1e-10)
        self.assertAlmostEqual(res['mass']['0.3'], 2.0, delta=1e-6)

    def test_wkb_without_config(self):

        self._print_header("WKB process without a configuration file")

        out = self.out_dir('wkb')
        self.command = [sys.executable, CLI_FN, '-r', 'wkb', '-o', out,
                        '-s']
        out_str, err, exitcode = self.capture()
        self.assertEqual(exitcode, utils.EXIT_OK)

        header, rows = csv_util.import_csv(os.path.join(out, 'wkb.csv'))
        self.assertEqual(len(rows), len(utils.WKB_Z))
        self.assertEqual(float(rows[-1][header.index('tau')]), 0.0)

    def test_invalid_config(self):

        self._print_header("Invalid configuration")

        config = self.write_config('bad.json',
                                   {'schema_version': 1,
                                    'process': 'equilibrium',
                                    'solver': {'energy_tol': -1.0}})
        out = self.out_dir('bad')
        self.command = [sys.executable, CLI_FN, '-c', config, '-o', out]
        out_str, err, exitcode = self.capture()
        self.assertEqual(exitcode, utils.EXIT_FAILED)
        self.assertFalse(os.path.exists(out))

        # The command-line process must match the configuration
        config = self.write_config('airy.json',
                                   {'schema_version': 1, 'process': 'airy'})
        self.command = [sys.executable, CLI_FN, '-c', config, '-r', 'wkb',
                        '-o', out]
        out_str, err, exitcode = self.capture()
        self.assertEqual(exitcode, utils.EXIT_FAILED)
        self.assertFalse(os.path.exists(out))

        self.command = [sys.executable, CLI_FN, '-r', 'airy', '-f', 'pdf',
                        '-o', out]
        out_str, err, exitcode = self.capture()
        self.assertEqual(exitcode, utils.EXIT_FAILED)

    def rerun_hashes(self, config, prefix):
        hashes = []
        for k in (1, 2):
            self.command = [sys.executable, CLI_FN, '-c', config, '-o',
                            self.out_dir(f'{prefix}{k}'), '-w', '1', '-s']
            out_str, err, exitcode = self.capture()
            self.assertEqual(exitcode, utils.EXIT_OK)
            manifest = self.read_manifest(self.out_dir(f'{prefix}{k}'))
            self.assertEqual(manifest['exit_status'], utils.EXIT_OK)
            hashes.append({f['name']: f['sha256']
                           for f in manifest['files']})
        self.assertEqual(hashes[0], hashes[1])
        return hashes[0]

    def test_equilibrium(self):

        self._print_header("Equilibrium process")

        config = self.write_config('equilibrium.json',
                                   {'schema_version': 1,
                                    'process': 'equilibrium',
                                    'field': {'x': 0.2, 't': 0.0},
                                    'solver': {'n_nodes': 80,
                                               'edge_refine': 0}})
        hashes = self.rerun_hashes(config, 'equilibrium')
        self.assertEqual(sorted(hashes), ['equilibrium.csv',
                                          'equilibrium.json'])

        out = self.out_dir('equilibrium1')
        with open(os.path.join(out, 'equilibrium.json'),
                  encoding='utf-8') as f:
            res = json.load(f)
        self.assertGreater(res['mass'], 0.0)
        self.assertEqual(len(res['weights']), 80)
        self.assertEqual(res['field']['x'], 0.2)

        header, rows = csv_util.import_csv(os.path.join(out,
                                                        'equilibrium.csv'))
        self.assertEqual(header, ['index', 're', 'im', 'cell_length',
                                  'weight', 'density', 'supported'])
        self.assertEqual(len(rows), 80)

    def test_maximin(self):

        self._print_header("Maximin process")

        config = self.write_config('maximin.json',
                                   {'schema_version': 1,
                                    'process': 'maximin',
                                    'field': {'x': 0.4},
                                    'solver': {'n_nodes': 40,
                                               'edge_refine': 0},
                                    'search': {'n_vertices': 8,
                                               'n_fourier': 1,
                                               'max_sweeps': 1,
                                               'trial_rounds': 1,
                                               'vertex_moves': False}})
        self.rerun_hashes(config, 'maximin')

        out = self.out_dir('maximin1')
        with open(os.path.join(out, 'maximin.json'), encoding='utf-8') as f:
            res = json.load(f)
        hist = res['energy_history']
        self.assertEqual(hist[-1], res['energy'])
        self.assertTrue(all(b >= a for a, b in zip(hist[:-1], hist[1:])))
        self.assertEqual(len(res['contour_re']), 10)
        self.assertEqual(set(res['band_integral_residual']), {'A', 'B'})

    def test_sweep(self):

        self._print_header("Sweep process")

        config = self.write_config('sweep.json',
                                   {'schema_version': 1,
                                    'process': 'sweep',
                                    'solver': {'n_nodes': 40,
                                               'edge_refine': 0},
                                    'search': {'n_vertices': 8,
                                               'n_fourier': 1,
                                               'max_sweeps': 1,
                                               'trial_rounds': 1,
                                               'vertex_moves': False},
                                    'grid': {'x': [0.1, 0.2],
                                             't': [0.0]}})
        self.rerun_hashes(config, 'sweep')

        header, rows = csv_util.import_csv(os.path.join(
            self.out_dir('sweep1'), 'sweep.csv'))
        self.assertEqual(header, ['x', 't', 'genus', 'energy',
                                  'spike_contact', 'caustic', 'error'])
        self.assertEqual(len(rows), 2)

    def run_flaky_sweep(self, name, failing):

        real_search = scurve.maximin_search

        def search(contour, f, opts):
            if failing(f.x):
                raise ConvergenceError(f"no convergence at x={f.x}")
            return real_search(contour, f, opts)

        cfg = field.validate(json.dumps(
            {'schema_version': 1, 'process': 'sweep',
             'solver': {'n_nodes': 40, 'edge_refine': 0},
             'search': {'n_vertices': 8, 'n_fourier': 1, 'max_sweeps': 1,
                        'trial_rounds': 1, 'vertex_moves': False},
             'grid': {'x': [0.1, 0.3], 't': [0.0]}}))
        lab = utils.LabProcess(out=self.out_dir(name), colourize=False,
                               silent=True)
        with patch('scripts.scurve.maximin_search', side_effect=search):
            status = lab.run(cfg, workers=1)

        with open(os.path.join(self.out_dir(name), 'sweep.json'),
                  encoding='utf-8') as f:
            res = json.load(f)
        return status, res, self.read_manifest(self.out_dir(name))

    def test_sweep_failures(self):

        self._print_header("Sweep with failing cells")

        status, res, manifest = self.run_flaky_sweep(
            'partial', lambda x: x > 0.2)
        self.assertEqual(status, utils.EXIT_PARTIAL)
        self.assertEqual(manifest['exit_status'], utils.EXIT_PARTIAL)
        self.assertEqual(res['failed'], 1)
        genus = [c['genus'] for c in res['cells']]
        self.assertEqual(genus[1], 'error')
        self.assertIn('ConvergenceError', res['cells'][1]['error'])
        self.assertNotEqual(genus[0], 'error')

        # Every cell failing still writes the artifacts
        status, res, manifest = self.run_flaky_sweep('failed',
                                                     lambda x: True)
        self.assertEqual(status, utils.EXIT_FAILED)
        self.assertEqual(manifest['exit_status'], utils.EXIT_FAILED)
        self.assertEqual(res['failed'], 2)
        names = sorted(f['name'] for f in manifest['files'])
        self.assertEqual(names, ['sweep.csv', 'sweep.json'])


if __name__ == '__main__':
    unittest.main()
