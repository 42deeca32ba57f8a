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

__title__ = 'Descent Lab S-curve Tester'
__author__ = 'Descent Lab developers'
__copyright__ = 'Copyright (c) 2026 Descent Lab developers'
__license__ = 'MIT License'
__description__ = 'Tests the maximin search, the S-property diagnostics ' \
                  'and the caustic map.'

import os
import sys
import types
import unittest

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))))

from scripts import potential
from scripts import scurve
from scripts.equilibrium import SolverOptions
from scripts.exceptions import BandUnderResolvedError
from scripts.exceptions import DescentLabError
from scripts.exceptions import EmptySetError
from scripts.exceptions import OnSupportError
from scripts.exceptions import PoleError
from scripts.potential import DiscreteMeasure
from scripts.potential import FieldSpec
from scripts.scurve import SearchOptions
from scripts.spatial import SlitGeo

SLOW = os.getenv('DESCENT_LAB_SLOW') not in (None, '', '0')


def _quick_opts(**kwargs):
    params = {'n_vertices': 8, 'n_fourier': 2, 'vertex_moves': False,
              'max_sweeps': 2, 'step': 0.05, 'trial_rounds': 2,
              'solver': SolverOptions(n_nodes=40, edge_refine=0)}
    params.update(kwargs)
    return SearchOptions(**params)


def _holder(mu, f):
    return types.SimpleNamespace(solution=types.SimpleNamespace(measure=mu,
                                                                field=f))


def _band_holder(mu, f):
    # The whole measure is one band
    return types.SimpleNamespace(solution=types.SimpleNamespace(
        measure=mu, field=f, bands=[(0, len(mu) - 1)]))


class TestSCurve(unittest.TestCase):

    def _print_header(self, title):

        try:
            terminal_sizes = os.get_terminal_size()
            term_width = terminal_sizes.columns - 2
        except OSError:
            term_width = 80

        line = "#" * int(term_width / 2)

        print("\n" + line.center(term_width))
        print("Descent Lab - S-curve Test".center(term_width))
        print(title.center(term_width))
        print(line.center(term_width) + "\n")

    def test_hausdorff(self):

        self._print_header("Hausdorff distance")

        self.assertEqual(scurve.hausdorff_distance(np.array([0.0 + 0j]),
                                                   np.array([3.0, 4.0])),
                         4.0)

        # Paths between the two sides of the spike go around its tip
        d = scurve.hausdorff_distance(np.array([-0.5 + 0.5j]),
                                      np.array([0.5 + 0.5j]))
        self.assertAlmostEqual(d, np.sqrt(2.0), places=12)
        d = scurve.hausdorff_distance(np.array([-0.5 + 2j]),
                                      np.array([0.5 + 2j]))
        self.assertAlmostEqual(d, 1.0, places=12)

        rng = np.random.default_rng(3)
        sets = [rng.uniform(-2, 2, 6) + 1j * rng.uniform(0.1, 2, 6)
                for _ in range(3)]
        for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            d_ac = scurve.hausdorff_distance(sets[a], sets[c])
            d_ab = scurve.hausdorff_distance(sets[a], sets[b])
            d_bc = scurve.hausdorff_distance(sets[b], sets[c])
            self.assertLessEqual(d_ac, d_ab + d_bc + 1e-12)

        with self.assertRaises(EmptySetError):
            scurve.hausdorff_distance(np.array([]), np.array([1j]))

    def test_positive_field(self):

        self._print_header("Maximin search with a positive field")

        f = FieldSpec(kind='synthetic',
                      synthetic_eval=lambda z: np.ones(np.shape(z)))
        opts = _quick_opts()
        initial = scurve.initial_contour(f, opts.n_vertices)
        res = scurve.maximin_search(initial, f, opts)
        print(res)

        self.assertEqual(res.energy(), 0.0)
        self.assertTrue(np.allclose(res.contour.polyline(),
                                    initial.polyline()))
        self.assertEqual(res.local_max_certificate, 0.0)
        self.assertNotIn('not stationary', res.flags)
        self.assertTrue(res.encircling)
        self.assertTrue(np.isnan(res.s_residual))

        out = res.to_dict()
        self.assertEqual(out['energy'], 0.0)
        self.assertEqual(len(out['contour_re']), opts.n_vertices + 2)

    def test_r_function(self):

        self._print_header("R-function")

        f = FieldSpec(x=0.3, t=0.1)
        z = np.array([1.3 + 0.7j, -0.4 + 1.9j])

        # With no mass, R is the squared field derivative
        empty = DiscreteMeasure([1j, 2j], [0.0, 0.0], kind='point')
        r = scurve.r_function(z, _holder(empty, f), 'A')
        self.assertTrue(np.allclose(
            r, potential.external_field_derivative(z, f) ** 2))
        self.assertTrue(np.allclose(scurve.r_function(z, _holder(empty, f),
                                                      'B'), 0.0))

        # The symmetrized measure makes R real-symmetric
        mu = DiscreteMeasure([0.3 + 1j, -0.2 + 0.6j], [0.4, 0.6],
                             kind='point')
        holder = _holder(mu, f)
        r_up = scurve.r_function(z, holder, 'B')
        r_down = scurve.r_function(np.conj(z), holder, 'B')
        self.assertTrue(np.allclose(r_down, np.conj(r_up), rtol=1e-12,
                                    atol=1e-12))

        with self.assertRaises(PoleError):
            scurve.r_function(0j, holder)
        with self.assertRaises(OnSupportError):
            scurve.r_function(0.3 + 1j, holder)
        with self.assertRaises(DescentLabError):
            scurve.r_function(1j, holder, 'C')

    def test_caustic_cells(self):

        self._print_header("Caustic cells")

        cmap = scurve.CausticMap([0.0, 1.0, 2.0], [0.0, 1.0])
        cmap.genus[:] = [[0, 0, 1], [-1, 0, 1]]
        cmap.errors[(1, 0)] = 'ConvergenceError: no convergence'

        self.assertEqual(cmap.caustic_cells(), [(0, 1), (0, 2), (1, 1),
                                                (1, 2)])
        self.assertEqual(cmap.failed(), 1)

        rows = cmap.to_rows()
        self.assertEqual(len(rows), 6)
        self.assertEqual(rows[3]['genus'], 'error')
        self.assertEqual(rows[0]['genus'], 0)
        self.assertFalse(rows[0]['caustic'])
        self.assertTrue(rows[1]['caustic'])

        with self.assertRaises(DescentLabError):
            scurve.caustic_map(FieldSpec(), [], [0.0])

    def test_options(self):

        self._print_header("Search options")

        opts = SearchOptions()
        self.assertEqual(opts.stationarity_tol, 1e-5)
        self.assertEqual(opts.copy(workers=1).workers, 1)
        self.assertIn('solver', opts.to_dict())

        with self.assertRaises(DescentLabError):
            SearchOptions(h_n=0.0)

    def test_s_property_examples(self):

        self._print_header("S-property residual on straight bands")

        f = FieldSpec(kind='synthetic',
                      synthetic_eval=lambda z: np.real(z) ** 2 - np.imag(z))

        # Even field, band on the imaginary axis
        mu = potential.segment_measure(0.5j, 1.5j, 40)
        straight = scurve.s_property_residual(_band_holder(mu, f), f)
        print(f"imaginary-axis band: {straight:.3g}")
        self.assertLess(straight, 1e-8)

        # The same band turned by 5 degrees about its midpoint
        half = 0.5 * np.exp(1j * np.deg2rad(95.0))
        mu = potential.segment_measure(1j - half, 1j + half, 40)
        turned = scurve.s_property_residual(_band_holder(mu, f), f)
        print(f"turned band: {turned:.3g}")
        self.assertGreater(turned, 1e-3)
        self.assertLessEqual(turned, 1.0)

        short = potential.segment_measure(0.5j, 1.5j, 4)
        with self.assertRaises(BandUnderResolvedError):
            scurve.s_property_residual(_band_holder(short, f), f)

    def test_spike_stencils(self):

        self._print_header("Difference stencils next to the spike")

        geo = SlitGeo(1.0)
        z = np.array([0.01 + 0.5j, 0.5 + 0.5j, 0.01 + 1.5j, 0.0005 + 0.7j])
        normals = -np.ones(4, dtype=complex)
        clear = scurve._clear_of_spike(z, normals, 0.02, geo)
        self.assertEqual(clear.tolist(), [False, True, True, False])

        # A band hugging the spike leaves no node to difference
        f = FieldSpec(x=0.4, t=0.0, A=1.0)
        mu = potential.segment_measure(0.0002 + 0.2j, 0.0002 + 0.8j, 20)
        with self.assertRaises(BandUnderResolvedError):
            scurve.s_property_residual(_band_holder(mu, f), f)

    @unittest.skipUnless(SLOW, "set DESCENT_LAB_SLOW=1 to run")
    def test_nls_search(self):

        self._print_header("Maximin search at x = 0.4")

        f = FieldSpec(x=0.4, t=0.0, A=1.0)
        opts = SearchOptions()
        initial = scurve.initial_contour(f, 24)
        res = scurve.maximin_search(initial, f, opts, silent=False)
        print(res)
        print(f"s_residual {res.s_residual:.3g}, band "
              f"{res.band_integral_residual}, s_history {res.s_history}")

        hist = res.energy_history
        self.assertTrue(all(b >= a for a, b in zip(hist[:-1], hist[1:])))
        self.assertEqual(hist[-1], res.energy())

        self.assertLessEqual(res.local_max_certificate, opts.stationarity_tol)
        self.assertLessEqual(res.s_residual, 5e-2)
        self.assertLessEqual(res.best_band_residual(), 1e-2)
        self.assertEqual(set(res.band_integral_residual.keys()),
                         {'A', 'B'})

        # Decreasing trend, at most 10% of the steps going up
        s_hist = [s for s in res.s_history if np.isfinite(s)]
        self.assertGreaterEqual(len(s_hist), 2)
        self.assertLessEqual(s_hist[-1], s_hist[0])
        ups = sum(1 for a, b in zip(s_hist[:-1], s_hist[1:]) if b > a)
        self.assertLessEqual(ups, max(1, int(0.1 * (len(s_hist) - 1))))

    @unittest.skipUnless(SLOW, "set DESCENT_LAB_SLOW=1 to run")
    def test_richer_family(self):

        self._print_header("Maximin energy over nested search families")

        f = FieldSpec(x=0.4, t=0.0, A=1.0)
        solver = SolverOptions(n_nodes=120, edge_refine=0)
        presets = [_quick_opts(n_vertices=12, n_fourier=2, solver=solver),
                   _quick_opts(n_vertices=12, n_fourier=4, solver=solver),
                   _quick_opts(n_vertices=12, n_fourier=4, vertex_moves=True,
                               solver=solver)]
        initial = scurve.initial_contour(f, 12)

        energies = [scurve.maximin_search(initial, f, opts).energy()
                    for opts in presets]
        print(energies)
        for (small, big), opts in zip(zip(energies[:-1], energies[1:]),
                                      presets[1:]):
            self.assertGreaterEqual(big, small - opts.stationarity_tol)

    @unittest.skipUnless(SLOW, "set DESCENT_LAB_SLOW=1 to run")
    def test_caustic_grid(self):

        self._print_header("Caustic map on a 9 x 5 grid")

        opts = _quick_opts(n_vertices=12,
                           solver=SolverOptions(n_nodes=80, edge_refine=0))
        x_grid = np.linspace(-0.4, 0.4, 9)
        t_grid = [0.0, 0.025, 0.05, 0.075, 0.1]
        warm = scurve.caustic_map(FieldSpec(), x_grid, t_grid, opts,
                                  silent=False)
        cold = scurve.caustic_map(FieldSpec(), x_grid, t_grid, opts,
                                  warm_start=False, silent=False)
        print(warm.genus)

        self.assertEqual(warm.genus.shape, (5, 9))
        rows = warm.to_rows()
        self.assertEqual(len(rows), 45)
        for row in rows:
            self.assertTrue(row['genus'] in ('empty', 'error') or
                            (isinstance(row['genus'], int) and
                             row['genus'] >= 0))

        for j in range(9):
            if (0, j) not in warm.errors:
                self.assertEqual(warm.genus[0, j], 0)

        computed = [(i, j) for i in range(5) for j in range(9)
                    if (i, j) not in warm.errors and
                    (i, j) not in cold.errors]
        for i, j in computed:
            self.assertEqual(warm.genus[i, j], cold.genus[i, j])
            if (i, 8 - j) in computed:
                self.assertEqual(warm.genus[i, j], warm.genus[i, 8 - j])


if __name__ == '__main__':
    unittest.main()
