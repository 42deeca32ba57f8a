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

__title__ = 'Descent Lab Soliton Tester'
__author__ = 'Descent Lab developers'
__copyright__ = 'Copyright (c) 2026 Descent Lab developers'
__license__ = 'MIT License'
__description__ = 'Tests the N-soliton ensemble oracle.'

import os
import sys
import unittest
import warnings
from unittest.mock import patch

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))))

from scripts import soliton
from scripts.exceptions import DescentLabError
from scripts.exceptions import IllConditionedError

XS = np.linspace(-3.0, 3.0, 121)
SLOW = os.getenv('DESCENT_LAB_SLOW') not in (None, '', '0')


class TestSoliton(unittest.TestCase):

    def _print_header(self, title):

        try:
            terminal_sizes = os.get_terminal_size()
            term_width = terminal_sizes.columns - 2
        except OSError:
            term_width = 80

        line = "#" * int(term_width / 2)

        print("\n" + line.center(term_width))
        print("Descent Lab - Soliton Test".center(term_width))
        print(title.center(term_width))
        print(line.center(term_width) + "\n")

    def _sech_error(self, N, A=1.0):
        ens = soliton.build_ensemble(A, N)
        psi, _ = soliton.psi_grid(ens, XS, 0.0)
        return float(np.max(np.abs(np.abs(psi) - A / np.cosh(XS))))

    def test_ensemble(self):

        self._print_header("Ensemble")

        ens = soliton.build_ensemble(2.0, 4)
        self.assertEqual(ens.hbar, 0.5)
        self.assertTrue(np.allclose(ens.eigenvalues.imag,
                                    [0.25, 0.75, 1.25, 1.75]))
        self.assertTrue(np.allclose(ens.norming, [1, -1, 1, -1]))
        self.assertEqual(ens.to_dict()['N'], 4)

        with self.assertRaises(DescentLabError):
            soliton.build_ensemble(0.0, 4)
        with self.assertRaises(DescentLabError):
            soliton.build_ensemble(1.0, 0)
        with self.assertRaises(DescentLabError):
            soliton.build_ensemble(1.0, 2, norming=[1.0, 2.0])

    def test_one_soliton(self):

        self._print_header("Single eigenvalue")

        ens = soliton.build_ensemble(1.0, 1)
        psi, _ = soliton.evaluate_psi(ens, 0.0, 0.0)
        self.assertAlmostEqual(abs(psi), 1.0, places=12)

        for x, t in ((0.0, 0.0), (0.7, 0.0), (-1.2, 0.4), (2.0, 1.5)):
            psi, _ = soliton.evaluate_psi(ens, x, t)
            ref = soliton.one_soliton(ens.eigenvalues[0], ens.norming[0],
                                      ens.hbar, x, t)
            self.assertLess(abs(psi - ref), 1e-12)

    def test_dressing(self):

        self._print_header("Dressing against the residue system")

        ens = soliton.build_ensemble(1.0, 3)
        lam = list(ens.eigenvalues)
        for x, t in ((-0.5, 0.0), (0.0, 0.0), (0.4, 0.3), (1.1, 0.2)):
            ref, cond = soliton._solve_double(ens, x, t)
            self.assertLess(cond, 1e5)
            vectors = soliton._kernel_vectors(lam, list(ens.norming), x, t,
                                              ens.hbar, np.exp)
            up, _ = soliton._dress_double(lam, vectors, range(3))
            down, _ = soliton._dress_double(lam, vectors, [2, 0, 1])
            self.assertLess(abs(up - ref), 1e-10)
            self.assertLess(abs(down - ref), 1e-10)
            self.assertAlmostEqual(soliton._dress_extended(ens, x, t, 30),
                                   ref, delta=1e-10)

    def test_initial_profile(self):

        self._print_header("Initial profile and convergence in N")

        errors = {N: self._sech_error(N) for N in (1, 2, 4, 8, 16, 32)}
        print(f"errors: {errors}")
        for small, big in ((1, 2), (2, 4), (4, 8), (8, 16), (16, 32)):
            self.assertLessEqual(errors[big],
                                 max(0.7 * errors[small], 1e-9))

        self.assertLess(self._sech_error(3, A=1.5), 1e-9)

    def test_large_n_points(self):

        self._print_header("Points where the residue system is singular")

        # The residue system at N = 16 is singular to 30 digits here
        for N, x, t in ((16, 0.7, 0.0), (16, 0.0, 0.2), (32, -2.45, 0.0)):
            ens = soliton.build_ensemble(1.0, N)
            psi, cond = soliton.evaluate_psi(ens, x, t)
            print(f"N={N} x={x} t={t}: psi={psi} cond={cond:.3g}")
            if t == 0.0:
                self.assertAlmostEqual(abs(psi), 1.0 / np.cosh(x),
                                       delta=1e-9)
            self.assertLessEqual(abs(psi), 2.0 * sum(ens.eigenvalues.imag))

    def test_evenness(self):

        self._print_header("Evenness in x")

        for N, t in ((4, 0.3), (8, 0.0), (8, 0.2)):
            ens = soliton.build_ensemble(1.0, N)
            psi, _ = soliton.psi_grid(ens, XS, t)
            self.assertTrue(np.allclose(np.abs(psi), np.abs(psi[::-1]),
                                        rtol=0.0, atol=1e-10))

    def test_mass(self):

        self._print_header("Conserved mass")

        ens = soliton.build_ensemble(1.0, 4)
        self.assertAlmostEqual(soliton.mass(ens, 0.0, n_quad=1600), 2.0,
                               delta=1e-8)
        self.assertAlmostEqual(soliton.mass(ens, 0.2, n_quad=1600), 2.0,
                               delta=1e-8)

    @unittest.skipUnless(SLOW, "set DESCENT_LAB_SLOW=1 to run")
    def test_mass_large_n(self):

        self._print_header("Conserved mass for N = 8 and 16")

        for N in (8, 16):
            ens = soliton.build_ensemble(1.0, N)
            for t in (0.0, 0.2):
                value = soliton.mass(ens, t, x_window=20.0, n_quad=2400)
                print(f"N={N} t={t}: mass={value}")
                self.assertAlmostEqual(value, 2.0, delta=1e-6)

    def test_no_warnings(self):

        self._print_header("Residue system assembly")

        ens = soliton.build_ensemble(1.0, 4)
        with warnings.catch_warnings():
            warnings.simplefilter('error')
            for x in (-1.0, 0.0, 0.6):
                soliton.evaluate_psi(ens, x, 0.1)
                log_g, flipped = soliton._residue_logs(
                    list(ens.eigenvalues), list(ens.norming), x, 0.1,
                    ens.hbar, np.log, np.conj)
                system, _ = soliton._assemble(list(ens.eigenvalues),
                                              np.exp(log_g), flipped)
                self.assertTrue(np.all(np.isfinite(system)))

    def test_guards(self):

        self._print_header("Guards")

        with self.assertRaises(IllConditionedError):
            soliton.evaluate_psi(soliton.build_ensemble(1.0, 300), 0.0, 0.0)

        ens = soliton.build_ensemble(1.0, 2)
        with self.assertRaises(IllConditionedError):
            soliton.evaluate_psi(ens, 0.5, 0.0, condition_guard=0.5,
                                 extended=False)

        # The dressing path agrees with the double solve
        psi, cond = soliton.evaluate_psi(ens, 0.5, 0.0, condition_guard=0.5)
        self.assertGreaterEqual(cond, 1.0)
        self.assertAlmostEqual(abs(psi), 1.0 / np.cosh(0.5), places=12)

        with self.assertRaises(DescentLabError):
            soliton.evaluate_psi(ens, np.inf, 0.0)

    def test_singular_extended(self):

        self._print_header("Singular extended-precision solves")

        ens = soliton.build_ensemble(1.0, 2)
        apart = [(0j, 1e20), (1j, 1e20)]
        singular = ZeroDivisionError("matrix is numerically singular")

        with patch.object(soliton, '_dress_double', side_effect=apart), \
                patch.object(soliton, '_dress_extended',
                             side_effect=singular):
            with self.assertRaises(IllConditionedError) as err:
                soliton.evaluate_psi(ens, 0.7, 0.0, condition_guard=0.5)
        self.assertEqual(err.exception.details['N'], 2)
        self.assertEqual(err.exception.details['growth'], 1e20)

        # A singular solve moves on to the next precision
        values = [singular, 0.25 + 0j, 0.25 + 0j]
        with patch.object(soliton, '_dress_double', side_effect=apart), \
                patch.object(soliton, '_dress_extended',
                             side_effect=values) as dressed:
            psi, _ = soliton.evaluate_psi(ens, 0.7, 0.0, condition_guard=0.5)
        self.assertEqual(psi, 0.25)
        self.assertEqual(dressed.call_count, 3)


if __name__ == '__main__':
    unittest.main()
