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

__title__ = 'Descent Lab Potential Tester'
__author__ = 'Descent Lab developers'
__copyright__ = 'Copyright (c) 2026 Descent Lab developers'
__license__ = 'MIT License'
__description__ = 'Tests the Green potential, kernel and external field.'

import os
import sys
import pickle
import unittest

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))))

from scripts import potential
from scripts.exceptions import DescentLabError
from scripts.exceptions import InfiniteSelfEnergyError
from scripts.exceptions import SingularKernelError
from scripts.potential import DiscreteMeasure
from scripts.potential import FieldSpec
from scripts.potential import SlitPoint

LOG3 = np.log(3.0)
PHI_2I = -(3.0 * np.log(3.0) - 4.0 * np.log(2.0))


class TestPotential(unittest.TestCase):

    def _print_header(self, title):

        try:
            terminal_sizes = os.get_terminal_size()
            term_width = terminal_sizes.columns - 2
        except OSError:
            term_width = 80

        line = "#" * int(term_width / 2)

        print("\n" + line.center(term_width))
        print("Descent Lab - Potential Test".center(term_width))
        print(title.center(term_width))
        print(line.center(term_width) + "\n")

    def test_slit_point(self):

        self._print_header("Slit points")

        p = SlitPoint(0.0, 0.5, 'left', A=1.0)
        self.assertEqual(p.to_complex(), 0.5j)
        self.assertNotEqual(p, SlitPoint(0.0, 0.5, 'right'))
        self.assertEqual(pickle.loads(pickle.dumps(p)), p)

        with self.assertRaises(AttributeError):
            p.re = 1.0
        with self.assertRaises(DescentLabError):
            SlitPoint(0.3, -0.1)
        with self.assertRaises(DescentLabError):
            SlitPoint(0.3, 0.5, 'left')
        with self.assertRaises(DescentLabError):
            SlitPoint(0.0, 1.5, 'right', A=1.0)

    def test_green(self):

        self._print_header("Green's function")

        self.assertAlmostEqual(potential.green(1j, 2j), LOG3, places=14)
        self.assertEqual(potential.green(0.7, 1 + 1j), 0.0)
        self.assertAlmostEqual(potential.green(1 + 1j, 2 + 1j),
                               np.log(np.sqrt(5.0)), places=14)
        self.assertAlmostEqual(potential.green(1 + 1j, 2 + 1j),
                               potential.green(2 + 1j, 1 + 1j), places=14)
        self.assertAlmostEqual(potential.green(SlitPoint(0.0, 1.0),
                                               SlitPoint(0.0, 2.0)),
                               LOG3, places=14)

        with self.assertRaises(SingularKernelError):
            potential.green(0.5 + 0.5j, 0.5 + 0.5j)

    def test_segment_integral(self):

        self._print_header("Closed-form segment integral")

        # int_0^1 log|2i - is| ds = 2 log 2 - 1
        val = potential.segment_log_integral(2j, 0.0, 1j)
        self.assertAlmostEqual(val, 2.0 * np.log(2.0) - 1.0, places=12)

        # Direction of the segment does not matter
        self.assertAlmostEqual(potential.segment_log_integral(2j, 1j, 0.0),
                               val, places=12)

    def test_external_field(self):

        self._print_header("External field")

        f = FieldSpec(x=0.0, t=0.0, A=1.0)
        self.assertAlmostEqual(potential.external_field(0.3, f),
                               0.3 * np.pi, delta=1e-10)
        self.assertAlmostEqual(potential.external_field(-1.7, f),
                               -1.7 * np.pi, delta=1e-10)
        self.assertAlmostEqual(potential.external_field(2j, f), PHI_2I,
                               places=10)

        # On the imaginary axis the field does not depend on t
        for t in (0.0, 0.3, 1.0):
            g = f.replace(x=0.4, t=t)
            self.assertAlmostEqual(potential.external_field(1.5j, g),
                                   potential.external_field(
                                       1.5j, f.replace(x=0.4)),
                                   places=12)

        # x enters through 2 Im(z) x
        g = f.replace(x=0.5)
        self.assertAlmostEqual(potential.external_field(2j, g) -
                               potential.external_field(2j, f), 2.0,
                               places=12)

        with self.assertRaises(DescentLabError):
            FieldSpec(A=-1.0)

    def test_field_derivative(self):

        self._print_header("Field derivative")

        f = FieldSpec(x=0.3, t=0.2, A=1.0)
        h = 1e-6
        for z in (0.8 + 0.9j, -0.5 + 2.0j, 1.5 + 0.2j):
            fx = (potential.external_field(z + h, f) -
                  potential.external_field(z - h, f)) / (2 * h)
            fy = (potential.external_field(z + 1j * h, f) -
                  potential.external_field(z - 1j * h, f)) / (2 * h)
            d = potential.external_field_derivative(z, f)
            self.assertAlmostEqual(complex(d).real, fx, delta=1e-6)
            self.assertAlmostEqual(complex(d).imag, -fy, delta=1e-6)

    def test_field_reflection(self):

        self._print_header("Field under reflection")

        # phi(-conj z; x, -t) = phi(z; x, t) - 2 pi Re z
        f = FieldSpec(x=0.3, t=0.2, A=1.0)
        g = f.replace(t=-0.2)
        for z in (0.8 + 0.9j, -0.5 + 2.0j, 1.5 + 0.2j):
            lhs = potential.external_field(-np.conj(z), g)
            rhs = potential.external_field(z, f) - 2.0 * np.pi * z.real
            self.assertAlmostEqual(lhs, rhs, places=12)

    def test_point_potential(self):

        self._print_header("Point-mass potential")

        mu = DiscreteMeasure([1j], [2.0], kind='point')
        self.assertAlmostEqual(potential.green_potential(2j, mu), 2.0 * LOG3,
                               places=13)

        mu = DiscreteMeasure([1j, 1j], [1.0, 1.0], kind='point')
        with self.assertRaises(InfiniteSelfEnergyError):
            potential.energy(mu)

    def test_uniform_spike_density(self):

        self._print_header("Uniform density on [0, i]")

        mu = potential.segment_measure(0.0, 1j, 800)
        self.assertAlmostEqual(mu.total_mass(), 1.0, places=12)
        self.assertAlmostEqual(potential.energy(mu), 2.0 * np.log(2.0),
                               delta=1e-4)
        self.assertAlmostEqual(potential.green_potential(2j, mu), -PHI_2I,
                               delta=1e-8)

    def test_mesh_convergence(self):

        self._print_header("Mesh convergence")

        # Density 2s on [0, i] has unit mass and energy exactly 2
        errors = []
        for n in (25, 50, 100):
            mu = potential.segment_measure(0.0, 1j, n,
                                           density=lambda s: 2.0 * s)
            errors.append(abs(potential.energy(mu) - 2.0))

        print(f"errors: {errors}")
        self.assertGreaterEqual(errors[0] / errors[1], 3.0)
        self.assertGreaterEqual(errors[1] / errors[2], 3.0)

    def test_energy_scaling(self):

        self._print_header("Energy scaling")

        mu = potential.segment_measure(0.2 + 0.1j, 0.5 + 1.2j, 60)
        e1 = potential.energy(mu)
        e3 = potential.energy(mu.scaled(3.0))
        self.assertGreater(e1, 0.0)
        self.assertAlmostEqual(e3, 9.0 * e1, delta=1e-12 * e3)

        f = FieldSpec(x=0.2)
        phi = potential.external_field(mu.nodes, f)
        self.assertAlmostEqual(potential.weighted_energy(mu, f),
                               e1 + 2.0 * float(mu.weights @ phi),
                               places=12)

    def test_kernel_psd(self):

        self._print_header("Kernel positive semidefinite")

        rng = np.random.default_rng(7)
        pts = rng.uniform(-1.0, 1.0, 12) + 1j * rng.uniform(0.5, 2.0, 12)
        pts = np.sort_complex(pts)
        mu = potential.segment_measure(pts[0], pts[-1], 80)
        kern = potential.kernel_matrix(mu)
        self.assertTrue(np.allclose(kern, kern.T))
        eigs = np.linalg.eigvalsh(kern)
        self.assertGreater(eigs.min(), -1e-9 * eigs.max())

        # Threads do not change the result
        mu = potential.segment_measure(pts[0], pts[-1], 450)
        self.assertTrue(np.array_equal(potential.kernel_matrix(mu),
                                       potential.kernel_matrix(mu, workers=2)))

    def test_contour(self):

        self._print_header("Contours")

        anchors = [SlitPoint(1e-3, 0.0), SlitPoint(-1e-3, 0.0)]
        c = potential.Contour.from_complex([0.5 + 0.5j, 1j, -0.5 + 0.5j],
                                           anchors)
        pts = c.polyline()
        self.assertEqual(len(pts), 5)
        self.assertEqual(pts[0], 1e-3)
        self.assertEqual(pts[-1], -1e-3)
        self.assertGreater(c.arc_length(), 2.0)


if __name__ == '__main__':
    unittest.main()
