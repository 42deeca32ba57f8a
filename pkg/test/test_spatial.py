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

__title__ = 'Descent Lab Geometry Tester'
__author__ = 'Descent Lab developers'
__copyright__ = 'Copyright (c) 2026 Descent Lab developers'
__license__ = 'MIT License'
__description__ = 'Tests the slit-domain checks and the polyline helpers.'

import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))))

from scripts import spatial
from scripts.exceptions import DescentLabError
from scripts.exceptions import InfeasibleContourError
from scripts.potential import Contour
from scripts.potential import SlitPoint
from scripts.spatial import SlitGeo


class TestSpatial(unittest.TestCase):

    def _print_header(self, title):

        try:
            terminal_sizes = os.get_terminal_size()
            term_width = terminal_sizes.columns - 2
        except OSError:
            term_width = 80

        line = "#" * int(term_width / 2)

        print("\n" + line.center(term_width))
        print("Descent Lab - Geometry Test".center(term_width))
        print(title.center(term_width))
        print(line.center(term_width) + "\n")

    def setUp(self):
        self.geo = SlitGeo(1.0)

    def _contour(self, vertices):
        return Contour.from_complex(vertices, self.geo.anchors())

    def test_anchors(self):

        self._print_header("Anchors")

        right, left = self.geo.anchors()
        self.assertEqual(right.to_complex(), 0.001 + 0j)
        self.assertEqual(left.to_complex(), -0.001 + 0j)

        with self.assertRaises(DescentLabError):
            SlitPoint(0.0, 1.5, 'left', A=1.0)
        with self.assertRaises(DescentLabError):
            SlitPoint(0.2, -0.1)

    def test_over_the_tip(self):

        self._print_header("Contour over the spike tip")

        contour = self._contour([0.5 + 0.5j, 1.5j, -0.5 + 0.5j])
        checks = self.geo.check_contour(contour)

        self.assertEqual(checks['contacts'], [])
        self.assertTrue(checks['encircling'])
        self.assertTrue(self.geo.is_feasible(contour))

    def test_crossing(self):

        self._print_header("Contour through the spike")

        contour = self._contour([0.5 + 0.5j, -0.5 + 0.5j])
        self.assertEqual(self.geo.spike_crossings(contour), [0.5])

        with self.assertRaises(InfeasibleContourError):
            self.geo.check_contour(contour)
        self.assertFalse(self.geo.is_feasible(contour))

    def test_contact(self):

        self._print_header("Contour touching the spike")

        contour = self._contour([0.5 + 0.5j, 0.0005 + 0.7j, 0.5 + 1.2j,
                                 1.5j, -0.5 + 0.5j])
        checks = self.geo.check_contour(contour)
        print(checks)

        self.assertGreaterEqual(len(checks['contacts']), 1)
        for contact in checks['contacts']:
            self.assertEqual(contact.side, 'right')
            self.assertAlmostEqual(contact.im, 0.7, delta=0.01)
        self.assertTrue(checks['encircling'])

    def test_spike_segments(self):

        self._print_header("Segments and distances to the spike")

        p = np.array([0.5 + 0.5j, 0.5 + 1.5j, 0.5 + 0.5j, -0.2 + 0.3j])
        q = np.array([-0.5 + 0.5j, -0.5 + 1.5j, 0.2 + 0.9j, -0.4 + 0.1j])
        self.assertEqual(self.geo.crosses_spike(p, q).tolist(),
                         [True, False, False, False])
        self.assertEqual(self.geo.crosses_spike(0.1 + 0.2j, p).tolist(),
                         [False, False, False, True])

        dist = self.geo.spike_distance(np.array([0.3 + 0.5j, -0.4 + 0.0j,
                                                 0.0 + 1.5j, 0.3 + 1.4j]))
        self.assertTrue(np.allclose(dist, [0.3, 0.4, 0.5, 0.5]))

    def test_vertex_normals(self):

        self._print_header("Vertex normals")

        normals = spatial.vertex_normals([0j, 1 + 0j, 2 + 0j])
        self.assertTrue(np.allclose(normals, 1j))


if __name__ == '__main__':
    unittest.main()
