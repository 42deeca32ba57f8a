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

import logging
import numpy as np
import shapely
from shapely.geometry import LineString
from shapely.geometry import Point
from shapely.geometry import Polygon

from scripts.potential import SlitPoint
from scripts.potential import as_complex
from scripts.exceptions import EmptySetError
from scripts.exceptions import InfeasibleContourError


class SlitGeo:
    """
    The SlitGeo class contains the geometric checks of the slit upper
        half-plane (the upper half-plane with the spike [0, iA] removed),
        mainly using shapely.
    """

    def __init__(self, A=1.0, keep_out=None, anchor_offset=None):
        """
        Initializer for the SlitGeo object.

        :param A: The spike height.
        :type  A: float
        :param keep_out: Keep-out distance from the open spike
                    (default 1e-3 * A).
        :type  keep_out: float
        :param anchor_offset: Offset of the endpoint anchors from the origin
                    (default 1e-3 * A).
        :type  anchor_offset: float
        """

        self.A = float(A)
        self.keep_out = 1e-3 * self.A if keep_out is None else float(keep_out)
        self.anchor_offset = 1e-3 * self.A if anchor_offset is None \
            else float(anchor_offset)

        self.logger = logging.getLogger('descent_lab')

        self.spike = LineString([(0.0, 0.0), (0.0, self.A)])
        origin = Point(0.0, 0.0).buffer(2.0 * self.anchor_offset)
        self.zone = self.spike.buffer(self.keep_out).difference(origin)

    def anchors(self):
        """
        Gets the endpoint anchors near 0+ and 0-.

        :return: The two anchors.
        :rtype: tuple(SlitPoint, SlitPoint)
        """
        return (SlitPoint(self.anchor_offset, 0.0),
                SlitPoint(-self.anchor_offset, 0.0))

    def contour_line(self, contour):
        pts = contour.polyline()
        return LineString(np.column_stack([pts.real, pts.imag]))

    def crosses_spike(self, p, q):
        """
        Checks which segments p -> q pass through the open spike from one
            side to the other.

        :param p: The segment starts.
        :type  p: numpy.ndarray
        :param q: The segment ends.
        :type  q: numpy.ndarray

        :return: One flag per segment.
        :rtype: numpy.ndarray
        """

        p = np.atleast_1d(np.asarray(p, dtype=complex))
        q = np.atleast_1d(np.asarray(q, dtype=complex))
        p, q = np.broadcast_arrays(p, q)

        sign = p.real * q.real < 0
        out = np.zeros(p.shape, dtype=bool)
        if not np.any(sign):
            return out

        frac = p.real[sign] / (p.real[sign] - q.real[sign])
        heights = p.imag[sign] + (q.imag[sign] - p.imag[sign]) * frac
        out[sign] = (heights > 0.0) & (heights < self.A)
        return out

    def spike_crossings(self, contour):
        """
        Finds the heights at which polyline edges pass through the open
            spike from one side to the other.

        :param contour: The contour.
        :type  contour: potential.Contour

        :return: The crossing heights.
        :rtype: list[float]
        """

        pts = contour.polyline()
        p = pts[:-1]
        q = pts[1:]
        cross = self.crosses_spike(p, q)
        if not np.any(cross):
            return []

        p = p[cross]
        q = q[cross]
        frac = p.real / (p.real - q.real)
        heights = p.imag + (q.imag - p.imag) * frac

        return [float(h) for h in heights]

    def spike_distance(self, points):
        """
        Gets the Euclidean distance from each point to the segment [0, iA].

        :param points: The points.
        :type  points: numpy.ndarray

        :return: The distances.
        :rtype: numpy.ndarray
        """

        z = np.atleast_1d(np.asarray(as_complex(points), dtype=complex))
        geoms = shapely.points(np.column_stack([z.real, z.imag]))
        return shapely.distance(geoms, self.spike)

    def spike_contacts(self, contour):
        """
        Gets the points where the contour enters the keep-out zone around
            the spike. Each connected component of the overlap gives one
            contact point, projected onto the spike.

        :param contour: The contour.
        :type  contour: potential.Contour

        :return: The contact points.
        :rtype: list[SlitPoint]
        """

        overlap = self.contour_line(contour).intersection(self.zone)
        if overlap.is_empty:
            return []

        parts = getattr(overlap, 'geoms', [overlap])
        contacts = []
        for part in parts:
            rep = part.representative_point()
            y = min(max(rep.y, 0.0), self.A)
            if y <= 0.0:
                continue
            side = 'right' if rep.x >= 0 else 'left'
            contacts.append(SlitPoint(0.0, y, side, self.A))

        contacts.sort(key=lambda c: (c.im, c.side))
        return contacts

    def is_encircling(self, contour):
        """
        Checks whether the contour, closed through the origin, encloses the
            whole spike.

        :param contour: The contour.
        :type  contour: potential.Contour

        :return: True if the spike lies inside the closed contour.
        :rtype: bool
        """

        pts = contour.polyline()
        ring = np.column_stack([pts.real, pts.imag])
        poly = Polygon(np.vstack([ring, [[0.0, 0.0]]]))
        if not poly.is_valid:
            poly = shapely.make_valid(poly)
        inner = LineString([(0.0, 2.0 * self.anchor_offset),
                            (0.0, self.A)])
        return bool(poly.contains(inner))

    def check_contour(self, contour):
        """
        Validates a contour against the slit domain.

        :param contour: The contour.
        :type  contour: potential.Contour

        :return: A dictionary with 'contacts' and 'encircling' entries.
        :rtype: dict
        """

        pts = contour.polyline()
        if np.any(pts.imag < 0):
            raise InfeasibleContourError("Contour leaves the upper "
                                         "half-plane.", contour=contour)

        crossings = self.spike_crossings(contour)
        if crossings:
            raise InfeasibleContourError(f"Contour crosses the spike at "
                                         f"height {crossings[0]:.6g}.",
                                         contour=contour)

        return {'contacts': self.spike_contacts(contour),
                'encircling': self.is_encircling(contour)}

    def is_feasible(self, contour):
        try:
            self.check_contour(contour)
        except InfeasibleContourError:
            return False
        return True

    def _signs(self, points):
        z = as_complex(points)
        z = np.atleast_1d(z)
        sign = np.sign(z.real)
        if isinstance(points, (list, tuple)):
            for k, p in enumerate(points):
                if isinstance(p, SlitPoint) and p.side != 'off_spike':
                    sign[k] = -1.0 if p.side == 'left' else 1.0
        return z, sign

    def distance_matrix(self, E, F):
        """
        Gets the slit-aware distances between two point sets. Segments that
            would pass through the open spike are replaced by the path
            around the spike tip.

        :param E: The first point set.
        :type  E: list[SlitPoint] or numpy.ndarray
        :param F: The second point set.
        :type  F: list[SlitPoint] or numpy.ndarray

        :return: The distance matrix (len(E) x len(F)).
        :rtype: numpy.ndarray
        """

        z, sz = self._signs(E)
        w, sw = self._signs(F)

        zz = z[:, None]
        ww = w[None, :]
        direct = np.abs(zz - ww)

        opposite = (sz[:, None] * sw[None, :]) < 0
        ax = np.abs(zz.real)
        bx = np.abs(ww.real)
        span = ax + bx
        with np.errstate(invalid='ignore', divide='ignore'):
            frac = np.where(span > 0, ax / span, 0.0)
        height = zz.imag + (ww.imag - zz.imag) * frac
        height = np.where(span > 0, height, 0.0)

        tip = 1j * self.A
        around = np.abs(zz - tip) + np.abs(tip - ww)
        blocked = opposite & (height < self.A)

        return np.where(blocked, around, direct)

    def hausdorff_distance(self, E, F):
        """
        Gets the Hausdorff distance between two finite point sets using the
            slit-aware distance.

        :param E: The first point set.
        :type  E: list[SlitPoint] or numpy.ndarray
        :param F: The second point set.
        :type  F: list[SlitPoint] or numpy.ndarray

        :return: The Hausdorff distance.
        :rtype: float
        """

        if len(E) == 0 or len(F) == 0:
            raise EmptySetError("Hausdorff distance of an empty point set.")

        dist = self.distance_matrix(E, F)
        one_way = dist.min(axis=1).max()
        other_way = dist.min(axis=0).max()

        return float(max(one_way, other_way))


def vertex_normals(points):
    """
    Gets unit normals (tangent rotated by +90 degrees) at every polyline
        vertex, from central differences.

    :param points: The polyline vertices.
    :type  points: numpy.ndarray

    :return: The normals.
    :rtype: numpy.ndarray
    """

    points = np.asarray(points, dtype=complex)
    tangent = np.gradient(points)
    tangent = tangent / np.abs(tangent)
    return 1j * tangent
