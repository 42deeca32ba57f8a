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
from concurrent.futures import ThreadPoolExecutor
from scipy import special

from scripts.exceptions import SingularKernelError
from scripts.exceptions import InfiniteSelfEnergyError
from scripts.exceptions import DescentLabError

logger = logging.getLogger('descent_lab')

SIDES = ['left', 'right', 'off_spike']

# Outer quadrature for cell-cell averages. Far pairs use a plain rule, near
#   pairs a rule graded toward both cell ends (x log x kinks at shared corners).
FAR_ORDER = 6
NEAR_ORDER = 8
NEAR_FACTOR = 1.5
GRADING = 0.15
GRADING_LEVELS = 4
ROW_BLOCK = 200


def _gauss_unit(order):
    x, w = special.roots_legendre(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _graded_unit(order, sigma=GRADING, levels=GRADING_LEVELS):
    left = [sigma ** k for k in range(levels, 0, -1)]
    breaks = [0.0] + left + [0.5] + [1.0 - b for b in reversed(left)] + [1.0]
    gx, gw = _gauss_unit(order)
    xs = []
    ws = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        xs.append(lo + (hi - lo) * gx)
        ws.append((hi - lo) * gw)
    return np.concatenate(xs), np.concatenate(ws)


_FAR_RULE = _gauss_unit(FAR_ORDER)
_NEAR_RULE = _graded_unit(NEAR_ORDER)


class SlitPoint:
    """
    A point of the closed slit upper half-plane. Points on the spike
        [0, iA] carry the side they are approached from.
    """

    __slots__ = ('re', 'im', 'side')

    def __init__(self, re, im, side='off_spike', A=None):
        """
        :param re: The real part.
        :type  re: float
        :param im: The imaginary part (>= 0).
        :type  im: float
        :param side: One of 'left', 'right' or 'off_spike'.
        :type  side: str
        :param A: The spike height used to validate the side tag.
        :type  A: float or None
        """

        if im < 0:
            raise DescentLabError(f"Point {re}+{im}i lies below the real "
                                  f"axis.")
        if side not in SIDES:
            raise DescentLabError(f"Unknown spike side '{side}'.")
        if side != 'off_spike':
            if re != 0 or im <= 0 or (A is not None and im > A):
                raise DescentLabError(f"Side '{side}' is only meaningful "
                                      f"on the spike (got {re}+{im}i).")

        object.__setattr__(self, 're', float(re))
        object.__setattr__(self, 'im', float(im))
        object.__setattr__(self, 'side', side)

    def __setattr__(self, key, value):
        raise AttributeError("SlitPoint is immutable.")

    def __eq__(self, other):
        if not isinstance(other, SlitPoint):
            return False
        return (self.re, self.im, self.side) == \
               (other.re, other.im, other.side)

    def __hash__(self):
        return hash((self.re, self.im, self.side))

    def __reduce__(self):
        return SlitPoint, (self.re, self.im, self.side)

    def __repr__(self):
        return f"SlitPoint({self.re!r}, {self.im!r}, '{self.side}')"

    @classmethod
    def from_complex(cls, z, side='off_spike', A=None):
        return cls(np.real(z), np.imag(z), side, A)

    def to_complex(self):
        return complex(self.re, self.im)


def as_complex(z):
    """
    Converts a SlitPoint, a list of SlitPoints or numbers to complex values.

    :param z: The point(s).
    :type  z: SlitPoint, list, complex or numpy.ndarray

    :return: The complex value(s).
    :rtype: complex or numpy.ndarray
    """

    if isinstance(z, SlitPoint):
        return z.to_complex()
    if isinstance(z, (list, tuple)):
        return np.array([as_complex(p) for p in z], dtype=complex)
    if np.isscalar(z):
        return complex(z)
    return np.asarray(z, dtype=complex)


class Contour:
    """
    An oriented piecewise-linear continuum in the slit upper half-plane
        running from the anchor near 0+ to the anchor near 0-.
    """

    def __init__(self, vertices, endpoint_anchors, closed_flag=False):
        """
        :param vertices: The movable interior vertices, in order.
        :type  vertices: list[SlitPoint]
        :param endpoint_anchors: The anchors near 0+ and 0-.
        :type  endpoint_anchors: tuple(SlitPoint, SlitPoint)
        :param closed_flag: True if the polyline is closed.
        :type  closed_flag: bool
        """

        self.vertices = tuple(vertices)
        self.endpoint_anchors = tuple(endpoint_anchors)
        self.closed_flag = bool(closed_flag)

        if len(self.endpoint_anchors) != 2:
            raise DescentLabError("A contour needs exactly two endpoint "
                                  "anchors.")

        pts = self.polyline()
        steps = np.abs(np.diff(pts))
        if np.any(steps == 0):
            raise DescentLabError("Consecutive contour vertices coincide.")
        if not np.isfinite(steps.sum()) or steps.sum() <= 0:
            raise DescentLabError("Contour length must be finite and "
                                  "positive.")

    def __repr__(self):
        return f"Contour({len(self.vertices)} vertices, " \
               f"length={self.arc_length():.6g})"

    def polyline(self):
        """
        Gets the full vertex list, anchors included, as complex values.

        :return: The polyline vertices.
        :rtype: numpy.ndarray
        """

        pts = [self.endpoint_anchors[0]] + list(self.vertices) + \
              [self.endpoint_anchors[1]]
        pts = as_complex(pts)
        if self.closed_flag:
            pts = np.append(pts, pts[0])
        return pts

    def arc_length(self):
        return float(np.abs(np.diff(self.polyline())).sum())

    def with_vertices(self, vertices):
        """
        Creates a contour with the same anchors and new interior vertices.

        :param vertices: Complex values or SlitPoints.
        :type  vertices: list or numpy.ndarray

        :return: The new contour.
        :rtype: Contour
        """

        pts = [v if isinstance(v, SlitPoint) else
               SlitPoint(np.real(v), max(np.imag(v), 0.0)) for v in vertices]
        return Contour(pts, self.endpoint_anchors, self.closed_flag)

    @classmethod
    def from_complex(cls, vertices, anchors, closed_flag=False):
        verts = [v if isinstance(v, SlitPoint) else
                 SlitPoint(np.real(v), np.imag(v)) for v in vertices]
        anch = [a if isinstance(a, SlitPoint) else
                SlitPoint(np.real(a), np.imag(a)) for a in anchors]
        return cls(verts, anch, closed_flag)


class DiscreteMeasure:
    """
    A positive measure represented by quadrature nodes and weights.

    A 'density' measure stands for a piecewise-constant density on straight
        cells (weight = density x cell length). A 'point' measure is a sum of
        point masses whose self-energy is regularized by self_term.
    """

    def __init__(self, nodes, weights, cell_lengths=None, kind='density',
                 cell_a=None, cell_b=None, self_term=1.0, arc=None):
        """
        :param nodes: The node locations.
        :type  nodes: list[SlitPoint] or numpy.ndarray
        :param weights: The nonnegative node weights.
        :type  weights: list[float] or numpy.ndarray
        :param cell_lengths: The arc length of each node's cell.
        :type  cell_lengths: list[float] or numpy.ndarray
        :param kind: 'density' or 'point'.
        :type  kind: str
        :param cell_a: Start of each straight cell (density measures).
        :type  cell_a: numpy.ndarray
        :param cell_b: End of each straight cell (density measures).
        :type  cell_b: numpy.ndarray
        :param self_term: Diagonal regularization of point measures.
        :type  self_term: float
        :param arc: Arc-length position of each node along its contour.
        :type  arc: numpy.ndarray
        """

        self.nodes = np.atleast_1d(as_complex(nodes)).astype(complex)
        self.weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if cell_lengths is None:
            cell_lengths = np.ones(len(self.nodes))
        self.cell_lengths = np.atleast_1d(np.asarray(cell_lengths,
                                                     dtype=float))
        self.kind = kind
        self.self_term = float(self_term)

        n = len(self.nodes)
        if len(self.weights) != n or len(self.cell_lengths) != n:
            raise DescentLabError("Nodes, weights and cell lengths must have "
                                  "the same length.")
        if np.any(self.weights < 0):
            raise DescentLabError("Measure weights must be nonnegative.")
        if n and np.any(self.cell_lengths <= 0):
            raise DescentLabError("Cell lengths must be positive.")
        if kind not in ('density', 'point'):
            raise DescentLabError(f"Unknown measure kind '{kind}'.")
        if n and np.any(self.nodes.imag < 0):
            raise DescentLabError("Measure nodes must lie in the closed "
                                  "upper half-plane.")

        if cell_a is None or cell_b is None:
            # Vertical cells centred on the nodes
            half = 0.5j * self.cell_lengths
            lo = self.nodes - half
            shift = np.minimum(lo.imag, 0.0)
            cell_a = lo - 1j * shift
            cell_b = self.nodes + half - 1j * shift
        self.cell_a = np.atleast_1d(np.asarray(cell_a, dtype=complex))
        self.cell_b = np.atleast_1d(np.asarray(cell_b, dtype=complex))

        self.arc = None if arc is None else np.asarray(arc, dtype=float)
        self._kernel = None

    def __len__(self):
        return len(self.nodes)

    def __repr__(self):
        return f"DiscreteMeasure({len(self)} nodes, kind='{self.kind}', " \
               f"mass={self.total_mass():.6g})"

    def total_mass(self):
        return float(self.weights.sum())

    def get_nodes(self):
        """
        Gets the nodes as SlitPoint objects.

        :return: The nodes.
        :rtype: list[SlitPoint]
        """
        return [SlitPoint.from_complex(z) for z in self.nodes]

    def density(self):
        return self.weights / self.cell_lengths

    def with_weights(self, weights):
        """
        Creates a measure on the same nodes and cells with new weights. The
            kernel matrix is shared.

        :param weights: The new weights.
        :type  weights: numpy.ndarray

        :return: The new measure.
        :rtype: DiscreteMeasure
        """

        out = DiscreteMeasure(self.nodes, weights, self.cell_lengths,
                              self.kind, self.cell_a, self.cell_b,
                              self.self_term, self.arc)
        out._kernel = self._kernel
        return out

    def scaled(self, factor):
        return self.with_weights(self.weights * float(factor))

    def kernel(self, workers=1):
        """
        Gets the (cached) kernel matrix of the measure's nodes.

        :param workers: Number of threads used to assemble rows.
        :type  workers: int

        :return: The symmetric kernel matrix.
        :rtype: numpy.ndarray
        """

        if self._kernel is None:
            self._kernel = kernel_matrix(self, workers=workers)
        return self._kernel


class FieldSpec:
    """
    The parameters of the external field: the NLS field for (x, t, A), or a
        synthetic field given by a function of complex z.
    """

    def __init__(self, kind='nls', x=0.0, t=0.0, A=1.0, synthetic_eval=None,
                 synthetic_deriv=None):
        """
        :param kind: 'nls' or 'synthetic'.
        :type  kind: str
        :param x: The space variable.
        :type  x: float
        :param t: The time variable.
        :type  t: float
        :param A: The spike height (sech amplitude), > 0.
        :type  A: float
        :param synthetic_eval: Function of a complex array returning the
                    field (synthetic kind).
        :type  synthetic_eval: callable
        :param synthetic_deriv: Optional complex derivative of the field's
                    analytic completion (synthetic kind).
        :type  synthetic_deriv: callable
        """

        if kind not in ('nls', 'synthetic'):
            raise DescentLabError(f"Unknown field kind '{kind}'.")
        if A <= 0:
            raise DescentLabError("The field amplitude A must be positive.")
        if kind == 'synthetic' and synthetic_eval is None:
            raise DescentLabError("A synthetic field needs synthetic_eval.")

        self.kind = kind
        self.x = float(x)
        self.t = float(t)
        self.A = float(A)
        self.synthetic_eval = synthetic_eval
        self.synthetic_deriv = synthetic_deriv

    def __repr__(self):
        if self.kind == 'synthetic':
            return f"FieldSpec(synthetic, A={self.A})"
        return f"FieldSpec(nls, x={self.x}, t={self.t}, A={self.A})"

    def replace(self, **kwargs):
        params = {'kind': self.kind, 'x': self.x, 't': self.t, 'A': self.A,
                  'synthetic_eval': self.synthetic_eval,
                  'synthetic_deriv': self.synthetic_deriv}
        params.update(kwargs)
        return FieldSpec(**params)

    def to_dict(self):
        return {'kind': self.kind, 'x': self.x, 't': self.t, 'A': self.A}


def _antiderivative(u, beta):
    # d/du of this is 0.5*log(u^2 + beta^2)
    return 0.5 * special.xlogy(u, u * u + beta * beta) - u + \
        beta * np.arctan2(u, beta)


def segment_log_integral(p, a, b):
    """
    Integrates log|p - eta| over the straight segment from a to b with
        respect to arc length, in closed form.

    :param p: The evaluation point(s).
    :type  p: complex or numpy.ndarray
    :param a: The segment start(s).
    :type  a: complex or numpy.ndarray
    :param b: The segment end(s).
    :type  b: complex or numpy.ndarray

    :return: The integral(s).
    :rtype: float or numpy.ndarray
    """

    p = np.asarray(p, dtype=complex)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)

    d = b - a
    ell = np.abs(d)
    e = d / ell
    q = (p - a) * np.conj(e)
    alpha = q.real
    beta = np.abs(q.imag)

    return _antiderivative(ell - alpha, beta) - \
        _antiderivative(-alpha, beta)


def green(z, eta):
    """
    The Green's function of the upper half-plane,
        G(z, eta) = log(|z - conj(eta)| / |z - eta|).

    :param z: The first point.
    :type  z: SlitPoint or complex or numpy.ndarray
    :param eta: The second point.
    :type  eta: SlitPoint or complex or numpy.ndarray

    :return: G(z, eta).
    :rtype: float or numpy.ndarray
    """

    z = as_complex(z)
    eta = as_complex(eta)

    den = np.abs(z - eta)
    if np.any(den == 0):
        raise SingularKernelError("Singular kernel evaluation: coincident "
                                  "points.")
    num = np.abs(z - np.conj(eta))

    out = np.log(num / den)
    if np.ndim(out) == 0:
        return float(out)
    return out


def spike_green_integral(z, A):
    """
    Integrates G(z, is) over s in [0, A] in closed form.

    :param z: The evaluation point(s).
    :type  z: complex or numpy.ndarray
    :param A: The spike height.
    :type  A: float

    :return: The integral(s).
    :rtype: float or numpy.ndarray
    """

    return segment_log_integral(z, 0.0, -1j * A) - \
        segment_log_integral(z, 0.0, 1j * A)


def external_field(z, f):
    """
    Evaluates the external field phi(z) for the given field parameters.

    For the NLS field, phi(z) = -int_0^A G(z, is) ds - Re(pi(iA - z) +
        2i(zx + z^2 t)). The field is continuous across the spike, so the
        side tag of a spike point does not change the value.

    :param z: The point(s).
    :type  z: SlitPoint or complex or numpy.ndarray
    :param f: The field parameters.
    :type  f: FieldSpec

    :return: phi(z).
    :rtype: float or numpy.ndarray
    """

    z = as_complex(z)

    if f.kind == 'synthetic':
        out = np.asarray(f.synthetic_eval(np.asarray(z)), dtype=float)
    else:
        a = np.real(z)
        b = np.imag(z)
        out = -spike_green_integral(z, f.A) + np.pi * a + \
            2.0 * b * f.x + 4.0 * a * b * f.t

    if np.ndim(out) == 0:
        return float(out)
    return out


def external_field_derivative(z, f, h=1e-6):
    """
    Gets the complex derivative of the analytic completion of the field,
        so that phi_x - i phi_y is returned.

    :param z: The point(s), off the spike.
    :type  z: complex or numpy.ndarray
    :param f: The field parameters.
    :type  f: FieldSpec
    :param h: Step of the central differences used for synthetic fields
                without synthetic_deriv.
    :type  h: float

    :return: The derivative.
    :rtype: complex or numpy.ndarray
    """

    z = np.asarray(as_complex(z), dtype=complex)

    if f.kind == 'synthetic':
        if f.synthetic_deriv is not None:
            return f.synthetic_deriv(z)
        fx = (external_field(z + h, f) - external_field(z - h, f)) / (2 * h)
        fy = (external_field(z + 1j * h, f) -
              external_field(z - 1j * h, f)) / (2 * h)
        return fx - 1j * fy

    A = f.A
    with np.errstate(divide='ignore', invalid='ignore'):
        logs = np.log((z + 1j * A) / z) + np.log((z - 1j * A) / z)
    return 1j * logs + np.pi - 2j * (f.x + 2.0 * z * f.t)


def _cell_average_rows(rows, mu, rule, conj):
    """
    Averages log|z - eta| over cell i (outer rule) and cell j (closed form)
        for the given rows against every column.
    """

    gx, gw = rule
    a = mu.cell_a
    b = mu.cell_b
    if conj:
        a = np.conj(a)
        b = np.conj(b)

    pts = mu.cell_a[rows, None] + \
        (mu.cell_b[rows, None] - mu.cell_a[rows, None]) * gx[None, :]
    inner = segment_log_integral(pts[:, :, None], a[None, None, :],
                                 b[None, None, :])
    return np.einsum('g,rgj->rj', gw, inner) / mu.cell_lengths[None, :]


def _cell_average_pair(i, j, mu, conj):
    gx, gw = _NEAR_RULE
    a = mu.cell_a[j]
    b = mu.cell_b[j]
    if conj:
        a = np.conj(a)
        b = np.conj(b)
    pts = mu.cell_a[i] + (mu.cell_b[i] - mu.cell_a[i]) * gx
    return float(np.dot(gw, segment_log_integral(pts, a, b))) / \
        mu.cell_lengths[j]


def _near_pairs(mu, conj):
    z = mu.nodes
    other = np.conj(z) if conj else z
    reach = NEAR_FACTOR * (mu.cell_lengths[:, None] +
                           mu.cell_lengths[None, :])
    close = np.abs(z[:, None] - other[None, :]) < reach
    if not conj:
        np.fill_diagonal(close, False)
    return np.argwhere(close)


def _point_kernel(mu):
    z = mu.nodes
    diff = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(diff, np.inf)
    if np.any(diff == 0):
        raise InfiniteSelfEnergyError("Infinite self-energy: repeated node "
                                      "in a point-mass measure.")
    num = np.abs(z[:, None] - np.conj(z)[None, :])
    kern = np.log(num / diff)
    np.fill_diagonal(kern, mu.self_term)
    return kern


def kernel_matrix(mu, workers=1):
    """
    Assembles the energy kernel of a measure's nodes.

    Density measures use the exact average of G over each pair of straight
        cells (closed-form inner integral, Gauss-Legendre outer rule), so the
        diagonal carries the analytic self-cell correction. Point measures
        use G off the diagonal and self_term on it.

    :param mu: The measure.
    :type  mu: DiscreteMeasure
    :param workers: Number of threads assembling row blocks; the result
                does not depend on it.
    :type  workers: int

    :return: The symmetric kernel matrix.
    :rtype: numpy.ndarray
    """

    n = len(mu)
    if n == 0:
        return np.zeros((0, 0))

    if mu.kind == 'point':
        return _point_kernel(mu)

    blocks = [np.arange(s, min(s + ROW_BLOCK, n))
              for s in range(0, n, ROW_BLOCK)]

    def _rows(rows):
        return _cell_average_rows(rows, mu, _FAR_RULE, True) - \
            _cell_average_rows(rows, mu, _FAR_RULE, False)

    if workers is not None and workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_rows, blocks))
    else:
        parts = [_rows(rows) for rows in blocks]
    kern = np.vstack(parts)

    near = {(int(i), int(j)) for i, j in _near_pairs(mu, False)}
    near.update((int(i), int(j)) for i, j in _near_pairs(mu, True)
                if i != j)
    for i, j in sorted(near):
        kern[i, j] = _cell_average_pair(i, j, mu, True) - \
            _cell_average_pair(i, j, mu, False)

    ell = mu.cell_lengths
    diag = np.array([_cell_average_pair(i, i, mu, True) for i in range(n)])
    np.fill_diagonal(kern, diag - (np.log(ell) - 1.5))

    return 0.5 * (kern + kern.T)


def green_potential(z, mu):
    """
    Evaluates the Green potential V(z) = int G(z, eta) dmu(eta).

    For density measures the cell integrals are done in closed form, which
        also regularizes evaluation at a node.

    :param z: The point(s).
    :type  z: SlitPoint or complex or numpy.ndarray
    :param mu: The measure.
    :type  mu: DiscreteMeasure

    :return: V(z).
    :rtype: float or numpy.ndarray
    """

    z = np.asarray(as_complex(z), dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)

    if len(mu) == 0:
        out = np.zeros(z.shape)
    elif mu.kind == 'point':
        out = green(z[:, None], mu.nodes[None, :]) @ mu.weights
    else:
        dens = mu.density()
        direct = segment_log_integral(z[:, None], mu.cell_a[None, :],
                                      mu.cell_b[None, :])
        mirror = segment_log_integral(z[:, None], np.conj(mu.cell_a)[None, :],
                                      np.conj(mu.cell_b)[None, :])
        out = (mirror - direct) @ dens

    if scalar:
        return float(out[0])
    return out


def node_potential(mu):
    """
    Gets the discrete potential at the nodes, i.e. K w (cell averages).

    :param mu: The measure.
    :type  mu: DiscreteMeasure

    :return: The potential at each node.
    :rtype: numpy.ndarray
    """

    if len(mu) == 0:
        return np.zeros(0)
    return mu.kernel() @ mu.weights


def energy(mu):
    """
    Gets the free energy E(mu) = int int G dmu dmu of the measure.

    :param mu: The measure.
    :type  mu: DiscreteMeasure

    :return: The energy.
    :rtype: float
    """

    if len(mu) == 0:
        return 0.0
    w = mu.weights
    return float(w @ (mu.kernel() @ w))


def weighted_energy(mu, f, phi=None):
    """
    Gets the weighted energy E(mu) + 2 int phi dmu.

    :param mu: The measure.
    :type  mu: DiscreteMeasure
    :param f: The field parameters.
    :type  f: FieldSpec
    :param phi: Field values at the nodes, if already known.
    :type  phi: numpy.ndarray

    :return: The weighted energy.
    :rtype: float
    """

    if len(mu) == 0:
        return 0.0
    if phi is None:
        phi = np.atleast_1d(external_field(mu.nodes, f))
    w = mu.weights
    return float(w @ (mu.kernel() @ w)) + 2.0 * float(w @ phi)


def segment_measure(a, b, n, density=None, kind='density'):
    """
    Discretizes a density on the straight segment [a, b] with n equal cells.

    :param a: The segment start.
    :type  a: complex
    :param b: The segment end.
    :type  b: complex
    :param n: The number of cells.
    :type  n: int
    :param density: Function of the arc-length fraction in [0, 1]; uniform
                unit density if None.
    :type  density: callable
    :param kind: The measure kind.
    :type  kind: str

    :return: The measure.
    :rtype: DiscreteMeasure
    """

    a = complex(a)
    b = complex(b)
    s = np.linspace(0.0, 1.0, n + 1)
    starts = a + (b - a) * s[:-1]
    ends = a + (b - a) * s[1:]
    mid = 0.5 * (s[:-1] + s[1:])
    ell = np.abs(ends - starts)

    dens = np.ones(n) if density is None else np.asarray(density(mid),
                                                         dtype=float)
    return DiscreteMeasure(0.5 * (starts + ends), dens * ell, ell, kind,
                           starts, ends)
