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
from scipy import integrate
from scipy import linalg

from scripts.potential import DiscreteMeasure
from scripts.potential import as_complex
from scripts.potential import external_field
from scripts.potential import weighted_energy
from scripts.exceptions import ConvergenceError
from scripts.exceptions import DescentLabError
from scripts.exceptions import OnSupportError

logger = logging.getLogger('descent_lab')

MIN_NODES = 8


class SolverOptions:
    """
    Options of the inner (equilibrium) solver.
    """

    def __init__(self, **kwargs):
        """
        :param kwargs: Options include:<br>
                n_nodes (int): Number of mesh cells on the contour.<br>
                energy_tol (float): Relative energy decrease at which the
                    projected-gradient stage stops.<br>
                max_iter (int): Maximum number of active-set iterations.<br>
                pg_iter (int): Maximum number of projected-gradient
                    iterations.<br>
                support_threshold (float): Relative weight above which a
                    node is supported.<br>
                density_cap (float): Optional upper bound on the density
                    (None for the unconstrained problem).<br>
                clustering (bool): Cluster mesh cells toward the contour
                    endpoints.<br>
                edge_refine (int): Number of remeshing passes clustering
                    cells toward detected band edges.<br>
                workers (int): Threads used for kernel assembly.
        :type  kwargs: dict
        """

        self.n_nodes = 400
        if kwargs.get('n_nodes') is not None:
            self.n_nodes = int(kwargs.get('n_nodes'))

        self.energy_tol = 1e-10
        if kwargs.get('energy_tol') is not None:
            self.energy_tol = float(kwargs.get('energy_tol'))

        self.max_iter = 5000
        if kwargs.get('max_iter') is not None:
            self.max_iter = int(kwargs.get('max_iter'))

        self.pg_iter = 500
        if kwargs.get('pg_iter') is not None:
            self.pg_iter = int(kwargs.get('pg_iter'))

        self.support_threshold = 1e-8
        if kwargs.get('support_threshold') is not None:
            self.support_threshold = float(kwargs.get('support_threshold'))

        self.density_cap = None
        if kwargs.get('density_cap') is not None:
            self.density_cap = float(kwargs.get('density_cap'))

        self.clustering = True
        if kwargs.get('clustering') is not None:
            self.clustering = bool(kwargs.get('clustering'))

        self.edge_refine = 1
        if kwargs.get('edge_refine') is not None:
            self.edge_refine = int(kwargs.get('edge_refine'))

        self.workers = 1
        if kwargs.get('workers') is not None:
            self.workers = int(kwargs.get('workers'))

        if self.energy_tol <= 0 or self.support_threshold <= 0:
            raise DescentLabError("Solver tolerances must be positive.")
        if self.density_cap is not None and self.density_cap <= 0:
            raise DescentLabError("The density cap must be positive.")

    def copy(self, **kwargs):
        params = dict(vars(self))
        params.update(kwargs)
        return SolverOptions(**params)

    def to_dict(self):
        return dict(vars(self))


class EquilibriumSolution:
    """
    The equilibrium measure of a contour with its energy, optimality
        residuals and band structure.
    """

    def __init__(self, contour, measure, field, **kwargs):
        """
        :param contour: The contour (None for a bare measure problem).
        :type  contour: potential.Contour
        :param measure: The equilibrium measure.
        :type  measure: potential.DiscreteMeasure
        :param field: The external field.
        :type  field: potential.FieldSpec
        :param kwargs: energy_value, iterations, clamp, history, threshold
                    and capped (mask of nodes at the density cap).
        :type  kwargs: dict
        """

        self.contour = contour
        self.measure = measure
        self.field = field

        self.energy_value = kwargs.get('energy_value')
        if self.energy_value is None:
            self.energy_value = weighted_energy(measure, field)
        self.iterations = int(kwargs.get('iterations', 0))
        self.clamp = float(kwargs.get('clamp', 0.0))
        self.history = list(kwargs.get('history', []))
        self.threshold = float(kwargs.get('threshold', 1e-8))

        self.capped = kwargs.get('capped')
        if self.capped is None:
            self.capped = np.zeros(len(measure), dtype=bool)

        w = measure.weights
        top = w.max() if len(w) else 0.0
        self.support_mask = w > self.threshold * top if top > 0 \
            else np.zeros(len(w), dtype=bool)

        structure = classify_bands(self, self.threshold)
        self.bands = structure['bands']
        self.gaps = structure['gaps']
        self.genus = structure['genus']

        self.kkt_on_support, self.kkt_off_support = kkt_residual(self, field)

    def __repr__(self):
        return f"EquilibriumSolution(energy={self.energy_value:.10g}, " \
               f"bands={len(self.bands)}, iterations={self.iterations})"

    def to_dict(self):
        """
        Gets the solution as a JSON-ready dictionary.

        :return: The solution values.
        :rtype: dict
        """

        mu = self.measure
        return {'energy': self.energy_value,
                'kkt_on_support': self.kkt_on_support,
                'kkt_off_support': self.kkt_off_support,
                'iterations': self.iterations,
                'clamp': self.clamp,
                'genus': self.genus,
                'bands': [list(b) for b in self.bands],
                'gaps': [list(g) for g in self.gaps],
                'mass': mu.total_mass(),
                'nodes_re': mu.nodes.real.tolist(),
                'nodes_im': mu.nodes.imag.tolist(),
                'weights': mu.weights.tolist(),
                'cell_lengths': mu.cell_lengths.tolist()}


def _breakpoints(length, n, clustering, edges):
    if not clustering:
        return np.linspace(0.0, length, n + 1)

    eta = 1e-6 * length
    m = max(40 * n, 4000)
    fine = 0.5 * length * (1.0 - np.cos(np.pi * np.linspace(0.0, 1.0, m)))
    edges = [e for e in (edges or []) if 0.0 < e < length]
    if edges:
        offsets = length * np.geomspace(1e-7, 1.0, 400)
        extra = [np.clip(np.concatenate([e - offsets, e + offsets]), 0.0,
                         length) for e in edges]
        fine = np.unique(np.concatenate([fine] + extra))

    def _normalized(q):
        return q / integrate.trapezoid(q, fine)

    dens = 0.3 * _normalized(np.ones_like(fine))
    dens += 0.5 * _normalized(1.0 / np.sqrt((fine + eta) *
                                            (length - fine + eta)))
    for e in edges:
        dens += (0.2 / len(edges)) * \
            _normalized(1.0 / np.sqrt(np.abs(fine - e) + eta))
    if not edges:
        dens += 0.2 * _normalized(np.ones_like(fine))

    cdf = integrate.cumulative_trapezoid(dens, fine, initial=0.0)
    cdf /= cdf[-1]
    breaks = np.interp(np.linspace(0.0, 1.0, n + 1), cdf, fine)
    breaks[0] = 0.0
    breaks[-1] = length

    return breaks


def _snap(breaks, vertex_arcs):
    used = set()
    for v in vertex_arcs:
        k = int(np.argmin(np.abs(breaks[1:-1] - v))) + 1
        if k in used:
            continue
        if breaks[k - 1] < v < breaks[k + 1]:
            breaks[k] = v
            used.add(k)
    return breaks


def mesh_contour(contour, n_nodes, clustering=True, band_edges=None):
    """
    Meshes a contour into straight cells, clustered toward the endpoints
        (square-root type) and toward any given band edges. Polyline
        vertices are snapped onto cell boundaries.

    :param contour: The contour.
    :type  contour: potential.Contour
    :param n_nodes: The number of cells.
    :type  n_nodes: int
    :param clustering: False for uniform arc-length cells.
    :type  clustering: bool
    :param band_edges: Arc-length positions of band edges.
    :type  band_edges: list[float]

    :return: A density measure skeleton with zero weights.
    :rtype: potential.DiscreteMeasure
    """

    if n_nodes < MIN_NODES:
        raise DescentLabError(f"A contour needs at least {MIN_NODES} "
                              f"nodes (got {n_nodes}).")

    pts = contour.polyline()
    arc = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(pts)))])
    length = arc[-1]

    breaks = _breakpoints(length, n_nodes, clustering, band_edges)
    breaks = _snap(breaks, arc[1:-1])

    def _at(s):
        return np.interp(s, arc, pts.real) + 1j * np.interp(s, arc, pts.imag)

    cell_a = _at(breaks[:-1])
    cell_b = _at(breaks[1:])
    cell_a.imag = np.maximum(cell_a.imag, 0.0)
    cell_b.imag = np.maximum(cell_b.imag, 0.0)
    ell = np.abs(cell_b - cell_a)
    if np.any(ell <= 0):
        raise DescentLabError("Degenerate mesh cell on the contour.")

    return DiscreteMeasure(0.5 * (cell_a + cell_b), np.zeros(n_nodes), ell,
                           'density', cell_a, cell_b,
                           arc=0.5 * (breaks[:-1] + breaks[1:]))


def _objective(kern, phi, w):
    return float(w @ (kern @ w)) + 2.0 * float(w @ phi)


def _projected_gradient(kern, phi, w, upper, opts, history):
    lip = 2.0 * np.max(np.abs(linalg.eigvalsh(kern)))
    if lip == 0:
        return w, 0
    base = 1.0 / lip
    value = _objective(kern, phi, w)
    alpha = base

    it = 0
    for it in range(1, opts.pg_iter + 1):
        grad = 2.0 * (kern @ w + phi)
        # Armijo backtracking on the projected step
        alpha = min(4.0 * alpha, 64.0 * base)
        while True:
            trial = np.clip(w - alpha * grad, 0.0, upper)
            step = trial - w
            new_value = _objective(kern, phi, trial)
            bound = value + float(grad @ step) + \
                float(step @ step) / (2.0 * alpha)
            if new_value <= bound or alpha <= base:
                break
            alpha *= 0.5
        if new_value > value:
            break

        decrease = value - new_value
        w = trial
        value = new_value
        history.append(value)
        if decrease <= opts.energy_tol * max(1.0, abs(value)):
            break

    return w, it


def _active_set(kern, phi, w, upper, opts, history):
    n = len(phi)
    scale = max(1.0, float(np.max(np.abs(phi))) if n else 1.0)
    tol = 1e-10 * scale

    at_lower = w <= 0.0
    at_upper = (w >= upper) & ~at_lower
    w = np.where(at_lower, 0.0, np.where(at_upper, upper, w))

    for it in range(1, opts.max_iter + 1):
        free = ~(at_lower | at_upper)
        idx = np.flatnonzero(free)
        y = w.copy()
        if len(idx):
            rhs = -phi[idx]
            up_idx = np.flatnonzero(at_upper)
            if len(up_idx):
                rhs = rhs - kern[np.ix_(idx, up_idx)] @ upper[up_idx]
            sub = kern[np.ix_(idx, idx)]
            try:
                y[idx] = linalg.solve(sub, rhs, assume_a='sym')
            except (linalg.LinAlgError, ValueError):
                y[idx] = linalg.lstsq(sub, rhs)[0]

        low_hit = free & (y < 0.0)
        high_hit = free & (y > upper)
        if not np.any(low_hit | high_hit):
            w = y
            history.append(_objective(kern, phi, w))
            grad = kern @ w + phi
            dual = np.full(n, np.inf)
            dual[at_lower] = grad[at_lower]
            dual[at_upper] = -grad[at_upper]
            worst = int(np.argmin(dual)) if n else 0
            if n == 0 or dual[worst] >= -tol:
                return w, it, at_upper
            at_lower[worst] = False
            at_upper[worst] = False
            continue

        # Blocking step toward the face minimizer
        ratios = np.full(n, np.inf)
        with np.errstate(divide='ignore', invalid='ignore'):
            ratios[low_hit] = w[low_hit] / (w[low_hit] - y[low_hit])
            ratios[high_hit] = (upper[high_hit] - w[high_hit]) / \
                (y[high_hit] - w[high_hit])
        block = int(np.argmin(ratios))
        alpha = float(np.clip(ratios[block], 0.0, 1.0))
        w = w + alpha * (y - w)

        hit_low = free & ((w <= 0.0) | (np.arange(n) == block) & low_hit)
        hit_high = free & ((w >= upper) | (np.arange(n) == block) & high_hit)
        w[hit_low] = 0.0
        w[hit_high] = upper[hit_high]
        at_lower |= hit_low
        at_upper |= hit_high & ~hit_low
        history.append(_objective(kern, phi, w))

    raise ConvergenceError(f"Active-set polish did not converge after "
                           f"{opts.max_iter} iterations.", best=w)


def solve_measure(skeleton, f, opts=None, start=None, contour=None):
    """
    Minimizes the weighted energy over nonnegative weights on a fixed set
        of nodes (and cells).

    :param skeleton: The nodes and cells; its weights are ignored.
    :type  skeleton: potential.DiscreteMeasure
    :param f: The external field.
    :type  f: potential.FieldSpec
    :param opts: The solver options.
    :type  opts: SolverOptions
    :param start: A feasible starting weight vector (zeros if None).
    :type  start: numpy.ndarray
    :param contour: The contour the skeleton was meshed from.
    :type  contour: potential.Contour

    :return: The equilibrium solution.
    :rtype: EquilibriumSolution
    """

    opts = SolverOptions() if opts is None else opts
    n = len(skeleton)

    kern = skeleton.kernel(workers=opts.workers)
    phi = np.atleast_1d(external_field(skeleton.nodes, f))
    upper = np.full(n, np.inf) if opts.density_cap is None \
        else opts.density_cap * skeleton.cell_lengths

    w = np.zeros(n) if start is None else \
        np.clip(np.asarray(start, dtype=float), 0.0, upper)
    history = [_objective(kern, phi, w)]

    w, pg_its = _projected_gradient(kern, phi, w, upper, opts, history)
    try:
        w, as_its, at_upper = _active_set(kern, phi, w, upper, opts, history)
    except ConvergenceError as err:
        best = np.maximum(err.best, 0.0)
        err.best = EquilibriumSolution(contour, skeleton.with_weights(best), f,
                                       iterations=pg_its + opts.max_iter,
                                       history=history,
                                       threshold=opts.support_threshold)
        raise err

    clamp = max(0.0, -float(w.min())) if n else 0.0
    w = np.maximum(w, 0.0)
    mu = skeleton.with_weights(w)

    sol = EquilibriumSolution(contour, mu, f,
                              energy_value=weighted_energy(mu, f, phi),
                              iterations=pg_its + as_its, clamp=clamp,
                              history=history,
                              threshold=opts.support_threshold,
                              capped=at_upper)
    logger.debug(f"Equilibrium: {sol!r}, {pg_its} gradient and {as_its} "
                 f"active-set iterations")

    return sol


def _band_edges(sol):
    arc = sol.measure.arc
    if arc is None:
        return []
    edges = []
    for start, end in sol.bands:
        edges.extend([float(arc[start]), float(arc[end])])
    return edges


def solve_equilibrium(contour, f, opts=None, start=None):
    """
    Computes the equilibrium measure of a contour: the nonnegative measure
        on the contour minimizing the weighted energy.

    :param contour: The contour.
    :type  contour: potential.Contour
    :param f: The external field.
    :type  f: potential.FieldSpec
    :param opts: The solver options.
    :type  opts: SolverOptions
    :param start: Starting weights for the first mesh.
    :type  start: numpy.ndarray

    :return: The equilibrium solution.
    :rtype: EquilibriumSolution
    """

    opts = SolverOptions() if opts is None else opts

    skeleton = mesh_contour(contour, opts.n_nodes, opts.clustering)
    sol = solve_measure(skeleton, f, opts, start, contour)

    for _ in range(opts.edge_refine):
        edges = _band_edges(sol)
        if not edges:
            break
        skeleton = mesh_contour(contour, opts.n_nodes, opts.clustering,
                                edges)
        sol = solve_measure(skeleton, f, opts, contour=contour)

    return sol


def kkt_residual(sol, f):
    """
    Gets the first-order optimality residuals of an equilibrium solution:
        the largest |V + phi| over supported nodes and the smallest V + phi
        over unsupported nodes. Nodes held at a density cap are excluded.

    :param sol: The solution.
    :type  sol: EquilibriumSolution
    :param f: The external field.
    :type  f: potential.FieldSpec

    :return: The on-support and off-support residuals.
    :rtype: tuple(float, float)
    """

    mu = sol.measure
    if len(mu) == 0:
        return 0.0, 0.0

    total = mu.kernel() @ mu.weights + \
        np.atleast_1d(external_field(mu.nodes, f))

    on = sol.support_mask & ~sol.capped
    off = ~sol.support_mask & ~sol.capped

    on_support = float(np.max(np.abs(total[on]))) if np.any(on) else 0.0
    off_support = float(np.min(total[off])) if np.any(off) else 0.0

    return on_support, off_support


def _runs(mask):
    runs = []
    start = None
    for k, flag in enumerate(mask):
        if flag and start is None:
            start = k
        elif not flag and start is not None:
            runs.append((start, k - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return runs


def classify_bands(sol, threshold=1e-8):
    """
    Splits the nodes into bands (maximal runs of nodes with weight above
        threshold x max weight) and gaps.

    :param sol: The solution (or anything with a 'measure' attribute).
    :type  sol: EquilibriumSolution
    :param threshold: The relative support threshold.
    :type  threshold: float

    :return: A dictionary with 'bands' and 'gaps' (inclusive node-index
                intervals) and 'genus' (an int, or 'empty' for the zero
                measure).
    :rtype: dict
    """

    w = sol.measure.weights
    top = w.max() if len(w) else 0.0
    if top <= 0:
        gaps = [(0, len(w) - 1)] if len(w) else []
        return {'bands': [], 'gaps': gaps, 'genus': 'empty'}

    mask = w > threshold * top
    bands = _runs(mask)
    gaps = _runs(~mask)

    return {'bands': bands, 'gaps': gaps, 'genus': len(bands) - 1}


def _segment_distance(z, a, b):
    d = b - a
    frac = np.clip(((z - a) * np.conj(d)).real / np.abs(d) ** 2, 0.0, 1.0)
    return np.abs(z - (a + frac * d))


def g_function(z, sol, symmetrized=False):
    """
    Evaluates the complex log-potential g(z) = sum_j w_j log(z - eta_j).

    Each node uses the principal branch, so Im g is reported modulo 2 pi in
        (-pi, pi]. With symmetrized=True the measure is extended to the lower
        half-plane with weights -w_j at conj(eta_j).

    :param z: The evaluation point, off the support.
    :type  z: SlitPoint or complex
    :param sol: The solution (or anything with a 'measure' attribute).
    :type  sol: EquilibriumSolution
    :param symmetrized: Use the symmetrized measure.
    :type  symmetrized: bool

    :return: g(z).
    :rtype: complex
    """

    z = complex(as_complex(z))
    mu = sol.measure
    w = mu.weights
    if len(mu) == 0:
        return 0j

    supported = w > 0
    if mu.kind == 'density':
        dist = _segment_distance(z, mu.cell_a[supported],
                                 mu.cell_b[supported])
    else:
        dist = np.abs(z - mu.nodes[supported])
    if np.any(dist <= 1e-12 * max(1.0, abs(z))):
        raise OnSupportError(f"g-function requested on the support at {z}.")

    val = np.sum(w * np.log(z - mu.nodes))
    if symmetrized:
        val -= np.sum(w * np.log(z - np.conj(mu.nodes)))

    return complex(val.real, float(np.angle(np.exp(1j * val.imag))))
