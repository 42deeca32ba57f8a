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
from concurrent.futures import ProcessPoolExecutor
from scipy import optimize
from tqdm.auto import tqdm

from scripts.potential import Contour
from scripts.potential import SlitPoint
from scripts.potential import as_complex
from scripts.potential import external_field
from scripts.potential import external_field_derivative
from scripts.potential import green_potential
from scripts.equilibrium import SolverOptions
from scripts.equilibrium import solve_equilibrium
from scripts.spatial import SlitGeo
from scripts.spatial import vertex_normals
from scripts.exceptions import BandUnderResolvedError
from scripts.exceptions import ConvergenceError
from scripts.exceptions import DescentLabError
from scripts.exceptions import InfeasibleContourError
from scripts.exceptions import OnSupportError
from scripts.exceptions import PoleError

logger = logging.getLogger('descent_lab')

PENALTY = 1e30
REGULARITY_FLAG = 'regularity unproven'
GENERATOR_MODES = ['A', 'B']
S_HALVINGS = 4
S_FLOOR = 1e-3
UNRESOLVED_FLAG = 'S-property unresolved'


class SearchOptions:
    """
    Options of the outer (maximin) search.
    """

    def __init__(self, **kwargs):
        """
        :param kwargs: Options include:<br>
                stationarity_tol (float): Largest energy gain a trial step may
                    find at a converged contour.<br>
                max_sweeps (int): Maximum number of coordinate-ascent
                    sweeps.<br>
                n_fourier (int): Number of global sine modes.<br>
                n_vertices (int): Movable vertices of the initial
                    contour.<br>
                step (float): Initial bracket of the line searches, in
                    units of A.<br>
                min_step (float): Bracket at which the ascent stops, in
                    units of A.<br>
                vertex_moves (bool): Include per-vertex normal moves.<br>
                max_contacts (int): Spike contacts tolerated before the
                    result is flagged.<br>
                trial_rounds (int): Maximum rounds of the final trial
                    loop.<br>
                h_n (float): Normal-derivative step, in units of A.<br>
                edge_exclusion (float): Fraction of each band skipped at
                    both ends by the S-property check.<br>
                keep_out (float): Keep-out distance from the spike.<br>
                anchor_offset (float): Anchor offset from the origin.<br>
                workers (int): Processes used for trial evaluations.<br>
                solver (SolverOptions): Inner solver options.
        :type  kwargs: dict
        """

        self.stationarity_tol = 1e-5
        if kwargs.get('stationarity_tol') is not None:
            self.stationarity_tol = float(kwargs.get('stationarity_tol'))

        self.max_sweeps = 12
        if kwargs.get('max_sweeps') is not None:
            self.max_sweeps = int(kwargs.get('max_sweeps'))

        self.n_fourier = 6
        if kwargs.get('n_fourier') is not None:
            self.n_fourier = int(kwargs.get('n_fourier'))

        self.n_vertices = 24
        if kwargs.get('n_vertices') is not None:
            self.n_vertices = int(kwargs.get('n_vertices'))

        self.step = 0.1
        if kwargs.get('step') is not None:
            self.step = float(kwargs.get('step'))

        self.min_step = 1e-3
        if kwargs.get('min_step') is not None:
            self.min_step = float(kwargs.get('min_step'))

        self.vertex_moves = True
        if kwargs.get('vertex_moves') is not None:
            self.vertex_moves = bool(kwargs.get('vertex_moves'))

        self.max_contacts = 4
        if kwargs.get('max_contacts') is not None:
            self.max_contacts = int(kwargs.get('max_contacts'))

        self.trial_rounds = 20
        if kwargs.get('trial_rounds') is not None:
            self.trial_rounds = int(kwargs.get('trial_rounds'))

        self.h_n = 1e-4
        if kwargs.get('h_n') is not None:
            self.h_n = float(kwargs.get('h_n'))

        self.edge_exclusion = 0.1
        if kwargs.get('edge_exclusion') is not None:
            self.edge_exclusion = float(kwargs.get('edge_exclusion'))

        self.keep_out = kwargs.get('keep_out')
        self.anchor_offset = kwargs.get('anchor_offset')

        self.workers = 1
        if kwargs.get('workers') is not None:
            self.workers = int(kwargs.get('workers'))

        self.solver = SolverOptions(n_nodes=200, edge_refine=0)
        if kwargs.get('solver') is not None:
            self.solver = kwargs.get('solver')

        if self.stationarity_tol <= 0 or self.h_n <= 0 or self.step <= 0:
            raise DescentLabError("Search tolerances must be positive.")

    def copy(self, **kwargs):
        params = dict(vars(self))
        params.update(kwargs)
        return SearchOptions(**params)

    def to_dict(self):
        params = dict(vars(self))
        params['solver'] = self.solver.to_dict()
        return params


class SCurveResult:
    """
    The result of a maximin search: the contour, its equilibrium solution
        and the S-curve diagnostics.
    """

    def __init__(self, contour, solution, **kwargs):
        self.contour = contour
        self.solution = solution
        self.s_residual = kwargs.get('s_residual', float('nan'))
        self.band_integral_residual = \
            kwargs.get('band_integral_residual', {})
        self.spike_contact = list(kwargs.get('spike_contact', []))
        self.local_max_certificate = kwargs.get('local_max_certificate',
                                                float('nan'))
        self.encircling = kwargs.get('encircling')
        self.flags = list(kwargs.get('flags', []))
        self.energy_history = list(kwargs.get('energy_history', []))
        self.s_history = list(kwargs.get('s_history', []))
        self.evaluations = int(kwargs.get('evaluations', 0))

    def __repr__(self):
        return f"SCurveResult(energy={self.energy():.10g}, " \
               f"certificate={self.local_max_certificate:.3g}, " \
               f"flags={self.flags})"

    def energy(self):
        return self.solution.energy_value

    def best_band_residual(self):
        vals = [v for v in self.band_integral_residual.values()
                if np.isfinite(v)]
        return min(vals) if vals else float('nan')

    def to_dict(self):
        pts = self.contour.polyline()
        return {'energy': self.energy(),
                's_residual': self.s_residual,
                'band_integral_residual': dict(self.band_integral_residual),
                'local_max_certificate': self.local_max_certificate,
                'spike_contact': [[c.re, c.im, c.side]
                                  for c in self.spike_contact],
                'encircling': self.encircling,
                'flags': list(self.flags),
                'energy_history': list(self.energy_history),
                's_history': list(self.s_history),
                'evaluations': self.evaluations,
                'contour_re': pts.real.tolist(),
                'contour_im': pts.imag.tolist(),
                'solution': self.solution.to_dict()}


def _geo(f, opts):
    return SlitGeo(f.A, opts.keep_out, opts.anchor_offset)


def initial_contour(f, n_vertices=24, geo=None, radius=1.5, theta0=0.05):
    """
    Builds the default starting contour: a circle through the origin with
        its top at radius x iA, running from the anchor near 0+ over the
        spike to the anchor near 0-.

    :param f: The external field.
    :type  f: potential.FieldSpec
    :param n_vertices: The number of movable vertices.
    :type  n_vertices: int
    :param geo: The slit geometry (built from f.A if None).
    :type  geo: spatial.SlitGeo
    :param radius: The circle's diameter in units of A.
    :type  radius: float
    :param theta0: Angle of the first vertex seen from the origin.
    :type  theta0: float

    :return: The contour.
    :rtype: potential.Contour
    """

    geo = SlitGeo(f.A) if geo is None else geo
    theta = np.linspace(theta0, np.pi - theta0, n_vertices)
    pts = radius * f.A * np.sin(theta) * np.exp(1j * theta)
    verts = [SlitPoint(p.real, p.imag) for p in pts]
    return Contour(verts, geo.anchors())


def hausdorff_distance(E, F, A=1.0):
    """
    Gets the Hausdorff distance between two finite point sets of the slit
        domain with spike height A.

    :param E: The first point set.
    :type  E: list[SlitPoint] or numpy.ndarray
    :param F: The second point set.
    :type  F: list[SlitPoint] or numpy.ndarray
    :param A: The spike height.
    :type  A: float

    :return: The distance.
    :rtype: float
    """
    return SlitGeo(A).hausdorff_distance(E, F)


class _Evaluator:
    """
    Scores candidate contours by their equilibrium energy, with a cache.
    """

    def __init__(self, f, opts, geo, anchors=None):
        self.f = f
        self.opts = opts
        self.geo = geo
        self.anchors = geo.anchors() if anchors is None else anchors
        self.cache = {}
        self.count = 0

    def contour_from(self, verts):
        if np.any(np.imag(verts) < 0):
            return None
        try:
            contour = Contour([SlitPoint(v.real, v.imag) for v in verts],
                              self.anchors)
            self.geo.check_contour(contour)
        except (InfeasibleContourError, DescentLabError):
            return None
        return contour

    def __call__(self, verts):
        key = np.round(np.asarray(verts), 14).tobytes()
        if key in self.cache:
            return self.cache[key]

        contour = self.contour_from(verts)
        if contour is None:
            out = (-np.inf, None)
        else:
            self.count += 1
            try:
                sol = solve_equilibrium(contour, self.f, self.opts.solver)
            except ConvergenceError as err:
                err.details['contour'] = contour
                raise err
            out = (sol.energy_value, sol)

        self.cache[key] = out
        return out


def _modes(verts, anchors, n_fourier, vertex_moves):
    full = np.concatenate([[anchors[0]], verts, [anchors[1]]])
    arc = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(full)))])
    s = arc[1:-1] / arc[-1]
    normals = vertex_normals(full)[1:-1]

    modes = [normals * np.sin(j * np.pi * s) for j in range(1, n_fourier + 1)]
    if vertex_moves:
        for k in range(len(verts)):
            mode = np.zeros(len(verts), dtype=complex)
            mode[k] = normals[k]
            modes.append(mode)
    return modes


def _trial_energy(args):
    f, opts, anchors, verts = args
    geo = _geo(f, opts)
    return _Evaluator(f, opts, geo, anchors)(verts)[0]


def _line_search(evaluate, verts, mode, step, current):
    def neg(c):
        val = evaluate(verts + c * mode)[0]
        return PENALTY if not np.isfinite(val) else -val

    res = optimize.minimize_scalar(neg, bounds=(-step, step),
                                   method='bounded',
                                   options={'xatol': step * 1e-3})
    best_c = float(res.x)
    best_val = -float(res.fun)
    if best_val > current:
        return best_c, best_val
    return 0.0, current


def _best_trial(evaluate, verts, modes, step, current, f, opts):
    """
    Tries +-step and +-step/2 along every mode; returns the best gain and
        the vertices achieving it.
    """

    candidates = []
    for mode in modes:
        for c in (step, -step, 0.5 * step, -0.5 * step):
            candidates.append(verts + c * mode)

    if opts.workers > 1:
        with ProcessPoolExecutor(max_workers=opts.workers) as pool:
            values = list(pool.map(_trial_energy,
                                   [(f, opts, evaluate.anchors, v)
                                    for v in candidates]))
    else:
        values = [evaluate(v)[0] for v in candidates]

    best = int(np.argmax(values))
    return values[best] - current, candidates[best]


def maximin_search(initial, f, opts=None, silent=True):
    """
    Maximizes the equilibrium energy over contours joining the anchors.

    Coordinate ascent over global sine modes and per-vertex normal moves
        (bounded Brent line searches), with shrinking brackets, followed by
        a trial loop that keeps accepting improving perturbations until no
        trial step gains more than stationarity_tol.

    :param initial: The feasible starting contour.
    :type  initial: potential.Contour
    :param f: The external field.
    :type  f: potential.FieldSpec
    :param opts: The search options.
    :type  opts: SearchOptions
    :param silent: Hide the progress bar.
    :type  silent: bool

    :return: The search result.
    :rtype: SCurveResult
    """

    opts = SearchOptions() if opts is None else opts
    geo = _geo(f, opts)
    geo.check_contour(initial)

    evaluate = _Evaluator(f, opts, geo, initial.endpoint_anchors)
    anchors = np.array([a.to_complex() for a in initial.endpoint_anchors])
    verts = as_complex(list(initial.vertices))

    current, sol = evaluate(verts)
    energy_history = [current]
    s_history = []
    step = opts.step * f.A
    min_step = opts.min_step * f.A

    for sweep in tqdm(range(opts.max_sweeps), desc="Maximin sweeps",
                      disable=silent):
        improved = False
        n_modes = len(_modes(verts, anchors, opts.n_fourier,
                             opts.vertex_moves))
        for m in range(n_modes):
            # Modes are rebuilt from the moving contour
            mode = _modes(verts, anchors, opts.n_fourier,
                          opts.vertex_moves)[m]
            c, value = _line_search(evaluate, verts, mode, step, current)
            if value > current + opts.stationarity_tol:
                verts = verts + c * mode
                current = value
                improved = True

        energy_history.append(current)
        s_history.append(_safe_s_residual(evaluate(verts)[1], f, opts))
        logger.info(f"Maximin sweep {sweep + 1}: energy {current:.10g}, "
                    f"step {step:.3g}")

        if not improved:
            step *= 0.5
            if step < min_step:
                break

    certificate = np.inf
    gain = np.inf
    for _ in range(opts.trial_rounds):
        modes = _modes(verts, anchors, opts.n_fourier, opts.vertex_moves)
        gain, cand = _best_trial(evaluate, verts, modes, max(step, min_step),
                            current, f, opts)
        if gain <= opts.stationarity_tol:
            certificate = max(gain, 0.0)
            break
        verts = cand
        current = current + gain
        energy_history.append(current)
    else:
        certificate = gain

    current, sol = evaluate(verts)
    contour = evaluate.contour_from(verts)
    checks = geo.check_contour(contour)

    flags = []
    if certificate > opts.stationarity_tol:
        flags.append('not stationary')
    if len(checks['contacts']) > opts.max_contacts:
        flags.append(REGULARITY_FLAG)
        logger.warning(f"Contour touches the spike at "
                       f"{len(checks['contacts'])} points; "
                       f"{REGULARITY_FLAG}.")

    res = SCurveResult(contour, sol,
                       spike_contact=checks['contacts'],
                       encircling=checks['encircling'],
                       local_max_certificate=float(certificate),
                       flags=flags, energy_history=energy_history,
                       s_history=s_history, evaluations=evaluate.count)

    res.s_residual = _safe_s_residual(sol, f, opts)
    if not np.isfinite(res.s_residual):
        res.flags.append(UNRESOLVED_FLAG)
    res.band_integral_residual = {mode: _safe_band_residual(res, mode, opts)
                                  for mode in GENERATOR_MODES}
    logger.info(f"Maximin result: {res!r}")

    return res


def _safe_s_residual(sol, f, opts):
    if sol is None:
        return float('nan')
    try:
        return s_property_residual(SCurveResult(sol.contour, sol), f, opts)
    except BandUnderResolvedError:
        return float('nan')


def _safe_band_residual(res, mode, opts):
    try:
        return band_integral_residual(res, mode, opts)
    except (BandUnderResolvedError, OnSupportError, PoleError):
        return float('nan')


def _cell_normals(mu):
    tangent = (mu.cell_b - mu.cell_a) / mu.cell_lengths
    return 1j * tangent


def _interior_indices(band, mu, exclusion):
    start, end = band
    arc = mu.arc if mu.arc is not None else \
        np.cumsum(mu.cell_lengths) - 0.5 * mu.cell_lengths
    lo = arc[start]
    hi = arc[end]
    margin = exclusion * (hi - lo)
    idx = np.arange(start, end + 1)
    keep = (arc[idx] > lo + margin) & (arc[idx] < hi - margin)
    return idx[keep]


def _clear_of_spike(z, normals, reach, geo):
    """
    Flags the nodes whose normal stencil z +- reach n stays outside the
        keep-out zone and on one side of the spike.
    """

    clear = geo.spike_distance(z) > geo.keep_out
    for end in (z + reach * normals, z - reach * normals):
        clear &= geo.spike_distance(end) > geo.keep_out
        clear &= ~geo.crosses_spike(z, end)
    return clear


def _normal_derivative(total, z, n, h):
    # Second-order one-sided difference along direction n
    return (-3.0 * total(z) + 4.0 * total(z + h * n) -
            total(z + 2.0 * h * n)) / (2.0 * h)


def _s_mismatch(mu, f, idx, h):
    normals = _cell_normals(mu)[idx]
    z = mu.nodes[idx]

    def total(p):
        return external_field(p, f) + green_potential(p, mu)

    d_plus = _normal_derivative(total, z, normals, h)
    d_minus = _normal_derivative(total, z, -normals, h)

    # |phi'| vanishes at stationary points of the field
    scale = np.maximum(np.abs(external_field_derivative(z, f)),
                       np.abs(d_plus) + np.abs(d_minus))
    scale = np.maximum(scale, 1e-12)

    return float(np.max(np.abs(d_plus - d_minus) / scale))


def s_property_residual(res, f, opts=None):
    """
    Gets the largest relative mismatch between the two normal derivatives
        of phi + V at band-interior nodes.

    Each mismatch is divided by the larger of |phi'| and |d+| + |d-|, so
        the residual lies in [0, 1]. Nodes whose difference stencil enters
        the keep-out zone or crosses the spike are skipped; they are
        reported as spike contacts instead. The normal step starts at h_n
        and is halved until two steps agree within 20%.

    :param res: The search result (or anything with a 'solution').
    :type  res: SCurveResult
    :param f: The external field.
    :type  f: potential.FieldSpec
    :param opts: The search options (h_n, edge_exclusion, keep_out).
    :type  opts: SearchOptions

    :return: The residual.
    :rtype: float
    """

    opts = SearchOptions() if opts is None else opts
    sol = res.solution
    mu = sol.measure
    if not sol.bands:
        raise BandUnderResolvedError("No band for the S-property check.")

    idx = []
    for band in sol.bands:
        if band[1] - band[0] + 1 < 5:
            continue
        idx.extend(_interior_indices(band, mu, opts.edge_exclusion).tolist())
    idx = np.asarray(idx, dtype=int)

    h = opts.h_n * f.A
    if len(idx) and f.kind != 'synthetic':
        clear = _clear_of_spike(mu.nodes[idx], _cell_normals(mu)[idx],
                                2.0 * h, _geo(f, opts))
        idx = idx[clear]
    if len(idx) < 3:
        raise BandUnderResolvedError("Bands are too short for "
                                     "normal-derivative stencils.")

    coarse = _s_mismatch(mu, f, idx, h)
    for _ in range(S_HALVINGS):
        fine = _s_mismatch(mu, f, idx, 0.5 * h)
        if abs(fine - coarse) <= 0.2 * max(coarse, S_FLOOR):
            return fine
        logger.debug(f"S-property residual at step {h:.3g}: {coarse:.3g}, "
                     f"at {0.5 * h:.3g}: {fine:.3g}; halving the step.")
        h *= 0.5
        coarse = fine

    raise BandUnderResolvedError(f"S-property residual does not converge in "
                                 f"the normal step (last {coarse:.3g} at "
                                 f"step {h:.3g}).")


def _symmetrized(mu):
    pts = np.concatenate([mu.nodes, np.conj(mu.nodes)])
    mass = np.concatenate([mu.weights, -mu.weights])
    return pts, mass


def _measure_derivative(z, pts, mass, skip=None):
    diff = z[:, None] - pts[None, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        terms = -mass[None, :] / diff
    if skip is not None:
        terms[np.arange(len(z)), skip] = 0.0
    return terms.sum(axis=1)


def r_function(z, res, generator_mode='B', f=None):
    """
    Evaluates R(z) = V'(z)^2 - 2 int (V'(z) - V'(u)) / (z - u) dmu(u)
        + z^-2 int 2 (u + z) V'(u) dmu(u) over the symmetrized measure
        (w at each node, -w at its mirror image).

    generator_mode 'A' takes V' from the field's analytic completion,
        mode 'B' from the log-potential of the symmetrized measure.

    :param z: The evaluation point(s), off the support and not 0.
    :type  z: complex or numpy.ndarray
    :param res: The search result (or anything with a 'solution').
    :type  res: SCurveResult
    :param generator_mode: 'A' or 'B'.
    :type  generator_mode: str
    :param f: The field for mode 'A' (defaults to the solution's field).
    :type  f: potential.FieldSpec

    :return: R(z).
    :rtype: complex or numpy.ndarray
    """

    if generator_mode not in GENERATOR_MODES:
        raise DescentLabError(f"Unknown generator mode '{generator_mode}'.")

    z = np.asarray(as_complex(z), dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)

    mu = res.solution.measure
    f = res.solution.field if f is None else f

    if np.any(z == 0):
        raise PoleError("R has a pole at z = 0.")

    pts, mass = _symmetrized(mu)
    keep = mass != 0
    pts = pts[keep]
    mass = mass[keep]

    if len(pts):
        near = np.abs(z[:, None] - pts[None, :]).min(axis=1)
        if np.any(near <= 1e-12 * np.maximum(1.0, np.abs(z))):
            raise OnSupportError("R requested on the support.")

    if generator_mode == 'A':
        v_z = external_field_derivative(z, f)
        v_u = external_field_derivative(pts, f) if len(pts) \
            else np.zeros(0, dtype=complex)
    else:
        v_z = _measure_derivative(z, pts, mass)
        v_u = _measure_derivative(pts, pts, mass, np.arange(len(pts)))

    out = v_z ** 2
    if len(pts):
        diff = z[:, None] - pts[None, :]
        quotient = (v_z[:, None] - v_u[None, :]) / diff
        out = out - 2.0 * (quotient @ mass)
        out = out + ((2.0 * (pts[None, :] + z[:, None]) * v_u[None, :])
                     @ mass) / z ** 2

    if scalar:
        return complex(out[0])
    return out


def _clearance(path, geo):
    if np.any(geo.crosses_spike(path[:-1], path[1:])):
        return -1.0
    return float(np.min(geo.spike_distance(path)))


def band_integral_residual(res, generator_mode='B', opts=None):
    """
    Gets max over bands of |Re int sqrt(R) dz| along each band, integrated
        on a copy of the band offset by two cell lengths, with the
        square-root branch continued from the band's first node. The copy
        goes to the side of the band that keeps it farther from the spike.

    :param res: The search result.
    :type  res: SCurveResult
    :param generator_mode: 'A' or 'B'.
    :type  generator_mode: str
    :param opts: The search options.
    :type  opts: SearchOptions

    :return: The residual.
    :rtype: float
    """

    opts = SearchOptions() if opts is None else opts
    sol = res.solution
    mu = sol.measure
    if not sol.bands:
        raise BandUnderResolvedError("No band for the band integral.")
    f = getattr(sol, 'field', None)
    geo = _geo(f, opts) if f is not None and f.kind != 'synthetic' else None

    worst = 0.0
    for start, end in sol.bands:
        if end - start + 1 < 5:
            raise BandUnderResolvedError("Band too short for the band "
                                         "integral.")
        idx = np.arange(start, end + 1)
        offset = 2.0 * np.median(mu.cell_lengths[idx])
        base = np.concatenate([[mu.cell_a[start]], mu.nodes[idx],
                               [mu.cell_b[end]]])
        normals = _cell_normals(mu)[idx]
        normals = np.concatenate([[normals[0]], normals, [normals[-1]]])
        path = base + offset * normals
        if geo is not None and \
                _clearance(base - offset * normals, geo) > \
                _clearance(path, geo):
            path = base - offset * normals

        roots = np.sqrt(r_function(path, res, generator_mode))
        for k in range(1, len(roots)):
            if abs(roots[k] + roots[k - 1]) < abs(roots[k] - roots[k - 1]):
                roots[k] = -roots[k]

        val = np.sum(0.5 * (roots[1:] + roots[:-1]) * np.diff(path))
        worst = max(worst, abs(val.real))

    return float(worst)


class CausticMap:
    """
    Genus and spike-contact flags of maximin results over an (x, t) grid.
    """

    def __init__(self, x_grid, t_grid):
        self.x_grid = [float(x) for x in x_grid]
        self.t_grid = [float(t) for t in t_grid]
        shape = (len(self.t_grid), len(self.x_grid))
        self.genus = np.full(shape, -1, dtype=int)
        self.empty = np.zeros(shape, dtype=bool)
        self.contact = np.zeros(shape, dtype=bool)
        self.energy = np.full(shape, np.nan)
        self.errors = {}
        self.results = {}

    def caustic_cells(self):
        """
        Gets the cells whose genus differs from a computed 4-neighbour.

        :return: The (t index, x index) pairs.
        :rtype: list[tuple]
        """

        cells = []
        rows, cols = self.genus.shape
        for i in range(rows):
            for j in range(cols):
                if self.genus[i, j] < 0:
                    continue
                for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    a, b = i + di, j + dj
                    if 0 <= a < rows and 0 <= b < cols and \
                            self.genus[a, b] >= 0 and \
                            self.genus[a, b] != self.genus[i, j]:
                        cells.append((i, j))
                        break
        return cells

    def failed(self):
        return len(self.errors)

    def to_rows(self):
        caustic = set(self.caustic_cells())
        rows = []
        for i, t in enumerate(self.t_grid):
            for j, x in enumerate(self.x_grid):
                if (i, j) in self.errors:
                    genus = 'error'
                elif self.empty[i, j]:
                    genus = 'empty'
                else:
                    genus = int(self.genus[i, j])
                rows.append({'x': x, 't': t, 'genus': genus,
                             'energy': float(self.energy[i, j]),
                             'spike_contact': bool(self.contact[i, j]),
                             'caustic': (i, j) in caustic,
                             'error': self.errors.get((i, j), '')})
        return rows


def _cell_task(args):
    f, opts, start = args
    contour = initial_contour(f, opts.n_vertices, _geo(f, opts)) \
        if start is None else start
    return maximin_search(contour, f, opts)


def caustic_map(f_base, x_grid, t_grid, opts=None, warm_start=True,
                workers=1, silent=True):
    """
    Runs the maximin search over an (x, t) grid and records the genus of
        each result. Cells are processed by diagonal wavefront so that each
        cell can start from a computed neighbour's contour.

    :param f_base: The field whose x and t are replaced per cell.
    :type  f_base: potential.FieldSpec
    :param x_grid: The x values.
    :type  x_grid: list[float]
    :param t_grid: The t values.
    :type  t_grid: list[float]
    :param opts: The search options.
    :type  opts: SearchOptions
    :param warm_start: Start each cell from a neighbour's contour.
    :type  warm_start: bool
    :param workers: Processes evaluating cells of one wavefront.
    :type  workers: int
    :param silent: Hide the progress bar.
    :type  silent: bool

    :return: The map.
    :rtype: CausticMap
    """

    opts = SearchOptions() if opts is None else opts
    cmap = CausticMap(x_grid, t_grid)
    rows = len(cmap.t_grid)
    cols = len(cmap.x_grid)
    if rows == 0 or cols == 0:
        raise DescentLabError("The caustic map needs nonempty grids.")

    fronts = [[(i, d - i) for i in range(rows) if 0 <= d - i < cols]
              for d in range(rows + cols - 1)]

    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    progress = tqdm(total=rows * cols, desc="Caustic map", disable=silent)
    try:
        for front in fronts:
            tasks = []
            for i, j in front:
                f = f_base.replace(x=cmap.x_grid[j], t=cmap.t_grid[i])
                start = None
                if warm_start:
                    for a, b in ((i, j - 1), (i - 1, j)):
                        if (a, b) in cmap.results:
                            start = cmap.results[(a, b)].contour
                            break
                tasks.append((f, opts, start))

            if pool is not None:
                futures = [pool.submit(_cell_task, t) for t in tasks]
                outcomes = []
                for fut in futures:
                    try:
                        outcomes.append(fut.result())
                    except Exception as err:
                        outcomes.append(err)
            else:
                outcomes = []
                for t in tasks:
                    try:
                        outcomes.append(_cell_task(t))
                    except Exception as err:
                        outcomes.append(err)

            for (i, j), out in zip(front, outcomes):
                progress.update(1)
                if isinstance(out, Exception):
                    cmap.errors[(i, j)] = f"{type(out).__name__}: {out}"
                    logger.warning(f"Caustic map cell x={cmap.x_grid[j]}, "
                                   f"t={cmap.t_grid[i]} failed: {out}")
                    continue
                cmap.results[(i, j)] = out
                genus = out.solution.genus
                cmap.empty[i, j] = genus == 'empty'
                cmap.genus[i, j] = 0 if genus == 'empty' else int(genus)
                cmap.contact[i, j] = bool(out.spike_contact)
                cmap.energy[i, j] = out.energy()
    finally:
        progress.close()
        if pool is not None:
            pool.shutdown()

    return cmap
