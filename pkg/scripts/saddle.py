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
import mpmath
import numpy as np
from numpy.polynomial import Polynomial
from scipy import special

from scripts.exceptions import AscendingDirectionError
from scripts.exceptions import DescentLabError
from scripts.exceptions import PathTracingError

logger = logging.getLogger('descent_lab')

UNDERFLOW = np.log(1e-18)
LEVEL_TOL = 1e-12


class PolynomialPhase:
    """
    A polynomial phase h(t); the integrand is exp(i * scale * h(t)).
    """

    def __init__(self, coefficients, scale=1.0):
        """
        :param coefficients: The coefficients of h in increasing degree.
        :type  coefficients: list[complex]
        :param scale: The large parameter multiplying i h.
        :type  scale: float
        """

        coefficients = np.asarray(coefficients, dtype=complex)
        if len(coefficients) < 3:
            raise DescentLabError("The phase must have degree >= 2.")
        if coefficients[-1] == 0:
            raise DescentLabError("The leading phase coefficient must be "
                                  "nonzero.")
        if scale <= 0:
            raise DescentLabError("The phase scale must be positive.")

        self.coefficients = coefficients
        self.scale = float(scale)
        self.poly = Polynomial(coefficients)

    def __repr__(self):
        return f"PolynomialPhase({self.coefficients.tolist()}, " \
               f"scale={self.scale})"

    def degree(self):
        return len(self.coefficients) - 1

    def h(self, t):
        return self.poly(t)

    def exponent(self, t):
        """
        Gets the exponent i * scale * h(t).
        """
        return 1j * self.scale * self.poly(t)

    def exponent_deriv(self, t, m=1):
        return 1j * self.scale * self.poly.deriv(m)(t)


def _dedupe(roots, tol=1e-8):
    out = []
    for r in roots:
        if all(abs(r - o) > tol * max(1.0, abs(o)) for o in out):
            out.append(r)
    return out


def saddle_points(phase):
    """
    Gets the zeros of h'(t): companion-matrix eigenvalues polished by
        Newton's method, repeated roots merged, sorted by (real, imag).

    :param phase: The phase.
    :type  phase: PolynomialPhase

    :return: The saddle points.
    :rtype: list[complex]
    """

    d1 = phase.poly.deriv(1)
    d2 = phase.poly.deriv(2)

    polished = []
    for r in d1.roots():
        r = complex(r)
        for _ in range(20):
            slope = d2(r)
            if slope == 0:
                break
            step = d1(r) / slope
            r -= step
            if abs(step) <= 1e-15 * max(1.0, abs(r)):
                break
        polished.append(complex(r))

    roots = _dedupe(polished)
    roots = [complex(round(r.real, 15) + 0.0, round(r.imag, 15) + 0.0)
             for r in roots]
    return sorted(roots, key=lambda r: (r.real, r.imag))


def _saddle_order(phase, saddle):
    scale = max(1.0, float(np.max(np.abs(phase.coefficients))))
    for m in range(2, phase.degree() + 1):
        val = phase.poly.deriv(m)(saddle)
        if abs(val) > 1e-10 * scale:
            return m, complex(val)
    raise DescentLabError("Degenerate saddle.")


def descent_directions(phase, saddle):
    """
    Gets the steepest-descent directions d at a saddle of order m (first
        nonzero derivative h^(m)), i.e. arg(i h^(m)(saddle) d^m) = pi,
        sorted by argument in (-pi, pi].

    :param phase: The phase.
    :type  phase: PolynomialPhase
    :param saddle: The saddle point.
    :type  saddle: complex

    :return: The unit directions.
    :rtype: list[complex]
    """

    m, hm = _saddle_order(phase, saddle)
    base = (np.pi - np.angle(1j * hm)) / m
    dirs = [np.exp(1j * (base + 2.0 * np.pi * k / m)) for k in range(m)]
    return sorted((complex(d) for d in dirs), key=lambda d: np.angle(d))


class SteepestPath:
    """
    Samples of a steepest-descent path leaving a saddle.
    """

    def __init__(self, points, saddle, direction, level, junction=False,
                 reason=''):
        self.points = np.asarray(points, dtype=complex)
        self.saddle = complex(saddle)
        self.direction = complex(direction)
        self.level = float(level)
        self.junction = bool(junction)
        self.reason = reason

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"SteepestPath({len(self)} samples from {self.saddle}, " \
               f"direction {self.direction:.3f}, {self.reason})"


def _correct(phase, t, level):
    """
    Newton's method on Im(i scale h(t)) = level, moving along the gradient
        of the imaginary part.
    """

    for _ in range(30):
        f = phase.exponent(t)
        g = f.imag - level
        if abs(g) <= LEVEL_TOL * max(1.0, abs(level)):
            return t
        fp = phase.exponent_deriv(t)
        if fp == 0:
            break
        t = t - g * 1j * np.conj(fp) / abs(fp) ** 2
    raise PathTracingError(f"Corrector failed at t = {t}.")


def trace_steepest_path(phase, saddle, direction, cutoff=None,
                        max_steps=20000, step=0.05):
    """
    Traces the path leaving a saddle on which Im(i scale h) keeps its
        saddle value while Re(i scale h) decreases.

    Predictor: a step along -conj(f'), the steepest decrease of Re f.
        Corrector: Newton on the level of Im f. The trace stops when |t|
        exceeds cutoff, when Re f has dropped by log(1e-18) from its saddle
        value, or near another saddle (junction).

    :param phase: The phase.
    :type  phase: PolynomialPhase
    :param saddle: The saddle point.
    :type  saddle: complex
    :param direction: The initial direction (a descent direction).
    :type  direction: complex
    :param cutoff: The largest |t| traced (no limit if None).
    :type  cutoff: float
    :param max_steps: The maximum number of samples.
    :type  max_steps: int
    :param step: The relative step length.
    :type  step: float

    :return: The path.
    :rtype: SteepestPath
    """

    saddle = complex(saddle)
    direction = complex(direction) / abs(direction)

    m, hm = _saddle_order(phase, saddle)
    lead = 1j * phase.scale * hm * direction ** m
    if lead.real >= 0:
        raise AscendingDirectionError(f"Direction {direction} ascends at "
                                      f"the saddle {saddle}.")

    steepest = descent_directions(phase, saddle)
    direction = min(steepest, key=lambda d: abs(d - direction))

    others = [s for s in saddle_points(phase) if abs(s - saddle) > 1e-8]
    f0 = phase.exponent(saddle)
    level = f0.imag
    floor = f0.real + UNDERFLOW

    size = step * (1.0 + abs(saddle))
    points = [saddle]
    t = _correct(phase, saddle + size * direction, level)
    value = phase.exponent(t).real
    if value >= f0.real:
        raise PathTracingError("Path does not descend from the saddle.")
    points.append(t)

    junction = False
    reason = 'max_steps'
    for _ in range(max_steps):
        if value < floor:
            reason = 'underflow'
            break
        if cutoff is not None and abs(t) > cutoff:
            reason = 'cutoff'
            break

        ds = step * (1.0 + abs(t - saddle))
        if others:
            near = min(abs(t - s) for s in others)
            if near < 1.5 * ds:
                junction = True
                reason = 'junction'
                break
            ds = min(ds, 0.5 * near)

        fp = phase.exponent_deriv(t)
        if fp == 0:
            raise PathTracingError(f"Stationary point reached at {t}.")
        for _ in range(30):
            trial = _correct(phase, t - ds * np.conj(fp) / abs(fp), level)
            trial_value = phase.exponent(trial).real
            if trial_value < value and abs(trial - t) < 2.0 * ds:
                break
            ds *= 0.5
        else:
            raise PathTracingError(f"Could not continue the path at {t}.")

        t = trial
        value = trial_value
        points.append(t)

    return SteepestPath(points, saddle, direction, level, junction, reason)


def _path_integral(phase, path, order):
    gx, gw = special.roots_legendre(order)
    a = path.points[:-1]
    b = path.points[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = mid[:, None] + half[:, None] * gx[None, :]
    vals = np.exp(phase.exponent(nodes))
    return complex(np.sum(half[:, None] * gw[None, :] * vals))


def airy_phase(z):
    return PolynomialPhase([0.0, z, 0.0, 1.0 / 3.0], 1.0)


def airy_deformed(z, order=8, step=0.05):
    """
    Evaluates Ai(z) = (1/2 pi) int exp(i (s^3/3 + z s)) ds for z >= 0 along
        the steepest-descent branches through the saddle i sqrt(z).

    The two branches leaving the saddle toward the right and left are
        traced and the integrand is integrated with Gauss-Legendre on the
        straight segments between samples.

    :param z: The argument (>= 0).
    :type  z: float
    :param order: Gauss points per segment.
    :type  order: int
    :param step: The relative step of the path tracer.
    :type  step: float

    :return: Ai(z).
    :rtype: float
    """

    if z < 0:
        raise DescentLabError("airy_deformed needs z >= 0.")

    phase = airy_phase(z)
    saddle = 1j * np.sqrt(z)
    dirs = descent_directions(phase, saddle)
    right = [d for d in dirs if d.real > 1e-12]
    left = [d for d in dirs if d.real < -1e-12]
    if not right or not left:
        raise PathTracingError("No descent branches toward both ends.")

    right = max(right, key=lambda d: d.imag)
    left = max(left, key=lambda d: d.imag)

    out = 0j
    for d, sign in ((right, 1.0), (left, -1.0)):
        path = trace_steepest_path(phase, saddle, d, step=step)
        if path.junction:
            raise PathTracingError(f"Airy branch from {saddle} ran into a "
                                   f"junction.")
        out += sign * _path_integral(phase, path, order)

    value = out / (2.0 * np.pi)
    logger.debug(f"airy_deformed({z}) = {value}")

    return float(value.real)


def airy_series(z, dps=50):
    """
    Evaluates Ai(z) from its Maclaurin series in extended precision.

    :param z: The argument.
    :type  z: float
    :param dps: Decimal digits of working precision.
    :type  dps: int

    :return: Ai(z).
    :rtype: float
    """

    with mpmath.workdps(dps):
        z = mpmath.mpf(z)
        c1 = mpmath.power(3, mpmath.mpf(-2) / 3) / \
            mpmath.gamma(mpmath.mpf(2) / 3)
        c2 = mpmath.power(3, mpmath.mpf(-1) / 3) / \
            mpmath.gamma(mpmath.mpf(1) / 3)

        f_terms = [mpmath.mpf(1)]
        g_terms = [z]
        k = 0
        eps = mpmath.power(10, -dps)
        while True:
            k += 1
            z3 = z ** 3
            f_next = f_terms[-1] * z3 / ((3 * k - 1) * (3 * k))
            g_next = g_terms[-1] * z3 / ((3 * k) * (3 * k + 1))
            f_terms.append(f_next)
            g_terms.append(g_next)
            if abs(f_next) + abs(g_next) < eps and k > 3:
                break

        value = c1 * mpmath.fsum(f_terms) - c2 * mpmath.fsum(g_terms)
        return float(value)


def airy_laplace(z):
    """
    Gets the leading saddle-point approximation
        exp(-(2/3) z^(3/2)) / (2 sqrt(pi) z^(1/4)) of Ai(z), z > 0.

    :param z: The argument (> 0).
    :type  z: float

    :return: The approximation.
    :rtype: float
    """

    if z <= 0:
        raise DescentLabError("airy_laplace needs z > 0.")
    return float(np.exp(-2.0 / 3.0 * z ** 1.5) /
                 (2.0 * np.sqrt(np.pi) * z ** 0.25))
