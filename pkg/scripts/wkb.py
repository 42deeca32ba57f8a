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
from scipy import optimize

from scripts.exceptions import DescentLabError
from scripts.exceptions import NoClassicalRegionError

logger = logging.getLogger('descent_lab')

TAIL_CUTOFF = 1e-14
BISECT_TOL = 1e-12


def sech2(x):
    return 1.0 / np.cosh(x) ** 2


class BumpProfile:
    """
    A single-hump initial profile u0(x) > 0 of unit height, decaying at
        both infinities.
    """

    def __init__(self, func=None, height=1.0, peak=0.0, name=None):
        """
        :param func: The profile u0(x); sech^2 if None.
        :type  func: callable
        :param height: The maximum of u0 (must be 1).
        :type  height: float
        :param peak: The location of the maximum.
        :type  peak: float
        :param name: A label for tables and logs.
        :type  name: str
        """

        self.func = sech2 if func is None else func
        self.height = float(height)
        self.peak = float(peak)
        self.name = name if name is not None else \
            ('sech2' if func is None else 'custom')

        if abs(self.height - 1.0) > 1e-12:
            raise DescentLabError("The bump profile must have unit height.")
        if abs(self.func(self.peak) - self.height) > 1e-10:
            raise DescentLabError("The bump profile does not reach its "
                                  "height at the declared peak.")
        self.decay = bool(self.func(self.peak + 60.0) < 1e-20 and
                          self.func(self.peak - 60.0) < 1e-20)
        if not self.decay:
            raise DescentLabError("The bump profile must decay at "
                                  "infinity.")

    def __repr__(self):
        return f"BumpProfile({self.name})"

    def eval(self, x):
        return self.func(x)


def _check_level(z, u0):
    if z <= 0:
        raise DescentLabError(f"Spectral parameter z must be positive "
                              f"(got {z}).")
    if z > u0.height:
        raise NoClassicalRegionError(f"No classical region: z = {z} exceeds "
                                     f"the bump height {u0.height}.")


def _expand_bracket(g, start, step):
    end = start + step
    while g(end) > 0:
        step *= 2.0
        end = start + step
        if abs(step) > 1e4:
            raise DescentLabError("Could not bracket the turning point.")
    return end


def turning_points(z, u0=None):
    """
    Gets the smallest and largest roots of u0(x) = z^2.

    :param z: The spectral parameter in (0, 1].
    :type  z: float
    :param u0: The bump profile (sech^2 if None).
    :type  u0: BumpProfile

    :return: The turning points (x_minus, x_plus).
    :rtype: tuple(float, float)
    """

    u0 = BumpProfile() if u0 is None else u0
    _check_level(z, u0)

    level = z * z
    if level >= u0.height:
        return u0.peak, u0.peak

    def g(x):
        return u0.eval(x) - level

    right = _expand_bracket(g, u0.peak, 1.0)
    left = _expand_bracket(g, u0.peak, -1.0)

    x_plus = optimize.bisect(g, u0.peak, right, xtol=BISECT_TOL)
    x_minus = optimize.bisect(g, left, u0.peak, xtol=BISECT_TOL)

    return float(x_minus), float(x_plus)


def tau(z, u0=None, epsrel=1e-11):
    """
    Integrates sqrt(u0(x) - z^2) over the classically allowed region
        between the turning points.

    The endpoint square roots are removed by x = c + r sin(theta).

    :param z: The spectral parameter in (0, 1].
    :type  z: float
    :param u0: The bump profile (sech^2 if None).
    :type  u0: BumpProfile
    :param epsrel: Relative tolerance passed to the quadrature.
    :type  epsrel: float

    :return: tau(z).
    :rtype: float
    """

    u0 = BumpProfile() if u0 is None else u0
    x_minus, x_plus = turning_points(z, u0)
    if x_plus <= x_minus:
        return 0.0

    level = z * z
    centre = 0.5 * (x_plus + x_minus)
    half = 0.5 * (x_plus - x_minus)

    def integrand(theta):
        x = centre + half * np.sin(theta)
        return np.sqrt(max(u0.eval(x) - level, 0.0)) * half * np.cos(theta)

    val, err = integrate.quad(integrand, -0.5 * np.pi, 0.5 * np.pi,
                              epsabs=0.0, epsrel=epsrel, limit=400)
    logger.debug(f"tau({z}) = {val} (error estimate {err})")

    return float(val)


def _tail_start(u0, x_plus, level):
    cutoff = TAIL_CUTOFF * level

    def g(x):
        return u0.eval(x) - cutoff

    right = _expand_bracket(g, x_plus, 1.0)
    return optimize.bisect(g, x_plus, right, xtol=1e-6)


def rho(z, u0=None, epsrel=1e-11):
    """
    Gets the phase integral rho(z) = x_plus z + int_{x_plus}^inf
        [z - sqrt(z^2 - u0(x))] dx.

    The square root at x_plus is removed by x = x_plus + s^2; the integral
        is truncated where u0 < 1e-14 z^2 and the tail u0 / (2z) is added.

    :param z: The spectral parameter in (0, 1].
    :type  z: float
    :param u0: The bump profile (sech^2 if None).
    :type  u0: BumpProfile
    :param epsrel: Relative tolerance passed to the quadrature.
    :type  epsrel: float

    :return: rho(z).
    :rtype: float
    """

    u0 = BumpProfile() if u0 is None else u0
    x_minus, x_plus = turning_points(z, u0)

    level = z * z
    big_x = _tail_start(u0, x_plus, level)

    def integrand(s):
        u = u0.eval(x_plus + s * s)
        # z - sqrt(z^2 - u) without cancellation
        return 2.0 * s * u / (z + np.sqrt(max(level - u, 0.0)))

    body, err = integrate.quad(integrand, 0.0, np.sqrt(big_x - x_plus),
                               epsabs=0.0, epsrel=epsrel, limit=400)
    tail, _ = integrate.quad(lambda x: u0.eval(x) / (2.0 * z), big_x,
                             np.inf)
    logger.debug(f"rho({z}) body {body} (error estimate {err}), tail {tail}")

    return float(x_plus * z + body + tail)


def reflection_wkb(z, eps, u0=None):
    """
    Gets the WKB reflection coefficient r(z) = -i exp(-2i rho(z) / eps)
        inside the band 0 < z <= 1 (zero outside) and the transmission
        deficit exp(-2 tau(z) / eps).

    :param z: The spectral parameter.
    :type  z: float
    :param eps: The dispersion parameter.
    :type  eps: float
    :param u0: The bump profile (sech^2 if None).
    :type  u0: BumpProfile

    :return: The reflection coefficient and the transmission deficit.
    :rtype: tuple(complex, float)
    """

    u0 = BumpProfile() if u0 is None else u0
    if eps <= 0:
        raise DescentLabError("The dispersion parameter must be positive.")
    if z <= 0 or z > u0.height:
        return 0j, 0.0

    phase = -2.0 * rho(z, u0) / eps
    r = -1j * np.exp(1j * phase)
    deficit = float(np.exp(-2.0 * tau(z, u0) / eps))

    return complex(r), deficit


def wkb_table(z_grid, u0=None):
    """
    Tabulates the turning points and phase integrals over a z-grid.

    :param z_grid: The spectral parameters, each in (0, 1].
    :type  z_grid: list[float]
    :param u0: The bump profile (sech^2 if None).
    :type  u0: BumpProfile

    :return: One dictionary per z with keys z, x_minus, x_plus, tau, rho.
    :rtype: list[dict]
    """

    u0 = BumpProfile() if u0 is None else u0
    rows = []
    for z in z_grid:
        x_minus, x_plus = turning_points(z, u0)
        rows.append({'z': float(z), 'x_minus': x_minus, 'x_plus': x_plus,
                     'tau': tau(z, u0), 'rho': rho(z, u0)})
    return rows
