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

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger('descent_lab')

plt.rcParams['svg.hashsalt'] = 'descent-lab'
plt.rcParams['svg.fonttype'] = 'none'


def _save(fig, fn):
    fig.savefig(fn, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.debug(f"Saved plot {fn}")
    return fn


def _spike(ax, A):
    ax.plot([0.0, 0.0], [0.0, A], color='k', lw=2.0, label='spike')


def plot_density(sol, fn):
    """
    Plots the equilibrium density against arc length.

    :param sol: The equilibrium solution.
    :type  sol: scripts.equilibrium.EquilibriumSolution
    :param fn: The SVG filename.
    :type  fn: str

    :return: The filename.
    :rtype: str
    """

    mu = sol.measure
    if mu.arc is not None:
        s = np.asarray(mu.arc)
    else:
        s = np.cumsum(mu.cell_lengths) - 0.5 * mu.cell_lengths

    f, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(s, mu.density(), color='C0')
    for b in sol.bands:
        ax.axvspan(s[b[0]], s[b[1]], color='C1', alpha=0.15)
    ax.set_xlabel('arc length')
    ax.set_ylabel('density')
    ax.set_title(f"E = {sol.energy_value:.6g}, genus {sol.genus}")
    return _save(f, fn)


def plot_contour(contour, fn, sol=None, A=1.0):
    """
    Plots a contour in the slit upper half-plane with its bands.
    """

    pts = contour.polyline()
    f, ax = plt.subplots(figsize=(5, 5))
    _spike(ax, A)
    ax.plot(pts.real, pts.imag, color='C0', lw=1.0, label='contour')
    if sol is not None:
        nodes = sol.measure.nodes
        for b in sol.bands:
            seg = nodes[b[0]:b[1] + 1]
            ax.plot(seg.real, seg.imag, color='C3', lw=2.5)
    ax.set_aspect('equal')
    ax.set_xlabel('Re z')
    ax.set_ylabel('Im z')
    ax.legend(loc='upper right', fontsize='small')
    return _save(f, fn)


def plot_genus_map(cmap, fn):
    """
    Plots the genus of a caustic map over the (x, t) grid; failed cells are
        left blank.
    """

    genus = np.where(cmap.genus < 0, np.nan, cmap.genus.astype(float))
    f, ax = plt.subplots(figsize=(6, 4))
    mesh = ax.pcolormesh(cmap.x_grid, cmap.t_grid, genus, shading='nearest',
                         cmap='viridis')
    f.colorbar(mesh, ax=ax, label='genus')
    ax.set_xlabel('x')
    ax.set_ylabel('t')
    return _save(f, fn)


def plot_paths(paths, fn, saddles=None):
    """
    Plots traced steepest-descent paths.
    """

    f, ax = plt.subplots(figsize=(5, 5))
    for p in paths:
        ax.plot(p.points.real, p.points.imag, color='C0', lw=1.0)
    if saddles:
        s = np.asarray(saddles, dtype=complex)
        ax.plot(s.real, s.imag, 'o', color='C3')
    ax.set_aspect('equal')
    ax.set_xlabel('Re t')
    ax.set_ylabel('Im t')
    return _save(f, fn)


def plot_profile(xs, values, fn, label='|psi|'):
    f, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(xs, values, color='C0')
    ax.set_xlabel('x')
    ax.set_ylabel(label)
    return _save(f, fn)
