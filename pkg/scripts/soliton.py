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
from concurrent.futures import ProcessPoolExecutor
from scipy import special

from scripts.exceptions import DescentLabError
from scripts.exceptions import IllConditionedError

logger = logging.getLogger('descent_lab')

CONDITION_GUARD = 1e13
ACCURATE_CONDITION = 1e3
DRESSING_TOL = 1e-12
MAX_N = 256
PRECISIONS = (30, 60, 120)
EDGE_LEVEL = 1e-8


class SolitonEnsemble:
    """
    The reflectionless eigenvalues and norming constants approximating
        A sech(x) at semiclassical parameter hbar = A / N.
    """

    def __init__(self, A, N, norming=None):
        """
        :param A: The amplitude, > 0.
        :type  A: float
        :param N: The number of eigenvalues, >= 1.
        :type  N: int
        :param norming: The norming constants (alternating signs if None).
        :type  norming: list[complex]
        """

        if A <= 0:
            raise DescentLabError("The amplitude A must be positive.")
        if int(N) != N or N < 1:
            raise DescentLabError("The soliton count N must be a positive "
                                  "integer.")

        self.A = float(A)
        self.N = int(N)
        self.hbar = self.A / self.N

        j = np.arange(self.N)
        self.eigenvalues = 1j * self.hbar * (j + 0.5)

        if norming is None:
            norming = (-1.0) ** j
        self.norming = np.asarray(norming, dtype=complex)
        if len(self.norming) != self.N:
            raise DescentLabError("One norming constant per eigenvalue is "
                                  "required.")
        if np.any(np.abs(np.abs(self.norming) - 1.0) > 1e-12):
            raise DescentLabError("Norming constants must have unit "
                                  "modulus.")

    def __repr__(self):
        return f"SolitonEnsemble(A={self.A}, N={self.N}, hbar={self.hbar})"

    def to_dict(self):
        return {'A': self.A, 'N': self.N, 'hbar': self.hbar,
                'eigenvalues_im': self.eigenvalues.imag.tolist(),
                'norming_re': self.norming.real.tolist(),
                'norming_im': self.norming.imag.tolist()}


def build_ensemble(A, N, norming=None):
    """
    Builds the soliton ensemble with eigenvalues i hbar (j + 1/2).

    :param A: The amplitude.
    :type  A: float
    :param N: The number of eigenvalues.
    :type  N: int
    :param norming: The norming constants ((-1)^j if None).
    :type  norming: list[complex]

    :return: The ensemble.
    :rtype: SolitonEnsemble
    """
    return SolitonEnsemble(A, N, norming)


def _pair_logs(lam, log, conj):
    """
    Gets D[j, k] = log(lam_j - lam_k) - log(lam_j - conj(lam_k)) for j != k.
    """
    n = len(lam)
    out = [[0 for _ in range(n)] for _ in range(n)]
    for j in range(n):
        for k in range(n):
            if j != k:
                out[j][k] = log(lam[j] - lam[k]) - log(lam[j] - conj(lam[k]))
    return out


def _residue_logs(lam, norming, x, t, hbar, log, conj):
    """
    Gets the logs of the residue coefficients after moving every pole with
        |gamma_j| > 1 to the other half-plane, and the flip mask.
    """

    n = len(lam)
    pair = _pair_logs(lam, log, conj)
    self_log = [log(lam[j] - conj(lam[j])) for j in range(n)]

    # gamma_j = c_j exp((2i lam_j x + 2i lam_j^2 t) / hbar) / a'(lam_j)
    log_gamma = []
    for j in range(n):
        theta = (2j * lam[j] * x + 2j * lam[j] ** 2 * t) / hbar
        log_aprime = -self_log[j] + sum(pair[j][k] for k in range(n) if k != j)
        log_gamma.append(log(norming[j]) + theta - log_aprime)

    flipped = [float(mpmath.re(lg)) > 0 for lg in log_gamma]

    log_g = []
    for j in range(n):
        log_b = sum(pair[j][k] for k in range(n) if flipped[k] and k != j)
        if flipped[j]:
            log_g.append(-log_gamma[j] - 2 * (log_b - self_log[j]))
        else:
            log_g.append(log_gamma[j] + 2 * log_b)

    return log_g, flipped


def _assemble(lam, g, flipped):
    lam = np.asarray(lam, dtype=complex)
    g = np.asarray(g, dtype=complex)
    upper = np.asarray(flipped, dtype=bool)
    lower = ~upper
    n = len(lam)

    def _coeffs(points, poles, mask, values):
        denom = points[:, None] - poles[None, :]
        # Zero denominators only occur in the branch _rows discards
        full = mask[None, :] & (denom != 0)
        numer = np.broadcast_to(values[None, :], denom.shape)
        return np.divide(numer, denom, where=full,
                         out=np.zeros(denom.shape, dtype=complex))

    def _rows(points, use_m11):
        # M11 = 1 + sum_L g p / (z - lam) + sum_U -conj(g) q / (z - conj(lam))
        m11_p = _coeffs(points, lam, lower, g)
        m11_q = _coeffs(points, np.conj(lam), upper, -np.conj(g))
        # M12 = sum_L -conj(g) q / (z - conj(lam)) + sum_U g p / (z - lam)
        m12_p = _coeffs(points, lam, upper, g)
        m12_q = _coeffs(points, np.conj(lam), lower, -np.conj(g))
        sel = use_m11[:, None]
        rows = np.hstack([np.where(sel, m11_p, m12_p),
                          np.where(sel, m11_q, m12_q)])
        return rows, use_m11.astype(float)

    rows_p, const_p = _rows(lam, upper)
    rows_q, const_q = _rows(np.conj(lam), lower)

    system = np.eye(2 * n, dtype=complex) - np.vstack([rows_p, rows_q])
    rhs = np.concatenate([const_p, const_q]).astype(complex)

    return system, rhs


def _recover(g, flipped, sol):
    g = np.asarray(g, dtype=complex)
    upper = np.asarray(flipped, dtype=bool)
    n = len(g)
    p = sol[:n]
    q = sol[n:]
    total = np.sum(np.where(upper, g * p, -np.conj(g) * q))
    return complex(2j * total)


def _solve_double(ens, x, t):
    lam = list(ens.eigenvalues)
    log_g, flipped = _residue_logs(lam, list(ens.norming), x, t, ens.hbar,
                                   np.log, np.conj)
    with np.errstate(over='ignore', invalid='ignore'):
        g = np.exp(np.asarray(log_g, dtype=complex))
        system, rhs = _assemble(lam, g, flipped)
    if not np.all(np.isfinite(system)):
        return None, np.inf

    # Row equilibration
    scale = np.max(np.abs(system), axis=1)
    system = system / scale[:, None]
    rhs = rhs / scale

    try:
        cond = float(np.linalg.cond(system))
        if not np.isfinite(cond):
            return None, np.inf
        sol = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError:
        return None, np.inf

    return _recover(g, flipped, sol), cond


def _kernel_vectors(lam, norming, x, t, hbar, exp):
    """
    Gets the kernel vectors exp(-i theta_k sigma3) (1, -c_k) of the dressing
        factors, divided by exp(|Im theta_k|) so the larger entry has
        modulus one.
    """

    vectors = []
    for lk, ck in zip(lam, norming):
        theta = (lk * x + lk ** 2 * t) / hbar
        s = theta.imag
        left = exp(-1j * theta.real)
        right = -ck * exp(1j * theta.real)
        if s >= 0:
            vectors.append([left, right * exp(-2 * s)])
        else:
            vectors.append([left * exp(2 * s), right])
    return vectors


def _dress_double(lam, vectors, order):
    """
    Applies the dressing factors I - (lam_k - conj lam_k) P_k / (z - conj
        lam_k) one eigenvalue at a time, in the given order. P_k projects on
        the dressed kernel vector of lam_k and contributes 4 Im(lam_k)
        (P_k)_12 to psi.

    :return: psi and the largest growth of a relative error in a kernel
                vector.
    :rtype: tuple(complex, float)
    """

    lam = np.asarray(lam, dtype=complex)
    v = np.array(vectors, dtype=complex)
    growth = np.ones(len(lam))
    order = list(order)
    psi = 0j

    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        for pos, k in enumerate(order):
            u = v[k] / np.linalg.norm(v[k])
            psi += 4.0 * lam[k].imag * u[0] * np.conj(u[1])
            rest = order[pos + 1:]
            if not rest:
                break
            f = (lam[k] - np.conj(lam[k])) / (lam[rest] - np.conj(lam[k]))
            s = np.conj(u[0]) * v[rest, 0] + np.conj(u[1]) * v[rest, 1]
            w = v[rest] - (f * s)[:, None] * u[None, :]
            before = np.linalg.norm(v[rest], axis=1)
            after = np.linalg.norm(w, axis=1)
            growth[rest] *= before / after
            v[rest] = w / after[:, None]

    return complex(psi), float(np.max(growth))


def _dress_extended(ens, x, t, dps):
    with mpmath.workdps(dps):
        hbar = mpmath.mpf(ens.A) / ens.N
        lam = [mpmath.mpc(0, hbar * (j + mpmath.mpf(1) / 2))
               for j in range(ens.N)]
        norming = [mpmath.mpc(c.real, c.imag) for c in ens.norming]
        v = _kernel_vectors(lam, norming, mpmath.mpf(x), mpmath.mpf(t),
                            hbar, mpmath.exp)

        psi = mpmath.mpc(0)
        for k in range(ens.N):
            norm = mpmath.sqrt(abs(v[k][0]) ** 2 + abs(v[k][1]) ** 2)
            u0, u1 = v[k][0] / norm, v[k][1] / norm
            psi += 4 * lam[k].imag * u0 * mpmath.conj(u1)
            alpha = lam[k] - mpmath.conj(lam[k])
            for m in range(k + 1, ens.N):
                f = alpha / (lam[m] - mpmath.conj(lam[k]))
                s = mpmath.conj(u0) * v[m][0] + mpmath.conj(u1) * v[m][1]
                v[m] = [v[m][0] - f * s * u0, v[m][1] - f * s * u1]

        return complex(psi)


def _precisions(growth, n):
    if np.isfinite(growth) and growth >= 1.0:
        start = max(PRECISIONS[0], 20 + int(np.ceil(np.log10(growth))))
    else:
        start = PRECISIONS[0] + 2 * n
    return [start, start + 20] + [start * p // PRECISIONS[0]
                                  for p in PRECISIONS[1:]]


def evaluate_psi(ens, x, t, condition_guard=CONDITION_GUARD, extended=True):
    """
    Solves the discrete Riemann-Hilbert problem of the ensemble at (x, t)
        and recovers psi = 2i lim lambda M12.

    Poles whose residue coefficient exceeds one are moved to the conjugate
        half-plane, so the residue coefficients of the linear system stay
        bounded. The row-equilibrated system is solved in double precision
        and its solution is returned when the condition estimate is at most
        min(condition_guard, ACCURATE_CONDITION).

    Otherwise psi is rebuilt by dressing the zero solution one eigenvalue at
        a time. The dressing is independent of the eigenvalue order, so it
        runs in ascending and descending order and is accepted when both
        agree within DRESSING_TOL. When they do not, it is repeated with
        mpmath at increasing precision until two precisions agree.

    :param ens: The ensemble.
    :type  ens: SolitonEnsemble
    :param x: The space variable.
    :type  x: float
    :param t: The time variable.
    :type  t: float
    :param condition_guard: Largest condition estimate of the residue
                system accepted without the dressing fallback.
    :type  condition_guard: float
    :param extended: Allow the dressing and extended-precision fallbacks.
    :type  extended: bool

    :return: psi(x, t) and the condition estimate of the double-precision
                residue system (inf when it cannot be formed).
    :rtype: tuple(complex, float)
    """

    if ens.N > MAX_N:
        raise IllConditionedError(f"N = {ens.N} exceeds the supported "
                                  f"maximum {MAX_N}.", condition=None)
    if not (np.isfinite(x) and np.isfinite(t)):
        raise DescentLabError("x and t must be finite.")

    psi, cond = _solve_double(ens, x, t)
    if psi is not None and cond <= min(condition_guard, ACCURATE_CONDITION):
        return psi, cond

    if not extended:
        raise IllConditionedError(f"Discrete RH system at x={x}, t={t} has "
                                  f"condition {cond:.3g}.", condition=cond,
                                  x=x, t=t, N=ens.N)

    lam = list(ens.eigenvalues)
    vectors = _kernel_vectors(lam, list(ens.norming), x, t, ens.hbar, np.exp)
    up, growth_up = _dress_double(lam, vectors, range(ens.N))
    down, growth_down = _dress_double(lam, vectors, reversed(range(ens.N)))
    if np.isfinite(up) and np.isfinite(down) and \
            abs(up - down) <= DRESSING_TOL * max(1.0, ens.A):
        return up, cond

    growth = max(growth_up, growth_down)
    logger.debug(f"Dressing orders differ by {abs(up - down):.3g} at x={x}, "
                 f"t={t} (growth {growth:.3g}); using extended precision.")

    previous = None
    tried = []
    for dps in _precisions(growth, ens.N):
        tried.append(dps)
        try:
            value = _dress_extended(ens, x, t, dps)
        except ZeroDivisionError:
            logger.debug(f"Dressing at {dps} digits is singular at x={x}, "
                         f"t={t}.")
            previous = None
            continue
        if previous is not None and \
                abs(value - previous) <= 1e-14 * max(1.0, abs(value)):
            return value, cond
        previous = value

    raise IllConditionedError(f"Extended-precision solutions at x={x}, "
                              f"t={t} do not agree at {tried} digits.",
                              condition=cond, x=x, t=t, N=ens.N,
                              growth=growth)


def one_soliton(lam, c, hbar, x, t):
    """
    Gets the closed-form single-eigenvalue solution
        psi = -2i conj(gamma) / (1 + |gamma|^2 / (4 eta^2)) with eta = Im lam.

    :param lam: The eigenvalue (upper half-plane).
    :type  lam: complex
    :param c: The norming constant.
    :type  c: complex
    :param hbar: The semiclassical parameter.
    :type  hbar: float
    :param x: The space variable.
    :type  x: float
    :param t: The time variable.
    :type  t: float

    :return: psi(x, t).
    :rtype: complex
    """

    lam = complex(lam)
    eta = lam.imag
    gamma = c * (lam - np.conj(lam)) * \
        np.exp((2j * lam * x + 2j * lam ** 2 * t) / hbar)
    return complex(-2j * np.conj(gamma) / (1.0 + abs(gamma) ** 2 /
                                           (4.0 * eta ** 2)))


def _psi_task(args):
    ens, x, t, guard, extended = args
    return evaluate_psi(ens, x, t, guard, extended)


def psi_grid(ens, xs, t, workers=1, condition_guard=CONDITION_GUARD,
             extended=True):
    """
    Evaluates psi over an x-grid, in input order.

    :param ens: The ensemble.
    :type  ens: SolitonEnsemble
    :param xs: The x values.
    :type  xs: list[float]
    :param t: The time.
    :type  t: float
    :param workers: Number of processes.
    :type  workers: int
    :param condition_guard: Largest condition estimate accepted in double
                precision.
    :type  condition_guard: float
    :param extended: Allow the extended-precision fallback.
    :type  extended: bool

    :return: The psi values and condition estimates.
    :rtype: tuple(numpy.ndarray, numpy.ndarray)
    """

    tasks = [(ens, float(x), float(t), condition_guard, extended)
             for x in xs]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_psi_task, tasks))
    else:
        out = [_psi_task(task) for task in tasks]

    psi = np.array([o[0] for o in out], dtype=complex)
    cond = np.array([o[1] for o in out], dtype=float)
    return psi, cond


def mass(ens, t=0.0, x_window=25.0, n_quad=4000, panel_order=16):
    """
    Integrates |psi|^2 over [-x_window, x_window] with composite
        Gauss-Legendre quadrature. Logs a warning when |psi| at the window
        edge exceeds 1e-8.

    :param ens: The ensemble.
    :type  ens: SolitonEnsemble
    :param t: The time.
    :type  t: float
    :param x_window: The half-width of the window.
    :type  x_window: float
    :param n_quad: The total number of quadrature points.
    :type  n_quad: int
    :param panel_order: Gauss points per panel.
    :type  panel_order: int

    :return: The mass.
    :rtype: float
    """

    edge = max(abs(evaluate_psi(ens, -x_window, t)[0]),
               abs(evaluate_psi(ens, x_window, t)[0]))
    if edge > EDGE_LEVEL:
        logger.warning(f"Mass window too small: |psi| = {edge:.3g} at "
                       f"x = +-{x_window}.")

    panels = max(1, n_quad // panel_order)
    gx, gw = special.roots_legendre(panel_order)
    breaks = np.linspace(-x_window, x_window, panels + 1)
    half = 0.5 * np.diff(breaks)
    mid = 0.5 * (breaks[:-1] + breaks[1:])
    xs = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    ws = (half[:, None] * gw[None, :]).ravel()

    psi, _ = psi_grid(ens, xs, t)

    return float(np.sum(ws * np.abs(psi) ** 2))
