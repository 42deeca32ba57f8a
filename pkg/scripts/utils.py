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

import sys
import os
import time
import json
import math
import hashlib
import textwrap
import logging
import platform

import matplotlib
import mpmath
import numpy as np
import scipy
import shapely
from colorama import Fore, Back, Style
from tqdm.auto import tqdm

from scripts import csv_util
from scripts import render
from scripts.equilibrium import SolverOptions
from scripts.equilibrium import solve_equilibrium
from scripts.exceptions import DescentLabError
from scripts.potential import Contour
from scripts.potential import FieldSpec
from scripts.saddle import airy_deformed
from scripts.saddle import airy_laplace
from scripts.saddle import airy_phase
from scripts.saddle import airy_series
from scripts.saddle import descent_directions
from scripts.saddle import trace_steepest_path
from scripts.scurve import SearchOptions
from scripts.scurve import caustic_map
from scripts.scurve import initial_contour
from scripts.scurve import maximin_search
from scripts.soliton import CONDITION_GUARD
from scripts.soliton import build_ensemble
from scripts.soliton import mass
from scripts.soliton import psi_grid
from scripts.spatial import SlitGeo
from scripts.wkb import wkb_table

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_PARTIAL = 2

MASS_MAX_N = 16

AIRY_Z = [0.0, 0.5, 1.0, 2.0, 5.0]
WKB_Z = [k / 50.0 for k in range(1, 51)]


def jsonable(obj):
    """
    Converts numpy values, complex numbers and non-finite floats into
        JSON-ready values.

    :param obj: The object.

    :return: The converted object.
    """

    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        return val if math.isfinite(val) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


def sha256_file(fn):
    h = hashlib.sha256()
    with open(fn, 'rb') as f:
        for chunk in iter(lambda: f.read(8192), b""):
            h.update(chunk)
    return h.hexdigest()


class LabUtils:

    def __init__(self, **kwargs):
        """
        Initializer for the LabUtils.

        :param kwargs: Options include:<br>
                results (str): The path where the result folders are
                    created.<br>
                log (str): The path where the log file is stored.<br>
                version (str): The version of the CLI.<br>
                colourize (boolean): Use colours in the console output.<br>
                silent (boolean): True to suppress progress and messages.<br>
        :type  kwargs: dict
        """

        self.indent = 3

        self.logger = logging.getLogger('descent_lab')

        self.version = ''
        if kwargs.get('version') is not None:
            self.version = str(kwargs.get('version'))

        self.results_path = "results"
        if kwargs.get('results') is not None:
            self.results_path = str(kwargs.get('results'))

        self.log_path = "log"
        if kwargs.get('log') is not None:
            self.log_path = str(kwargs.get('log'))

        self.colourize = True
        if kwargs.get('colourize') is not None:
            self.colourize = bool(kwargs.get('colourize'))

        self.silent = False
        if kwargs.get('silent') is not None:
            self.silent = bool(kwargs.get('silent'))

        self.reset_colour = self.get_colour(reset=True)
        self.warn_colour = self.get_colour(fore='YELLOW', style='BRIGHT')
        self.err_colour = self.get_colour(fore='RED', style='BRIGHT')
        self.note_colour = self.get_colour(fore='CYAN', style='BRIGHT')
        self.path_colour = self.get_colour(fore='GREEN', style='BRIGHT')

        self.color_map = {
            'error': self.err_colour,
            'warning': self.warn_colour,
            'note': self.note_colour
        }

    def get_colour(self, **kwargs):
        """
        Gets a colour value for colorama
        """

        if not self.colourize:
            return ''

        if kwargs.get('reset'):
            return Fore.RESET + Back.RESET + Style.RESET_ALL

        fore_str = getattr(Fore, kwargs.get('fore'), '') \
            if kwargs.get('fore') else ''
        back_str = getattr(Back, kwargs.get('back'), '') \
            if kwargs.get('back') else ''
        style_str = getattr(Style, kwargs.get('style'), '') \
            if kwargs.get('style') else ''

        return fore_str + back_str + style_str

    def print_msg(self, msg, nl=True, indent=False, heading=None,
                  wrap_text=True):
        """
        Prints a message to the command prompt.

        :param msg: The message to print to the screen.
        :type  msg: str
        :param nl: If True, a newline will be added to the start of the
                    message.
        :type  nl: boolean
        :param indent: If True, the message is indented.
        :type  indent: boolean
        :param heading: 'error', 'warning' or 'note'.
        :type  heading: str
        :param wrap_text: Wrap the message to 80 characters.
        :type  wrap_text: boolean
        """

        if self.silent and heading not in ('error', 'warning'):
            return None

        initial_indent = ''
        subsequent_indent = ''
        if indent:
            initial_indent = ' ' * self.indent
            subsequent_indent = ' ' * self.indent

        if wrap_text:
            msg = textwrap.fill(msg, width=80, break_long_words=False,
                                replace_whitespace=False,
                                initial_indent=initial_indent,
                                subsequent_indent=subsequent_indent,
                                break_on_hyphens=False)

        color = ''
        if heading:
            color = self.color_map.get(heading, '')
            msg = f"{initial_indent}**** {heading.upper()} ****\n" \
                f"{msg}\n{initial_indent}*****************\n"

        if nl:
            msg = color + f"\n{msg}"
        else:
            msg = color + f"{msg}"

        print(msg + self.reset_colour)

    def print_footer(self, title, msg):
        """
        Prints a footer to the command prompt.

        :param title: The title of the footer.
        :type  title: str
        :param msg: The message for the footer.
        :type  msg: str
        """

        if self.silent:
            return None

        indent_str = ' ' * self.indent
        dash_str = (59 - len(title)) * '-'
        print(f"\n{self.note_colour}{indent_str}-----{title}{dash_str}")
        for m in msg.strip('\n').split('\n'):
            print(f"{indent_str}| {m}")
        print(f"{indent_str}------------------------------------------------"
              f"----------------{self.reset_colour}")

    def print_heading(self, msg):
        """
        Prints a heading to the command prompt.

        :param msg: The msg for the heading.
        :type  msg: str
        """

        if self.silent:
            return None

        print("\n**********************************************************"
              "****************")
        print(f" {msg}")
        print("************************************************************"
              "**************")

    def log_parameters(self, params, title=None):
        """
        Logs the script parameters in the log file.

        :param params: A dictionary of the script parameters.
        :type  params: dict
        :param title: The title of the message.
        :type  title: str
        """

        if title is None:
            title = "Script Parameters"

        msg = f"{title}:\n"
        for k, v in params.items():
            msg += f"  {k}: {v}\n"
        self.logger.info(msg)

    def exit_cli(self, exit_code=0):
        """
        Properly exits the CLI

        :param exit_code: 0 for OK, 1 for a failure and 2 for a partial
                    failure.
        :type  exit_code: int
        """

        if not self.silent:
            if exit_code == EXIT_OK:
                print("\nProcess complete.")
            elif exit_code == EXIT_PARTIAL:
                print("\nProcess complete with failures; see the results "
                      "and the log.")
            else:
                print("\nExiting process.")

        sys.exit(exit_code)

    def versions(self):
        return {'descent_lab': self.version,
                'python': platform.python_version(),
                'numpy': np.__version__,
                'scipy': scipy.__version__,
                'mpmath': mpmath.__version__,
                'shapely': shapely.__version__,
                'matplotlib': matplotlib.__version__}


class LabProcess(LabUtils):

    def __init__(self, **kwargs):
        """
        :param kwargs: See LabUtils; also<br>
                out (str): The output folder of the run.<br>
        :type  kwargs: dict
        """

        super().__init__(**kwargs)

        self.out_path = kwargs.get('out')
        self.files = []
        self.timings = {}

    def _set_out_path(self, cfg):
        if self.out_path is None:
            self.out_path = os.path.join(self.results_path,
                                         f"{cfg.process}_{cfg.seed}")
        os.makedirs(self.out_path, exist_ok=True)
        return self.out_path

    def _out_fn(self, name):
        return os.path.join(self.out_path, name)

    def _add_file(self, fn):
        if fn not in self.files:
            self.files.append(fn)

    def write_json(self, name, obj):
        """
        Writes a result dictionary as sorted-key UTF-8 JSON.

        :param name: The file name within the output folder.
        :type  name: str
        :param obj: The results.
        :type  obj: dict

        :return: The full filename.
        :rtype: str
        """

        fn = self._out_fn(name)
        with open(fn, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(jsonable(obj), f, sort_keys=True, indent=2,
                      ensure_ascii=False, allow_nan=False)
            f.write('\n')
        self._add_file(fn)
        return fn

    def write_csv(self, name, header, rows):
        """
        Writes result rows as RFC-4180 CSV.
        """

        fn = self._out_fn(name)
        with csv_util.ResultCSV(fn, header) as res_csv:
            res_csv.export_results(rows)
        self._add_file(fn)
        return fn

    def write_svg(self, plot_func, name, *args, **kwargs):
        fn = self._out_fn(name)
        try:
            plot_func(*args, fn=fn, **kwargs)
        except Exception as err:
            # Render failures only warn
            self.logger.warning(f"Could not render {name}: {err}")
            return None
        self._add_file(fn)
        return fn

    def write_manifest(self, cfg, status):
        """
        Writes manifest.json listing the config echo, package versions,
            timings and a sha256 checksum of every emitted file.

        :param cfg: The run configuration.
        :type  cfg: scripts.field.RunConfig
        :param status: The exit status.
        :type  status: int

        :return: The manifest filename.
        :rtype: str
        """

        files = [{'name': os.path.basename(fn),
                  'sha256': sha256_file(fn),
                  'bytes': os.path.getsize(fn)} for fn in self.files]
        manifest = {'config': cfg.to_dict(),
                    'seed': cfg.seed,
                    'exit_status': status,
                    'versions': self.versions(),
                    'timings': self.timings,
                    'files': files}
        fn = self._out_fn('manifest.json')
        with open(fn, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(jsonable(manifest), f, sort_keys=True, indent=2)
            f.write('\n')
        return fn

    def _field(self, cfg):
        return FieldSpec('nls', x=cfg.field.get('x', 0.0),
                         t=cfg.field.get('t', 0.0),
                         A=cfg.field.get('A', 1.0))

    def _contour(self, cfg, f, opts):
        geo = SlitGeo(f.A, opts.keep_out, opts.anchor_offset)
        if cfg.contour is not None:
            verts = [complex(v[0], v[1]) for v in cfg.contour['vertices']]
            contour = Contour.from_complex(verts, geo.anchors())
        else:
            contour = initial_contour(f, opts.n_vertices, geo)
        geo.check_contour(contour)
        return contour

    def _search_opts(self, cfg, search_defaults=True):
        # maximin and sweep solve on coarser meshes than a single solve
        solver = SearchOptions().solver if search_defaults \
            else SolverOptions()
        solver = solver.copy(**cfg.solver)
        return SearchOptions(solver=solver, **cfg.search)

    def _node_rows(self, sol):
        mu = sol.measure
        dens = mu.density()
        rows = []
        for k, z in enumerate(mu.nodes):
            rows.append({'index': k, 're': float(z.real), 'im': float(z.imag),
                         'cell_length': float(mu.cell_lengths[k]),
                         'weight': float(mu.weights[k]),
                         'density': float(dens[k]),
                         'supported': bool(sol.support_mask[k])})
        return rows

    def _timed(self, key, func, *args, **kwargs):
        start = time.perf_counter()
        out = func(*args, **kwargs)
        self.timings[key] = time.perf_counter() - start
        return out

    def run_equilibrium(self, cfg):
        """
        Solves the equilibrium problem on the configured (or default) contour.

        :param cfg: The run configuration.
        :type  cfg: scripts.field.RunConfig

        :return: The exit status.
        :rtype: int
        """

        f = self._field(cfg)
        opts = self._search_opts(cfg, search_defaults=False)
        contour = self._contour(cfg, f, opts)
        sol = self._timed('solve', solve_equilibrium, contour, f,
                          opts.solver)

        self.print_msg(f"Energy {sol.energy_value:.12g}, genus {sol.genus}, "
                       f"KKT on/off support {sol.kkt_on_support:.3g} / "
                       f"{sol.kkt_off_support:.3g}.", indent=True)

        self._set_out_path(cfg)
        if 'json' in cfg.formats:
            res = sol.to_dict()
            res.update({'process': cfg.process, 'seed': cfg.seed,
                        'field': f.to_dict()})
            self.write_json('equilibrium.json', res)
        if 'csv' in cfg.formats:
            self.write_csv('equilibrium.csv',
                           ['index', 're', 'im', 'cell_length', 'weight',
                            'density', 'supported'], self._node_rows(sol))
        if 'svg' in cfg.formats:
            self.write_svg(render.plot_density, 'density.svg', sol)
            self.write_svg(render.plot_contour, 'contour.svg', contour,
                           sol=sol, A=f.A)

        return EXIT_OK

    def run_maximin(self, cfg):
        """
        Runs the maximin search for an S-curve.
        """

        f = self._field(cfg)
        opts = self._search_opts(cfg)
        contour = self._contour(cfg, f, opts)
        res = self._timed('search', maximin_search, contour, f, opts,
                          silent=self.silent)

        self.print_msg(f"Energy {res.energy():.12g}, certificate "
                       f"{res.local_max_certificate:.3g}, S-residual "
                       f"{res.s_residual:.3g}.", indent=True)
        for flag in res.flags:
            self.print_msg(f"Result flagged: {flag}.", heading='warning')

        self._set_out_path(cfg)
        if 'json' in cfg.formats:
            out = res.to_dict()
            out.update({'process': cfg.process, 'seed': cfg.seed,
                        'field': f.to_dict()})
            self.write_json('maximin.json', out)
        if 'csv' in cfg.formats:
            self.write_csv('maximin.csv',
                           ['index', 're', 'im', 'cell_length', 'weight',
                            'density', 'supported'],
                           self._node_rows(res.solution))
        if 'svg' in cfg.formats:
            self.write_svg(render.plot_contour, 'contour.svg', res.contour,
                           sol=res.solution, A=f.A)
            self.write_svg(render.plot_density, 'density.svg', res.solution)

        return EXIT_OK

    def run_sweep(self, cfg, workers=None):
        """
        Computes the caustic map over the configured (x, t) grid; failed
            cells are recorded in the grid.
        """

        f = self._field(cfg)
        opts = self._search_opts(cfg).copy(workers=1)
        xs = cfg.grid.get('x', [f.x])
        ts = cfg.grid.get('t', [f.t])
        if workers is None:
            workers = os.cpu_count() or 1

        cmap = self._timed('sweep', caustic_map, f, xs, ts, opts,
                           warm_start=True, workers=workers,
                           silent=self.silent)

        total = len(xs) * len(ts)
        failed = cmap.failed()
        rows = cmap.to_rows()

        self._set_out_path(cfg)
        if 'json' in cfg.formats:
            self.write_json('sweep.json',
                            {'process': cfg.process, 'seed': cfg.seed,
                             'A': f.A, 'x_grid': cmap.x_grid,
                             't_grid': cmap.t_grid, 'cells': rows,
                             'caustic_cells': cmap.caustic_cells(),
                             'failed': failed})
        if 'csv' in cfg.formats:
            self.write_csv('sweep.csv',
                           ['x', 't', 'genus', 'energy', 'spike_contact',
                            'caustic', 'error'], rows)
        if 'svg' in cfg.formats:
            self.write_svg(render.plot_genus_map, 'genus.svg', cmap)

        if failed == total:
            self.print_msg("Every cell of the sweep failed.",
                           heading='error')
            return EXIT_FAILED
        if failed:
            self.print_msg(f"{failed} of {total} cells failed.",
                           heading='warning')
            return EXIT_PARTIAL
        return EXIT_OK

    def run_soliton(self, cfg, workers=1):
        """
        Evaluates the soliton-ensemble oracle on the configured grid.
        """

        A = cfg.field.get('A', 1.0)
        N = int(cfg.oracle.get('N', 8))
        guard = float(cfg.oracle.get('condition_guard', CONDITION_GUARD))
        extended = bool(cfg.oracle.get('extended', True))
        ens = build_ensemble(A, N)
        xs = cfg.grid.get('x', [cfg.field.get('x', 0.0)])
        ts = cfg.grid.get('t', [cfg.field.get('t', 0.0)])

        rows = []
        masses = {}
        start = time.perf_counter()
        for t in tqdm(ts, desc="Soliton oracle", disable=self.silent):
            psi, cond = psi_grid(ens, xs, t, workers, guard, extended)
            for x, p, c in zip(xs, psi, cond):
                rows.append({'x': float(x), 't': float(t),
                             're': float(p.real), 'im': float(p.imag),
                             'abs': float(abs(p)), 'condition': float(c)})
            if N <= MASS_MAX_N:
                masses[repr(float(t))] = mass(ens, t)
        self.timings['oracle'] = time.perf_counter() - start

        self._set_out_path(cfg)
        if 'json' in cfg.formats:
            self.write_json('soliton.json',
                            {'process': cfg.process, 'seed': cfg.seed,
                             'ensemble': ens.to_dict(), 'rows': rows,
                             'mass': masses})
        if 'csv' in cfg.formats:
            self.write_csv('soliton.csv',
                           ['x', 't', 're', 'im', 'abs', 'condition'], rows)
        if 'svg' in cfg.formats:
            first = [r for r in rows if r['t'] == float(ts[0])]
            self.write_svg(render.plot_profile, 'soliton.svg',
                           [r['x'] for r in first], [r['abs'] for r in first])

        return EXIT_OK

    def run_wkb(self, cfg):
        """
        Tabulates turning points and the phase integrals on the z-grid.
        """

        zs = cfg.grid.get('z', WKB_Z)
        rows = self._timed('wkb', wkb_table, zs)

        self._set_out_path(cfg)
        if 'json' in cfg.formats:
            self.write_json('wkb.json', {'process': cfg.process,
                                         'seed': cfg.seed, 'rows': rows})
        if 'csv' in cfg.formats:
            self.write_csv('wkb.csv', ['z', 'x_minus', 'x_plus', 'tau', 'rho'],
                           rows)
        if 'svg' in cfg.formats:
            self.write_svg(render.plot_profile, 'tau.svg',
                           [r['z'] for r in rows], [r['tau'] for r in rows],
                           label='tau')

        return EXIT_OK

    def run_airy(self, cfg):
        """
        Evaluates Ai(z) by steepest descent next to the series oracle.
        """

        zs = cfg.grid.get('z', AIRY_Z)
        if any(z < 0 for z in zs):
            raise DescentLabError("The airy process needs z >= 0.")

        rows = []
        start = time.perf_counter()
        for z in zs:
            z = float(z)
            deformed = airy_deformed(z)
            series = airy_series(z)
            rows.append({'z': z, 'deformed': deformed, 'series': series,
                         'laplace': airy_laplace(z) if z > 0 else None,
                         'abs_error': abs(deformed - series)})
        self.timings['airy'] = time.perf_counter() - start

        self._set_out_path(cfg)
        if 'json' in cfg.formats:
            self.write_json('airy.json', {'process': cfg.process,
                                          'seed': cfg.seed, 'rows': rows})
        if 'csv' in cfg.formats:
            self.write_csv('airy.csv', ['z', 'deformed', 'series', 'laplace',
                                        'abs_error'], rows)
        if 'svg' in cfg.formats:
            z = float(max(zs))
            phase = airy_phase(z)
            saddle = 1j * math.sqrt(max(z, 0.0))
            paths = [trace_steepest_path(phase, saddle, d)
                     for d in descent_directions(phase, saddle)
                     if abs(d.real) > 1e-12]
            self.write_svg(render.plot_paths, 'airy_paths.svg', paths,
                           saddles=[saddle])

        return EXIT_OK

    def run(self, cfg, workers=None):
        """
        Runs the configured process and writes the manifest.

        :param cfg: The validated run configuration.
        :type  cfg: scripts.field.RunConfig
        :param workers: Number of worker processes (None for the process
                    default).
        :type  workers: int

        :return: The exit status.
        :rtype: int
        """

        self.log_parameters(cfg.to_dict(), title="Run Configuration")

        start = time.perf_counter()
        if cfg.process == 'sweep':
            status = self.run_sweep(cfg, workers)
        elif cfg.process == 'soliton':
            status = self.run_soliton(cfg, workers or 1)
        else:
            runner = {'equilibrium': self.run_equilibrium,
                      'maximin': self.run_maximin,
                      'wkb': self.run_wkb,
                      'airy': self.run_airy}[cfg.process]
            status = runner(cfg)
        self.timings['total'] = time.perf_counter() - start

        manifest = self.write_manifest(cfg, status)
        names = [os.path.basename(fn) for fn in self.files]
        self.print_footer("Results", f"Folder: {self.out_path}\n" +
                          "\n".join(names + [os.path.basename(manifest)]))

        return status
