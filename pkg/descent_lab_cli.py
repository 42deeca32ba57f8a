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

__title__ = 'Descent-Lab'
__author__ = 'Descent Lab developers'
__copyright__ = 'Copyright (c) 2026 Descent Lab developers'
__license__ = 'MIT License'
__description__ = 'Numerical lab for the semiclassical focusing NLS ' \
                  'problem: equilibrium measures, S-curves, the soliton ' \
                  'ensemble oracle and linear steepest descent.'
__version__ = '1.0.0'
__maintainer__ = 'Descent Lab developers'

import sys
import os
import click
import traceback
import datetime
import logging
import logging.handlers as handlers
import pathlib
import numpy as np
from packaging import version as pack_v

from scripts import utils as lab_util
from scripts import field
from scripts import config_util
from scripts.exceptions import ConfigError
from scripts.exceptions import DescentLabError

proc_choices = {'equilibrium': {
                    'name': 'Equilibrium measure',
                    'desc': 'Solve for the equilibrium measure of a fixed '
                            'contour'
                },
                'maximin': {
                    'name': 'Maximin S-curve search',
                    'desc': 'Search for the contour maximizing the '
                            'equilibrium energy and check its S-property'
                },
                'sweep': {
                    'name': 'Caustic map',
                    'desc': 'Run the maximin search over an (x, t) grid and '
                            'map the genus'
                },
                'soliton': {
                    'name': 'Soliton ensemble oracle',
                    'desc': 'Evaluate the N-soliton ensemble of the sech '
                            'initial datum'
                },
                'wkb': {
                    'name': 'WKB phase integrals',
                    'desc': 'Tabulate turning points, tau and rho for the '
                            'sech^2 bump'
                },
                'airy': {
                    'name': 'Airy steepest descent',
                    'desc': 'Evaluate Ai(z) along steepest-descent paths '
                            'next to the series oracle'
                }}

min_numpy_version = '1.22.0'

abs_path = os.path.abspath(__file__)

log_levels = {'DEBUG': logging.DEBUG,
              'INFO': logging.INFO,
              'WARNING': logging.WARNING,
              'ERROR': logging.ERROR}


def get_configuration_values(config_util, out_path=None):

    config_params = {}

    res_path = config_util.get('Paths', 'results')
    if res_path is None or res_path == '':
        res_path = os.path.join(os.path.dirname(abs_path), 'results')
    elif not os.path.isabs(res_path):
        res_path = os.path.join(os.path.dirname(abs_path), res_path)
    config_params['res_path'] = res_path

    log_path = config_util.get('Paths', 'log')
    if log_path is None or log_path == '':
        log_path = os.path.join(os.path.dirname(abs_path), 'log',
                                'logger.log')
    elif not os.path.isabs(log_path):
        log_path = os.path.join(os.path.dirname(abs_path), log_path)
    config_params['log_path'] = log_path

    config_params['out_path'] = out_path

    config_params['colourize'] = config_util.get_bool('Script', 'colourize',
                                                      True)

    workers = config_util.get('Script', 'workers')
    try:
        workers = int(workers)
    except (TypeError, ValueError):
        workers = None
    config_params['workers'] = workers

    return config_params


def get_log_level():
    """
    Gets the log level from the DESCENT_LAB_LOG environment variable.

    :return: The level and a warning message for invalid values.
    :rtype: tuple
    """

    name = os.getenv('DESCENT_LAB_LOG')
    if name is None or name == '':
        return logging.INFO, None
    level = log_levels.get(name.strip().upper())
    if level is None:
        return logging.INFO, f"Invalid DESCENT_LAB_LOG value '{name}'; " \
                             f"using INFO."
    return level, None


def parse_formats(formats):
    if formats is None:
        return None
    out = [f.strip().lower() for f in formats.split(',') if f.strip()]
    bad = [f for f in out if f not in ('json', 'csv', 'svg')]
    if bad or not out:
        raise ConfigError(f"Invalid output format(s) '{formats}'; use a "
                          f"subset of json,csv,svg.", path='--format')
    return out


def build_config(config, process):
    """
    Loads the run configuration, or builds a minimal one for a process.

    :param config: The configuration filename.
    :type  config: str
    :param process: The process named on the command line.
    :type  process: str

    :return: The validated configuration.
    :rtype: scripts.field.RunConfig
    """

    if config is not None:
        cfg = field.load_run_config(config)
        if process is not None and process != cfg.process:
            raise ConfigError(f"--process {process} does not match the "
                              f"configuration's process '{cfg.process}'.",
                              path='$.process')
        return cfg

    if process is None:
        raise ConfigError("Either --config or --process is required.")

    return field.validate(f'{{"schema_version": 1, "process": "{process}"}}')


@click.command(context_settings={'help_option_names': ['-h', '--help']})
@click.option('--configure', default=None,
              help='Runs the configuration setup allowing the user to enter '
                   'configuration values (use "-h" for options).')
@click.option('--process', '-prc', '-r', default=None,
              type=click.Choice(list(proc_choices.keys())),
              help='The process to run:\n' + '\n'.join(
                  [f'{k}: {v["desc"]}' for k, v in proc_choices.items()]))
@click.option('--config', '-c', default=None,
              help='The JSON run configuration (see '
                   'schema/run_config.schema.json).')
@click.option('--out', '-o', default=None,
              help='The output folder; defaults to '
                   '<results>/<process>_<seed>.')
@click.option('--workers', '-w', default=None, type=int,
              help='Number of worker processes (default: all cores for '
                   'sweep, 1 elsewhere).')
@click.option('--format', '-f', 'formats', default=None,
              help='Comma-separated output formats: json,csv,svg.')
@click.option('--seed', default=None, type=click.IntRange(0, 2 ** 64 - 1),
              help='The run seed recorded in the manifest.')
@click.option('--silent', '-s', is_flag=True, default=None,
              help='Suppresses progress bars and notes.')
@click.option('--version', '-v', is_flag=True, default=None,
              help='Prints the version of the script.')
def cli(configure, process, config, out, workers, formats, seed, silent,
        version):
    """
    Run Descent Lab computations.
    """

    python_version_cur = ".".join([str(sys.version_info.major),
                                   str(sys.version_info.minor),
                                   str(sys.version_info.micro)])
    if pack_v.Version(python_version_cur) < pack_v.Version('3.8'):
        raise Exception("Must be using Python 3.8 or higher")

    if version:
        print(f"\n  {__title__}, version {__version__}\n")
        sys.exit(0)

    conf_util = config_util.ConfigUtils(lab_util.LabUtils())

    if configure:
        conf_util.ask_user(configure)
        sys.exit(0)

    conf_util.import_config()

    config_params = get_configuration_values(conf_util, out)
    colourize = config_params['colourize']
    log_path = config_params['log_path']

    lab = lab_util.LabProcess(version=__version__,
                              results=config_params['res_path'],
                              log=log_path,
                              out=config_params['out_path'],
                              colourize=colourize, silent=silent)

    if pack_v.Version(np.__version__) < pack_v.Version(min_numpy_version):
        lab.print_msg(f"The numpy currently installed (v{np.__version__}) "
                      f"is older than the minimum required version "
                      f"(v{min_numpy_version}).", heading='error')
        lab.exit_cli(1)

    if not os.path.exists(os.path.dirname(log_path)):
        pathlib.Path(os.path.dirname(log_path)).mkdir(parents=True,
                                                      exist_ok=True)

    # Setup logging
    level, level_msg = get_log_level()
    logger = logging.getLogger('descent_lab')
    logger.setLevel(level)

    formatter = logging.Formatter('%(asctime)s - %(levelname)s - '
                                  '%(message)s',
                                  datefmt='%Y-%m-%d %I:%M:%S %p')
    log_handler = handlers.RotatingFileHandler(log_path,
                                               maxBytes=500000,
                                               backupCount=2)
    log_handler.setLevel(level)
    log_handler.setFormatter(formatter)
    logger.addHandler(log_handler)

    if level_msg is not None:
        logger.warning(level_msg)
        lab.print_msg(level_msg, heading='warning')

    start_str = datetime.datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    logger.info(f"Script start time: {start_str}")

    try:
        cfg = build_config(config, process)
        cfg.apply_defaults(conf_util)
        cfg.override(seed=seed, formats=parse_formats(formats),
                     workers=workers)

        lab.print_heading(f"{__title__} v{__version__}: "
                          f"{proc_choices[cfg.process]['name']}")
        lab.log_parameters({'process': cfg.process, 'config': config,
                            'out': out, 'workers': workers,
                            'formats': cfg.formats, 'seed': cfg.seed,
                            'silent': silent})

        if workers is None and cfg.process == 'sweep':
            workers = config_params['workers']

        status = lab.run(cfg, workers)

        lab.exit_cli(status)

    except ConfigError as err:
        logger.error(f"Configuration error: {err}")
        lab.print_msg(f"Configuration error: {err}", heading='error')
        lab.exit_cli(1)
    except DescentLabError as err:
        logger.error(traceback.format_exc())
        lab.print_msg(f"{type(err).__name__}: {err}", heading='error')
        lab.exit_cli(1)
    except KeyboardInterrupt:
        msg = "Process ended by user."
        print(f"\n{msg}")
        logger.info(msg)
        lab.exit_cli(1)
    except Exception:
        trc_back = f"\n{traceback.format_exc()}"
        logger.error(traceback.format_exc())
        lab.print_msg(trc_back, heading='error', wrap_text=False)
        lab.exit_cli(1)


if __name__ == '__main__':
    cli()
