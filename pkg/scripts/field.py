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

import json
import os
import re

import jsonschema

from scripts.exceptions import ConfigError

SCHEMA_FN = os.path.join(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))), 'schema', 'run_config.schema.json')

SCHEMA_VERSION = 1


class Field:
    """
    The class which maps a run-config option onto its configuration file
        entry.

    The parts of a field:
    - section: The run-config section (ex: solver).
    - name: The option name within the section.
    - conf_section: The config.ini section holding the user default.
    - datatype: The type used to parse the config.ini value.
    - description: The description of the option.
    """

    def __init__(self, **kwargs):
        """
        :param \**kwargs:
        See below

        :Keyword Arguments:
            * *section* (``str``) --
              The run-config section.
            * *name* (``str``) --
              The option name.
            * *conf_section* (``str``) --
              The config.ini section.
            * *datatype* (``type``) --
              The type of the option.
            * *description* (``str``) --
              The description of the option.
        """
        self.section = kwargs.get('section')
        self.name = kwargs.get('name')
        self.conf_section = kwargs.get('conf_section')
        self.datatype = kwargs.get('datatype', float)
        self.description = kwargs.get('description')

    def __repr__(self):
        return f"Field({self.section}.{self.name})"

    def parse(self, val):
        """
        Parses a config.ini string into the field's type.

        :param val: The value from the configuration file.
        :type  val: str or bool

        :return: The parsed value or None if blank.
        """

        if val is None or val == '':
            return None
        if self.datatype is bool:
            if isinstance(val, bool):
                return val
            return str(val).lower() == 'true'
        return self.datatype(val)


CONFIG_FIELDS = [
    Field(section='solver', name='energy_tol', conf_section='Solver',
          description="Energy tolerance of the inner solver"),
    Field(section='solver', name='max_iter', conf_section='Solver',
          datatype=int, description="Maximum active-set iterations"),
    Field(section='solver', name='support_threshold', conf_section='Solver',
          description="Relative weight defining supported nodes"),
    Field(section='solver', name='density_cap', conf_section='Solver',
          description="Upper density constraint (blank for none)"),
    Field(section='search', name='keep_out', conf_section='Solver',
          description="Keep-out distance from the spike"),
    Field(section='search', name='anchor_offset', conf_section='Solver',
          description="Offset of the 0+ and 0- anchors"),
    Field(section='search', name='stationarity_tol', conf_section='Search',
          description="Stationarity tolerance of the maximin search"),
    Field(section='search', name='max_sweeps', conf_section='Search',
          datatype=int, description="Maximum coordinate-ascent sweeps"),
    Field(section='search', name='max_contacts', conf_section='Search',
          datatype=int, description="Spike contacts before flagging"),
    Field(section='search', name='n_fourier', conf_section='Search',
          datatype=int, description="Number of sine modes"),
    Field(section='oracle', name='condition_guard', conf_section='Oracle',
          description="Condition number triggering extended precision"),
    Field(section='oracle', name='N', conf_section='Oracle', datatype=int,
          description="Default number of solitons"),
]


class RunConfig:
    """
    A validated run configuration.
    """

    def __init__(self, data, path=None):
        """
        :param data: The validated configuration dictionary.
        :type  data: dict
        :param path: The file the configuration came from.
        :type  path: str
        """

        self.data = data
        self.path = path

        self.process = data['process']
        self.seed = int(data.get('seed', 0))
        self.formats = list(data.get('formats', ['json', 'csv']))
        self.field = dict(data.get('field', {}))
        self.solver = dict(data.get('solver', {}))
        self.search = dict(data.get('search', {}))
        self.oracle = dict(data.get('oracle', {}))
        self.grid = dict(data.get('grid', {}))
        self.contour = data.get('contour')

    def __repr__(self):
        return f"RunConfig({self.process}, seed={self.seed})"

    def apply_defaults(self, config_util):
        """
        Fills options missing from the run configuration with the user's
            config.ini values.

        :param config_util: The configuration utility.
        :type  config_util: scripts.config_util.ConfigUtils
        """

        for fld in CONFIG_FIELDS:
            sect = getattr(self, fld.section)
            if sect.get(fld.name) is not None:
                continue
            val = fld.parse(config_util.get(fld.conf_section, fld.name))
            if val is not None:
                sect[fld.name] = val

    def override(self, **kwargs):
        """
        Applies explicit command-line values.
        """

        if kwargs.get('seed') is not None:
            self.seed = int(kwargs.get('seed'))
        if kwargs.get('formats'):
            self.formats = list(kwargs.get('formats'))
        if kwargs.get('workers') is not None:
            self.solver['workers'] = int(kwargs.get('workers'))
            self.search['workers'] = int(kwargs.get('workers'))

    def to_dict(self):
        """
        Echoes the effective configuration.
        """

        out = {'schema_version': SCHEMA_VERSION,
               'process': self.process,
               'seed': self.seed,
               'formats': self.formats,
               'field': self.field,
               'solver': self.solver,
               'search': self.search,
               'oracle': self.oracle,
               'grid': self.grid}
        if self.contour is not None:
            out['contour'] = self.contour
        return out


def _json_path(path):
    out = '$'
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def key_line(text, path):
    """
    Gets the line number of the key or list item at a JSON path, scanning
        the raw text; falls back to the deepest located parent.

    :param text: The raw JSON text.
    :type  text: str
    :param path: The path components.
    :type  path: list

    :return: The 1-based line number.
    :rtype: int
    """

    pos = 0
    for p in path:
        if isinstance(p, int):
            start = text.find('[', pos)
            if start < 0:
                break
            depth = 0
            count = 0
            found = None
            for idx in range(start + 1, len(text)):
                ch = text[idx]
                if depth == 0 and count == p and ch not in ', \t\r\n':
                    found = idx
                    break
                if ch in '[{':
                    depth += 1
                elif ch in ']}':
                    if depth == 0:
                        break
                    depth -= 1
                elif ch == ',' and depth == 0:
                    count += 1
            if found is None:
                break
            pos = found
        else:
            match = re.compile(r'"%s"\s*:' % re.escape(str(p))).search(
                text, pos)
            if match is None:
                break
            pos = match.start()
    return text.count('\n', 0, pos) + 1


def load_schema(schema_fn=None):
    if schema_fn is None:
        schema_fn = SCHEMA_FN
    with open(schema_fn, 'r', encoding='utf-8') as f:
        return json.load(f)


def validate(text, path=None, schema=None):
    """
    Validates raw configuration text against the published schema.

    :param text: The raw JSON text.
    :type  text: str
    :param path: The file name used in messages.
    :type  path: str
    :param schema: The schema (loaded from the schema folder if None).
    :type  schema: dict

    :return: The run configuration.
    :rtype: RunConfig
    """

    if schema is None:
        schema = load_schema()

    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"Invalid JSON: {err.msg}", path='$',
                          line=err.lineno)

    validator = jsonschema.Draft7Validator(schema)
    errors = sorted(validator.iter_errors(data),
                    key=lambda e: key_line(text, list(e.absolute_path)))
    if errors:
        err = errors[0]
        parts = list(err.absolute_path)
        if err.validator == 'additionalProperties':
            extra = re.findall(r"'([^']+)'", err.message)
            if extra:
                parts.append(extra[0])
        raise ConfigError(err.message, path=_json_path(parts),
                          line=key_line(text, parts))

    if data.get('contour') and data['process'] not in ('equilibrium',
                                                        'maximin'):
        raise ConfigError("A contour is only used by the equilibrium and "
                          "maximin processes.", path='$.contour',
                          line=key_line(text, ['contour']))

    return RunConfig(data, path)


def load_run_config(fn):
    """
    Reads and validates a UTF-8 JSON run configuration file.

    :param fn: The configuration filename.
    :type  fn: str

    :return: The run configuration.
    :rtype: RunConfig
    """

    if not os.path.exists(fn):
        raise ConfigError(f"Configuration file '{fn}' does not exist.",
                          path='$', line=0)

    with open(fn, 'r', encoding='utf-8') as f:
        text = f.read()

    return validate(text, fn)
