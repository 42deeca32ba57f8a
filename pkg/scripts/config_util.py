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

import configparser
import os
import logging


class ConfigUtils:

    def __init__(self, lab=None, config_fn=None):
        """
        :param lab: The LabUtils object used for messages.
        :type  lab: scripts.utils.LabUtils
        :param config_fn: The configuration filename; defaults to
                    ~/.descent_lab/config.ini.
        :type  config_fn: str
        """

        # Set the configuration filepath
        self.config_fn = config_fn
        if self.config_fn is None:
            self.config_fn = os.path.join(os.path.expanduser('~'),
                                          '.descent_lab', 'config.ini')
        self.lab = lab

        if not os.path.exists(os.path.dirname(self.config_fn)):
            os.makedirs(os.path.dirname(self.config_fn), exist_ok=True)

        # Create configparser
        self.config_info = configparser.ConfigParser(comment_prefixes='/',
                                                     allow_no_value=True)

        self.logger = logging.getLogger('descent_lab')

        self.config_dict = {"Paths":
                                {"# Path of the result folders; if blank, "
                                 "results will be saved in the script folder "
                                 "under \"results\"": None,
                                 "results": '',
                                 "# Path of the log files; if blank, log "
                                 "files will be saved in the script folder "
                                 "under \"log\"": None,
                                 "log": ''},
                            "Script":
                                {"# Determines whether to use colours in the "
                                 "CLI output": None,
                                 "colourize": 'True',
                                 "# Number of worker processes for the sweep "
                                 "process; if blank, all available cores "
                                 "are used": None,
                                 "workers": ''},
                            "Solver":
                                {"# Energy tolerance of the equilibrium "
                                 "solver": None,
                                 "energy_tol": '1e-10',
                                 "# Maximum number of active-set "
                                 "iterations": None,
                                 "max_iter": '5000',
                                 "# Weight (relative to the largest weight) "
                                 "above which a node is supported": None,
                                 "support_threshold": '1e-8',
                                 "# Keep-out distance from the spike "
                                 "(blank for 1e-3 x A)": None,
                                 "keep_out": '',
                                 "# Distance of the 0+ and 0- anchors from "
                                 "the origin (blank for 1e-3 x A)": None,
                                 "anchor_offset": '',
                                 "# Upper bound on the equilibrium density; "
                                 "blank for no bound": None,
                                 "density_cap": ''},
                            "Search":
                                {"# Largest energy gain accepted at a "
                                 "stationary contour": None,
                                 "stationarity_tol": '1e-5',
                                 "# Maximum number of coordinate-ascent "
                                 "sweeps": None,
                                 "max_sweeps": '12',
                                 "# Number of spike contacts above which a "
                                 "result is flagged": None,
                                 "max_contacts": '4',
                                 "# Number of sine modes in the contour "
                                 "perturbation family": None,
                                 "n_fourier": '6'},
                            "Oracle":
                                {"# Condition number above which the soliton "
                                 "solve switches to extended precision": None,
                                 "condition_guard": '1e13',
                                 "# Default number of solitons": None,
                                 "N": '8'}
                            }

    def _set_dict(self, dict_sect, sections, option):
        """
        Sets a value in the config_dict based on an option from the config_info

        :param dict_sect: The dictionary section name.
        :type  dict_sect: str
        :param sections: A list of sections from the configuration file.
        :type  sections: str or list
        :param option: The option
        :type  option: str
        """

        if dict_sect not in self.config_dict.keys():
            self.config_dict[dict_sect] = {}

        if isinstance(sections, str):
            sections = [sections]

        for sec in sections:
            if self.config_info.has_option(sec, option):
                val = self.config_info.get(sec, option)
                self.config_dict[dict_sect][option] = val

    def _ask_input(self, section, in_opts):

        keys = list(in_opts.keys())
        for idx, opt in enumerate(keys):
            if opt.startswith("#"):
                continue

            desc = keys[idx - 1].replace("# ", "")
            prev_val = in_opts[opt]

            val = input(f"\n->> {desc} ({opt}) [{prev_val}]: ")
            if val == '':
                val = prev_val

            self.config_dict[section][opt] = val

    def _warn(self, msg):
        if self.lab is not None:
            self.lab.print_msg(msg, heading="warning")
        self.logger.warning(msg)

    def ask_user(self, in_sect='all'):
        """
        Asks the user for the configuration values of one or all sections,
            or sets a single value given as Section.option=value.

        :param in_sect: 'all', '-h', a section name or Section.option=value.
        :type  in_sect: str
        """

        self.import_config()

        sections = '\n'.join([f'    {k}\t\t\tAsks user for parameters under '
                              f'section {k}.'
                              for k in self.config_dict.keys()])

        options = []
        for section, opts in self.config_dict.items():
            for opt in opts.keys():
                if opt.find('#') > -1:
                    continue

                options.append(f"    {section}.{opt}=<value>\t\t\tSets "
                               f"parameter {opt} in section {section} to "
                               f"<value>.")

        opt_str = '\n'.join(options)

        if in_sect == '-h':
            print(f"""
Usage: descent_lab_cli.py --configure [OPTIONS]

    Sets the parameters in the configuration file

Options:
    all\t\t\t\tAsks user for all parameters in the configuration file.
{sections}
{opt_str}
            """)
            return None
        elif in_sect == 'all':
            for section, opts in self.config_dict.items():
                self._ask_input(section, opts)
        elif in_sect.find('.') > -1:
            sect_title, opt = in_sect.split('.', 1)

            if sect_title not in self.config_dict.keys():
                self._warn(f"The section '{sect_title}' does not exist in "
                           f"the configuration file.")
                return None

            if opt.find('=') < 0:
                self._warn(f"No value given for '{in_sect}'; use "
                           f"Section.option=value.")
                return None

            opt_key, opt_val = opt.split('=', 1)

            if opt_key not in self.config_dict[sect_title].keys():
                self._warn(f"The parameter '{opt_key}' does not exist in "
                           f"section '{sect_title}'.")
                return None

            self.config_dict[sect_title][opt_key] = opt_val

            print(f"\nParameter '{opt_key}' in section '{sect_title}' "
                  f"has been changed to '{opt_val}' in the configuration "
                  f"file.")
        else:
            sect_opts = None
            sect_key = None
            for k, v in self.config_dict.items():
                if k.lower() == in_sect.lower():
                    sect_key = k
                    sect_opts = v

            if sect_opts is None:
                self._warn(f"The section '{in_sect}' does not exist in the "
                           f"configuration file.")
                return None

            self._ask_input(sect_key, sect_opts)

        self.write()

    def get(self, section, option):
        """
        Gets the config_dict option based on the given section

        :param section: The section in the dictionary
        :type  section: str
        :param option: The option in the section
        :type  option: str

        :return: The value in the given section and option
        :rtype: str
        """

        if section in self.config_dict.keys():
            if option in self.config_dict[section].keys():
                return self.config_dict[section][option]

    def get_bool(self, section, option, default=False):
        val = self.get(section, option)
        if val is None or val == '':
            return default
        return str(val).lower() == 'true'

    def set(self, section, option, value):
        """
        Sets a value in the config_dict

        :param section: The section in the dictionary
        :type  section: str
        :param option: The option in the section.
        :type  option: str
        :param value: The value to set
        :type  value: str
        """

        if section in self.config_dict.keys():
            self.config_dict[section][option] = value

    def update_dict(self):
        """
        Updates the config_dict based on config_info
        """

        for section, opts in self.config_dict.items():
            for opt in opts.keys():
                if opt.startswith('#'):
                    continue
                self._set_dict(section, section, opt)

    def write(self):
        """
        Writes the config_dict to the config.ini file.
        """

        self.config_info.clear()
        self.config_info.read_dict(self.config_dict)

        with open(self.config_fn, 'w') as cfgfile:
            self.config_info.write(cfgfile, space_around_delimiters=True)

    def import_config(self):
        """
        Gets the configuration information from the config file.

        :return: The information extracted from the config file.
        :rtype: configparser.ConfigParser
        """

        if os.path.exists(self.config_fn):
            self.config_info.read(self.config_fn)
            self.update_dict()

        self.config_info.clear()
        self.config_info.read_dict(self.config_dict)

        self.write()

        return self.config_info
