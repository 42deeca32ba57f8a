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

import csv
import logging
import math


def format_value(val):
    """
    Formats a value for a CSV cell; floats use the shortest round-trip repr.

    :param val: The value.
    :type  val: any

    :return: The cell text.
    :rtype: str
    """

    if val is None:
        return ''
    if isinstance(val, bool):
        return 'true' if val else 'false'
    if isinstance(val, float):
        if math.isnan(val):
            return 'nan'
        return repr(val)
    if isinstance(val, (list, tuple)):
        return ';'.join(format_value(v) for v in val)
    if hasattr(val, 'item'):
        # numpy scalars
        return format_value(val.item())
    return str(val)


class ResultCSV:

    def __init__(self, csv_fn, header=None):
        """
        Initializer for the ResultCSV which writes RFC-4180 result tables.

        :param csv_fn: The CSV filename.
        :type  csv_fn: str
        :param header: List of header column names.
        :type  header: list
        """

        self.csv_fn = csv_fn
        self.open_csv = None
        self.writer = None
        self.header = header
        self.count = 0

        self.logger = logging.getLogger('descent_lab')

    def __enter__(self):
        self.open()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()

    def open(self, mode='w'):
        """
        Opens the CSV file and writes the header if one is set.

        :param mode: The file mode.
        :type  mode: str
        """

        self.open_csv = open(self.csv_fn, mode, newline='', encoding='utf-8')
        self.writer = csv.writer(self.open_csv, lineterminator='\r\n')
        if self.header is not None:
            self.add_header(self.header)

    def add_header(self, header):
        """
        Adds header to a CSV file

        :param header: List of header column names.
        :type  header: list
        """

        self.header = list(header)
        self.writer.writerow(self.header)

    def export_record(self, rec):
        """
        Exports a record to the CSV file.

        :param rec: The record; keys missing from it give empty cells.
        :type  rec: dict
        """

        self.writer.writerow([format_value(rec.get(h)) for h in self.header])
        self.count += 1

    def export_results(self, results):
        """
        Exports a list of records in input order.

        :param results: The records.
        :type  results: list[dict]
        """

        for rec in results:
            self.export_record(rec)

        self.logger.debug(f"Wrote {self.count} rows to {self.csv_fn}")

    def close(self):
        """
        Closes the CSV file.
        """

        if self.open_csv is not None:
            self.open_csv.close()
            self.open_csv = None
            self.writer = None


def import_csv(csv_fn):
    """
    Reads a result CSV file.

    :param csv_fn: The CSV filename.
    :type  csv_fn: str

    :return: The header and the rows as lists of strings.
    :rtype: tuple
    """

    with open(csv_fn, 'r', newline='', encoding='utf-8') as f:
        rows = list(csv.reader(f))

    if not rows:
        return [], []
    return rows[0], rows[1:]
