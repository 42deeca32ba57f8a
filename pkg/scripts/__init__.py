from . import spatial
from . import csv_util
from . import utils
