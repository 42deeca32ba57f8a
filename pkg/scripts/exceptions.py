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


class DescentLabError(Exception):
    """
    Base class of every error raised by the Descent Lab modules.
    """

    def __init__(self, msg=None, **kwargs):
        """
        :param msg: The error message.
        :type  msg: str
        :param kwargs: Diagnostics attached to the error (stored in
                    self.details).
        :type  kwargs: dict
        """
        super().__init__(msg)
        self.msg = msg
        self.details = kwargs

    def __str__(self):
        return str(self.msg)


class SingularKernelError(DescentLabError):
    """Raised when the Green's function is evaluated at coincident points."""


class InfiniteSelfEnergyError(DescentLabError):
    """Raised for a point-mass measure with a repeated node."""


class NoClassicalRegionError(DescentLabError):
    """Raised when z exceeds the height of the bump profile."""


class ConvergenceError(DescentLabError):
    """
    Raised when an iterative solver runs out of iterations. The best iterate
    found is available as self.best.
    """

    def __init__(self, msg=None, best=None, **kwargs):
        super().__init__(msg, **kwargs)
        self.best = best


class InfeasibleContourError(DescentLabError):
    """Raised when a contour leaves the slit domain or crosses the spike."""

    def __init__(self, msg=None, contour=None, **kwargs):
        super().__init__(msg, **kwargs)
        self.contour = contour


class OnSupportError(DescentLabError):
    """Raised when a log-potential is requested on the support."""


class PoleError(DescentLabError):
    """Raised when R is evaluated at its pole z = 0."""


class BandUnderResolvedError(DescentLabError):
    """Raised when a band holds too few nodes for normal-derivative stencils."""


class IllConditionedError(DescentLabError):
    """
    Raised when the discrete Riemann-Hilbert system cannot be solved
    reliably. self.condition holds the condition estimate.
    """

    def __init__(self, msg=None, condition=None, **kwargs):
        super().__init__(msg, **kwargs)
        self.condition = condition


class AscendingDirectionError(DescentLabError):
    """Raised when a path is started in an ascent direction."""


class PathTracingError(DescentLabError):
    """Raised when the predictor-corrector loses the path."""


class ConfigError(DescentLabError):
    """
    Raised for run configurations violating the schema. self.line holds the
    line number in the configuration file (or None).
    """

    def __init__(self, msg=None, path=None, line=None, **kwargs):
        super().__init__(msg, **kwargs)
        self.path = path
        self.line = line

    def __str__(self):
        loc = ''
        if self.line is not None:
            loc = f"line {self.line}: "
        if self.path:
            loc += f"{self.path}: "
        return f"{loc}{self.msg}"


class EmptySetError(DescentLabError):
    """Raised when a distance is requested between empty point sets."""
