"""Closed-loop industrial network control simulator."""

from ._kdnsim import *  # noqa: F401,F403
from ._kdnsim import __doc__  # noqa: F401

__version__ = "0.1.0"
