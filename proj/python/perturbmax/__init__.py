"""Perturb-and-MAP tools for discrete pairwise models."""

from ._perturbmax import *  # noqa: F401,F403
from ._perturbmax import __doc__  # noqa: F401

__version__ = "0.1.0"
