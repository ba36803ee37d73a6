"""Numerical toolkit for right-invariant geometry on half-Lie groups."""
from . import bvp, curvature, groups, jets, riemannian
from .errors import *  # noqa: F401,F403

__version__ = "0.1.0"
