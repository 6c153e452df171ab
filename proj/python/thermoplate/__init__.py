"""Thermoelastic plate analyses: characteristic roots, multiplier scans,
torus semigroup evolution and bounded-domain generators."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
