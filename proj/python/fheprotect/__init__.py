"""Template protection over a simulated homomorphic slot engine."""

from ._fheprotect import *  # noqa: F401,F403

__version__ = "0.1.0"
