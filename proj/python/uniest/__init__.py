"""Universal MCMC estimation: MAP and posterior-mean estimates under an empirical-entropy prior."""

from ._uniest import *  # noqa: F401,F403
from ._uniest import __version__

__all__ = [name for name in dir() if not name.startswith("_")]
