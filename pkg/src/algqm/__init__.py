"""Contextual valuations of quantum observables on finite matrix algebras."""

from .contexts import *  # noqa: F401,F403
from .dynamics import *  # noqa: F401,F403
from .ensemble import *  # noqa: F401,F403
from .gns import *  # noqa: F401,F403
from .matalg import *  # noqa: F401,F403
from .valuation import *  # noqa: F401,F403
from . import contexts, dynamics, ensemble, gns, matalg, valuation

__all__ = [
    *matalg.__all__,
    *contexts.__all__,
    *valuation.__all__,
    *ensemble.__all__,
    *dynamics.__all__,
    *gns.__all__,
]
__version__ = "0.1.0"
