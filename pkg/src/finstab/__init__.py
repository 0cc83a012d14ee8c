"""Insolvency cascades on interbank networks.

Submodules
----------
graphs     random directed topologies
balance    balance sheets and asset assignments
contagion  shocks, the cascade and the vulnerability index
sweep      parameter grids, replicated runs and summary tables
io         text formats for graphs, networks, grids and results
cli        the ``finstab`` command
"""

__version__ = "0.1.0"

from .errors import FinstabError, PairingError, ParameterError, StructureError, ValidationError  # noqa: E402

__all__ = [
    "__version__",
    "FinstabError",
    "ParameterError",
    "StructureError",
    "ValidationError",
    "PairingError",
]
