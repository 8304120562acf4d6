"""Simulation of quantum ensembles that share a single-particle density operator.

Submodules: :mod:`.states`, :mod:`.measurement`, :mod:`.ensembles`,
:mod:`.cloning`, :mod:`.experiments`, plus the ``qensembles`` CLI.
"""

__version__ = "0.1.0"
