"""Cavity-mediated laser cooling of a trapped particle, three ways.

Simulation routes that cross-validate each other:

* rates   -- the closed 25-moment linear rate-equation system, derived
             mechanically and exactly by opalg;
* effective -- the reduced models (weak-confinement 5x5 system, scalar
             cooling law with sideband rates, eliminated fast moments);
* oracle  -- direct Lindblad integration on a truncated two-mode Fock
             space (ground truth);

plus stability (weak-model eigenstructure) and a CLI (cavcool) exporting
reproducible CSV/PNG experiments.
"""

from .params import RawParams, SystemParams, effective_params

__all__ = ["RawParams", "SystemParams", "effective_params"]
__version__ = "0.1.0"
