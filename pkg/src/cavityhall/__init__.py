"""Generalized Hofstadter model with a dynamical cavity field.

Static part: Harper-equation spectra, edge modes and gap invariants.
Dynamic part: coupled cavity amplitude / single-particle density matrix
integration with current observables.
"""

from .lattice import ModelParams, Site, site_from_index, site_index, vertex_v1, vertex_v2

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "Site",
    "site_index",
    "site_from_index",
    "vertex_v1",
    "vertex_v2",
    "__version__",
]
