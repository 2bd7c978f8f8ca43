"""Reduced-order models for parameter-dependent linear matrix inequalities.

Submodules are imported explicitly (``from parlmi.trainer import train_sdp``)
so the online path never pulls in the sparse-matrix stack.
"""

__version__ = "0.1.0"
