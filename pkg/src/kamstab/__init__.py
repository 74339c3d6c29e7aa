"""Robust and fragile conserved quantities of finite-dimensional quantum systems.

Submodules: ``matcore`` (dense linear algebra), ``spectral`` (spectral
resolutions), ``symmetry`` (observable splitting), ``kam`` (homological
equation and isospectral resummation), ``dynamics`` (time-domain checks),
``models`` (concrete systems), ``lindblad`` (superoperators and monotones),
``io`` and ``cli``.
"""

__version__ = "0.1.0"
