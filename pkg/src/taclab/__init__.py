"""taclab: quench simulator and benchmark toolkit for the transverse-field
quantum Ising chain (test of adiabatic computing)."""

__version__ = "0.1.0"

from ._kernels import BACKEND as kernel_backend  # noqa: F401
