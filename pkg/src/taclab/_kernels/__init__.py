"""Kernel backend selection: compiled Cython extension when available,
pure-numpy reference otherwise.  Both implement the identical contract;
``tests/test_kernels.py`` asserts bit-level agreement and
``benchmarks/bench_kernels.py`` compares their speed.
"""

from __future__ import annotations

import numpy as np

from .reference import (  # noqa: F401
    pack_state,
    packed_sizes,
    triu_indices,
    unpack_state,
)
from .reference import correlator_rhs as _rhs_numpy

try:
    from . import _corr_cy

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    _corr_cy = None
    BACKEND = "numpy"


def make_rhs(L: int, backend: str | None = None):
    """Return f(z, g, J, gamma) -> dz for packed correlator states.

    ``backend`` forces "numpy" or "cython"; default prefers the compiled
    extension.  The Cython path reuses preallocated workspaces, so the
    returned callable is not reentrant across threads.
    """
    choice = backend or BACKEND
    if choice == "numpy":
        def rhs(z, g, J, gamma):
            return _rhs_numpy(z, g, J, gamma, L)

        return rhs
    if choice != "cython" or _corr_cy is None:
        raise ValueError(f"kernel backend {choice!r} unavailable")

    nx, ny = packed_sizes(L)
    xbuf = np.zeros((L + 2, L + 2), dtype=complex)
    ybuf = np.zeros((L + 2, L + 2), dtype=complex)
    out = np.empty(nx + ny, dtype=complex)
    ja = np.zeros(L + 1)

    def rhs(z, g, J, gamma):
        ja[1:L] = J
        _corr_cy.correlator_rhs_packed(
            np.ascontiguousarray(z), np.ascontiguousarray(g, dtype=float),
            ja, float(gamma), L, xbuf, ybuf, out)
        return out.copy()

    return rhs
