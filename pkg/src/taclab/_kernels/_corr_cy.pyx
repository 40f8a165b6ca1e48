# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for the correlator right-hand side.

Same contract as the numpy reference kernel; operates on packed
upper-triangular complex vectors with preallocated padded workspaces so a
right-hand-side evaluation is allocation-free.
"""

import numpy as np

cimport cython


@cython.boundscheck(False)
@cython.wraparound(False)
def correlator_rhs_packed(const double complex[::1] z,
                          const double[::1] g,
                          const double[::1] Ja,
                          double gamma,
                          int L,
                          double complex[:, ::1] xbuf,
                          double complex[:, ::1] ybuf,
                          double complex[::1] out):
    """Write the packed derivative into ``out``.

    ``Ja`` has length L+1 with Ja[p] = J_p for bonds p = 1..L-1 and zeros
    at the ends; ``xbuf``/``ybuf`` are (L+2, L+2) zero-ring workspaces.
    """
    cdef Py_ssize_t p, q, idx
    cdef double complex v, hx, hy, dx
    cdef double jp, jpm, jq, jqm, dist

    idx = 0
    for p in range(L):
        for q in range(p, L):
            v = z[idx]
            xbuf[p + 1, q + 1] = v
            xbuf[q + 1, p + 1] = v.conjugate()
            idx += 1
    for p in range(L):
        for q in range(p + 1, L):
            v = z[idx]
            ybuf[p + 1, q + 1] = v
            ybuf[q + 1, p + 1] = -v
            idx += 1
        ybuf[p + 1, p + 1] = 0.0

    idx = 0
    for p in range(L):
        jp = Ja[p + 1]
        jpm = Ja[p]
        for q in range(p, L):
            jq = Ja[q + 1]
            jqm = Ja[q]
            hx = (-jp * xbuf[p + 2, q + 1] - jpm * xbuf[p, q + 1]
                  + jq * xbuf[p + 1, q + 2] + jqm * xbuf[p + 1, q]
                  + jq * ybuf[p + 1, q + 2] - jqm * ybuf[p + 1, q]
                  + jp * ybuf[p + 2, q + 1].conjugate()
                  - jpm * ybuf[p, q + 1].conjugate()
                  + 2.0 * (g[p] - g[q]) * xbuf[p + 1, q + 1])
            dx = -1j * hx
            if gamma != 0.0:
                if p == q:
                    dx = dx + gamma * (1.0 - 2.0 * xbuf[p + 1, p + 1].real)
                else:
                    dist = q - p
                    dx = dx + gamma * (2.0 * ybuf[p + 1, q + 1].real
                                       - 2.0 * dist * xbuf[p + 1, q + 1])
            out[idx] = dx
            idx += 1

    for p in range(L):
        jp = Ja[p + 1]
        jpm = Ja[p]
        for q in range(p + 1, L):
            jq = Ja[q + 1]
            jqm = Ja[q]
            hy = (-jp * ybuf[p + 2, q + 1] - jpm * ybuf[p, q + 1]
                  - jq * ybuf[p + 1, q + 2] - jqm * ybuf[p + 1, q]
                  - jq * xbuf[p + 1, q + 2] + jqm * xbuf[p + 1, q]
                  + jp * xbuf[p + 2, q + 1].conjugate()
                  - jpm * xbuf[p, q + 1].conjugate()
                  + 2.0 * (g[p] + g[q]) * ybuf[p + 1, q + 1])
            if q == p + 1:
                hy = hy - jp
            if gamma != 0.0:
                dist = q - p
                out[idx] = (-1j * hy
                            + gamma * (2.0 * xbuf[p + 1, q + 1].real
                                       - 2.0 * dist * ybuf[p + 1, q + 1]))
            else:
                out[idx] = -1j * hy
            idx += 1
