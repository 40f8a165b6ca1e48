"""Pure-numpy reference kernel for the correlator right-hand side.

The packed state holds the independent entries only: x on the upper
triangle including the diagonal (q >= p), y strictly above it (q > p).
Full matrices are reconstructed from hermiticity / antisymmetry, padded
with one ring of zeros to implement the c_0 = c_{L+1} = 0 boundary.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def packed_sizes(L: int):
    return L * (L + 1) // 2, L * (L - 1) // 2


def triu_indices(L: int):
    """(x indices, y indices) used by pack/unpack, row-major upper triangles."""
    ix = np.triu_indices(L, k=0)
    iy = np.triu_indices(L, k=1)
    return ix, iy


def pack_state(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    L = x.shape[0]
    ix, iy = triu_indices(L)
    return np.concatenate([x[ix], y[iy]])


def unpack_state(z: np.ndarray, L: int):
    """Reconstruct full x (Hermitian) and y (antisymmetric) matrices."""
    nx, ny = packed_sizes(L)
    ix, iy = triu_indices(L)
    x = np.zeros((L, L), dtype=complex)
    y = np.zeros((L, L), dtype=complex)
    x[ix] = z[:nx]
    y[iy] = z[nx:nx + ny]
    x = x + np.conj(np.triu(x, k=1)).T
    y = y - y.T
    return x, y


def correlator_rhs(z, g, J, gamma, L):
    """Packed time derivative of (x, y) under the closed correlator system.

    Parameters
    ----------
    z : complex packed state
    g : per-site fields, length L
    J : per-bond couplings, length L-1 (open chain)
    gamma : site-dephasing rate
    """
    x, y = unpack_state(z, L)
    xp = np.zeros((L + 2, L + 2), dtype=complex)
    yp = np.zeros((L + 2, L + 2), dtype=complex)
    xp[1:-1, 1:-1] = x
    yp[1:-1, 1:-1] = y
    # Ja[p] = J_p for bonds p = 1..L-1, zero at 0 and L (open boundaries)
    Ja = np.zeros(L + 1)
    Ja[1:L] = J
    Jp = Ja[1:L + 1][:, None]      # J_p by row index p
    Jpm = Ja[0:L][:, None]         # J_{p-1}
    Jq = Ja[1:L + 1][None, :]      # J_q by column index q
    Jqm = Ja[0:L][None, :]         # J_{q-1}

    x_pp1 = xp[2:, 1:-1]    # x_{p+1,q}
    x_pm1 = xp[:-2, 1:-1]   # x_{p-1,q}
    x_qp1 = xp[1:-1, 2:]    # x_{p,q+1}
    x_qm1 = xp[1:-1, :-2]   # x_{p,q-1}
    y_pp1 = yp[2:, 1:-1]
    y_pm1 = yp[:-2, 1:-1]
    y_qp1 = yp[1:-1, 2:]
    y_qm1 = yp[1:-1, :-2]

    gp = g[:, None]
    gq = g[None, :]

    hx = (-Jp * x_pp1 - Jpm * x_pm1 + Jq * x_qp1 + Jqm * x_qm1
          + Jq * y_qp1 - Jqm * y_qm1
          + Jp * np.conj(y_pp1) - Jpm * np.conj(y_pm1)
          + 2.0 * (gp - gq) * x)
    hy = (-Jp * y_pp1 - Jpm * y_pm1 - Jq * y_qp1 - Jqm * y_qm1
          - Jq * x_qp1 + Jqm * x_qm1
          + Jp * np.conj(x_pp1) - Jpm * np.conj(x_pm1)
          + 2.0 * (gp + gq) * y)
    hy[np.arange(L - 1), np.arange(1, L)] -= Ja[1:L]  # -J_p delta_{p+1,q}

    dx = -1j * hx
    dy = -1j * hy
    if gamma != 0.0:
        dist = np.abs(np.arange(L)[:, None] - np.arange(L)[None, :])
        dx = dx + gamma * (2.0 * np.real(y) - 2.0 * dist * x)
        dx[np.diag_indices(L)] = (-1j * np.diag(hx)
                                  + gamma * (1.0 - 2.0 * np.real(np.diag(x))))
        dy = dy + gamma * (2.0 * np.real(x) - 2.0 * dist * y)

    ix, iy = triu_indices(L)
    return np.concatenate([dx[ix], dy[iy]])
