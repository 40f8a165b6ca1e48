"""Static free-fermion solver: BdG diagonalization, ground-state
correlators, instantaneous gaps and gap scans.

The quadratic fermion form of the chain is
``H = sum_n 2 g_n c_n^+ c_n - sum_n J_n (c_n^+ c_{n+1} + c_n^+ c_{n+1}^+ + h.c.)``
up to a constant.  In Nambu basis Psi = (c_1..c_L, c_1^+..c_L^+) this is
``H = (1/2) Psi^+ H_B Psi + const`` with ``H_B = [[A, B], [-B, -A]]``,
A symmetric, B antisymmetric, both real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .model import OPEN, PERIODIC, ChainInstance, AnnealSchedule, evaluate_schedule

_ZERO_MODE_TOL = 1e-12


class DegenerateGroundStateError(ValueError):
    """Ground state not unique (zero BdG mode), e.g. g = 0 at J > 0."""


@dataclass(frozen=True)
class BdgMatrix:
    """2L x 2L real symmetric single-particle matrix in Nambu form.

    Basis ordering: indices 0..L-1 are annihilation components c_1..c_L,
    indices L..2L-1 are creation components c_1^+..c_L^+.
    """

    matrix: np.ndarray
    L: int

    @property
    def A(self) -> np.ndarray:
        return self.matrix[: self.L, : self.L]

    @property
    def B(self) -> np.ndarray:
        return self.matrix[: self.L, self.L:]


def site_couplings(chain: ChainInstance, g: float, J: float):
    """Per-site fields and per-bond couplings at uniform scales (g, J)."""
    return g * chain.g_rel, J * chain.J_rel


def _ab_blocks(chain: ChainInstance, g: float, J: float, boundary_sign=+1):
    """A, B blocks; boundary_sign flips the wrap bond (antiperiodic sector)."""
    L = chain.L
    gs, Js = site_couplings(chain, g, J)
    A = np.zeros((L, L))
    B = np.zeros((L, L))
    A[np.diag_indices(L)] = 2.0 * gs
    for n in range(L - 1):
        A[n, n + 1] = A[n + 1, n] = -Js[n]
        B[n, n + 1] = -Js[n]
        B[n + 1, n] = +Js[n]
    if chain.topology == PERIODIC:
        Jw = boundary_sign * Js[L - 1]
        A[L - 1, 0] += -Jw
        A[0, L - 1] += -Jw
        B[L - 1, 0] += -Jw
        B[0, L - 1] += +Jw
    return A, B


def bdg_matrix(chain: ChainInstance, g: float, J: float,
               boundary_sign=+1) -> BdgMatrix:
    """Assemble the Nambu matrix [[A, B], [-B, -A]]."""
    A, B = _ab_blocks(chain, g, J, boundary_sign)
    top = np.hstack([A, B])
    bot = np.hstack([-B, -A])
    return BdgMatrix(matrix=np.vstack([top, bot]), L=chain.L)


def quasiparticle_energies(chain: ChainInstance, g: float, J: float,
                           boundary_sign=+1) -> np.ndarray:
    """Nonnegative quasiparticle energies, ascending.

    These are the singular values of A + B (since (A+B)^T = A - B for
    symmetric A, antisymmetric B).
    """
    A, B = _ab_blocks(chain, g, J, boundary_sign)
    return np.sort(np.linalg.svd(A + B, compute_uv=False))


def ground_state_correlators(chain: ChainInstance, g: float, J: float):
    """Ground-state x_pq = <c_p^+ c_q> and y_pq = <c_p^+ c_q^+>.

    Open topology only (periodic chains are delegated to the dense
    oracle).  The Gaussian correlation matrix Gamma = <Psi Psi^+> is the
    projector onto the positive-energy eigenspace of the BdG matrix, so
    Gamma^2 = Gamma holds by construction.
    """
    from .correlator_dynamics import CorrelatorState

    if chain.topology != OPEN:
        raise ValueError("ground_state_correlators requires an open chain")
    if g < 0 or J < 0 or (g == 0 and J == 0):
        raise ValueError("need g, J >= 0 and not both zero")
    L = chain.L
    hb = bdg_matrix(chain, g, J).matrix
    evals, vecs = np.linalg.eigh(hb)
    scale = max(np.max(np.abs(evals)), 1.0)
    if np.min(np.abs(evals)) < _ZERO_MODE_TOL * scale:
        raise DegenerateGroundStateError(
            "zero quasiparticle mode: ground state degenerate "
            "(start the quench at g > 0)"
        )
    pos = vecs[:, evals > 0]
    gamma = pos @ pos.T.conj()
    x = np.ascontiguousarray(gamma[L:, L:]).astype(complex)
    y = np.ascontiguousarray(gamma[L:, :L]).astype(complex)
    return CorrelatorState(t=0.0, x=x, y=y)


def instantaneous_gap(chain: ChainInstance, g: float, J: float) -> float:
    """Energy of the lowest quench-accessible excitation.

    Open chains: the smallest single-quasiparticle energy.  Periodic
    chains: the lowest two-quasiparticle excitation of the even-parity
    (antiperiodic) sector, since the quench conserves fermion parity.
    """
    if chain.topology == OPEN:
        eps = quasiparticle_energies(chain, g, J)
        return float(eps[0])
    eps = quasiparticle_energies(chain, g, J, boundary_sign=-1)
    return float(eps[0] + eps[1])


@dataclass(frozen=True)
class GapScan:
    """Gap profile over normalized schedule position s in [0, 1]."""

    s: np.ndarray
    gap: np.ndarray
    s_c: float
    gap_at_sc: float
    boundary_minimum: bool = False


def gap_scan(chain: ChainInstance, schedule: AnnealSchedule,
             n_samples: int = 64) -> GapScan:
    """Dense scan of the instantaneous gap over a schedule.

    The coarse minimum is refined by bounded golden-section search to
    |ds| <= 1e-6.  A schedule with no interior minimum returns the
    boundary value with ``boundary_minimum=True``.
    """
    if n_samples < 3:
        raise ValueError("need at least 3 samples")
    t0, t1 = schedule.domain

    def gap_at(s):
        t = t0 + s * (t1 - t0)
        g, J = evaluate_schedule(schedule, t)
        return instantaneous_gap(chain, g, J)

    s_grid = np.linspace(0.0, 1.0, n_samples)
    gaps = np.array([gap_at(s) for s in s_grid])
    i_min = int(np.argmin(gaps))
    if i_min == 0 or i_min == n_samples - 1:
        return GapScan(s=s_grid, gap=gaps, s_c=float(s_grid[i_min]),
                       gap_at_sc=float(gaps[i_min]), boundary_minimum=True)
    lo, hi = s_grid[i_min - 1], s_grid[i_min + 1]
    res = minimize_scalar(gap_at, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-6})
    s_c = float(res.x)
    return GapScan(s=s_grid, gap=gaps, s_c=s_c, gap_at_sc=float(res.fun))


def export_gap_scan(scan: GapScan, path):
    """Write the scan as `s, gap` delimited text with a header row."""
    data = np.column_stack([scan.s, scan.gap])
    np.savetxt(path, data, delimiter=",", header="s,gap", comments="")


def export_gap_vs_L(rows, path):
    """Write `L, s_c, gap` rows (e.g. one gap_scan result per length)."""
    data = np.array([[L, s_c, gap] for (L, s_c, gap) in rows], dtype=float)
    np.savetxt(path, data, delimiter=",", header="L,s_c,gap", comments="")
