"""Brute-force dense Hilbert-space engine for small chains.

Validates the free-fermion modules and is the only engine for periodic
chains and for dephasing in the instantaneous energy eigenbasis.  Basis
convention: sigma^z product basis, site 1 most significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from ._ivp import DEFAULT_ATOL, DEFAULT_RTOL, integrate_complex
from .model import OPEN, PERIODIC, ChainInstance, AnnealSchedule, evaluate_schedule

L_MAX_PURE = 12
L_MAX_MIXED = 7

_DEGENERACY_TOL = 1e-10

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SY = np.array([[0.0, -1.0j], [0.0 + 1.0j, 0.0]])
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
_ID = np.eye(2)

SITE_DEPHASING = "site_dephasing"
EIGENBASIS_DEPHASING = "eigenbasis_dephasing"


class HilbertSpaceTooLarge(ValueError):
    """Chain length above the dense-engine cap."""


@dataclass
class DenseState:
    """Pure state vector or density matrix on the 2^L spin Hilbert space."""

    L: int
    t: float
    vector: Optional[np.ndarray] = None
    rho: Optional[np.ndarray] = None
    flags: list = field(default_factory=list)

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.vector, self.vector.conj())
        return self.rho

    def check(self, norm_tol=1e-10, herm_tol=1e-12, pos_tol=1e-8):
        """Monitor invariants; append violation flags rather than raise."""
        if self.is_pure:
            if abs(np.linalg.norm(self.vector) - 1.0) > norm_tol:
                self.flags.append("norm_drift")
        else:
            if np.max(np.abs(self.rho - self.rho.conj().T)) > herm_tol:
                self.flags.append("hermiticity")
            if abs(np.trace(self.rho).real - 1.0) > norm_tol:
                self.flags.append("trace_drift")
            w = np.linalg.eigvalsh(self.rho)
            if w[0] < -pos_tol:
                self.flags.append("positivity")
        return self


def _site_op(op, n, L):
    """Operator `op` acting on site n (1-based), sparse, site 1 = MSB."""
    mats = [sp.identity(2, format="csr")] * L
    mats[n - 1] = sp.csr_matrix(op)
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out


def _bond_list(chain: ChainInstance):
    bonds = [(n, n + 1) for n in range(1, chain.L)]
    if chain.topology == PERIODIC:
        bonds.append((chain.L, 1))
    return bonds


def hamiltonian_terms(chain: ChainInstance):
    """Sparse (H_x, H_zz) built from the chain's relative profiles.

    H(t) = g_scale(t) * H_x + J_scale(t) * H_zz with
    H_x = -sum g_rel_n sigma^x_n, H_zz = -sum J_rel_n sigma^z sigma^z.
    """
    L = chain.L
    hx = sp.csr_matrix((2 ** L, 2 ** L))
    for n in range(1, L + 1):
        hx = hx - chain.g_rel[n - 1] * _site_op(_SX, n, L)
    hzz = sp.csr_matrix((2 ** L, 2 ** L))
    for k, (a, b) in enumerate(_bond_list(chain)):
        hzz = hzz - chain.J_rel[k] * (_site_op(_SZ, a, L) @ _site_op(_SZ, b, L))
    return hx.tocsr(), hzz.tocsr()


def dense_hamiltonian(chain: ChainInstance, g: float, J: float) -> np.ndarray:
    """Dense H = -sum g_n sigma^x_n - sum J_n sigma^z_n sigma^z_{n+1}."""
    if chain.L > L_MAX_PURE:
        raise HilbertSpaceTooLarge(f"L={chain.L} above cap {L_MAX_PURE}")
    hx, hzz = hamiltonian_terms(chain)
    return (g * hx + J * hzz).toarray()


def ground_state(chain: ChainInstance, g: float, J: float) -> DenseState:
    """Lowest eigenvector of the dense Hamiltonian."""
    h = dense_hamiltonian(chain, g, J)
    _, vecs = np.linalg.eigh(h)
    return DenseState(L=chain.L, t=0.0, vector=vecs[:, 0].astype(complex))


def sector_spectrum(chain: ChainInstance, g: float, J: float):
    """Eigenvalues split by the parity P = prod sigma^x_n.

    Returns (even_evals, odd_evals), each ascending.  P commutes with the
    Hamiltonian, so eigenvectors are classified by <P> = +/-1.
    """
    h = dense_hamiltonian(chain, g, J)
    L = chain.L
    p = _site_op(_SX, 1, L)
    for n in range(2, L + 1):
        p = p @ _site_op(_SX, n, L)
    p = p.toarray()
    # simultaneous diagonalization: diagonalize H within each P eigenspace
    wp, vp = np.linalg.eigh(p)
    even = vp[:, wp > 0]
    odd = vp[:, wp < 0]
    ev_even = np.linalg.eigvalsh(even.conj().T @ h @ even)
    ev_odd = np.linalg.eigvalsh(odd.conj().T @ h @ odd)
    return np.sort(ev_even), np.sort(ev_odd)


def exact_gap(chain: ChainInstance, g: float, J: float) -> float:
    """Difference of the two lowest distinct eigenvalues of the dense H."""
    h = dense_hamiltonian(chain, g, J)
    evals = np.linalg.eigvalsh(h)
    scale = max(np.max(np.abs(evals)), 1.0)
    e0 = evals[0]
    distinct = evals[evals > e0 + _DEGENERACY_TOL * scale]
    if distinct.size == 0:
        return 0.0
    return float(distinct[0] - e0)


def jordan_wigner_operators(L: int):
    """Dense annihilation operators c_n with sigma^x_n = 1 - 2 c_n^+ c_n.

    The string convention matches the correlator engine: sigma^z_n =
    (c_n^+ + c_n) prod_{m<n} (1 - 2 c_m^+ c_m).  Intended for small-L
    cross-checks only.
    """
    ops = []
    for n in range(1, L + 1):
        string = sp.identity(2 ** L, format="csr")
        for m in range(1, n):
            string = string @ _site_op(_SX, m, L)
        lower = 0.5 * (_SZ - 1j * _SY)  # maps |-x> to |+x>: annihilates occupied
        ops.append((string @ _site_op(lower, n, L)).toarray())
    return ops


def correlators_from_dense(state: DenseState):
    """Evaluate x_pq = <c_p^+ c_q>, y_pq = <c_p^+ c_q^+> on a dense state."""
    L = state.L
    cs = jordan_wigner_operators(L)
    rho = state.density_matrix()
    x = np.zeros((L, L), dtype=complex)
    y = np.zeros((L, L), dtype=complex)
    for p in range(L):
        cpd = cs[p].conj().T
        for q in range(L):
            x[p, q] = np.trace(rho @ cpd @ cs[q])
            y[p, q] = np.trace(rho @ cpd @ cs[q].conj().T)
    return x, y


def evolve_pure(chain: ChainInstance, schedule: AnnealSchedule,
                rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, t_eval=None,
                method="auto") -> DenseState:
    """Schroedinger evolution from the t0 ground state through a quench."""
    if chain.L > L_MAX_PURE:
        raise HilbertSpaceTooLarge(f"L={chain.L} above cap {L_MAX_PURE}")
    hx, hzz = hamiltonian_terms(chain)
    t0, t1 = schedule.domain
    g0, J0 = evaluate_schedule(schedule, t0)
    psi0 = ground_state(chain, g0, J0).vector

    def rhs(t, psi):
        g, J = evaluate_schedule(schedule, min(max(t, t0), t1))
        return -1j * (g * (hx @ psi) + J * (hzz @ psi))

    sol = integrate_complex(rhs, psi0, (t0, t1), rtol=rtol, atol=atol,
                            method=method)
    out = DenseState(L=chain.L, t=float(sol.t[-1]), vector=sol.states[-1])
    out.check(norm_tol=10.0 * rtol)
    return out


def _dephasing_weight(L: int) -> np.ndarray:
    """W_ab = sum_n z_n(a) z_n(b); site dephasing acts as (W - L) * rho."""
    dim = 2 ** L
    z = np.empty((L, dim))
    for n in range(L):
        bit = (np.arange(dim) >> (L - 1 - n)) & 1
        z[n] = 1.0 - 2.0 * bit
    return z.T @ z


class _EigenbasisTracker:
    """Order/phase continuity of instantaneous eigenvectors between calls."""

    def __init__(self):
        self.prev = None

    def match(self, vecs):
        if self.prev is not None:
            overlap = np.abs(self.prev.conj().T @ vecs)
            order = np.argmax(overlap, axis=0)
            # fall back to identity if the greedy match is not a permutation
            if np.unique(order).size == order.size:
                inv = np.empty_like(order)
                inv[order] = np.arange(order.size)
                vecs = vecs[:, inv]
            phases = np.sum(self.prev.conj() * vecs, axis=0)
            signs = np.where(np.abs(phases) > 1e-12,
                             phases / np.abs(phases), 1.0)
            vecs = vecs / signs
        self.prev = vecs
        return vecs


def evolve_lindblad(chain: ChainInstance, schedule: AnnealSchedule,
                    gamma: float, mode=SITE_DEPHASING,
                    rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, t_eval=None,
                    method="auto") -> DenseState:
    """Lindblad evolution of the density matrix from the t0 ground state.

    site_dephasing: drho/dt = -i[H, rho] + gamma * (sum_n Z_n rho Z_n - L rho),
    equivalently the double-commutator dissipator of the master equation.
    eigenbasis_dephasing: off-diagonal elements of rho in the instantaneous
    energy eigenbasis decay at rate gamma; H(t) is re-diagonalized at every
    right-hand-side evaluation with order/phase continuity.
    """
    if chain.L > L_MAX_MIXED:
        raise HilbertSpaceTooLarge(f"L={chain.L} above cap {L_MAX_MIXED}")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    L = chain.L
    dim = 2 ** L
    hx, hzz = hamiltonian_terms(chain)
    hx_d = hx.toarray()
    hzz_d = hzz.toarray()
    t0, t1 = schedule.domain
    g0, J0 = evaluate_schedule(schedule, t0)
    psi0 = ground_state(chain, g0, J0).vector
    rho0 = np.outer(psi0, psi0.conj())

    if mode == SITE_DEPHASING:
        w = _dephasing_weight(L) - L

        def rhs(t, z):
            rho = z.reshape(dim, dim)
            g, J = evaluate_schedule(schedule, min(max(t, t0), t1))
            h = g * hx_d + J * hzz_d
            drho = -1j * (h @ rho - rho @ h) + gamma * (w * rho)
            return drho.ravel()

    elif mode == EIGENBASIS_DEPHASING:
        tracker = _EigenbasisTracker()

        def rhs(t, z):
            rho = z.reshape(dim, dim)
            g, J = evaluate_schedule(schedule, min(max(t, t0), t1))
            h = g * hx_d + J * hzz_d
            evals, vecs = np.linalg.eigh(h)
            vecs = tracker.match(vecs)
            drho = -1j * (h @ rho - rho @ h)
            # decay of coherences between distinct instantaneous eigenlevels
            rho_e = vecs.conj().T @ rho @ vecs
            scale = max(np.max(np.abs(evals)), 1.0)
            distinct = np.abs(evals[:, None] - evals[None, :]) \
                > _DEGENERACY_TOL * scale
            decay = vecs @ (distinct * rho_e) @ vecs.conj().T
            return (drho - gamma * decay).ravel()

    else:
        raise ValueError(f"unknown dephasing mode {mode!r}")

    sol = integrate_complex(rhs, rho0.ravel(), (t0, t1), rtol=rtol, atol=atol,
                            method=method)
    rho = sol.states[-1].reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)  # remove integrator-level asymmetry
    out = DenseState(L=L, t=float(sol.t[-1]), rho=rho)
    out.check(norm_tol=10.0 * rtol, herm_tol=1e-12, pos_tol=1e-6)
    return out


def kink_expectation(state: DenseState, chain: ChainInstance) -> float:
    """<sum_bonds (1 - sigma^z_n sigma^z_{n+1}) / 2> on the state."""
    L = chain.L
    rho = state.density_matrix()
    diag = np.real(np.diag(rho))
    total = 0.0
    idx = np.arange(2 ** L)
    for (a, b) in _bond_list(chain):
        za = 1.0 - 2.0 * ((idx >> (L - a)) & 1)
        zb = 1.0 - 2.0 * ((idx >> (L - b)) & 1)
        total += float(np.sum(diag * 0.5 * (1.0 - za * zb)))
    return total


def excitation_probability(state: DenseState, chain: ChainInstance,
                           g: float, J: float) -> float:
    """p = 1 - <P_ground> for the (possibly degenerate) final ground space."""
    h = dense_hamiltonian(chain, g, J)
    evals, vecs = np.linalg.eigh(h)
    scale = max(np.max(np.abs(evals)), 1.0)
    gs = vecs[:, evals <= evals[0] + _DEGENERACY_TOL * scale]
    rho = state.density_matrix()
    pg = float(np.real(np.trace(gs.conj().T @ rho @ gs)))
    return min(max(1.0 - pg, 0.0), 1.0)
