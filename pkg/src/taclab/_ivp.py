"""Thin wrapper around scipy's IVP solvers for complex state vectors.

All engines share the same integrator contract: an adaptive Adams-type
multistep method with automatic stiffness fallback (LSODA), default
rtol=1e-9 / atol=1e-11.  Complex states are integrated as real views.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import ode, solve_ivp

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-11
DEFAULT_METHOD = "auto"

# LSODA preallocates workspace for a dense Jacobian (O(n^2) doubles), which
# is prohibitive for the O(L^2)-variable correlator systems.  Above this
# real-state size the auto choice switches to a pure Adams method with
# functional iteration (VODE mf=10), which needs O(n) workspace.
LSODA_SIZE_LIMIT = 4096


class IntegrationError(RuntimeError):
    """Integrator failed (step-size underflow or solver abort)."""


@dataclass
class IvpSolution:
    t: np.ndarray
    states: list
    nfev: int
    method: str
    rtol: float
    atol: float


def integrate_complex(rhs, z0, t_span, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
                      t_eval=None, method=DEFAULT_METHOD) -> IvpSolution:
    """Integrate dz/dt = rhs(t, z) for a complex 1-D state z.

    ``rhs`` receives and returns complex arrays; the real/imag packing is
    handled here.  ``t_eval`` defaults to the endpoint only.  ``method``
    "auto" uses LSODA for small systems and the O(n)-workspace Adams
    method for large ones; any solve_ivp method name or "adams" can be
    forced explicitly.
    """
    z0 = np.asarray(z0, dtype=complex)
    n = z0.size
    if method == "auto":
        method = "LSODA" if 2 * n <= LSODA_SIZE_LIMIT else "adams"

    def rhs_real(t, u):
        z = u.view(complex)
        dz = np.asarray(rhs(t, z), dtype=complex)
        return dz.view(float)

    if t_eval is None:
        t_eval = [t_span[1]]
    t_eval = np.asarray(t_eval, dtype=float)
    u0 = z0.view(float).copy()
    if method == "adams":
        t, y, nfev = _integrate_adams(rhs_real, u0, t_span, t_eval,
                                      rtol, atol)
    else:
        sol = solve_ivp(rhs_real, t_span, u0, method=method,
                        rtol=rtol, atol=atol, t_eval=t_eval)
        if not sol.success:
            raise IntegrationError(
                f"integrator {method} failed: {sol.message} (nfev={sol.nfev}, "
                f"last t={sol.t[-1] if sol.t.size else t_span[0]})"
            )
        t, y, nfev = sol.t, sol.y, int(sol.nfev)
    states = [np.ascontiguousarray(y[:, k]).view(complex)
              for k in range(y.shape[1])]
    assert states[0].size == n
    return IvpSolution(t=t, states=states, nfev=nfev,
                       method=method, rtol=rtol, atol=atol)


def _integrate_adams(rhs_real, u0, t_span, t_eval, rtol, atol):
    """VODE in pure Adams mode (mf=10): no Jacobian, O(n) workspace."""
    solver = ode(lambda t, u: rhs_real(t, u))
    solver.set_integrator("vode", method="adams", with_jacobian=False,
                          rtol=rtol, atol=atol, nsteps=10 ** 8)
    solver.set_initial_value(u0, t_span[0])
    ys = []
    ts = []
    for tk in t_eval:
        if tk == t_span[0]:
            ys.append(u0.copy())
            ts.append(tk)
            continue
        solver.integrate(tk)
        if not solver.successful():
            raise IntegrationError(
                f"integrator adams failed near t={solver.t}"
            )
        ys.append(solver.y.copy())
        ts.append(tk)
    return np.asarray(ts), np.column_stack(ys), -1
