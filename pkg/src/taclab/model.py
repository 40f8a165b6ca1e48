"""Chain instances, annealing schedules, disorder sampling and units.

Everything downstream consumes the concrete coefficient arrays produced
here.  Internally hbar = 1 and all energies are measured relative to the
base coupling; physical units (GHz, microseconds) appear only at the
ingest/report boundary through :class:`UnitSystem`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

OPEN = "open"
PERIODIC = "periodic"

_CROSSING_RTOL = 1e-10


class ScheduleError(ValueError):
    """Raised for schedule evaluation outside its window or bad tables."""


class ChainError(ValueError):
    """Raised for invalid chain parameters."""


@dataclass(frozen=True)
class DisorderMeta:
    """Provenance of a disorder draw: centers, half-widths and seed."""

    x: float
    delta_J: float
    delta_g: float
    seed: int


@dataclass(frozen=True)
class ChainInstance:
    """A concrete Ising chain: per-site fields and per-bond couplings.

    ``J`` and ``g`` are stored in energy units (products of the base scales
    and the dimensionless disorder draws).  ``ferro_sign`` records the sign
    of the physically implemented coupling; the arrays themselves are kept
    positive and all kink accounting uses their magnitudes.
    """

    L: int
    topology: str
    J: np.ndarray
    g: np.ndarray
    ferro_sign: int = 1
    base_J: float = 1.0
    base_g: float = 1.0
    disorder_meta: Optional[DisorderMeta] = None

    def __post_init__(self):
        if self.L < 2:
            raise ChainError(f"need at least two sites, got L={self.L}")
        if self.topology not in (OPEN, PERIODIC):
            raise ChainError(f"unknown topology {self.topology!r}")
        n_bonds = self.L - 1 if self.topology == OPEN else self.L
        J = np.asarray(self.J, dtype=float)
        g = np.asarray(self.g, dtype=float)
        if J.shape != (n_bonds,):
            raise ChainError(
                f"expected {n_bonds} bonds for {self.topology} L={self.L}, "
                f"got {J.shape}"
            )
        if g.shape != (self.L,):
            raise ChainError(f"expected {self.L} fields, got {g.shape}")
        J.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "g", g)

    @property
    def n_bonds(self) -> int:
        return self.J.shape[0]

    @property
    def J_rel(self) -> np.ndarray:
        """Dimensionless bond profile, J / base_J."""
        return self.J / self.base_J

    @property
    def g_rel(self) -> np.ndarray:
        """Dimensionless field profile, g / base_g."""
        return self.g / self.base_g


def build_chain(L, topology=OPEN, base_J=1.0, base_g=1.0, disorder=None,
                seed=0, allow_sign_change=False) -> ChainInstance:
    """Build a chain, optionally with quenched uniform disorder.

    Parameters
    ----------
    disorder : tuple (x, delta_J, delta_g) or None
        When given, each field is drawn uniformly from
        ``base_g * [x - delta_g, x + delta_g]`` and each coupling from
        ``base_J * [1 - delta_J, 1 + delta_J]``, independently, from a
        deterministic generator seeded with ``seed``.
    allow_sign_change : bool
        By default a disorder width that lets a coupling or field cross
        zero is an error rather than being clamped.
    """
    if L < 2:
        raise ChainError(f"need at least two sites, got L={L}")
    n_bonds = L - 1 if topology == OPEN else L
    ferro_sign = 1 if base_J >= 0 else -1
    abs_J = abs(float(base_J))
    meta = None
    if disorder is None:
        J = np.full(n_bonds, abs_J)
        g = np.full(L, float(base_g))
    else:
        x, delta_J, delta_g = disorder
        if delta_J < 0 or delta_g < 0:
            raise ChainError("disorder half-widths must be nonnegative")
        if not allow_sign_change and (1.0 - delta_J < 0 or x - delta_g < 0):
            raise ChainError(
                "disorder interval crosses zero; pass allow_sign_change=True "
                "if sign-indefinite couplings are intended"
            )
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        J = abs_J * rng.uniform(1.0 - delta_J, 1.0 + delta_J, size=n_bonds)
        g = float(base_g) * rng.uniform(x - delta_g, x + delta_g, size=L)
        meta = DisorderMeta(x=float(x), delta_J=float(delta_J),
                            delta_g=float(delta_g), seed=int(seed))
    return ChainInstance(L=L, topology=topology, J=J, g=g,
                         ferro_sign=ferro_sign, base_J=abs_J,
                         base_g=float(base_g), disorder_meta=meta)


@dataclass(frozen=True)
class UnitSystem:
    """Natural units, hbar = 1.  Time unit is hbar / energy_unit.

    ``scale`` is the value of one internal energy unit expressed in the
    named physical unit (e.g. base coupling in GHz for hardware data).
    """

    energy_label: str = "J"
    scale: float = 1.0

    def energy_to_physical(self, e):
        return np.asarray(e) * self.scale

    def energy_from_physical(self, e):
        return np.asarray(e) / self.scale

    def time_to_physical(self, t):
        return np.asarray(t) / self.scale

    def time_from_physical(self, t):
        return np.asarray(t) * self.scale


class AnnealSchedule:
    """Base class: a time-dependent pair of uniform scales (g(t), J(t)).

    Per-site coefficients are these scales times the relative arrays of a
    :class:`ChainInstance`.  Each schedule owns its evaluation window
    ``domain = (t0, t1)``; for the critical ramp the window brackets t = 0
    where the critical point is crossed.
    """

    kind = "abstract"
    tau_q: float

    @property
    def domain(self):
        raise NotImplementedError

    def _values(self, t):
        raise NotImplementedError

    def __call__(self, t):
        return self._values(t)

    @property
    def duration(self) -> float:
        t0, t1 = self.domain
        return t1 - t0


@dataclass(frozen=True)
class LinearRampG(AnnealSchedule):
    """g(t) = J (1 - t/tau_q) at constant coupling J, t in [0, tau_q]."""

    J: float
    tau_q: float
    kind = "linear_ramp_g"

    def __post_init__(self):
        if self.tau_q <= 0:
            raise ScheduleError("tau_q must be positive")

    @property
    def domain(self):
        return (0.0, self.tau_q)

    def _values(self, t):
        g = self.J * (1.0 - t / self.tau_q)
        return (g, self.J)


@dataclass(frozen=True)
class KzRamp(AnnealSchedule):
    """Critical ramp g(t)/J - 1 = t/tau_q at constant J.

    The window runs from deep in the paramagnet (g = g_max_ratio * J at
    t = -tau_q*(g_max_ratio - 1)) down to g = g_min at
    t = tau_q*(1 - g_min/J); the critical point sits at t = 0.
    """

    J: float
    tau_q: float
    g_max_ratio: float = 2.0
    g_min: float = 0.0
    kind = "kz_ramp"

    def __post_init__(self):
        if self.tau_q <= 0:
            raise ScheduleError("tau_q must be positive")
        if self.g_max_ratio <= 1.0 or self.g_min >= self.J:
            raise ScheduleError("window must bracket the critical point")

    @property
    def domain(self):
        t0 = -self.tau_q * (self.g_max_ratio - 1.0)
        t1 = self.tau_q * (1.0 - self.g_min / self.J)
        return (t0, t1)

    def _values(self, t):
        g = self.J * (1.0 - t / self.tau_q)
        return (g, self.J)


class TabulatedSchedule(AnnealSchedule):
    """Schedule sampled at points s_k in [0, 1], interpolated monotonically.

    Columns are (s, g, j) with J(s) = j(s) * J_max; time maps linearly,
    s = t / tau_q.  Interpolation is piecewise-cubic monotone (PCHIP) so a
    monotone table never produces spurious oscillation in gap scans.
    """

    kind = "tabulated"

    def __init__(self, s, g, j, J_max, tau_q):
        s = np.asarray(s, dtype=float)
        g = np.asarray(g, dtype=float)
        j = np.asarray(j, dtype=float)
        if s.ndim != 1 or s.size < 2:
            raise ScheduleError("need at least two sample points")
        if not (np.all(np.diff(s) > 0)):
            raise ScheduleError("s samples must be strictly increasing")
        if not (math.isclose(s[0], 0.0, abs_tol=1e-12)
                and math.isclose(s[-1], 1.0, abs_tol=1e-12)):
            raise ScheduleError("s must start at 0 and end at 1")
        if tau_q <= 0:
            raise ScheduleError("tau_q must be positive")
        self.s = s
        self.tau_q = float(tau_q)
        self.J_max = float(J_max)
        self._g_interp = PchipInterpolator(s, g)
        self._j_interp = PchipInterpolator(s, j)

    @property
    def domain(self):
        return (0.0, self.tau_q)

    def _values(self, t):
        s = np.clip(t / self.tau_q, 0.0, 1.0)
        return (float(self._g_interp(s)), self.J_max * float(self._j_interp(s)))


def load_tabulated_schedule(path, J_max, tau_q, delimiter=",") -> TabulatedSchedule:
    """Read an `s, g, j` table (header row required) into a schedule."""
    data = np.loadtxt(path, delimiter=delimiter, skiprows=1, ndmin=2)
    if data.shape[1] < 3:
        raise ScheduleError(f"{path}: need at least columns s, g, j")
    return TabulatedSchedule(data[:, 0], data[:, 1], data[:, 2], J_max, tau_q)


def evaluate_schedule(schedule: AnnealSchedule, t: float):
    """Instantaneous (g, J) scales at time t inside the schedule window."""
    t0, t1 = schedule.domain
    span = t1 - t0
    if t < t0 - 1e-12 * span or t > t1 + 1e-12 * span:
        raise ScheduleError(
            f"t={t} outside schedule window [{t0}, {t1}]"
        )
    return schedule._values(min(max(t, t0), t1))


def critical_crossing_time(schedule: AnnealSchedule, n_probe=2048) -> float:
    """Earliest time with g(t) = J(t), to relative tolerance 1e-10.

    Locates a sign change of g - J on a dense probe grid, then refines by
    bisection (Brent).  Raises :class:`ScheduleError` if the schedule never
    crosses the critical point.
    """
    t0, t1 = schedule.domain
    ts = np.linspace(t0, t1, n_probe + 1)
    f = np.array([evaluate_schedule(schedule, t)[0]
                  - evaluate_schedule(schedule, t)[1] for t in ts])
    exact = np.nonzero(np.abs(f) == 0.0)[0]
    sign_change = np.nonzero(f[:-1] * f[1:] < 0)[0]
    candidates = []
    if exact.size:
        candidates.append(ts[exact[0]])
    if sign_change.size:
        i = sign_change[0]
        fn = lambda t: (evaluate_schedule(schedule, t)[0]
                        - evaluate_schedule(schedule, t)[1])
        span = max(abs(t0), abs(t1), 1.0)
        candidates.append(brentq(fn, ts[i], ts[i + 1],
                                 xtol=_CROSSING_RTOL * span,
                                 rtol=8.881784197001252e-16))
    if not candidates:
        raise ScheduleError("schedule never crosses g = J")
    return min(candidates)
