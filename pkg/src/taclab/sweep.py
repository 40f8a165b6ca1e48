"""Sweep driver and adiabaticity verdict: regenerates the in-silico
defect-vs-quench-time curves and labels each chain length as adiabatic,
KZM-limited, or anomalous.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__, analysis, correlator_dynamics, exact_oracle
from .model import OPEN, PERIODIC, KzRamp, LinearRampG, build_chain

ENGINE_AUTO = "auto"
ENGINE_CORRELATOR = "correlator"
ENGINE_ORACLE = "oracle"

ADIABATIC = "adiabatic"
KZM_LIMITED = "KZM-limited"
ANOMALOUS = "anomalous"

DEFAULT_KZM_BAND = (0.4, 0.6)
DEFAULT_RESIDUAL_RATIO = 2.0
DEFAULT_KINK_FLOOR = 1e-3


@dataclass(frozen=True)
class SweepPlan:
    """Grids and routing for one simulator sweep.

    The engine rule never routes periodic chains to the correlator
    engine; ``engine`` = "auto" picks the correlator for open chains and
    the oracle otherwise.
    """

    Ls: tuple
    tau_Qs: tuple
    gammas: tuple = (0.0,)
    deltas: tuple = (0.0,)
    seeds_per_point: int = 1
    topology: str = OPEN
    schedule_kind: str = "linear_ramp_g"
    J: float = 1.0
    base_seed: int = 0
    engine: str = ENGINE_AUTO
    rtol: float = 1e-9
    atol: float = 1e-11
    disorder_x: float = 1.0

    def __post_init__(self):
        for name in ("Ls", "tau_Qs", "gammas", "deltas"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"empty grid {name}")
        if self.seeds_per_point < 1:
            raise ValueError("seeds_per_point must be >= 1")
        if self.topology == PERIODIC and self.engine == ENGINE_CORRELATOR:
            raise ValueError("periodic chains cannot use the correlator engine")

    def make_schedule(self, tau_q):
        if self.schedule_kind == "linear_ramp_g":
            return LinearRampG(J=self.J, tau_q=tau_q)
        if self.schedule_kind == "kz_ramp":
            return KzRamp(J=self.J, tau_q=tau_q)
        raise ValueError(f"unknown schedule kind {self.schedule_kind!r}")

    def points(self):
        """Deterministic enumeration of all sweep points."""
        idx = 0
        for L in self.Ls:
            for tau in self.tau_Qs:
                for gamma in self.gammas:
                    for delta in self.deltas:
                        for rep in range(self.seeds_per_point):
                            yield SweepPoint(
                                L=int(L), tau_Q=float(tau), gamma=float(gamma),
                                delta=float(delta), rep=rep,
                                seed=self.base_seed + idx, plan=self)
                            idx += 1


@dataclass(frozen=True)
class SweepPoint:
    L: int
    tau_Q: float
    gamma: float
    delta: float
    rep: int
    seed: int
    plan: SweepPlan


def _route_engine(plan: SweepPlan, L: int) -> str:
    if plan.topology == PERIODIC:
        return ENGINE_ORACLE
    if plan.engine == ENGINE_AUTO:
        return ENGINE_CORRELATOR
    return plan.engine


def run_point(point: SweepPoint) -> analysis.RunRecord:
    """Execute one sweep point and emit its run record."""
    plan = point.plan
    disorder = None
    if point.delta > 0:
        disorder = (plan.disorder_x, point.delta, point.delta)
    chain = build_chain(point.L, plan.topology, base_J=plan.J, base_g=plan.J,
                        disorder=disorder, seed=point.seed)
    schedule = plan.make_schedule(point.tau_Q)
    engine = _route_engine(plan, point.L)
    if engine == ENGINE_CORRELATOR:
        res = correlator_dynamics.evolve(chain, schedule, gamma=point.gamma,
                                         rtol=plan.rtol, atol=plan.atol,
                                         trajectory_samples=0)
        energy = res.final_energy
    else:
        if point.gamma == 0.0:
            state = exact_oracle.evolve_pure(chain, schedule,
                                             rtol=plan.rtol, atol=plan.atol)
        else:
            state = exact_oracle.evolve_lindblad(chain, schedule, point.gamma,
                                                 rtol=plan.rtol,
                                                 atol=plan.atol)
        kinks = exact_oracle.kink_expectation(state, chain)
        energy = 2.0 * abs(plan.J) * kinks - chain.n_bonds * abs(plan.J)
    return analysis.RunRecord(
        chain_id=f"L{point.L}-d{point.delta:g}-seed{point.seed}",
        engine=engine, L=point.L, topology=plan.topology,
        n_couplings=chain.n_bonds, J_max=plan.J, tau_Q=point.tau_Q,
        tau_Q_unit="hbar_over_J", final_energy=energy, energy_unit="J",
        gamma=point.gamma, seed=point.seed,
        realization_id=f"rep{point.rep}")


def run_sweep(plan: SweepPlan, workers: int = 1, on_error="collect"):
    """Run every point (optionally in parallel); deterministic given seeds.

    Individual failures do not stop the sweep; they are collected and
    returned alongside the records as (point, message) pairs.
    """
    points = list(plan.points())
    records, failures = [], []
    if workers <= 1:
        results = []
        for pt in points:
            try:
                results.append((pt, run_point(pt), None))
            except Exception as exc:  # noqa: BLE001 - sweep must continue
                results.append((pt, None, f"{type(exc).__name__}: {exc}"))
    else:
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for pt, out in zip(points, pool.map(_run_point_safe, points)):
                rec, err = out
                results.append((pt, rec, err))
    for pt, rec, err in results:
        if err is None:
            records.append(rec)
        else:
            failures.append((pt, err))
    records.sort(key=lambda r: (r.L, r.tau_Q, r.gamma, r.seed))
    if on_error == "raise" and failures:
        raise RuntimeError(f"{len(failures)} sweep points failed: "
                           f"{failures[0][1]}")
    return records, failures


def _run_point_safe(point: SweepPoint):
    try:
        return run_point(point), None
    except Exception as exc:  # noqa: BLE001
        return None, f"{type(exc).__name__}: {exc}"


@dataclass
class SeriesVerdict:
    """Verdict for one chain length."""

    L: int
    label: str
    n_points: int
    exponent: Optional[float] = None
    exponent_se: Optional[float] = None
    tau_break: Optional[float] = None
    residual_ratio: Optional[float] = None
    note: str = ""


@dataclass
class TacReport:
    """Adiabaticity verdict per chain length plus provenance.

    The labels are a pure function of the aggregated numeric series; the
    report can be regenerated bit-stably from the stored records.
    """

    series: list
    overlay: Optional[list] = None
    provenance: dict = field(default_factory=dict)

    def render_text(self) -> str:
        lines = ["test of adiabatic computing - verdict", ""]
        for sv in self.series:
            lines.append(f"L={sv.L}: {sv.label}  ({sv.n_points} points)")
            if sv.exponent is not None:
                lines.append(f"  power-law exponent x = {sv.exponent:.4g}"
                             f" +/- {sv.exponent_se:.2g}")
            if sv.tau_break is not None:
                lines.append(f"  crossover tau_break = {sv.tau_break:.4g}, "
                             f"exp/power residual ratio = "
                             f"{sv.residual_ratio:.3g}")
            if sv.note:
                lines.append(f"  note: {sv.note}")
        lines.append("")
        for key in sorted(self.provenance):
            lines.append(f"provenance {key}: {self.provenance[key]}")
        lines.append("")
        return "\n".join(lines)


def _judge_series(tau, kinks, kzm_band, residual_ratio_min, kink_floor):
    """Label one (tau, kinks) series; pure function of the numbers."""
    keep = kinks > kink_floor
    tau_k = tau[keep]
    kinks_k = kinks[keep]
    note = ""
    if keep.sum() < len(tau):
        note = f"{len(tau) - int(keep.sum())} points below kink floor dropped"
    if tau_k.size < 3:
        return ANOMALOUS, None, None, None, None, note or "too few usable points"
    fit = analysis.fit_power_law(list(zip(tau_k, kinks_k)))
    tau_break = None
    ratio = None
    if tau_k.size >= 6 and tau_k[-1] / tau_k[0] >= 100.0:
        cross = analysis.crossover_detect(list(zip(tau_k, kinks_k)))
        tau_break = cross.tau_break
        ratio = cross.residual_ratio
        if (cross.right_behavior == analysis.EXPONENTIAL
                and ratio >= residual_ratio_min):
            return ADIABATIC, fit.x, fit.se_x, tau_break, ratio, note
    else:
        note = (note + "; " if note else "") + "span below two decades"
    if kzm_band[0] <= fit.x <= kzm_band[1]:
        return KZM_LIMITED, fit.x, fit.se_x, tau_break, ratio, note
    return ANOMALOUS, fit.x, fit.se_x, tau_break, ratio, note


def tac_verdict(records, overlay=None, kzm_band=DEFAULT_KZM_BAND,
                residual_ratio_min=DEFAULT_RESIDUAL_RATIO,
                kink_floor=DEFAULT_KINK_FLOOR,
                provenance=None) -> TacReport:
    """Label each chain-length series adiabatic / KZM-limited / anomalous.

    Adiabatic requires the exponential model preferred over the power law
    on the right segment by at least ``residual_ratio_min``; KZM-limited
    requires the fitted exponent inside ``kzm_band``.
    """
    rows = analysis.aggregate(records, group_by=("L", "tau_Q"))
    by_L: dict = {}
    for ((L, tau), mean, sem, n) in rows:
        by_L.setdefault(L, []).append((tau, mean))
    series = []
    for L in sorted(by_L):
        pts = sorted(by_L[L])
        tau = np.array([p[0] for p in pts])
        kinks = np.array([p[1] for p in pts])
        label, x, se, tb, ratio, note = _judge_series(
            tau, kinks, kzm_band, residual_ratio_min, kink_floor)
        series.append(SeriesVerdict(L=L, label=label, n_points=len(pts),
                                    exponent=x, exponent_se=se, tau_break=tb,
                                    residual_ratio=ratio, note=note))
    prov = dict(provenance or {})
    prov.setdefault("taclab_version", __version__)
    prov.setdefault("n_records", len(list(records)))
    return TacReport(series=series, overlay=overlay, provenance=prov)


def config_hash(config: dict) -> str:
    """Stable short hash of a resolved configuration mapping."""
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
