"""Data pipeline: run-record ingestion, energy-to-kink conversion,
aggregation with standard errors, power-law fits, and crossover detection.

The RunRecord CSV schema (header required, comma-delimited, UTF-8):
``chain_id,engine,L,topology,n_couplings,J_max,tau_Q,tau_Q_unit,
final_energy,energy_unit,gamma,seed,realization_id`` with
topology in {open, periodic}, tau_Q_unit in {hbar_over_J, us},
energy_unit in {J, GHz}.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields as dc_fields
from typing import Iterable, Optional

import numpy as np

TOPOLOGIES = ("open", "periodic")
TAU_UNITS = ("hbar_over_J", "us")
ENERGY_UNITS = ("J", "GHz")

CSV_COLUMNS = ["chain_id", "engine", "L", "topology", "n_couplings", "J_max",
               "tau_Q", "tau_Q_unit", "final_energy", "energy_unit", "gamma",
               "seed", "realization_id"]

EXPONENTIAL = "exponential"
POWER = "power"


class IngestError(ValueError):
    """File-level ingestion failure (missing columns, bad header)."""


@dataclass(frozen=True)
class RunRecord:
    """One anneal outcome, simulator- or hardware-produced."""

    chain_id: str
    engine: str
    L: int
    topology: str
    n_couplings: int
    J_max: float
    tau_Q: float
    tau_Q_unit: str
    final_energy: float
    energy_unit: str
    gamma: float = 0.0
    seed: int = 0
    realization_id: str = ""

    def validate(self):
        """Return a list of problems, empty when the record is sound."""
        problems = []
        expected = self.L - 1 if self.topology == "open" else self.L
        if self.topology not in TOPOLOGIES:
            problems.append(f"unknown topology {self.topology!r}")
        elif self.n_couplings != expected:
            problems.append(
                f"n_couplings={self.n_couplings}, expected {expected}")
        if self.tau_Q <= 0:
            problems.append("tau_Q must be positive")
        if self.J_max == 0:
            problems.append("J_max must be nonzero")
        if self.tau_Q_unit not in TAU_UNITS:
            problems.append(f"unknown tau_Q unit {self.tau_Q_unit!r}")
        if self.energy_unit not in ENERGY_UNITS:
            problems.append(f"unknown energy unit {self.energy_unit!r}")
        bound = -self.n_couplings * abs(self.J_max)
        if self.final_energy < bound - 1e-12 * max(abs(bound), 1.0):
            problems.append(
                f"final_energy {self.final_energy} below ground energy {bound}")
        return problems

    @property
    def kinks(self) -> float:
        return energy_to_kinks(self.final_energy, self.n_couplings, self.J_max)


def energy_to_kinks(E: float, N: int, J_max: float) -> float:
    """kinks = (N |J_max| + E) / (2 |J_max|); a broken bond costs 2 |J|.

    Readings below the ground energy -N |J_max| (possible under
    miscalibrated hardware offsets) are rejected rather than clamped;
    correct offsets upstream before ingestion.
    """
    aj = abs(J_max)
    if aj == 0:
        raise ValueError("J_max must be nonzero")
    kinks = (N * aj + E) / (2.0 * aj)
    if kinks < -1e-12 * max(N, 1):
        raise ValueError(f"E={E} below the ground energy -N|J_max|")
    return kinks


def aggregate(records: Iterable[RunRecord], group_by=("L", "tau_Q")):
    """Group records and return rows (group, mean_kinks, sem, n).

    SEM is the sample standard deviation over sqrt(n); a single-element
    group reports SEM as None (missing), never zero.  Mixed units within
    one group are rejected.
    """
    groups: dict = {}
    for rec in records:
        key = tuple(getattr(rec, k) for k in group_by)
        groups.setdefault(key, []).append(rec)
    rows = []
    for key in sorted(groups):
        recs = groups[key]
        units = {(r.tau_Q_unit, r.energy_unit) for r in recs}
        if len(units) > 1:
            raise ValueError(f"mixed units within group {key}: {units}")
        kinks = np.array([r.kinks for r in recs])
        n = kinks.size
        mean = float(np.mean(kinks))
        sem = float(np.std(kinks, ddof=1) / math.sqrt(n)) if n > 1 else None
        rows.append((key, mean, sem, n))
    return rows


@dataclass(frozen=True)
class FitResult:
    """Power-law fit y = A * tau^(-x) with standard errors."""

    A: float
    x: float
    se_A: float
    se_x: float
    residual_rms: float
    n_points: int
    window: tuple


def _weighted_linfit(u, v, w):
    """Weighted least squares v = a + b u; returns a, b, se_a, se_b, rms."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    X = np.column_stack([np.ones_like(u), u])
    xtw = X.T * w
    cov_unscaled = np.linalg.inv(xtw @ X)
    beta = cov_unscaled @ (xtw @ v)
    resid = v - X @ beta
    dof = max(u.size - 2, 1)
    s2 = float(np.sum(w * resid ** 2) / dof)
    cov = cov_unscaled * s2
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return beta[0], beta[1], math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1]), rms


def fit_power_law(points) -> FitResult:
    """Weighted log-log fit of (tau_Q, kinks[, weight]) to A * tau^(-x).

    Weights default to 1/(relative SEM)^2 when a third column is given as
    SEM; pass explicit weights via 3-tuples (tau, kinks, weight) with
    weight already in inverse relative variance.  All values must be
    positive; identical tau values are degenerate.
    """
    pts = [tuple(p) for p in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    tau = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if np.any(tau <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive values")
    if np.allclose(tau, tau[0]):
        raise ValueError("all tau_Q equal: fit degenerate")
    w = np.ones_like(tau)
    for i, p in enumerate(pts):
        if len(p) > 2 and p[2] is not None and p[2] > 0:
            w[i] = p[2]
    a, b, se_a, se_b, rms = _weighted_linfit(np.log(tau), np.log(y), w)
    return FitResult(A=math.exp(a), x=-b, se_A=math.exp(a) * se_a, se_x=se_b,
                     residual_rms=rms, n_points=len(pts),
                     window=(float(tau.min()), float(tau.max())))


def sem_weight(kinks: float, sem: Optional[float]) -> Optional[float]:
    """Default fit weight 1/(relative SEM)^2; None when SEM is missing."""
    if sem is None or sem <= 0 or kinks <= 0:
        return None
    return (kinks / sem) ** 2


@dataclass(frozen=True)
class CrossoverResult:
    """Two-segment model of kinks(tau_Q): power left, exponential right."""

    tau_break: float
    left_exponent: float
    right_behavior: str
    residual_ratio: float  # power-law rms / exponential rms on right segment


def _exp_fit_rms(tau, y):
    """Linear fit of ln y against tau (exponential decay); returns rms."""
    a, b, _, _, rms = _weighted_linfit(tau, np.log(y), np.ones_like(tau))
    return rms


def _power_fit_rms(tau, y):
    a, b, _, _, rms = _weighted_linfit(np.log(tau), np.log(y),
                                       np.ones_like(tau))
    return rms


def crossover_detect(curve, min_segment=3) -> CrossoverResult:
    """Locate the break between power-law and exponential behavior.

    Scans candidate break points, fitting a power law on the left and an
    exponential decay on the right, and keeps the split minimizing the
    total residual.  ``right_behavior`` states which model fits the right
    segment better; with ``residual_ratio`` < 1 the power law wins there
    (anomalous scaling rather than LZ suppression).
    """
    pts = sorted((float(t), float(k)) for (t, k) in curve)
    tau = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    n = tau.size
    if n < 2 * min_segment:
        raise ValueError(f"need at least {2 * min_segment} points")
    if np.any(tau <= 0) or np.any(y <= 0):
        raise ValueError("crossover detection needs positive values")
    if tau[-1] / tau[0] < 100.0:
        raise ValueError("need at least two decades of tau_Q span")

    best = None
    for i in range(min_segment, n - min_segment + 1):
        rms_l = _power_fit_rms(tau[:i], y[:i])
        rms_r = _exp_fit_rms(tau[i:], y[i:])
        total = rms_l * i + rms_r * (n - i)
        if best is None or total < best[0]:
            best = (total, i)
    i = best[1]
    # whole-curve alternatives: single power law or single exponential
    rms_all_pow = _power_fit_rms(tau, y)
    rms_all_exp = _exp_fit_rms(tau, y)
    split_rms = best[0] / n
    if rms_all_exp <= min(split_rms, rms_all_pow):
        i = min_segment  # break collapses to the left edge
    elif rms_all_pow <= split_rms:
        i = n - min_segment  # effectively no exponential tail

    left = fit_power_law(list(zip(tau[:i], y[:i])))
    tau_r, y_r = tau[i:], y[i:]
    rms_pow_r = _power_fit_rms(tau_r, y_r)
    rms_exp_r = _exp_fit_rms(tau_r, y_r)
    ratio = rms_pow_r / max(rms_exp_r, 1e-300)
    behavior = EXPONENTIAL if ratio > 1.0 else POWER
    tau_break = math.sqrt(tau[i - 1] * tau[i])
    return CrossoverResult(tau_break=tau_break, left_exponent=left.x,
                           right_behavior=behavior, residual_ratio=ratio)


@dataclass
class IngestReport:
    """Validated records plus per-line rejection diagnostics."""

    records: list
    errors: list  # (line_number, message)

    @property
    def n_rejected(self) -> int:
        return len(self.errors)


def _parse_row(row: dict):
    return RunRecord(
        chain_id=row["chain_id"],
        engine=row["engine"],
        L=int(row["L"]),
        topology=row["topology"],
        n_couplings=int(row["n_couplings"]),
        J_max=float(row["J_max"]),
        tau_Q=float(row["tau_Q"]),
        tau_Q_unit=row["tau_Q_unit"],
        final_energy=float(row["final_energy"]),
        energy_unit=row["energy_unit"],
        gamma=float(row.get("gamma") or 0.0),
        seed=int(row.get("seed") or 0),
        realization_id=row.get("realization_id") or "",
    )


def ingest(source) -> IngestReport:
    """Parse a RunRecord CSV; invalid rows land in the error report.

    ``source`` is a path or an open text stream.  Rows are never silently
    dropped: each rejection carries its 1-based line number.
    """
    if hasattr(source, "read"):
        fh = source
        close = False
    else:
        fh = open(source, newline="")
        close = True
    try:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return IngestReport(records=[], errors=[])
        missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise IngestError(f"missing required columns: {missing}")
        records, errors = [], []
        for lineno, row in enumerate(reader, start=2):
            try:
                rec = _parse_row(row)
            except (KeyError, TypeError, ValueError) as exc:
                errors.append((lineno, f"unparseable row: {exc}"))
                continue
            problems = rec.validate()
            if problems:
                errors.append((lineno, "; ".join(problems)))
            else:
                records.append(rec)
        return IngestReport(records=records, errors=errors)
    finally:
        if close:
            fh.close()


def emit(records: Iterable[RunRecord], target):
    """Write records in the canonical CSV schema (round-trips ingest)."""
    if hasattr(target, "write"):
        fh = target
        close = False
    else:
        fh = open(target, "w", newline="")
        close = True
    try:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([r.chain_id, r.engine, r.L, r.topology,
                             r.n_couplings, repr(r.J_max), repr(r.tau_Q),
                             r.tau_Q_unit, repr(r.final_energy),
                             r.energy_unit, repr(r.gamma), r.seed,
                             r.realization_id])
    finally:
        if close:
            fh.close()


def emit_aggregate(rows, target, group_by=("L", "tau_Q")):
    """Write aggregated rows as `L,tau_Q,mean_kinks,sem,n`."""
    with open(target, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(group_by) + ["mean_kinks", "sem", "n"])
        for (key, mean, sem, n) in rows:
            writer.writerow(list(key) + [repr(mean),
                                         "" if sem is None else repr(sem), n])


def fit_report_text(fit: FitResult) -> str:
    """Human-readable fit block followed by the machine-readable line."""
    out = io.StringIO()
    out.write(f"power-law fit: kinks = A * tau_Q^-x\n")
    out.write(f"  A = {fit.A:.6g} +/- {fit.se_A:.2g}\n")
    out.write(f"  x = {fit.x:.6g} +/- {fit.se_x:.2g}\n")
    out.write(f"  residual rms (log space) = {fit.residual_rms:.3g}\n")
    out.write(f"  {fit.n_points} points, tau_Q in "
              f"[{fit.window[0]:.6g}, {fit.window[1]:.6g}]\n")
    out.write("A,x,se_A,se_x,residual_rms,n_points,tau_min,tau_max\n")
    out.write(f"{fit.A:.12g},{fit.x:.12g},{fit.se_A:.12g},{fit.se_x:.12g},"
              f"{fit.residual_rms:.12g},{fit.n_points},"
              f"{fit.window[0]:.12g},{fit.window[1]:.12g}\n")
    return out.getvalue()
