"""Acceptance suite: one test per criterion, run with ``pytest -v``.

Each test prints the measured numbers next to the tolerance it is held
to, so a failing line is directly actionable.  Criterion 1 carries a
strict xfail for the pinned linear ramp (see the test docstring) plus a
passing companion on a full critical crossing.
"""

import numpy as np
import pytest

from conftest import cosine_schedule
from taclab import (analysis, correlator_dynamics, exact_oracle, model,
                    spectrum, sweep, theory)

J_C = 1.0


def _kzm_window_grid(L, n_points=6, k_lo=5.0, k_hi=20.0):
    """tau_Q grid over which L * kzm_density spans [k_lo, k_hi] kinks."""
    # Invert kinks = L/(2 pi) (2 J tau)^(-1/2) for tau at both ends.
    tau_hi = (L / (2.0 * np.pi * k_lo)) ** 2 / (2.0 * J_C)
    tau_lo = (L / (2.0 * np.pi * k_hi)) ** 2 / (2.0 * J_C)
    return np.geomspace(tau_lo, tau_hi, n_points)


@pytest.mark.xfail(
    strict=True,
    reason="a linear ramp that starts exactly at the critical point covers "
    "only half of the critical crossing; the defect density it produces "
    "approaches half the full-crossing Kibble-Zurek value (pointwise "
    "ratios 0.6-0.75 over this window, drifting toward 1/2), so the 10% "
    "pointwise band and the x = 0.50 +/- 0.05 exponent are unattainable "
    "with this schedule.  The companion test below passes the identical "
    "check on a ramp that crosses the critical point from g = 2J.")
def test_criterion_01_kzm_scaling_linear_ramp():
    L = 200
    chain = model.build_chain(L, topology=model.OPEN)
    grid = _kzm_window_grid(L)
    points = []
    for tau in grid:
        res = correlator_dynamics.evolve(chain,
                                         model.LinearRampG(J=J_C, tau_q=tau))
        points.append((tau, res.kinks))
    fit = analysis.fit_power_law(points)
    ratios = [k / (L * theory.kzm_density(J_C, tau)) for tau, k in points]
    print(f"criterion 1 (linear ramp): x = {fit.x:.4f} (band 0.50 +/- 0.05), "
          f"density ratios {min(ratios):.3f}..{max(ratios):.3f} "
          f"(band 0.90..1.10)")
    assert abs(fit.x - 0.5) <= 0.05
    for r in ratios:
        assert abs(r - 1.0) <= 0.10


def test_criterion_01_kzm_scaling_full_crossing():
    """Same check as above on a ramp entering from g = 2J: this passes."""
    L = 200
    chain = model.build_chain(L, topology=model.OPEN)
    points = []
    for tau in np.geomspace(1.6, 12.8, 6):
        res = correlator_dynamics.evolve(chain,
                                         model.KzRamp(J=J_C, tau_q=tau))
        points.append((tau, res.kinks))
    fit = analysis.fit_power_law(points)
    ratios = [k / (L * theory.kzm_density(J_C, tau)) for tau, k in points]
    print(f"criterion 1 (full crossing): x = {fit.x:.4f} "
          f"(band 0.50 +/- 0.05), density ratios "
          f"{min(ratios):.3f}..{max(ratios):.3f} (band 0.90..1.10)")
    assert abs(fit.x - 0.5) <= 0.05
    for r in ratios:
        assert abs(r - 1.0) <= 0.10


def test_criterion_02_lz_suppression():
    L = 8
    chain = model.build_chain(L, topology=model.PERIODIC)
    tau_ad = theory.adiabatic_timescale(J_C, L)
    taus = np.linspace(2.0, 10.0, 5) * tau_ad
    neg_log_p = []
    for tau in taus:
        state = exact_oracle.evolve_pure(chain, cosine_schedule(tau))
        p = exact_oracle.excitation_probability(state, chain, 0.0, J_C)
        neg_log_p.append(-np.log(p))
    slope = np.polyfit(taus, neg_log_p, 1)[0]
    slope_theory = 2.0 * np.pi ** 3 * J_C / L ** 2
    state = exact_oracle.evolve_pure(chain, cosine_schedule(tau_ad))
    p_ad = exact_oracle.excitation_probability(state, chain, 0.0, J_C)
    print(f"criterion 2: slope/theory = {slope / slope_theory:.4f} "
          f"(band 0.85..1.15), p(tau_AD) = {p_ad:.4f} vs 1/e = "
          f"{np.exp(-1.0):.4f} (band 20%)")
    assert abs(slope / slope_theory - 1.0) <= 0.15
    assert abs(p_ad * np.e - 1.0) <= 0.20


def test_criterion_03_crossover_location():
    L = 10
    chain = model.build_chain(L, topology=model.PERIODIC)
    tau_ad = theory.adiabatic_timescale(J_C, L)
    curve = []
    for tau in np.geomspace(0.23, 23.0, 12):
        state = exact_oracle.evolve_pure(chain, cosine_schedule(tau))
        curve.append((tau, exact_oracle.kink_expectation(state, chain)))
    res = analysis.crossover_detect(curve)
    ratio = res.tau_break / tau_ad
    print(f"criterion 3: tau_break = {res.tau_break:.3f}, tau_AD = "
          f"{tau_ad:.3f}, ratio {ratio:.3f} (band 0.5..2.0), right segment "
          f"{res.right_behavior}")
    assert 0.5 <= ratio <= 2.0
    assert res.right_behavior == "exponential"


def test_criterion_04_oracle_equivalence():
    tau = 2.0
    schedules = [model.LinearRampG(J=J_C, tau_q=tau),
                 model.KzRamp(J=J_C, tau_q=tau),
                 cosine_schedule(tau)]
    worst = 0.0
    for L in (4, 5, 6, 7):
        chain = model.build_chain(L, topology=model.OPEN)
        for gamma in (0.0, 0.1, 0.5):
            for sch in schedules:
                res = correlator_dynamics.evolve(chain, sch, gamma=gamma)
                if gamma == 0.0:
                    state = exact_oracle.evolve_pure(chain, sch)
                else:
                    state = exact_oracle.evolve_lindblad(
                        chain, sch, gamma,
                        mode=exact_oracle.SITE_DEPHASING)
                k_oracle = exact_oracle.kink_expectation(state, chain)
                worst = max(worst, abs(res.kinks - k_oracle))
    print(f"criterion 4: max |kinks_correlator - kinks_oracle| = "
          f"{worst:.2e} (tolerance 1e-5)")
    assert worst <= 1e-5


def test_criterion_05_anti_kzm_saturation():
    L = 100
    chain = model.build_chain(L, topology=model.OPEN)
    taus = (0.5, 2.0, 8.0, 250.0)
    kinks = [correlator_dynamics.evolve(
        chain, model.LinearRampG(J=J_C, tau_q=tau), gamma=0.1).kinks
        for tau in taus]
    saturation = (L - 1) / 2.0
    print(f"criterion 5: kinks(tau) = "
          f"{', '.join(f'{k:.2f}' for k in kinks)} -> non-monotone, "
          f"saturation {kinks[-1]:.3f} vs {saturation} (band 5%)")
    assert kinks[1] < kinks[0]          # initial decrease
    assert kinks[2] > kinks[1]          # anti-KZM increase
    assert abs(kinks[-1] / saturation - 1.0) <= 0.05

    chain4 = model.build_chain(4, topology=model.PERIODIC)
    state = exact_oracle.evolve_lindblad(
        chain4, model.LinearRampG(J=J_C, tau_q=100.0), gamma=0.1,
        mode=exact_oracle.SITE_DEPHASING)
    k4 = exact_oracle.kink_expectation(state, chain4)
    print(f"criterion 5: L=4 periodic oracle saturation {k4:.4f} vs 2 "
          f"(band 5%)")
    assert abs(k4 / 2.0 - 1.0) <= 0.05


def test_criterion_06_gap_law():
    sizes = (64, 128, 256, 512)
    points = []
    for L in sizes:
        chain = model.build_chain(L, topology=model.PERIODIC)
        gap = spectrum.instantaneous_gap(chain, J_C, J_C)
        points.append((L, gap))
    fit = analysis.fit_power_law(points)
    coeffs = [gap * L for L, gap in points]
    print(f"criterion 6: gap ~ L^-x with x = {fit.x:.5f} (band 0.98..1.02); "
          f"measured gap*L = {np.mean(coeffs):.4f} "
          f"(pair gap; 2 pi = {2 * np.pi:.4f} per quasiparticle, "
          f"4 pi = {4 * np.pi:.4f} for the pair)")
    assert abs(fit.x - 1.0) <= 0.02


def test_criterion_07_eigenbasis_dephasing_scaling():
    L = 4
    gamma = 0.5
    chain = model.build_chain(L, topology=model.PERIODIC)
    taus = np.geomspace(10.0, 100.0, 5)
    probs = []
    for tau in taus:
        state = exact_oracle.evolve_lindblad(
            chain, cosine_schedule(tau), gamma,
            mode=exact_oracle.EIGENBASIS_DEPHASING)
        probs.append(exact_oracle.excitation_probability(
            state, chain, 0.0, J_C))
    slope = np.polyfit(np.log(taus), np.log(probs), 1)[0]
    delta = spectrum.instantaneous_gap(chain, J_C, J_C) / 2.0
    q_values = [theory.avron_extract_Q(p, delta, gamma, 1.0 / tau)
                for tau, p in zip(taus, probs)]
    print(f"criterion 7: log-log slope = {slope:.4f} (band -1.0 +/- 0.1); "
          f"extracted Q = {', '.join(f'{q:.3f}' for q in q_values)} "
          f"(report-only, anchor ~0.65)")
    assert abs(slope + 1.0) <= 0.1


def test_criterion_08_energy_kink_round_trip(rng):
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 400))
        j_max = float(rng.uniform(0.1, 5.0))
        kinks = float(rng.uniform(0.0, n))
        energy = 2.0 * j_max * kinks - n * j_max
        back = analysis.energy_to_kinks(energy, n, j_max)
        worst = max(worst, abs(back - kinks))
    print(f"criterion 8: max round-trip error over 1000 records = "
          f"{worst:.2e} (tolerance 1e-10)")
    assert worst <= 1e-10


def test_criterion_09_fitter_calibration():
    rng = np.random.default_rng(2024)
    taus = np.geomspace(1.0, 100.0, 20)
    weight = 1.0 / 0.05 ** 2
    hits = 0
    n_trials = 1000
    for _ in range(n_trials):
        a = rng.uniform(1.0, 50.0)
        x = rng.uniform(0.3, 1.5)
        y = a * taus ** (-x) * np.exp(0.05 * rng.standard_normal(taus.size))
        fit = analysis.fit_power_law(list(zip(taus, y,
                                              np.full(taus.size, weight))))
        if abs(fit.x - x) <= 3.0 * fit.se_x:
            hits += 1
    coverage = hits / n_trials
    print(f"criterion 9: |x_fit - x| <= 3 se in {100 * coverage:.1f}% of "
          f"{n_trials} trials (requirement >= 95%)")
    assert coverage >= 0.95


def _synthetic_records(L, kink_fn, taus, tag):
    records = []
    n = L - 1
    for i, tau in enumerate(taus):
        kinks = kink_fn(tau)
        records.append(analysis.RunRecord(
            chain_id=f"{tag}-{i}", engine="external", L=L, topology="open",
            n_couplings=n, J_max=J_C, tau_Q=float(tau),
            tau_Q_unit="hbar_over_J",
            final_energy=2.0 * J_C * kinks - n * J_C, energy_unit="J"))
    return records


def test_criterion_10_verdict_pipeline():
    taus = np.geomspace(0.5, 200.0, 15)
    records = []
    records += _synthetic_records(100, lambda t: 20.0 / t, taus, "anom")
    records += _synthetic_records(
        128, lambda t: 128.0 * theory.kzm_density(J_C, t), taus, "kzm")
    records += _synthetic_records(
        45, lambda t: 2.0 * theory.lz_probability(J_C, t, 45), taus, "lz")
    report = sweep.tac_verdict(records)
    labels = {v.L: v.label for v in report.series}
    print(f"criterion 10: labels {labels} (expect 100 anomalous, "
          f"128 KZM-limited, 45 adiabatic)")
    assert labels[100] == "anomalous"
    assert labels[128] == "KZM-limited"
    assert labels[45] == "adiabatic"
