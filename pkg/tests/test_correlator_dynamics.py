"""Quench evolution of the closed correlator system."""

import numpy as np
import pytest

from taclab import correlator_dynamics as cd
from taclab import model
from taclab.spectrum import ground_state_correlators

# Frozen reference kinks for a small open-chain quench (uniform L=6,
# g(t) = J(1 - t/tau_Q), tau_Q = 2), computed independently by dense
# propagation of the 2^L Schrodinger / Lindblad equations at tight
# tolerance.
KINKS_L6_TAU2_G0 = 0.3487825611550303
KINKS_L6_TAU2_GAMMA02 = 0.714206051664503


@pytest.fixture(scope="module")
def quench_l6():
    chain = model.build_chain(6, model.OPEN)
    sch = model.LinearRampG(J=1.0, tau_q=2.0)
    return cd.evolve(chain, sch, rtol=1e-10, atol=1e-12)


class TestEvolve:
    def test_frozen_kink_number(self, quench_l6):
        assert quench_l6.kinks == pytest.approx(KINKS_L6_TAU2_G0, abs=1e-7)

    def test_frozen_kink_number_with_dephasing(self):
        chain = model.build_chain(6, model.OPEN)
        sch = model.LinearRampG(J=1.0, tau_q=2.0)
        res = cd.evolve(chain, sch, gamma=0.2, rtol=1e-10, atol=1e-12)
        assert res.kinks == pytest.approx(KINKS_L6_TAU2_GAMMA02, abs=1e-7)

    def test_energy_consistent_with_kinks(self, quench_l6):
        # at g = 0 the energy is classical: E = -sum J_n (1 - 2 kappa_n)
        n_bonds = 5
        assert quench_l6.final_energy == pytest.approx(
            2.0 * quench_l6.kinks - n_bonds, abs=1e-9)

    def test_bond_profile_sums_to_total(self, quench_l6):
        profile = cd.bond_kink_profile(quench_l6.state)
        assert profile.shape == (5,)
        assert profile.sum() == pytest.approx(quench_l6.kinks, abs=1e-10)

    def test_purity_preserved_without_dephasing(self, quench_l6):
        assert quench_l6.state.purity_defect() < 1e-6
        assert "purity_drift" not in quench_l6.flags

    def test_dephasing_mixes_the_state(self):
        chain = model.build_chain(6, model.OPEN)
        sch = model.LinearRampG(J=1.0, tau_q=2.0)
        res = cd.evolve(chain, sch, gamma=0.5, rtol=1e-9, atol=1e-11)
        assert res.state.purity_defect() > 1e-3

    def test_trajectory_sampling(self):
        chain = model.build_chain(8, model.OPEN)
        sch = model.LinearRampG(J=1.0, tau_q=1.0)
        res = cd.evolve(chain, sch, trajectory_samples=16)
        traj = res.trajectory_samples
        assert traj.shape == (16, 2)
        assert traj[0, 0] == pytest.approx(0.0)
        assert traj[-1, 0] == pytest.approx(1.0)
        assert traj[-1, 1] == pytest.approx(res.kinks, abs=1e-9)

    def test_backends_agree_on_kinks(self):
        from taclab import _kernels
        if _kernels.BACKEND != "cython":
            pytest.skip("compiled backend not built")
        chain = model.build_chain(10, model.OPEN,
                                  disorder=(1.0, 0.1, 0.1), seed=2)
        sch = model.KzRamp(J=1.0, tau_q=1.5)
        a = cd.evolve(chain, sch, backend="cython", trajectory_samples=0)
        b = cd.evolve(chain, sch, backend="numpy", trajectory_samples=0)
        assert a.kinks == pytest.approx(b.kinks, abs=1e-9)

    def test_periodic_chain_rejected(self):
        chain = model.build_chain(6, model.PERIODIC)
        sch = model.LinearRampG(J=1.0, tau_q=1.0)
        with pytest.raises(ValueError):
            cd.evolve(chain, sch)

    def test_negative_gamma_rejected(self):
        chain = model.build_chain(4, model.OPEN)
        with pytest.raises(ValueError):
            cd.evolve(chain, model.LinearRampG(J=1.0, tau_q=1.0), gamma=-0.1)


class TestPhysicalSanity:
    def test_kinks_decrease_with_slower_quench(self):
        chain = model.build_chain(40, model.OPEN)
        kinks = [cd.evolve(chain, model.LinearRampG(J=1.0, tau_q=t),
                           trajectory_samples=0).kinks
                 for t in (0.5, 2.0, 8.0)]
        assert kinks[0] > kinks[1] > kinks[2]

    def test_adiabatic_limit_is_defect_free(self):
        chain = model.build_chain(4, model.OPEN)
        res = cd.evolve(chain, model.LinearRampG(J=1.0, tau_q=200.0),
                        trajectory_samples=0)
        assert res.kinks < 5e-3

    def test_stationary_at_fixed_parameters(self):
        # a degenerate schedule with g held above J leaves the ground
        # state invariant up to integrator tolerance
        chain = model.build_chain(8, model.OPEN)
        s = np.linspace(0.0, 1.0, 5)
        sch = model.TabulatedSchedule(s, np.full(5, 1.5), np.ones(5),
                                      J_max=1.0, tau_q=3.0)
        res = cd.evolve(chain, sch, trajectory_samples=0)
        init = ground_state_correlators(chain, 1.5, 1.0)
        np.testing.assert_allclose(res.state.x, init.x, atol=1e-7)
        np.testing.assert_allclose(res.state.y, init.y, atol=1e-7)
