"""Packed-state bookkeeping and backend equivalence of the RHS kernels."""

import numpy as np
import pytest

from taclab import _kernels


def random_packed(L, rng):
    m = rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L))
    x = 0.5 * (m + m.conj().T)
    a = rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L))
    y = 0.5 * (a - a.T)
    return x, y, _kernels.pack_state(x, y)


class TestPacking:
    def test_sizes(self):
        nx, ny = _kernels.packed_sizes(5)
        assert nx == 15      # upper triangle including diagonal
        assert ny == 10      # strict upper triangle

    def test_round_trip(self, rng):
        x, y, z = random_packed(7, rng)
        x2, y2 = _kernels.unpack_state(z, 7)
        np.testing.assert_allclose(x2, x, atol=1e-15)
        np.testing.assert_allclose(y2, y, atol=1e-15)


class TestBackends:
    def test_backend_reported(self):
        assert _kernels.BACKEND in ("cython", "numpy")

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            _kernels.make_rhs(4, backend="fortran")

    @pytest.mark.skipif(_kernels.BACKEND != "cython",
                        reason="compiled backend not built")
    @pytest.mark.parametrize("L", [2, 3, 8, 33])
    @pytest.mark.parametrize("gamma", [0.0, 0.3])
    def test_cython_matches_numpy(self, L, gamma, rng):
        _, _, z = random_packed(L, rng)
        g = rng.uniform(0.5, 1.5, L)
        J = rng.uniform(0.5, 1.5, L - 1)
        ref = _kernels.make_rhs(L, backend="numpy")(z, g, J, gamma)
        cy = _kernels.make_rhs(L, backend="cython")(z, g, J, gamma)
        np.testing.assert_allclose(cy, ref, atol=1e-13)

    def test_cython_output_is_detached(self, rng):
        # make_rhs reuses an internal buffer; successive calls must not
        # alias each other's results
        if _kernels.BACKEND != "cython":
            pytest.skip("compiled backend not built")
        rhs = _kernels.make_rhs(4, backend="cython")
        _, _, z1 = random_packed(4, rng)
        _, _, z2 = random_packed(4, rng)
        g = np.ones(4)
        J = np.ones(3)
        out1 = rhs(z1, g, J, 0.0)
        keep = out1.copy()
        rhs(z2, g, J, 0.0)
        np.testing.assert_array_equal(out1, keep)


class TestRhsPhysics:
    def test_uniform_ground_state_is_stationary(self):
        # the instantaneous ground state at fixed (g, J) is an exact
        # fixed point of the closed-system correlator flow up to a
        # global phase handled by the equations themselves
        from taclab import model
        from taclab.spectrum import ground_state_correlators
        chain = model.build_chain(8, model.OPEN)
        st = ground_state_correlators(chain, 1.3, 1.0)
        z = _kernels.pack_state(st.x, st.y)
        rhs = _kernels.make_rhs(8)
        dz = rhs(z, chain.g * 1.3, chain.J, 0.0)
        assert np.max(np.abs(dz)) < 1e-10
