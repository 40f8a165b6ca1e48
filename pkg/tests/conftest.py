"""Shared test helpers."""

import numpy as np
import pytest

from taclab import model


def cosine_schedule(tau_q, g_max=2.0, n=201):
    """Smooth full crossing g: g_max -> 0 with zero slope at both ends.

    The profile g(s) = (g_max/2)(1 + cos(pi s)) crosses g = J at unit
    rate |d(g/J)/dt| = 1/tau_q when the total duration is set to
    pi * tau_q * g_max / 2.  The flat ends suppress the power-law
    excitation tails that an abrupt ramp start/stop would add on top of
    the Landau-Zener exponential.
    """
    s = np.linspace(0.0, 1.0, n)
    g = (g_max / 2.0) * (1.0 + np.cos(np.pi * s))
    duration = np.pi * tau_q * g_max / 2.0
    return model.TabulatedSchedule(s, g, np.ones_like(s), J_max=1.0,
                                   tau_q=duration)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
