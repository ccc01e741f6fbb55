"""Path-enumeration reference vs the recursive evolver.

The enumeration and the evolver implement the same process through different
mechanisms (sum over 2^t decision strings vs slice recursion), so entrywise
agreement is the strongest internal consistency check available.
"""

import numpy as np
import pytest

from entwine.evolver import evolve
from entwine.lattice import SimConfig
from entwine.oracle import T_MAX_GUARD, enumerate_exact


@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5, 0.75, 1.0])
@pytest.mark.parametrize("t_max", [0, 1, 2, 5, 10])
def test_matches_evolver(alpha, t_max):
    oracle = enumerate_exact(alpha, t_max)
    reference = evolve(SimConfig(alpha=alpha, t_ret=max(t_max, 1)), t_max)
    assert np.abs(oracle.data - reference.data).max() <= 1e-12


def test_matches_evolver_irrational_alpha():
    alpha = 1 / np.sqrt(7)
    oracle = enumerate_exact(alpha, 8)
    reference = evolve(SimConfig(alpha=alpha, t_ret=8))
    assert np.abs(oracle.data - reference.data).max() <= 1e-12


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9])
def test_first_step_mass_split(alpha):
    # before any second scatter no charge can flip, so the t = 1 slice is a
    # clean probability split: (1 - alpha) stays committed, alpha scatters
    f = enumerate_exact(alpha, 1)
    assert f.get(1, 1, -1) == pytest.approx(-(1 - alpha), abs=1e-15)
    assert f.get(2, 1, -1) == pytest.approx(-alpha, abs=1e-15)
    assert f.get(3, 1, 1) == pytest.approx(alpha, abs=1e-15)
    assert f.get(4, 1, 1) == pytest.approx(1 - alpha, abs=1e-15)


def test_ballistic_mass_preserved():
    g = enumerate_exact(0.0, 4)
    assert g.get(4, 4, 4) == 1.0
    assert g.get(1, 4, -4) == -1.0


def test_guard_rejects_large_t():
    with pytest.raises(ValueError):
        enumerate_exact(0.5, T_MAX_GUARD + 1)


@pytest.mark.parametrize("alpha", [-0.01, 1.01])
def test_alpha_validation(alpha):
    with pytest.raises(ValueError):
        enumerate_exact(alpha, 3)


def test_negative_t_rejected():
    with pytest.raises(ValueError):
        enumerate_exact(0.5, -1)
