"""Exact evolution: hand-derived slices, symmetries, conserved quantities.

The spot values below were worked out by hand from the four update rules
before the evolver existed, so they pin the sign/geometry conventions
independently of the code under test.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entwine.evolver import EvolverState, evolve, slice_sums, step, step_dense
from entwine.lattice import SimConfig, on_parity


def fields_at(alpha, steps):
    return evolve(SimConfig(alpha=alpha, t_ret=max(steps, 1)), steps)


class TestHandValues:
    # alpha = 1/2, seed phi4(0) = +1, phi1(0) = -1:
    #   t=1: phi3(1) = a*phi4(0) = 1/2;  phi4(1) = (1-a)*phi4(0) = 1/2
    #        phi1(-1) = (1-a)*phi1(0) = -1/2;  phi2(-1) = a*phi1(0) = -1/2
    #   t=2: phi4(0) = (1-a)*phi4(-1) - a*phi3(1) = -1/4
    #        phi1(0) = -a*phi2(-1) = +1/4;  phi3(0) = (1-a)*phi3(1) = 1/4

    def test_half_alpha_t1(self):
        f = fields_at(0.5, 1)
        assert f.get(3, 1, 1) == pytest.approx(0.5, abs=1e-15)
        assert f.get(4, 1, 1) == pytest.approx(0.5, abs=1e-15)
        assert f.get(1, 1, -1) == pytest.approx(-0.5, abs=1e-15)
        assert f.get(2, 1, -1) == pytest.approx(-0.5, abs=1e-15)

    def test_half_alpha_t2(self):
        f = fields_at(0.5, 2)
        assert f.get(4, 2, 0) == pytest.approx(-0.25, abs=1e-15)
        assert f.get(1, 2, 0) == pytest.approx(0.25, abs=1e-15)
        assert f.get(3, 2, 0) == pytest.approx(0.25, abs=1e-15)
        assert f.get(3, 2, 2) == pytest.approx(0.25, abs=1e-15)
        assert f.get(1, 2, -2) == pytest.approx(-0.25, abs=1e-15)

    def test_alpha_zero_ballistic(self):
        f = fields_at(0.0, 6)
        for t in range(7):
            assert f.get(4, t, t) == 1.0
            assert f.get(1, t, -t) == -1.0
        assert np.count_nonzero(f.data) == 14

    def test_alpha_one_zigzag(self):
        f = fields_at(1.0, 4)
        # everything scatters each step: weight hops between field pairs
        assert f.get(3, 1, 1) == 1.0 and f.get(4, 1, 1) == 0.0
        assert f.get(4, 2, 0) == -1.0 and f.get(3, 2, 0) == 0.0
        assert f.get(2, 1, -1) == -1.0 and f.get(1, 1, -1) == 0.0
        assert f.get(1, 2, 0) == 1.0


class TestStructure:
    @pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5, 0.9, 1.0])
    def test_support_and_parity(self, alpha):
        f = fields_at(alpha, 8)
        for t in range(9):
            for z in f.z_values():
                if not on_parity(t, z):
                    assert all(f.get(i, t, z) == 0.0 for i in (1, 2, 3, 4)), (t, z)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.75])
    def test_mirror_antisymmetry(self, alpha):
        # z -> -z exchanges the two seed systems with a sign flip:
        # phi1(t, z) = -phi4(t, -z) and phi2(t, z) = -phi3(t, -z).
        f = fields_at(alpha, 10)
        p1, p2, p3, p4 = (f.data[i] for i in range(4))
        assert np.allclose(p1, -p4[:, ::-1], atol=1e-14)
        assert np.allclose(p2, -p3[:, ::-1], atol=1e-14)

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
    def test_slice_sum_recursion(self, alpha):
        # zeroth moments rotate-contract: S1' = (1-a)S1 - aS2, etc.
        f = fields_at(alpha, 12)
        b = 1.0 - alpha
        for t in range(12):
            s = slice_sums(f, t)
            s_next = slice_sums(f, t + 1)
            expected = np.array([
                b * s[0] - alpha * s[1],
                alpha * s[0] + b * s[1],
                b * s[2] + alpha * s[3],
                -alpha * s[2] + b * s[3],
            ])
            assert np.allclose(s_next, expected, atol=1e-13)

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
    def test_moment_contraction_exact(self, alpha):
        # (S1^2 + S2^2) and the slice-wise sum of squares both contract by
        # ((1-a)^2 + a^2) per step, exactly.
        f = fields_at(alpha, 16)
        factor = (1 - alpha) ** 2 + alpha ** 2
        s = slice_sums(f, 0)
        m0 = s[0] ** 2 + s[1] ** 2
        q0 = float((f.data[0, 0] ** 2 + f.data[1, 0] ** 2).sum())
        for t in range(1, 17):
            s = slice_sums(f, t)
            assert s[0] ** 2 + s[1] ** 2 == pytest.approx(m0 * factor ** t, rel=1e-12)
            q = float((f.data[0, t] ** 2 + f.data[1, t] ** 2).sum())
            assert q == pytest.approx(q0 * factor ** t, rel=1e-12)


class TestStepMechanics:
    def test_step_advances_index(self):
        state = EvolverState(np.zeros((4, 5)), 3, 0.5)
        assert step(state).n == 4

    def test_step_dense_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            step_dense(np.zeros((3, 5)), 0.5)

    def test_negative_steps_rejected(self):
        with pytest.raises(ValueError):
            evolve(SimConfig(alpha=0.5), -1)

    def test_history_matches_manual_stepping(self):
        cfg = SimConfig(alpha=0.3, t_ret=6)
        f = evolve(cfg)
        state = EvolverState(f.data[:, 0, :].copy(), 0, 0.3)
        for t in range(1, 7):
            state = step(state)
            assert np.array_equal(state.slice4, f.data[:, t, :])

    @given(alpha=st.floats(0.0, 1.0),
           seed=st.integers(0, 2**31),
           scale=st.floats(-3.0, 3.0))
    @settings(max_examples=60, deadline=None)
    def test_step_dense_linear(self, alpha, seed, scale):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(4, 9))
        y = rng.normal(size=(4, 9))
        lhs = step_dense(x + scale * y, alpha)
        rhs = step_dense(x, alpha) + scale * step_dense(y, alpha)
        assert np.allclose(lhs, rhs, atol=1e-12)
