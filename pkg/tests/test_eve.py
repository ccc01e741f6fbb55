"""Entwined-pair construction against an independent chain-sum oracle.

The oracle below recomputes the expected per-pair deposit field by exact
enumeration over rhombus chains instead of by walking tapes.  A chain state
is a junction (T, Z, e): the bottom touch point of the next rhombus and its
orientation (which strand runs on the right side).  From a junction the two
gap lengths (a, b) are independent geometrics; the rhombus closes the pair
iff its top reaches t_ret, else the chain continues with flipped
orientation.  Gaps of at least t_ret - T + 1 produce identical capped
deposits and always close, so their geometric tails are lumped into a single
branch, making the enumeration exact with no truncation error.
"""

import json

import numpy as np
import pytest

from entwine.errors import InternalCheckError
from entwine.evolver import evolve
from entwine.lattice import SimConfig, normalize
from entwine.rng import make_stream
from entwine.sampler import (DecisionEngine, EntwinedPair, accumulate_pair,
                             build_entwined_pair, extract_envelopes,
                             sample_ensemble)


def _deposit(exp, T, Z, p, q, e, w, cap, off):
    """Add one rhombus's capped link deposits with chain weight w.

    Right side runs p links up then q down with colour e; left side q down
    then p up with colour -e.  Field by (side, link direction): right
    up -> 4, right down -> 3, left up -> 2, left down -> 1.
    """
    for t in range(T, min(T + p + q - 1, cap) + 1):
        k = t - T
        if k < p:
            zr, up_r = Z + k, True
        else:
            zr, up_r = Z + p - (k - p), False
        exp[3 if up_r else 2, t, zr + off] += w * e
        if k < q:
            zl, up_l = Z - k, False
        else:
            zl, up_l = Z - q + (k - q), True
        exp[1 if up_l else 0, t, zl + off] += w * (-e)


def eve_expected_fields(alpha, t_ret):
    """Exact expected per-pair deposits of the entwined-pair sampler."""
    off = t_ret
    exp = np.zeros((4, t_ret + 1, 2 * t_ret + 1))
    closed = 0.0
    states = {(0, 0, +1): 1.0}
    while states:
        nxt: dict = {}
        for (T, Z, e), reach in states.items():
            A = t_ret - T + 1  # gaps >= A: capped deposits constant, always close
            for a in range(1, A + 1):
                wa = (1 - alpha) ** (a - 1) * alpha if a < A \
                    else (1 - alpha) ** (A - 1)
                for b in range(1, A + 1):
                    wb = (1 - alpha) ** (b - 1) * alpha if b < A \
                        else (1 - alpha) ** (A - 1)
                    w = reach * wa * wb
                    if w == 0.0:
                        continue
                    top = T + a + b
                    p, q = (a, b) if e > 0 else (b, a)
                    _deposit(exp, T, Z, p, q, e, w, min(top - 1, t_ret), off)
                    if top < t_ret:
                        key = (top, Z + p - q, -e)
                        nxt[key] = nxt.get(key, 0.0) + w
                    else:
                        closed += w
    # continuing mass re-enters states; closed mass must account for all of it
        states = nxt
    assert abs(closed - 1.0) < 1e-12
    return exp


def _build(alpha, t_ret, seed, worker=0):
    eng = DecisionEngine(alpha, "iid", make_stream(seed, worker))
    return build_entwined_pair(eng, t_ret)


class TestChainOracle:
    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
    @pytest.mark.parametrize("t_ret", [3, 4, 6])
    def test_expected_deposits_match_evolver_below_return(self, alpha, t_ret):
        exp = eve_expected_fields(alpha, t_ret)
        exact = evolve(SimConfig(alpha=alpha, t_ret=t_ret, n_pairs=1))
        err = np.abs(exp[:, :t_ret, :] - exact.data[:, :t_ret, :]).max()
        assert err < 1e-10

    def test_merge_slice_runs_short(self):
        # pairs closing exactly at t_ret leave no departures there, so the
        # last slice systematically undershoots the evolver
        t_ret = 4
        exp = eve_expected_fields(0.5, t_ret)
        exact = evolve(SimConfig(alpha=0.5, t_ret=t_ret, n_pairs=1))
        gap = np.abs(exp[:, t_ret, :] - exact.data[:, t_ret, :]).max()
        assert gap > 1e-3

    def test_sampled_ensemble_tracks_oracle(self):
        cfg = SimConfig(alpha=0.5, t_ret=4, n_pairs=40000, mode="iid",
                        seed=11, workers=1, sampler="eve")
        est = normalize(sample_ensemble(cfg)).data
        exp = eve_expected_fields(0.5, 4)
        # all slices, merge slice included: the oracle models the sampler
        assert np.abs(est - exp).max() < 0.04


class TestFrozenPair:
    """alpha = 1 scatters every step: the pair is fully deterministic."""

    def test_geometry(self):
        pair = _build(1.0, 3, seed=0)
        assert pair.forward_z.tolist() == [0, 1, 0, -1, 0]
        assert pair.ret_z.tolist() == [0, -1, 0, 1, 0]
        assert pair.markers == [(2, 0), (4, 0)]
        assert pair.t_star == 4 and pair.z_star == 0

    def test_envelopes_and_colours(self):
        left, right = extract_envelopes(_build(1.0, 3, seed=0))
        assert right.z.tolist() == [0, 1, 0, 1, 0]
        assert left.z.tolist() == [0, -1, 0, -1, 0]
        # strand ownership swaps at the interior junction t = 2
        assert right.colour.tolist() == [1, 1, -1, -1]
        assert left.colour.tolist() == [-1, -1, 1, 1]
        assert right.link_directions().tolist() == [1, -1, 1, -1]

    def test_deposits_reproduce_exact_fields(self):
        cfg = SimConfig(alpha=1.0, t_ret=3, n_pairs=7, mode="iid",
                        seed=0, workers=1, sampler="eve")
        sample = sample_ensemble(cfg)
        exact = evolve(cfg)
        assert np.array_equal(sample.data, (7 * exact.data).astype(np.int64))


class TestPairProperties:
    ALPHAS = [0.3, 0.5, 0.9]

    def pairs(self, t_ret=6, n=120):
        for alpha in self.ALPHAS:
            for seed in range(n):
                yield build_entwined_pair(
                    DecisionEngine(alpha, "iid", make_stream(seed, 0)), t_ret)

    def test_closure_and_markers(self):
        t_ret = 6
        for pair in self.pairs(t_ret):
            f, r = pair.forward_z, pair.ret_z
            assert f[0] == r[0] == 0
            assert f[-1] == r[-1] == pair.z_star
            assert pair.t_star >= t_ret
            assert pair.markers[-1] == (pair.t_star, pair.z_star)
            for (t, zm) in pair.markers[:-1]:
                assert t < t_ret
            for (t, zm) in pair.markers:
                assert f[t] == zm and r[t] == zm

    def test_light_cone_and_steps(self):
        for pair in self.pairs():
            for strand in (pair.forward_z, pair.ret_z):
                assert np.all(np.abs(np.diff(strand)) == 1)
                t = np.arange(strand.size)
                assert np.all(np.abs(strand) <= t)

    def test_envelopes_bound_strands(self):
        for pair in self.pairs():
            left, right = extract_envelopes(pair)
            f, r = pair.forward_z, pair.ret_z
            assert np.array_equal(right.z, np.maximum(f, r))
            assert np.array_equal(left.z, np.minimum(f, r))
            assert np.all(np.abs(np.diff(right.z)) == 1)
            assert np.all(np.abs(np.diff(left.z)) == 1)
            # strands touch exactly at the markers and the seed
            touch = {int(t) for t in np.nonzero(f == r)[0]}
            assert touch == {0} | {t for t, _ in pair.markers}

    def test_colour_flips_at_every_second_corner(self):
        for pair in self.pairs():
            for env in extract_envelopes(pair):
                dz = np.diff(env.z)
                corners = [t for t in range(1, dz.size)
                           if dz[t] != dz[t - 1]]
                flips = [t for t in range(1, env.colour.size)
                         if env.colour[t] != env.colour[t - 1]]
                assert flips == corners[1::2]

    def test_seed_colours(self):
        for pair in self.pairs():
            left, right = extract_envelopes(pair)
            assert right.colour[0] == 1 and left.colour[0] == -1


class TestGuardsAndTrace:
    def test_alpha_zero_rejected(self):
        with pytest.raises(ValueError):
            build_entwined_pair(DecisionEngine(0.0, "iid", make_stream(0, 0)), 4)

    def test_t_ret_validation(self):
        with pytest.raises(ValueError):
            build_entwined_pair(DecisionEngine(0.5, "iid", make_stream(0, 0)), 0)

    def test_degenerate_strands_rejected(self):
        f = np.array([0, 1, 0])
        bad = EntwinedPair(f, f.copy(), [(2, 0)])
        with pytest.raises(InternalCheckError):
            extract_envelopes(bad)

    @pytest.mark.parametrize("workers", [1, 2])
    def test_trace_lines(self, tmp_path, workers):
        path = tmp_path / "pairs.jsonl"
        cfg = SimConfig(alpha=0.5, t_ret=5, n_pairs=30, mode="iid",
                        seed=3, workers=workers, sampler="eve")
        sample_ensemble(cfg, trace_file=path)
        lines = [json.loads(x) for x in path.read_text().splitlines()]
        assert {rec["pair"] for rec in lines} == set(range(30))
        for rec in lines:
            assert rec["forward"][0] == [0, 0]
            assert rec["ret"][-1] == [0, 0]
            assert rec["forward"][-1][0] >= 5
            assert rec["markers"][-1] == rec["forward"][-1]
