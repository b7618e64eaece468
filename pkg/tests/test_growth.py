import copy
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpzlab import _engine_py, growth


def rows(cfg):
    return [r.tolist() for r in cfg.levels]


class TestInitPacked:
    def test_packed_rows(self):
        cfg = growth.init_packed(3, 2)
        assert rows(cfg) == [[-1], [-2, -1], [-3, -2, -1]]
        assert cfg.clock == 0.0

    def test_single_particle(self):
        assert rows(growth.init_packed(1, 1)) == [[-1]]

    def test_m0_beyond_levels(self):
        cfg = growth.init_packed(2, 5)
        assert rows(cfg) == [[-1], [-2, -1]]
        assert cfg.n_slow == cfg.n_particles  # all slow

    @pytest.mark.parametrize("M,m0", [(0, 1), (1, 0), (0, 0)])
    def test_invalid_parameters(self, M, m0):
        with pytest.raises(ValueError):
            growth.init_packed(M, m0)


class TestAttemptJump:
    def test_blocked_by_lower_level(self):
        cfg = growth.init_packed(3, 2)
        out = growth.attempt_jump(cfg, 2, 1)
        assert out.kind == "blocked"
        assert out.moved_chain == []
        assert rows(cfg) == [[-1], [-2, -1], [-3, -2, -1]]

    def test_push_chain_from_level_one(self):
        cfg = growth.init_packed(3, 2)
        out = growth.attempt_jump(cfg, 1, 1)
        assert out.kind == "moved"
        assert out.moved_chain == [(1, 1), (2, 2), (3, 3)]
        assert rows(cfg) == [[0], [-2, 0], [-3, -2, 0]]

    def test_second_jump_shorter_chain(self):
        cfg = growth.init_packed(3, 2)
        growth.attempt_jump(cfg, 1, 1)
        out = growth.attempt_jump(cfg, 2, 2)
        assert out.kind == "moved"
        assert out.moved_chain == [(2, 2), (3, 3)]
        assert rows(cfg) == [[0], [-2, 1], [-3, -2, 1]]

    def test_out_of_range(self):
        cfg = growth.init_packed(3, 2)
        with pytest.raises(IndexError):
            growth.attempt_jump(cfg, 4, 1)
        with pytest.raises(IndexError):
            growth.attempt_jump(cfg, 2, 3)

    def test_moves_at_most_one_step(self):
        cfg = growth.init_packed(6, 3)
        rng = growth.RngStream(3, 0)
        for _ in range(500):
            before = cfg._flat.copy()
            growth.step(cfg, rng)
            delta = cfg._flat - before
            assert delta.min() >= 0 and delta.max() <= 1


class TestStep:
    def test_total_rate(self):
        cfg = growth.init_packed(3, 3)
        assert growth.total_rate(cfg) == pytest.approx(9.0)

    def test_fast_level_selection_probability(self):
        # at M=3, m0=3 the fast level carries 6 of 9 rate units
        cfg = growth.init_packed(3, 3)
        rng = growth.RngStream(17, 0)
        hits = 0
        trials = 40000
        for _ in range(trials):
            rng.next_uniform()  # waiting-time draw
            m, _ = growth._select_particle(cfg, rng.next_uniform())
            hits += m == 3
        p = hits / trials
        assert abs(p - 2 / 3) < 4 * math.sqrt((2 / 3) * (1 / 3) / trials)

    def test_identical_streams_identical_events(self):
        c1, c2 = growth.init_packed(5, 2), growth.init_packed(5, 2)
        r1, r2 = growth.RngStream(9, 4), growth.RngStream(9, 4)
        for _ in range(200):
            e1 = growth.step(c1, r1)
            e2 = growth.step(c2, r2)
            assert e1[0] == e2[0] and e1[1] == e2[1]
        assert c1 == c2


class TestRunUntil:
    def test_zero_length_run(self):
        cfg = growth.init_packed(4, 2)
        growth.run_until(cfg, 1.0, growth.RngStream(1, 0))
        snapshot = copy.deepcopy(rows(cfg))
        growth.run_until(cfg, 1.0, growth.RngStream(2, 0))
        assert rows(cfg) == snapshot
        assert cfg.clock == 1.0

    def test_monotone_positions(self):
        cfg = growth.init_packed(10, 4)
        before = cfg._flat.copy()
        growth.run_until(cfg, 3.0, growth.RngStream(5, 0))
        assert np.all(cfg._flat >= before)

    def test_horizon_before_clock_rejected(self):
        cfg = growth.init_packed(2, 1)
        growth.run_until(cfg, 1.0, growth.RngStream(0, 0))
        with pytest.raises(ValueError):
            growth.run_until(cfg, 0.5, growth.RngStream(0, 0))

    def test_level_one_mean_displacement(self):
        # a slow, never-blocked level-1 particle: x(t) + 1 ~ Poisson(t)
        t, n = 4.0, 10000
        total = 0.0
        for rep in range(n):
            cfg = growth.init_packed(1, 2)
            growth.run_until(cfg, t, growth.RngStream(2024, rep))
            total += cfg.row(1)[0]
        mean = total / n
        stderr = math.sqrt(t / n)
        assert abs(mean - 3.0) <= 4 * stderr

    def test_matches_repeated_step_calls(self):
        horizon = 2.5
        fast = growth.init_packed(8, 3)
        growth.run_until(fast, horizon, growth.RngStream(77, 1))

        slow = growth.init_packed(8, 3)
        rng = growth.RngStream(77, 1)
        while True:
            saved = slow.copy()
            growth.step(slow, rng)
            if slow.clock > horizon:
                slow = saved
                slow.clock = horizon
                break
        assert fast == slow

    def test_compiled_and_python_engines_agree(self):
        c1, c2 = growth.init_packed(30, 10), growth.init_packed(30, 10)
        growth.run_until(c1, 4.0, growth.RngStream(42, 3))
        growth.run_until(c2, 4.0, growth.RngStream(42, 3), engine=_engine_py)
        assert c1 == c2


class TestHeightField:
    def test_initial_heights(self):
        cfg = growth.init_packed(5, 2)
        h = growth.height_field(cfg)
        for m in range(1, 6):
            assert h(-m, m) == m
            assert h(0, m) == 0

    def test_after_jump(self):
        cfg = growth.init_packed(3, 2)
        growth.attempt_jump(cfg, 1, 1)
        h = growth.height_field(cfg)
        assert h(0, 1) == 1

    def test_monotone_in_x(self):
        cfg = growth.init_packed(6, 3)
        growth.run_until(cfg, 2.0, growth.RngStream(8, 0))
        h = growth.height_field(cfg)
        for m in range(1, 7):
            vals = h.row_heights(m, np.arange(-m - 2, 20))
            assert np.all(np.diff(vals) <= 0)

    def test_config_recoverable_from_heights(self):
        cfg = growth.init_packed(7, 3)
        growth.run_until(cfg, 3.0, growth.RngStream(12, 0))
        h = growth.height_field(cfg)
        for m in range(1, 8):
            xs = np.arange(-m - 1, 40)
            vals = h.row_heights(m, xs)
            drops = xs[:-1][np.diff(vals) == -1]
            assert drops.tolist() == sorted(cfg.row(m).tolist())


class TestVerifyInterlacing:
    def test_initial_config_valid(self):
        assert growth.verify_interlacing(growth.init_packed(10, 3))

    def test_detects_equality_violation(self):
        cfg = growth.init_packed(3, 2)
        cfg.row(2)[0] = cfg.row(1)[0]  # x_1^2 = x_1^1 breaks strictness
        assert not growth.verify_interlacing(cfg)

    def test_detects_row_disorder(self):
        cfg = growth.init_packed(3, 2)
        cfg.row(3)[0] = 5
        assert not growth.verify_interlacing(cfg)

    def test_holds_along_long_run(self):
        cfg = growth.init_packed(60, 20)
        rng = growth.RngStream(0, 0)
        growth.run_until(cfg, 10.0, rng)
        assert growth.verify_interlacing(cfg)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), M=st.integers(1, 25),
       m0=st.integers(1, 30), horizon=st.floats(0.1, 5.0))
def test_interlacing_preserved_property(seed, M, m0, horizon):
    cfg = growth.init_packed(M, m0)
    growth.run_until(cfg, horizon, growth.RngStream(seed, 0))
    assert growth.verify_interlacing(cfg)
    # monotone history: no particle left of its starting point
    for m in range(1, M + 1):
        assert np.all(cfg.row(m) >= np.arange(-m, 0))


def mean_height_grid(M, m0, horizon, seeds, rate_fast=2.0, xs=None):
    xs = np.arange(-M, 3 * int(horizon) + 4) if xs is None else xs
    acc = np.zeros((M, len(xs)))
    for rep in seeds:
        cfg = growth.init_packed(M, m0, 1.0, rate_fast)
        growth.run_until(cfg, horizon, growth.RngStream(99, rep))
        h = growth.height_field(cfg)
        for m in range(1, M + 1):
            acc[m - 1] += h.row_heights(m, xs)
    return acc / len(seeds)


def test_equal_rates_make_m0_immaterial():
    a = mean_height_grid(8, 2, 3.0, range(300), rate_fast=1.0)
    b = mean_height_grid(8, 6, 3.0, range(300, 600), rate_fast=1.0)
    # distributional equality: mean fields agree within Monte Carlo error
    assert np.max(np.abs(a - b)) < 0.35

def test_truncation_marginal_consistency():
    # statistics of levels 1..M' match between truncations at M' and M > M'
    xs = np.arange(-5, 14)
    small = mean_height_grid(5, 3, 3.0, range(400), xs=xs)
    big = mean_height_grid(9, 3, 3.0, range(400, 800), xs=xs)[:5]
    assert np.max(np.abs(small - big)) < 0.35


class TestSnapshots:
    def test_json_roundtrip(self, tmp_path):
        cfg = growth.init_packed(5, 2, 1.0, 2.0)
        growth.run_until(cfg, 1.5, growth.RngStream(4, 0))
        path = tmp_path / "snap.json"
        cfg.save(path)
        back = growth.ParticleConfig.load(path)
        assert back == cfg

    def test_height_csv_schema(self, tmp_path):
        cfg = growth.init_packed(3, 2)
        path = tmp_path / "h.csv"
        growth.export_height_csv(cfg, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "x,m,h"
        x, m, h = lines[1].split(",")
        assert int(m) == 1 and int(h) in (0, 1)

    def test_bad_row_length_rejected(self):
        with pytest.raises(ValueError):
            growth.ParticleConfig.from_snapshot(
                {"clock": 0, "m0": 1, "rate_slow": 1, "rate_fast": 2,
                 "levels": [[-1], [-2]]})
