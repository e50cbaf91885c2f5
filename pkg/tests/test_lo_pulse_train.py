import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polattack.errors import ConfigError, DomainError, IdentificationError
from polattack.lo_pulse_train import (
    CompensationConfig,
    PulsePolarization,
    PulseTrain,
    compensate,
    cycle_corrections,
    identify_reference_pulses,
    inject_attack,
    make_probe_oracle,
    make_train,
    probe_bound,
    required_compensation_rate,
    simulate_drift,
    wrap_orientation,
)


class Counted:
    def __init__(self, f):
        self.f = f
        self.calls = 0

    def __call__(self, subset):
        self.calls += 1
        return self.f(subset)


def set_oracle(refs):
    refs = set(refs)
    return Counted(lambda s: bool(refs & set(s)))


class TestRate:
    def test_values(self):
        assert required_compensation_rate(34, 1e-5) == pytest.approx(3.4e6)
        assert required_compensation_rate(34, 1e-4) == pytest.approx(340e3)

    def test_large_threshold(self):
        assert required_compensation_rate(34, 1e12) < 1e-10

    def test_domain(self):
        with pytest.raises(DomainError):
            required_compensation_rate(0, 1e-5)
        with pytest.raises(DomainError):
            required_compensation_rate(34, -1)


class TestTypes:
    def test_linear_only(self):
        with pytest.raises(DomainError):
            PulsePolarization(0.1, 0.2)
        with pytest.raises(DomainError):
            PulsePolarization(2.0)

    @pytest.mark.parametrize("kw", [dict(reference_count=0), dict(reference_count=17),
                                    dict(drift_threshold=0), dict(repetition_rate=0),
                                    dict(drift_mode="chaotic"), dict(reference_positions=(1, 1))])
    def test_config_invariants(self, kw):
        with pytest.raises(ConfigError):
            CompensationConfig(**kw)

    def test_placements(self):
        assert CompensationConfig(16, 4).reference_indices().tolist() == [0, 1, 2, 3]
        assert CompensationConfig(16, 4, placement="spread").reference_indices().tolist() == [0, 4, 8, 12]
        assert CompensationConfig(16, 2, reference_positions=(9, 3)).reference_indices().tolist() == [3, 9]

    def test_train_reference_sets(self):
        cfg = CompensationConfig(8, 3, placement="spread")
        train = make_train(4, cfg)
        for j in range(4):
            assert train.reference_set(j) == set(cfg.reference_indices().tolist())

    def test_wrap(self):
        assert wrap_orientation(0.3) == 0.3
        assert wrap_orientation(math.pi / 2) == math.pi / 2
        assert wrap_orientation(math.pi) == pytest.approx(0.0, abs=1e-15)
        assert wrap_orientation(-math.pi / 2) == pytest.approx(math.pi / 2)


class TestDrift:
    def test_zero(self):
        cfg = CompensationConfig(drift_rate=0.0, initial_angle=0.2)
        assert np.all(simulate_drift(100, cfg) == 0.2)

    def test_linear_increment(self):
        cfg = CompensationConfig(drift_rate=34.0, repetition_rate=5e6)
        th = simulate_drift(1000, cfg)
        np.testing.assert_allclose(np.diff(th), 6.8e-6, rtol=1e-9)

    def test_random_walk_increment_std(self):
        n = 10 ** 6
        cfg = CompensationConfig(drift_rate=34.0, repetition_rate=5e6, drift_mode="random-walk")
        inc = np.diff(simulate_drift(n, cfg, seed=4))
        sd = 6.8e-6
        assert abs(inc.std() - sd) <= 3 * sd / math.sqrt(2 * (n - 1))

    def test_random_walk_deterministic(self):
        cfg = CompensationConfig(drift_mode="random-walk")
        assert np.array_equal(simulate_drift(500, cfg, 3), simulate_drift(500, cfg, 3))


class TestCompensate:
    def test_zero_drift(self):
        cfg = CompensationConfig(16, 4, drift_rate=0.0, initial_angle=0.05)
        _, res = compensate(make_train(5, cfg), cfg)
        assert np.all(res[:16] == 0.05)
        assert np.all(res[16:] == 0.0)

    def test_one_cycle_lag(self):
        theta = np.array([0.0, 0.0, 1.0, 1.0, 2.0, 2.0])
        mask = np.array([True, False] * 3)
        cfg = CompensationConfig(2, 1)
        corr = cycle_corrections(PulseTrain(theta, mask, 2), cfg)
        assert corr.tolist() == [0.0, 0.0, 1.0]

    @pytest.mark.parametrize("n,m", [(4, 1), (16, 4), (64, 8), (100, 100)])
    def test_linear_drift_bound(self, n, m):
        cfg = CompensationConfig(n, m, drift_rate=34.0, repetition_rate=5e6)
        _, res = compensate(make_train(20, cfg), cfg)
        assert np.abs(res[n:]).max() <= 2 * n * cfg.drift_per_pulse

    def test_missing_references(self):
        theta = np.zeros(8)
        mask = np.array([True, False, False, False, False, False, False, False])
        with pytest.raises(ConfigError):
            compensate(PulseTrain(theta, mask, 4), CompensationConfig(4, 1))

    def test_too_short(self):
        cfg = CompensationConfig(8, 2)
        with pytest.raises(DomainError):
            compensate(PulseTrain(np.zeros(4), np.ones(4, bool), 8), cfg)

    def test_compensated_train_carries_residuals(self):
        cfg = CompensationConfig(8, 2)
        out, res = compensate(make_train(3, cfg), cfg)
        assert np.array_equal(out.theta, res)

    def test_sweep_below_threshold(self):
        # drift per cycle below threshold*N keeps every residual under 2*threshold*N
        for mode in ("worst-case-linear", "random-walk"):
            for n, m in [(8, 1), (32, 4), (64, 64)]:
                cfg = CompensationConfig(n, m, drift_threshold=1e-5, drift_rate=40.0,
                                         repetition_rate=5e6, drift_mode=mode)
                assert cfg.drift_per_pulse < cfg.drift_threshold
                _, res = compensate(make_train(50, cfg, seed=n), cfg)
                assert np.abs(res[n:]).max() <= 2 * cfg.drift_threshold * n


class TestAttackInjection:
    def test_static_references(self):
        cfg = CompensationConfig(16, 4, drift_rate=0.0)
        train = inject_attack(make_train(4, cfg), cfg, 0.4)
        _, res = compensate(train, cfg)
        assert np.all(res[~train.reference_mask] == 0.4)
        assert np.all(res[train.reference_mask] == 0.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 64), st.data(), st.floats(0, 1.5), st.sampled_from(["worst-case-linear", "random-walk"]),
           st.floats(0, 200))
    def test_injected_angle_survives(self, n, data, angle, mode, rate):
        m = data.draw(st.integers(1, n))
        cfg = CompensationConfig(n, m, drift_rate=rate, drift_mode=mode, placement="spread")
        train = inject_attack(make_train(6, cfg, seed=n), cfg, angle)
        _, res = compensate(train, cfg)
        unmeasured = ~train.reference_mask
        np.testing.assert_allclose(res[unmeasured], angle, rtol=0, atol=1e-12)
        if mode == "worst-case-linear":
            # reference pulses after the first cycle see only the lagged drift
            ref_after = res[n:][train.reference_mask[n:]]
            assert np.abs(ref_after).max() <= 2 * n * cfg.drift_per_pulse + 1e-15

    def test_start_cycle(self):
        cfg = CompensationConfig(8, 2, drift_rate=0.0)
        train = inject_attack(make_train(4, cfg), cfg, 0.3, start_cycle=2)
        _, res = compensate(train, cfg)
        assert np.all(res[:16] == 0.0)
        assert np.all(res[16:][~train.reference_mask[16:]] == 0.3)


class TestIdentify:
    def test_single_reference(self):
        oracle = set_oracle({5})
        assert identify_reference_pulses(oracle, 16, 1) == {5}
        assert oracle.calls <= 9

    def test_matches_exhaustive_scan(self):
        oracle = set_oracle({5})
        scan = {i for i in range(16) if oracle([i])}
        assert identify_reference_pulses(set_oracle({5}), 16, 1) == scan

    def test_all_references_one_probe(self):
        oracle = set_oracle(range(12))
        assert identify_reference_pulses(oracle, 12, 12) == set(range(12))
        assert oracle.calls == 1

    def test_declared_zero(self):
        with pytest.raises(IdentificationError):
            identify_reference_pulses(Counted(lambda s: False), 16, 0)

    def test_silent_oracle(self):
        with pytest.raises(IdentificationError):
            identify_reference_pulses(Counted(lambda s: False), 16, 2)
        with pytest.raises(IdentificationError):
            identify_reference_pulses(Counted(lambda s: False), 16)

    def test_blind_search(self):
        oracle = set_oracle({1, 7, 30})
        assert identify_reference_pulses(oracle, 32) == {1, 7, 30}

    @settings(max_examples=200)
    @given(st.integers(1, 64), st.data())
    def test_probe_budget(self, n, data):
        refs = data.draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n))
        oracle = set_oracle(refs)
        assert identify_reference_pulses(oracle, n, len(refs)) == refs
        assert oracle.calls <= probe_bound(n, len(refs))

    def test_simulated_loop_oracle(self):
        cfg = CompensationConfig(16, 3, reference_positions=(2, 9, 13), drift_mode="random-walk")
        train = make_train(3, cfg, seed=1)
        oracle = Counted(make_probe_oracle(train, cfg))
        assert oracle([2]) and not oracle([0, 1, 3, 4])
        assert identify_reference_pulses(oracle, 16, 3) == {2, 9, 13}

    def test_oracle_needs_following_cycle(self):
        cfg = CompensationConfig(8, 2)
        with pytest.raises(DomainError):
            make_probe_oracle(make_train(2, cfg), cfg, probe_cycle=1)
