import math

import numpy as np
import pytest

from crimed.corrupted_kl import delta_min, kl_eps_gauss
from crimed.environments import ArmModel, BanditInstance, CorruptionChannel, Gaussian, make_rng, preset_instance
from crimed.errors import DomainError
from crimed.simulator import default_checkpoints, lower_bound_report, monte_carlo, run, worker_count


def clean_setting1():
    return BanditInstance(tuple(ArmModel(m, 0.5) for m in (0.8, 0.9, 1.0)),
                          tuple(CorruptionChannel() for _ in range(3)), "clean")


class TestRun:
    def test_single_arm(self):
        inst = BanditInstance((ArmModel(0.0),), (CorruptionChannel(0.1, Gaussian(5.0)),))
        trace = run(inst, "crimed_star", 500, 0)
        assert np.all(trace.regret == 0.0) and trace.counts == [500]

    @pytest.mark.parametrize("name", ["crimed", "crimed_star", "imed", "med_ucb"])
    def test_conservation_and_identity(self, name):
        inst = preset_instance("setting2")
        cps = [10, 100, 777, 3000]
        trace = run(inst, name, 3000, 5, cps, record=True)
        assert sum(trace.counts) == 3000
        assert np.bincount(trace.arms, minlength=3).tolist() == trace.counts
        gaps = np.array(inst.gaps)
        for i, cp in enumerate(cps):
            assert trace.regret[i] == pytest.approx(gaps[trace.arms[:cp]].sum(), abs=1e-9)
            assert trace.realized_regret[i] == pytest.approx(
                np.sum(inst.best_mean - trace.rewards[:cp]), abs=1e-8)
        assert np.all(np.diff(trace.regret) >= 0)
        assert trace.final_regret == pytest.approx(sum(n * g for n, g in zip(trace.counts, inst.gaps)))

    def test_same_seed_same_trace(self):
        inst = preset_instance("setting3")
        a = run(inst, "crimed", 2000, 3, record=True)
        b = run(inst, "crimed", 2000, 3, record=True)
        assert np.array_equal(a.observations, b.observations) and np.array_equal(a.arms, b.arms)

    def test_horizon_too_short(self):
        with pytest.raises(DomainError):
            run(preset_instance("setting1"), "crimed", 100, 0)

    def test_policy_never_sees_truth(self):
        # a corrupted observation replaces the reward in what the learner stores
        inst = BanditInstance((ArmModel(0.0), ArmModel(1.0)),
                              (CorruptionChannel(0.4, Gaussian(50.0, 0.1)), CorruptionChannel()))
        trace = run(inst, "imed", 400, 1, record=True)
        hit = trace.corrupted
        assert hit.any() and np.all(trace.observations[hit] > 40)

    def test_imed_sublinear_without_corruption(self):
        summary = monte_carlo(clean_setting1(), "imed", 10_000, 20, 0, [5000, 10_000])
        ratio = (summary.regret_at(10_000) / 1e4) / (summary.regret_at(5000) / 5e3)
        assert ratio <= 0.6


class TestCheckpoints:
    def test_default(self):
        cps = default_checkpoints(10_000)
        assert cps[0] == 1 and cps[-1] == 10_000 and cps == sorted(set(cps))
        assert 60 <= len(cps) <= 100

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            run(preset_instance("setting1"), "imed", 100, 0, [0, 50])


class TestMonteCarlo:
    def test_percentiles_match_naive(self):
        inst = preset_instance("setting2")
        cps = [100, 1000]
        s = monte_carlo(inst, "imed", 1000, 21, 9, cps)
        finals = np.sort([run(inst, "imed", 1000, make_rng(9, r), cps).final_regret for r in range(21)])
        assert np.array_equal(np.sort(s.final_regrets), finals)
        # numpy's default percentile is linear interpolation at rank p (n - 1)
        rank = 0.95 * 20
        lo = int(math.floor(rank))
        naive = finals[lo] + (rank - lo) * (finals[min(lo + 1, 20)] - finals[lo])
        assert s.p95[-1] == pytest.approx(naive)
        assert s.p5[-1] == pytest.approx(finals[1])
        assert s.mean_regret[-1] == pytest.approx(finals.mean())

    def test_single_rep_band(self):
        s = monte_carlo(preset_instance("setting1"), "imed", 500, 1, 0)
        assert np.array_equal(s.p5, s.mean_regret) and np.array_equal(s.p95, s.mean_regret)

    def test_parallel_equals_serial(self):
        inst = preset_instance("setting3")
        serial = monte_carlo(inst, "crimed_star", 800, 6, 2, workers=1)
        parallel = monte_carlo(inst, "crimed_star", 800, 6, 2, workers=3)
        for name in ("mean_regret", "p5", "p95", "final_regrets", "mean_realized_regret", "mean_counts"):
            assert np.array_equal(getattr(serial, name), getattr(parallel, name)), name
        assert serial.checkpoints == parallel.checkpoints

    def test_zero_reps(self):
        with pytest.raises(DomainError):
            monte_carlo(preset_instance("setting1"), "imed", 100, 0, 0)

    def test_worker_cap(self, monkeypatch):
        monkeypatch.setenv("CRIMED_THREADS", "2")
        assert worker_count(8) == 2
        monkeypatch.delenv("CRIMED_THREADS")
        assert worker_count(3) == 3


class TestLowerBound:
    def test_setting2(self):
        rep = lower_bound_report(preset_instance("setting2"))
        assert rep.slopes[2] is None
        assert rep.standardized_gaps[:2] == pytest.approx((0.4, 0.2))
        assert rep.slopes[0] == pytest.approx(1 / kl_eps_gauss(0, 0.4, 0.01))
        assert rep.slopes[1] == pytest.approx(1 / kl_eps_gauss(0, 0.2, 0.01))
        assert all(math.isfinite(s) for s in rep.slopes[:2])
        assert rep.regret_coefficient == pytest.approx(0.2 * rep.slopes[0] + 0.1 * rep.slopes[1])

    def test_gap_at_threshold(self):
        sigma, eps = 0.5, 0.1
        gap = delta_min(eps) * sigma
        inst = BanditInstance((ArmModel(0.0, sigma), ArmModel(gap, sigma)),
                              (CorruptionChannel(), CorruptionChannel()))
        rep = lower_bound_report(inst, eps)
        assert rep.slopes[0] == math.inf and rep.slopes[1] is None
