"""Local training loops, update-count derivation, and schedules."""

import numpy as np
import pytest

from hetsgd.core import RngStream
from hetsgd.data import make_synthetic, SyntheticSpec
from hetsgd.models import Batch, ModelSpec, backward, init_params
from hetsgd.workers import (LrSchedule, SystemProfile, WorkerSpec, derive_tau_s,
                            local_train, lr_at, measure_alpha)


@pytest.fixture
def tiny_task():
    ds = make_synthetic(SyntheticSpec(n=64, input_dim=2, num_classes=2, separation=4.0),
                        RngStream(0, 0))
    spec = ModelSpec("logistic_regression", 2, 2)
    params = init_params(spec, RngStream(0, 1))
    return spec, params, ds


class TestDeriveTauS:
    def test_half_speed(self):
        assert derive_tau_s(32, 2.0) == 16

    def test_extreme_ratio_floors_at_one(self):
        assert derive_tau_s(32, 33.0) == 1

    def test_homogeneous_is_identity(self):
        assert derive_tau_s(32, 1.0) == 32

    def test_rounding_half_up(self):
        assert derive_tau_s(32, 12.8) == 3  # 2.5 rounds up

    def test_alpha_below_one_rejected(self):
        with pytest.raises(ValueError, match="alpha"):
            derive_tau_s(32, 0.5)


class TestMeasureAlpha:
    def test_measured_iteration_times(self):
        got = measure_alpha([0.1940], [6.5230])
        assert got == pytest.approx(33.62, abs=0.01)

    def test_equal_means(self):
        assert measure_alpha([0.3, 0.5], [0.4, 0.4]) == pytest.approx(1.0)

    def test_two_sample_means(self):
        assert measure_alpha([0.1, 0.3], [0.4, 0.4]) == pytest.approx(2.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="measurement"):
            measure_alpha([], [0.1])


class TestSystemProfile:
    def test_tau_s_derived(self):
        prof = SystemProfile(alpha=4.0, p_s=1, p_f=2, lam=2.0, tau_f=32)
        assert prof.tau_s == 8
        assert prof.num_workers == 3

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError, match="sampler_mode"):
            SystemProfile(alpha=1.0, p_s=1, p_f=1, lam=1.0, tau_f=1, sampler_mode="greedy")


class TestLocalTrain:
    def test_single_full_batch_step_equals_one_gradient_step(self, tiny_task):
        spec, params, ds = tiny_task
        assigned = np.arange(ds.n)
        lr = 0.3
        end, ids, losses, steps = local_train(spec, params, ds, assigned, tau=1,
                                              lr=lr, batch_size=ds.n,
                                              stream=RngStream(1, 0))
        # same permuted batch, explicitly unrolled
        perm = RngStream(1, 0).permutation(ds.n)
        batch = Batch(ds.features[assigned[perm]], ds.labels[assigned[perm]], assigned[perm])
        expected = params - lr * backward(spec, params, batch)
        np.testing.assert_array_equal(end, expected)
        assert steps == 1
        assert ids.size == ds.n

    def test_zero_lr_keeps_params_but_records_losses(self, tiny_task):
        spec, params, ds = tiny_task
        end, ids, losses, _ = local_train(spec, params, ds, np.arange(ds.n), tau=3,
                                          lr=0.0, batch_size=16, stream=RngStream(2, 0))
        np.testing.assert_array_equal(end, params)
        assert ids.size == 3 * 16
        assert np.all(losses >= 0)

    def test_three_steps_match_hand_unrolled_oracle(self, tiny_task):
        spec, params, ds = tiny_task
        assigned = np.arange(20)
        lr, bs = 0.2, 8
        end, _, _, _ = local_train(spec, params, ds, assigned, tau=3, lr=lr,
                                   batch_size=bs, stream=RngStream(3, 0))
        # unroll with identical stream and the same boundary policy: a short
        # batch finishes the epoch, then the permutation is redrawn
        stream = RngStream(3, 0)
        order = assigned[stream.permutation(20)]
        pos = 0
        p = params.copy()
        for _ in range(3):
            if pos >= order.size:
                order = assigned[stream.permutation(20)]
                pos = 0
            ids = order[pos:pos + bs]
            pos += ids.size
            batch = Batch(ds.features[ids], ds.labels[ids], ids)
            p = p - lr * backward(spec, p, batch)
        np.testing.assert_array_equal(end, p)

    def test_cycles_with_reshuffle_when_budget_exceeds_assignment(self, tiny_task):
        spec, params, ds = tiny_task
        assigned = np.arange(10)
        end, ids, _, _ = local_train(spec, params, ds, assigned, tau=5, lr=0.1,
                                     batch_size=4, stream=RngStream(4, 0))
        assert ids.size == 5 * 4 - 2  # one short batch of 2 at the epoch boundary
        assert set(ids.tolist()) == set(range(10))  # full coverage each epoch

    def test_reproducible(self, tiny_task):
        spec, params, ds = tiny_task
        r1 = local_train(spec, params, ds, np.arange(30), 4, 0.1, 8, RngStream(5, 0))
        r2 = local_train(spec, params, ds, np.arange(30), 4, 0.1, 8, RngStream(5, 0))
        np.testing.assert_array_equal(r1[0], r2[0])
        np.testing.assert_array_equal(r1[1], r2[1])
        np.testing.assert_array_equal(r1[2], r2[2])

    def test_weight_decay_applied_after_gradient(self, tiny_task):
        spec, params, ds = tiny_task
        assigned = np.arange(ds.n)
        lr, wd = 0.3, 0.01
        end, _, _, _ = local_train(spec, params, ds, assigned, 1, lr, ds.n,
                                   RngStream(6, 0), weight_decay=wd)
        perm = RngStream(6, 0).permutation(ds.n)
        batch = Batch(ds.features[perm], ds.labels[perm], perm)
        expected = params - lr * (backward(spec, params, batch) + wd * params)
        np.testing.assert_array_equal(end, expected)

    def test_empty_assignment_rejected(self, tiny_task):
        spec, params, ds = tiny_task
        with pytest.raises(ValueError, match="empty"):
            local_train(spec, params, ds, np.array([], dtype=int), 1, 0.1, 4,
                        RngStream(0, 0))

    def test_loss_records_newest_last(self, tiny_task):
        spec, params, ds = tiny_task
        # tau large enough to revisit samples; last occurrence must reflect
        # the most recent forward pass
        _, ids, losses, _ = local_train(spec, params, ds, np.arange(8), 4, 0.5, 8,
                                        RngStream(7, 0))
        last = {}
        for i, l in zip(ids.tolist(), losses.tolist()):
            last[i] = l
        # replay: the final recorded value for each id comes from its last batch
        seen_order = list(zip(ids.tolist(), losses.tolist()))
        for i, l in last.items():
            assert (i, l) in seen_order[-16:]  # within the last two batches


class TestWorkerSpec:
    def test_validation(self):
        with pytest.raises(ValueError, match="role"):
            WorkerSpec(0, "medium", 1, 0.1, 32)
        with pytest.raises(ValueError, match="tau"):
            WorkerSpec(0, "fast", 0, 0.1, 32)
        with pytest.raises(ValueError, match="iter_cost"):
            WorkerSpec(0, "fast", 1, 0.0, 32)


class TestLrSchedules:
    def test_constant(self):
        s = LrSchedule("constant", 0.1)
        assert lr_at(s, 0) == lr_at(s, 999) == 0.1

    def test_multistep_table_value(self):
        s = LrSchedule("multistep", 0.1, milestones=(60, 80))
        assert lr_at(s, 0) == pytest.approx(0.1)
        assert lr_at(s, 59) == pytest.approx(0.1)
        assert lr_at(s, 60) == pytest.approx(0.01)
        assert lr_at(s, 70) == pytest.approx(0.01)
        assert lr_at(s, 80) == pytest.approx(0.001)

    def test_cosine_endpoints(self):
        s = LrSchedule("cosine", 0.2, total_rounds=100)
        assert lr_at(s, 0) == pytest.approx(0.2)
        assert lr_at(s, 50) == pytest.approx(0.1, abs=1e-12)

    def test_cosine_horizon_enforced(self):
        s = LrSchedule("cosine", 0.2, total_rounds=10)
        with pytest.raises(ValueError, match="horizon"):
            lr_at(s, 10)

    def test_milestones_must_increase(self):
        with pytest.raises(ValueError, match="increasing"):
            LrSchedule("multistep", 0.1, milestones=(80, 60))

    def test_positive_everywhere(self):
        s = LrSchedule("cosine", 1.0, total_rounds=50)
        assert all(lr_at(s, r) > 0 for r in range(50))
