"""Base algorithms: tuning, proposals, updates, resets, lock-in pair."""

import math

import numpy as np
import pytest

from corral.bases import (
    EpochGreedy,
    Exp3,
    Exp4,
    PathologicalBase,
    ThompsonSampling,
    Ucb1,
    explore_budget,
    pathological_pair,
)
from corral.core import ConfigError, FeedbackPacket, importance_weight, named_rng

POLICIES_8 = [
    (0, 1), (0, 0), (1, 1), (2, 3), (3, 2), (1, 0), (2, 2), (3, 3),
]


def selected(raw, prob=1.0):
    return importance_weight(raw, prob, True)


def unselected(prob=0.5):
    return importance_weight(0.3, prob, False)


class TestExp3:
    def test_uniform_before_updates(self):
        b = Exp3(4, 1000, 1.0, named_rng(0, "b"))
        assert b.distribution() == pytest.approx([0.25] * 4)

    def test_rate_formula(self):
        b = Exp3(2, 1000, 1.0, named_rng(0, "b"))
        assert b.rate == pytest.approx(math.sqrt(math.log(2) / 2000.0), abs=1e-15)
        assert b.rate == pytest.approx(0.018616487055295172)

    def test_rate_scales_with_range(self):
        b = Exp3(2, 1000, 4.0, named_rng(0, "b"))
        assert b.rate == pytest.approx(math.sqrt(math.log(2) / 8000.0), abs=1e-15)

    def test_unselected_round_is_noop(self):
        b = Exp3(3, 100, 1.0, named_rng(0, "b"))
        b.propose(0)
        before = list(b.cum_loss)
        b.update(unselected())
        assert b.cum_loss == before

    def test_deterministic_losses_concentrate(self):
        # Arms with constant losses (0, 1): after T=1000 standalone rounds
        # the zero-loss arm holds at least 0.9 probability (pilot: >=0.999
        # on every seed tried).
        for seed in range(10):
            b = Exp3(2, 1000, 1.0, named_rng(seed, "base.0"))
            for _ in range(1000):
                arm = b.propose(0)
                b.update(selected(float(arm)))
            assert b.distribution()[0] >= 0.9

    def test_weights_stay_finite_positive(self):
        rng = named_rng(1, "fuzz")
        b = Exp3(5, 10_000, 8.0, named_rng(1, "b"))
        for _ in range(100_000):
            b.propose(0)
            b.update(selected(float(rng.random()), float(rng.random()) * 0.875 + 0.125))
        dist = b.distribution()
        assert all(np.isfinite(dist)) and min(dist) > 0.0

    def test_reset_matches_fresh_handle(self):
        b = Exp3(3, 500, 1.0, named_rng(2, "b"))
        for _ in range(50):
            b.propose(0)
            b.update(selected(0.7, 0.5))
        b.reset(6.0)
        fresh = Exp3(3, 500, 6.0, named_rng(99, "unused"))
        assert b.range_param == fresh.range_param
        assert b.rate == fresh.rate
        assert b.cum_loss == fresh.cum_loss
        assert b._last_arm is None and b._last_probs is None

    def test_needs_two_arms(self):
        with pytest.raises(ConfigError):
            Exp3(1, 100, 1.0, named_rng(0, "b"))


class TestExp4:
    def test_rate_formula(self):
        b = Exp4(POLICIES_8, 4, 2, 10_000, 4.0, named_rng(0, "b"))
        assert b.rate == pytest.approx(math.sqrt(math.log(8) / 160_000.0), abs=1e-15)
        assert b.rate == pytest.approx(0.0036050672165022076)

    def test_identical_policies_keep_equal_weights(self):
        b = Exp4([(0, 1), (0, 1)], 2, 2, 100, 1.0, named_rng(3, "b"))
        for t in range(200):
            b.propose(t % 2)
            b.update(selected(0.8, 0.5))
        assert b.cum_loss[0] == b.cum_loss[1]
        assert b.policy_distribution() == pytest.approx([0.5, 0.5])

    def test_degenerates_to_exp3(self):
        # One context, one policy per arm, same stream and feedback: the two
        # algorithms follow bit-identical trajectories.
        exp4 = Exp4([(0,), (1,), (2,)], 3, 1, 400, 2.0, named_rng(4, "twin"))
        exp3 = Exp3(3, 400, 2.0, named_rng(4, "twin"))
        feed = named_rng(4, "feed")
        for _ in range(400):
            a4 = exp4.propose(0)
            a3 = exp3.propose(0)
            assert a4 == a3
            packet = selected(float(feed.random()), 0.5)
            exp4.update(packet)
            exp3.update(packet)
            assert exp4.cum_loss == exp3.cum_loss

    def test_invalid_policy_table(self):
        with pytest.raises(ConfigError):
            Exp4([(0, 5)], 4, 2, 100, 1.0, named_rng(0, "b"))
        with pytest.raises(ConfigError):
            Exp4([(0, 1), (1, 0)], 4, 3, 100, 1.0, named_rng(0, "b"))


class TestEpochGreedy:
    def test_explore_budget_worked_value(self):
        assert explore_budget(10_000, 1.0, 4, 8) == 3120
        assert explore_budget(2000, 1.0, 4, 8) == 988
        assert explore_budget(16_000, 1.0, 4, 8) == 4355

    def test_budget_clamped_to_horizon(self):
        assert explore_budget(10, 16.0, 8, 64) == 10

    def test_uniform_during_explore_phase(self):
        b = EpochGreedy(POLICIES_8, 4, 2, 10_000, 1.0, named_rng(5, "b"))
        counts = [0] * 4
        for _ in range(4000):
            counts[b.propose(0)] += 1
        assert b.erm_policy is None
        for c in counts:
            assert 0.2 <= c / 4000 <= 0.3

    def test_only_selected_rounds_counted(self):
        b = EpochGreedy(POLICIES_8, 4, 2, 10_000, 1.0, named_rng(6, "b"))
        for _ in range(100):
            b.propose(0)
            b.update(unselected())
        assert b.selected_count == 0
        assert len(b.samples) == 0

    def test_erm_picks_smallest_weighted_loss_with_ties_low(self):
        b = EpochGreedy([(0, 0), (1, 1), (0, 1)], 2, 2, 100, 1.0, named_rng(7, "b"))
        b.samples = []
        from corral.bases import WeightedSample

        b.samples.append(WeightedSample(0, 0, 4.0, 1))  # hits policies 0 and 2
        b.samples.append(WeightedSample(1, 1, 1.0, 2))  # hits policies 1 and 2
        assert b.erm_index() == 1  # totals: 4.0, 1.0, 5.0
        b.samples = [WeightedSample(0, 0, 2.0, 1), WeightedSample(0, 1, 2.0, 2)]
        assert b.erm_index() == 0  # totals tie at 2.0; lowest index wins

    def test_erm_matches_bruteforce(self):
        rng = named_rng(8, "erm")
        b = EpochGreedy(POLICIES_8, 4, 2, 4000, 1.0, named_rng(8, "b"))
        horizon_used = b.explore_rounds
        for _ in range(horizon_used):
            ctx = int(rng.integers(2))
            b.propose(ctx)
            b.update(selected(float(rng.random()), 0.5))
        assert b.erm_policy is not None
        totals = []
        for pol in POLICIES_8:
            totals.append(
                sum(s.weighted_loss for s in b.samples if pol[s.context] == s.action)
            )
        assert b.erm_policy == POLICIES_8[int(np.argmin(totals))]

    def test_exploit_phase_plays_erm_policy(self):
        b = EpochGreedy([(0, 1), (1, 0)], 2, 2, 100, 1.0, named_rng(9, "b"))
        b.erm_policy = (1, 0)
        assert b.propose(0) == 1
        assert b.propose(1) == 0


class TestThompsonSampling:
    def test_symmetric_prior_proposes_exchangeably(self):
        b = ThompsonSampling([[1, 1]] * 4, 1.0, named_rng(3, "ts"))
        counts = [0] * 4
        for _ in range(2000):
            counts[b.propose(0)] += 1
        for c in counts:
            assert 0.2 <= c / 2000 <= 0.3

    def test_recovered_unit_loss_counts_failure(self):
        b = ThompsonSampling([[1, 1], [1, 1]], 1.0, named_rng(4, "ts"))
        b._last_arm = 0
        b.update(FeedbackPacket(True, 2.0, 0.5, raw_loss=1.0))
        assert b.ones[0] == 2.0 and b.zeros[0] == 1.0
        assert b.ones[1] == 1.0 and b.zeros[1] == 1.0

    def test_unselected_round_leaves_posterior_untouched(self):
        b = ThompsonSampling([[2, 3], [1, 1]], 1.0, named_rng(5, "ts"))
        b.propose(0)
        ones, zeros = b.ones.copy(), b.zeros.copy()
        b.update(unselected())
        assert np.array_equal(b.ones, ones)
        assert np.array_equal(b.zeros, zeros)

    def test_posterior_counts_exact_bookkeeping(self):
        # With raw losses in {0, 1} the Bernoulli conversion is
        # deterministic, so counts must match the fed outcomes exactly.
        rng = named_rng(6, "feed")
        b = ThompsonSampling([[1, 1]] * 3, 1.0, named_rng(6, "ts"))
        ones_fed = [0] * 3
        zeros_fed = [0] * 3
        for _ in range(500):
            arm = b.propose(0)
            outcome = float(rng.integers(2))
            b.update(selected(outcome, 0.5))
            if outcome == 1.0:
                ones_fed[arm] += 1
            else:
                zeros_fed[arm] += 1
        for a in range(3):
            assert b.ones[a] == 1 + ones_fed[a]
            assert b.zeros[a] == 1 + zeros_fed[a]

    def test_nonpositive_prior_rejected(self):
        with pytest.raises(ConfigError):
            ThompsonSampling([[1, 0], [1, 1]], 1.0, named_rng(0, "ts"))


class TestUcb1:
    def test_initial_sweep_in_index_order(self):
        b = Ucb1(3)
        for expected in range(3):
            assert b.propose(0) == expected
            b.update(selected(0.5))

    def test_lower_mean_with_equal_counts_wins(self):
        b = Ucb1(2)
        b.counts = [3, 3]
        b.totals = [0.6, 1.5]
        b.selected_rounds = 6
        assert b.propose(0) == 0

    def test_deterministic_two_arm_regret_is_warmup_only(self):
        # Losses (0, 1): after the sweep the zero-loss arm's index stays
        # strictly smaller, so total regret equals the single warm-up pull.
        b = Ucb1(2)
        regret = 0.0
        for _ in range(5000):
            arm = b.propose(0)
            loss = float(arm)
            regret += loss
            b.update(selected(loss))
        assert regret == 1.0

    def test_stochastic_pulls_of_worse_arm_bounded(self):
        # Means (0.1, 0.9), T=5000: pre-build pilot puts worse-arm pulls at
        # well under 5% of rounds on every seed tried.
        from corral.envs import StochasticMAB

        for seed in range(10):
            env = StochasticMAB([0.1, 0.9], named_rng(seed, "env"))
            b = Ucb1(2)
            worse = 0
            for _ in range(5000):
                env.next_context()
                arm = b.propose(0)
                worse += arm == 1
                b.update(selected(env.loss_of(arm)))
            assert worse / 5000 <= 0.05


class TestPathologicalPair:
    def test_first_cheap_value_locks_first_arm(self):
        b = PathologicalBase((0, 1), named_rng(0, "p"))
        assert b.propose(0) == 0
        b.update(selected(0.1))
        assert all(b.propose(0) == 0 for _ in range(20))

    def test_second_set_value_locks_second_arm(self):
        b = PathologicalBase((0, 1), named_rng(1, "p"))
        b.propose(0)
        b.update(selected(0.4))
        assert all(b.propose(0) == 1 for _ in range(20))

    def test_weighted_value_shatters_to_uniform(self):
        b = PathologicalBase((0, 1), named_rng(2, "p"))
        b.propose(0)
        b.update(FeedbackPacket(True, 0.2 / 0.45, 1.0, raw_loss=0.2 / 0.45))
        assert b.shattered
        draws = {b.propose(0) for _ in range(50)}
        assert draws == {0, 1}

    def test_unselected_rounds_carry_no_observation(self):
        b = PathologicalBase((2, 3), named_rng(3, "p"))
        for _ in range(10):
            assert b.propose(0) == 2
            b.update(unselected())
        assert not b.observed_once
        b.update(selected(0.3))
        assert b.locked_arm == 2

    def test_locked_base_shatters_on_garbage(self):
        b = PathologicalBase((0, 1), named_rng(4, "p"))
        b.propose(0)
        b.update(selected(0.1))
        b.update(selected(0.3))  # still a recognized value: stays locked
        assert b.locked_arm == 0
        b.update(FeedbackPacket(True, 0.5, 1.0, raw_loss=0.5))
        assert b.shattered

    def test_pair_arms(self):
        first, second = pathological_pair(named_rng(5, "a"), named_rng(5, "b"))
        assert first.arm_pair == (0, 1)
        assert second.arm_pair == (2, 3)


class TestStabilityExponentPower:
    def test_clipping_variant_degrades_faster(self):
        # A variant that clips weighted losses into [0, 1] instead of
        # retuning for the range destroys its own feedback signal; its
        # fitted exponent sits far above the properly rescaled one
        # (pilot: 0.76 vs 0.49 at this configuration).
        from corral.core import FeedbackPacket
        from corral.envs import InducedEnvironment, StochasticMAB

        class ClippingExp3(Exp3):
            def reset(self, range_param):
                super().reset(range_param)
                self.rate = math.sqrt(
                    math.log(self.num_arms) / (self.num_arms * self.horizon)
                )

            def update(self, packet):
                if not packet.selected:
                    return
                est = min(1.0, packet.weighted_loss) / self._last_probs[self._last_arm]
                self.cum_loss[self._last_arm] += est

        def exponent(base_cls):
            horizon = 8000
            means = []
            for rho in (1.0, 4.0, 16.0):
                regs = []
                for seed in range(8):
                    env = StochasticMAB([0.2, 0.4, 0.6, 0.8], named_rng(seed, "env"))
                    wrapped = InducedEnvironment(env, 1.0 / rho, named_rng(seed, "wrapper"))
                    base = base_cls(4, horizon, rho, named_rng(seed, "base.0"))
                    cum = 0.0
                    for _ in range(horizon):
                        ctx = wrapped.next_context()
                        arm = base.propose(ctx)
                        sel, emitted = wrapped.observe(arm)
                        raw = wrapped.last_raw_loss if sel else None
                        base.update(
                            FeedbackPacket(sel, emitted, wrapped.sampling_prob, raw)
                        )
                        cum += emitted
                    regs.append(cum - env.baseline().cumulative(horizon))
                means.append(np.mean(regs))
            return float(np.polyfit(np.log([1.0, 4.0, 16.0]), np.log(means), 1)[0])

        clipping = exponent(ClippingExp3)
        tuned = exponent(Exp3)
        assert 0.35 <= tuned <= 0.65
        assert clipping >= tuned + 0.15
        assert clipping > 0.65
