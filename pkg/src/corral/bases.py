"""Base bandit algorithms behind a uniform propose / update / reset contract.

Every base proposes a decision for the current context, consumes one
``FeedbackPacket`` per round (selected or not; unselected rounds carry zero
loss so stateful learners can still count rounds), and can be reset with a
new loss-range parameter ``rho``. A reset re-initializes all learned state
and re-tunes internal rates for the new range; the random stream keeps its
position, exactly as if a fresh handle had been built around the same
generator.

Range handling: a base expecting importance-weighted losses in ``[0, rho]``
tunes its internal rate with ``rho`` in the denominator, which is the same
update as rescaling incoming losses into ``[0, 1]`` and tuning for unit
range. Policies are explicit context-to-arm tables (tuples of arm ids), so
empirical risk minimization is exact exhaustive search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ConfigError,
    ContractError,
    FeedbackPacket,
    InvalidLossError,
    StabilityCertificate,
    sample_index,
)

Policy = tuple[int, ...]


@dataclass(frozen=True)
class WeightedSample:
    """One exploration-round observation: a single nonzero action estimate."""

    context: int
    action: int
    weighted_loss: float
    round_index: int


def validate_policies(policies, num_arms: int, num_contexts: int) -> list[Policy]:
    table = [tuple(int(a) for a in pol) for pol in policies]
    if len(table) < 2:
        raise ConfigError(f"need at least 2 policies, got {len(table)}")
    for pol in table:
        if len(pol) != num_contexts:
            raise ConfigError(
                f"policy {pol} does not cover {num_contexts} contexts"
            )
        for a in pol:
            if not 0 <= a < num_arms:
                raise ConfigError(f"policy action {a} out of range [0, {num_arms})")
    return table


def _check_range(range_param: float) -> float:
    range_param = float(range_param)
    if range_param < 1.0:
        raise ConfigError(f"range parameter must be >= 1, got {range_param}")
    return range_param


class BaseAlgorithm:
    """Uniform contract all base learners implement."""

    kind: str = "base"
    certificate: StabilityCertificate | None = None

    def propose(self, context: int) -> int:
        raise NotImplementedError

    def update(self, packet: FeedbackPacket) -> None:
        raise NotImplementedError

    def reset(self, range_param: float) -> None:
        raise NotImplementedError

    def _recover_raw(self, packet: FeedbackPacket) -> float:
        raw = packet.raw_loss
        if raw is None:
            raise ContractError("selected packet without recoverable raw loss")
        if not 0.0 <= raw <= 1.0:
            raise InvalidLossError(f"recovered raw loss must be in [0, 1], got {raw}")
        return raw


class Exp3(BaseAlgorithm):
    """Exponential weights over arms with importance-weighted internal losses.

    The internal rate is ``sqrt(ln K / (K * T * rho))``; incoming weighted
    losses are divided once more by the algorithm's own arm probability on
    selected rounds, keeping the per-arm estimate unbiased.
    """

    kind = "exp3"

    def __init__(self, num_arms: int, horizon: int, range_param: float, rng):
        if num_arms < 2:
            raise ConfigError(f"need at least 2 arms, got {num_arms}")
        self.num_arms = num_arms
        self.horizon = horizon
        self.rng = rng
        self.certificate = StabilityCertificate(
            alpha=0.5,
            regret_bound=lambda t, k=num_arms: math.sqrt(k * t * math.log(k)),
            environment_class="adversarial-mab",
        )
        self.reset(range_param)

    def reset(self, range_param: float) -> None:
        self.range_param = _check_range(range_param)
        self.rate = math.sqrt(
            math.log(self.num_arms) / (self.num_arms * self.horizon * self.range_param)
        )
        self.cum_loss = [0.0] * self.num_arms
        self._last_arm: int | None = None
        self._last_probs: list[float] | None = None

    def distribution(self) -> list[float]:
        floor = min(self.cum_loss)
        weights = [math.exp(-self.rate * (c - floor)) for c in self.cum_loss]
        total = sum(weights)
        return [w / total for w in weights]

    def propose(self, context: int) -> int:
        probs = self.distribution()
        arm = sample_index(self.rng, probs)
        self._last_arm = arm
        self._last_probs = probs
        return arm

    def update(self, packet: FeedbackPacket) -> None:
        if not packet.selected:
            return
        if self._last_arm is None or self._last_probs is None:
            raise ContractError("update before any proposal")
        self.cum_loss[self._last_arm] += (
            packet.weighted_loss / self._last_probs[self._last_arm]
        )


class Exp4(BaseAlgorithm):
    """Exponential weights over a finite policy class (contextual).

    The action distribution is the policy-weight mixture pushed through the
    current context; the internal rate is ``sqrt(ln |policies| / (K*T*rho))``.
    With a single context and one policy per arm this reduces exactly to
    ``Exp3`` on the same random stream.
    """

    kind = "exp4"

    def __init__(
        self,
        policies,
        num_arms: int,
        num_contexts: int,
        horizon: int,
        range_param: float,
        rng,
    ):
        self.policies = validate_policies(policies, num_arms, num_contexts)
        self.num_arms = num_arms
        self.num_contexts = num_contexts
        self.horizon = horizon
        self.rng = rng
        self.certificate = StabilityCertificate(
            alpha=0.5,
            regret_bound=lambda t, k=num_arms, n=len(self.policies): math.sqrt(
                k * t * math.log(n)
            ),
            environment_class="adversarial-contextual",
        )
        self.reset(range_param)

    def reset(self, range_param: float) -> None:
        self.range_param = _check_range(range_param)
        self.rate = math.sqrt(
            math.log(len(self.policies))
            / (self.num_arms * self.horizon * self.range_param)
        )
        self.cum_loss = [0.0] * len(self.policies)
        self._last_arm: int | None = None
        self._last_context: int | None = None
        self._last_action_probs: list[float] | None = None

    def policy_distribution(self) -> list[float]:
        floor = min(self.cum_loss)
        weights = [math.exp(-self.rate * (c - floor)) for c in self.cum_loss]
        total = sum(weights)
        return [w / total for w in weights]

    def propose(self, context: int) -> int:
        policy_probs = self.policy_distribution()
        action_probs = [0.0] * self.num_arms
        for pol, w in zip(self.policies, policy_probs):
            action_probs[pol[context]] += w
        arm = sample_index(self.rng, action_probs)
        self._last_arm = arm
        self._last_context = context
        self._last_action_probs = action_probs
        return arm

    def update(self, packet: FeedbackPacket) -> None:
        if not packet.selected:
            return
        if self._last_arm is None:
            raise ContractError("update before any proposal")
        estimate = packet.weighted_loss / self._last_action_probs[self._last_arm]
        for j, pol in enumerate(self.policies):
            if pol[self._last_context] == self._last_arm:
                self.cum_loss[j] += estimate


class EpochGreedy(BaseAlgorithm):
    """Explore-first contextual learner with an exact ERM exploit phase.

    Explores uniformly over arms for the first ``T0`` selected rounds, where
    ``T0 = ceil(T^(2/3) * rho^(1/3) * sqrt(K * ln(T * |policies|)))`` clamped
    to ``[1, T]``, storing doubly importance-weighted samples (the packet's
    weight times its own uniform 1/K). It then plays the empirically best
    policy for the rest of the run, ties to the lowest index. Only selected
    rounds count toward T0; unselected rounds carry no information.
    """

    kind = "epoch-greedy"

    def __init__(
        self,
        policies,
        num_arms: int,
        num_contexts: int,
        horizon: int,
        range_param: float,
        rng,
    ):
        self.policies = validate_policies(policies, num_arms, num_contexts)
        self.num_arms = num_arms
        self.num_contexts = num_contexts
        self.horizon = horizon
        self.rng = rng
        self.certificate = StabilityCertificate(
            alpha=1.0 / 3.0,
            regret_bound=lambda t, k=num_arms, n=len(self.policies): t ** (2.0 / 3.0)
            * math.sqrt(k * math.log(max(t, 2) * n)),
            environment_class="stochastic-contextual",
        )
        self.reset(range_param)

    def reset(self, range_param: float) -> None:
        self.range_param = _check_range(range_param)
        self.explore_rounds = explore_budget(
            self.horizon, self.range_param, self.num_arms, len(self.policies)
        )
        self.samples: list[WeightedSample] = []
        self.selected_count = 0
        self.round_index = 0
        self.erm_policy: Policy | None = None
        self._last_arm: int | None = None
        self._last_context: int | None = None

    def propose(self, context: int) -> int:
        if self.erm_policy is not None:
            arm = self.erm_policy[context]
        else:
            arm = min(int(self.rng.random() * self.num_arms), self.num_arms - 1)
        self._last_arm = arm
        self._last_context = context
        return arm

    def update(self, packet: FeedbackPacket) -> None:
        self.round_index += 1
        if self.erm_policy is not None or not packet.selected:
            return
        if self._last_arm is None:
            raise ContractError("update before any proposal")
        self.samples.append(
            WeightedSample(
                context=self._last_context,
                action=self._last_arm,
                weighted_loss=self.num_arms * packet.weighted_loss,
                round_index=self.round_index,
            )
        )
        self.selected_count += 1
        if self.selected_count >= self.explore_rounds:
            self.erm_policy = self.policies[self.erm_index()]

    def erm_index(self) -> int:
        totals = [0.0] * len(self.policies)
        for sample in self.samples:
            for j, pol in enumerate(self.policies):
                if pol[sample.context] == sample.action:
                    totals[j] += sample.weighted_loss
        best = 0
        for j in range(1, len(totals)):
            if totals[j] < totals[best]:
                best = j
        return best


def explore_budget(horizon: int, range_param: float, num_arms: int, num_policies: int) -> int:
    """Length of the uniform-exploration phase, clamped to [1, horizon]."""
    raw = (
        horizon ** (2.0 / 3.0)
        * range_param ** (1.0 / 3.0)
        * math.sqrt(num_arms * math.log(horizon * num_policies))
    )
    return max(1, min(horizon, math.ceil(raw)))


class ThompsonSampling(BaseAlgorithm):
    """Beta-Bernoulli posterior sampling over arm losses.

    ``prior`` gives per-arm Beta pseudo-counts ``(ones, zeros)`` over the
    loss: ``ones`` counts loss-1 events, ``zeros`` counts loss-0 events, so
    the posterior mean ``ones / (ones + zeros)`` estimates the arm's mean
    loss. Proposals minimize a posterior sample. Updates happen only on
    selected rounds: the raw loss is recovered from the packet, converted to
    a Bernoulli outcome with success probability equal to the loss (which
    keeps conjugacy and is unbiased), and credited to the played arm.
    """

    kind = "thompson"

    def __init__(self, prior, range_param: float, rng):
        prior = [(float(a), float(b)) for a, b in prior]
        if len(prior) < 2:
            raise ConfigError(f"need at least 2 arms, got {len(prior)}")
        for a, b in prior:
            if a <= 0.0 or b <= 0.0:
                raise ConfigError(f"prior pseudo-counts must be > 0, got ({a}, {b})")
        self.prior = prior
        self.num_arms = len(prior)
        self.rng = rng
        self.certificate = StabilityCertificate(
            alpha=0.5,
            regret_bound=lambda t, k=self.num_arms: math.sqrt(k * t * math.log(k)),
            environment_class="stochastic-mab",
        )
        self.reset(range_param)

    def reset(self, range_param: float) -> None:
        self.range_param = _check_range(range_param)
        self.ones = np.array([a for a, _ in self.prior], dtype=np.float64)
        self.zeros = np.array([b for _, b in self.prior], dtype=np.float64)
        self._last_arm: int | None = None

    def propose(self, context: int) -> int:
        draws = self.rng.beta(self.ones, self.zeros)
        arm = int(np.argmin(draws))
        self._last_arm = arm
        return arm

    def update(self, packet: FeedbackPacket) -> None:
        if not packet.selected:
            return
        if self._last_arm is None:
            raise ContractError("update before any proposal")
        raw = self._recover_raw(packet)
        outcome = 1.0 if float(self.rng.random()) < raw else 0.0
        self.ones[self._last_arm] += outcome
        self.zeros[self._last_arm] += 1.0 - outcome


class Ucb1(BaseAlgorithm):
    """Deterministic confidence-index policy on recovered raw losses.

    Pulls each arm once in index order, then plays the arm minimizing
    ``mean_loss + sqrt(2 ln t / n)`` over its selected rounds, ties to the
    lowest index. Ships without a stability certificate and is used only in
    demonstration scenarios.
    """

    kind = "ucb1"

    def __init__(self, num_arms: int):
        if num_arms < 2:
            raise ConfigError(f"need at least 2 arms, got {num_arms}")
        self.num_arms = num_arms
        self.reset(1.0)

    def reset(self, range_param: float) -> None:
        self.range_param = _check_range(range_param)
        self.counts = [0] * self.num_arms
        self.totals = [0.0] * self.num_arms
        self.selected_rounds = 0
        self._last_arm: int | None = None

    def propose(self, context: int) -> int:
        for a in range(self.num_arms):
            if self.counts[a] == 0:
                self._last_arm = a
                return a
        t = self.selected_rounds + 1
        best = 0
        best_index = math.inf
        for a in range(self.num_arms):
            idx = self.totals[a] / self.counts[a] + math.sqrt(
                2.0 * math.log(t) / self.counts[a]
            )
            if idx < best_index:
                best_index = idx
                best = a
        self._last_arm = best
        return best

    def update(self, packet: FeedbackPacket) -> None:
        if not packet.selected:
            return
        if self._last_arm is None:
            raise ContractError("update before any proposal")
        raw = self._recover_raw(packet)
        self.counts[self._last_arm] += 1
        self.totals[self._last_arm] += raw
        self.selected_rounds += 1


class PathologicalBase(BaseAlgorithm):
    """A learner that locks in after one observation and shatters on any other.

    Plays the first arm of its pair on its first selected round and reads
    the recoverable loss value: 0.1 or 0.3 locks it on the first arm, 0.2 or
    0.4 locks it on the second, and any other real value (including zero and
    importance-weighted values) sends it to uniformly random play over the
    pair forever. A locked base keeps its arm while observations stay inside
    the four recognized values and shatters on anything else; unselected
    rounds carry no observation. Standalone it has constant regret; fed
    doctored losses it is unrecoverable, which is the whole point.
    """

    kind = "pathological"

    _LOCK_FIRST = (0.1, 0.3)
    _LOCK_SECOND = (0.2, 0.4)
    _KNOWN = _LOCK_FIRST + _LOCK_SECOND

    def __init__(self, arm_pair: tuple[int, int], rng):
        self.arm_pair = (int(arm_pair[0]), int(arm_pair[1]))
        self.rng = rng
        self.certificate = None
        self.reset(1.0)

    def reset(self, range_param: float) -> None:
        self.range_param = _check_range(range_param)
        self.locked_arm: int | None = None
        self.shattered = False
        self.observed_once = False

    def propose(self, context: int) -> int:
        if self.shattered:
            return self.arm_pair[0] if float(self.rng.random()) < 0.5 else self.arm_pair[1]
        if self.locked_arm is not None:
            return self.locked_arm
        return self.arm_pair[0]

    def update(self, packet: FeedbackPacket) -> None:
        if self.shattered or not packet.selected:
            return
        value = packet.raw_loss
        if not self.observed_once:
            self.observed_once = True
            if value in self._LOCK_FIRST:
                self.locked_arm = self.arm_pair[0]
            elif value in self._LOCK_SECOND:
                self.locked_arm = self.arm_pair[1]
            else:
                self.shattered = True
            return
        if value not in self._KNOWN:
            self.locked_arm = None
            self.shattered = True


def pathological_pair(rng_first, rng_second) -> tuple[PathologicalBase, PathologicalBase]:
    """The two nearly-identical lock-in learners over a 4-action space."""
    return (
        PathologicalBase((0, 1), rng_first),
        PathologicalBase((2, 3), rng_second),
    )
