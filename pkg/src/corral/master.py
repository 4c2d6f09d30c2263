"""The CORRAL master: log-barrier OMD over base algorithms.

Each round the master samples a base algorithm from the smoothed
distribution ``p_bar``, plays its suggestion, routes importance-weighted
feedback packets to every base, runs the log-barrier OMD update on its own
distribution, and maintains a per-base threshold / learning-rate doubling
schedule: whenever ``1 / p_bar_i`` exceeds the base's threshold, the
threshold doubles past it and the base's learning rate is multiplied by
``beta = e^(1/ln T)``, which caps total inflation at a factor of five over
any horizon. Under the restart-on-doubling policy the base is also reset
with the new threshold as its loss-range parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .core import (
    ConfigError,
    ContractError,
    FeedbackPacket,
    InvalidLossError,
    importance_weight,
    sample_index,
    validate_simplex,
)
from .omd import omd_step

RESTART_ON_DOUBLING = "restart-on-doubling"
NEVER_RESTART = "never-restart"
RESTART_POLICIES = (RESTART_ON_DOUBLING, NEVER_RESTART)

ESTIMATOR_STANDARD = "standard"
ESTIMATOR_SHARED = "shared"
ESTIMATORS = (ESTIMATOR_STANDARD, ESTIMATOR_SHARED)


@dataclass
class MasterState:
    """Full master state: distributions, schedule and constants."""

    horizon: int
    num_bases: int
    gamma: float
    beta: float
    eta0: float
    eta: list[float]
    rho: list[float]
    p: list[float]
    p_bar: list[float]
    t: int = 1
    restart_policy: str = RESTART_ON_DOUBLING


@dataclass(frozen=True)
class Choice:
    """Sampled base index and the decision it proposed this round."""

    base: int
    decision: int


@dataclass
class RoundOutcome:
    """Everything the round produced: packets for each base and any resets.

    ``doublings`` lists the bases whose threshold fired this round;
    ``restarts`` is the subset that must be re-initialized (equal to
    ``doublings`` under restart-on-doubling, empty under never-restart).
    """

    chosen_base: int
    decision: int
    packets: list[FeedbackPacket]
    doublings: list[int] = field(default_factory=list)
    restarts: list[int] = field(default_factory=list)


def init_master(
    eta0: float,
    num_bases: int,
    horizon: int,
    restart_policy: str = RESTART_ON_DOUBLING,
) -> MasterState:
    """Fresh master state: uniform distributions, thresholds at 2M.

    Requires at least two bases (the learning-rate cap argument needs it)
    and a horizon of at least two (``beta`` is undefined at T = 1).
    """
    if num_bases < 2:
        raise ConfigError(f"need at least 2 base algorithms, got {num_bases}")
    if horizon < 2:
        raise ConfigError(f"horizon must be >= 2, got {horizon}")
    if not eta0 > 0.0:
        raise ConfigError(f"learning rate must be > 0, got {eta0}")
    if restart_policy not in RESTART_POLICIES:
        raise ConfigError(f"unknown restart policy {restart_policy!r}")
    uniform = [1.0 / num_bases] * num_bases
    return MasterState(
        horizon=horizon,
        num_bases=num_bases,
        gamma=1.0 / horizon,
        beta=math.exp(1.0 / math.log(horizon)),
        eta0=eta0,
        eta=[eta0] * num_bases,
        rho=[2.0 * num_bases] * num_bases,
        p=list(uniform),
        p_bar=list(uniform),
        restart_policy=restart_policy,
    )


def initial_range(num_bases: int) -> float:
    """Loss-range parameter handed to freshly initialized bases (2M)."""
    return 2.0 * num_bases


def choose(state: MasterState, proposals: Sequence[int], rng) -> Choice:
    """Sample a base from ``p_bar`` by exact inverse-CDF and adopt its proposal."""
    if len(proposals) != state.num_bases:
        raise ContractError(
            f"expected {state.num_bases} proposals, got {len(proposals)}"
        )
    if state.t > state.horizon:
        raise ContractError(f"master is past its horizon ({state.horizon})")
    i = sample_index(rng, state.p_bar)
    return Choice(base=i, decision=proposals[i])


def build_packets(
    p_bar: Sequence[float],
    proposals: Sequence[int],
    observed_loss: float,
    chosen: int,
    estimator: str = ESTIMATOR_STANDARD,
) -> list[FeedbackPacket]:
    """Construct the per-base feedback packets for one round.

    Standard estimator: only the sampled base is selected and its loss is
    weighted by its own sampling probability. Shared estimator: every base
    whose proposal equals the played decision shares the feedback, weighted
    by the total probability of that decision being played; this wastes less
    information when the decision space is small. Both are unbiased.
    """
    if estimator not in ESTIMATORS:
        raise ConfigError(f"unknown estimator {estimator!r}")
    packets = []
    if estimator == ESTIMATOR_STANDARD:
        for i in range(len(p_bar)):
            packets.append(
                importance_weight(observed_loss, p_bar[i], selected=(i == chosen))
            )
        return packets
    played = proposals[chosen]
    group_prob: dict[int, float] = {}
    for i, d in enumerate(proposals):
        group_prob[d] = group_prob.get(d, 0.0) + p_bar[i]
    for d in group_prob:
        # Summing a full group can overshoot 1 by an ulp.
        group_prob[d] = min(1.0, group_prob[d])
    for i, d in enumerate(proposals):
        packets.append(
            importance_weight(observed_loss, group_prob[d], selected=(d == played))
        )
    return packets


def feedback(
    state: MasterState,
    choice: Choice,
    observed_loss: float,
    proposals: Sequence[int],
    estimator: str = ESTIMATOR_STANDARD,
) -> RoundOutcome:
    """Consume the observed loss: packets, OMD update, mixing, schedule.

    Mutates ``state`` in place and returns the round outcome. The master's
    own OMD loss vector always uses the standard one-hot estimator; the
    estimator flag changes only what the bases receive. The caller delivers
    packets to the bases and then resets those listed in ``restarts`` with
    the base's new threshold as range parameter (a restarted base starts
    fresh at the next round).
    """
    if not 0.0 <= observed_loss <= 1.0:
        raise InvalidLossError(f"observed loss must be in [0, 1], got {observed_loss}")
    if len(proposals) != state.num_bases:
        raise ContractError(
            f"expected {state.num_bases} proposals, got {len(proposals)}"
        )
    packets = build_packets(state.p_bar, proposals, observed_loss, choice.base, estimator)

    master_loss = [0.0] * state.num_bases
    master_loss[choice.base] = observed_loss / state.p_bar[choice.base]
    state.p = omd_step(state.p, master_loss, state.eta)

    mix = state.gamma / state.num_bases
    state.p_bar = validate_simplex(
        [(1.0 - state.gamma) * x + mix for x in state.p]
    )

    doublings = apply_schedule(state)
    restarts = list(doublings) if state.restart_policy == RESTART_ON_DOUBLING else []
    state.t += 1
    return RoundOutcome(
        chosen_base=choice.base,
        decision=choice.decision,
        packets=packets,
        doublings=doublings,
        restarts=restarts,
    )


def apply_schedule(state: MasterState) -> list[int]:
    """Threshold check for every base in index order, applied the same round.

    Fires for base i when ``1 / p_bar_i`` exceeds its threshold: the
    threshold jumps to twice the current inverse probability and the base's
    learning rate is multiplied by beta. Returns the fired indices.
    """
    fired = []
    for i in range(state.num_bases):
        inv = 1.0 / state.p_bar[i]
        if inv > state.rho[i]:
            state.rho[i] = 2.0 * inv
            state.eta[i] = state.beta * state.eta[i]
            fired.append(i)
    return fired


def tuned_eta(regret_target: float, horizon: int, num_bases: int) -> float:
    """Initial learning rate tuned against a target regret bound.

    ``min(1 / (40 * R * ln T), sqrt(M / T))``: the first branch trades the
    master's own regret against the negative-regret term that cancels a
    linearly-stable base's degradation; the second caps the rate when the
    target is trivially small.
    """
    if not regret_target > 0.0:
        raise ConfigError(f"regret target must be > 0, got {regret_target}")
    if horizon < 2:
        raise ConfigError(f"horizon must be >= 2, got {horizon}")
    return min(
        1.0 / (40.0 * regret_target * math.log(horizon)),
        math.sqrt(num_bases / horizon),
    )
