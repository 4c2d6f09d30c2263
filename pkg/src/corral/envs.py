"""Environments: stateful generators of (context, loss vector) rounds.

Every environment realizes one round per ``next_context`` call (drawing the
context and the full loss vector), after which ``loss_of`` evaluates any
decision against the realized losses. Raw losses are always in [0, 1];
stochastic losses are Bernoulli so that regret baselines stay analytic and
the Beta-Bernoulli posterior of Thompson sampling applies directly.

The induced-environment wrapper composes an inner environment with random
selection and importance weighting: with probability ``p_t`` the learner's
loss is revealed inflated by ``1 / p_t``, otherwise the round emits zero.
On unselected rounds the learner's own decision is replayed to the inner
environment as the arbitrary filler decision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import ConfigError, sample_index

Schedule = Callable[[int], float]


@dataclass(frozen=True)
class RegretBaseline:
    """Best fixed decision and its per-round baseline loss.

    ``per_round`` is a constant (expected loss, stochastic environments) or
    a horizon-length array (realized loss of the best fixed decision,
    scripted adversarial environments).
    """

    best_decision: int
    per_round: float | np.ndarray

    def rate_at(self, t: int) -> float:
        """Baseline loss of round t (0-indexed)."""
        if isinstance(self.per_round, np.ndarray):
            return float(self.per_round[t])
        return float(self.per_round)

    def cumulative(self, rounds: int) -> float:
        if isinstance(self.per_round, np.ndarray):
            return float(np.sum(self.per_round[:rounds]))
        return float(self.per_round) * rounds


class Environment:
    """Common surface: arm count, context set size, per-round realization."""

    kind: str = "environment"
    num_arms: int
    num_contexts: int = 1

    def next_context(self) -> int:
        raise NotImplementedError

    def loss_of(self, decision: int) -> float:
        raise NotImplementedError

    def baseline(self) -> RegretBaseline:
        raise NotImplementedError


def _check_decision(decision: int, num_arms: int) -> int:
    if not 0 <= decision < num_arms:
        raise ConfigError(f"decision {decision} out of range [0, {num_arms})")
    return int(decision)


class StochasticMAB(Environment):
    """Independent Bernoulli losses per arm with fixed means."""

    kind = "stochastic-mab"

    def __init__(self, means: Sequence[float], rng):
        means = [float(m) for m in means]
        if len(means) < 2:
            raise ConfigError(f"need at least 2 arms, got {len(means)}")
        for m in means:
            if not 0.0 <= m <= 1.0:
                raise ConfigError(f"arm mean must be in [0, 1], got {m}")
        self.means = np.array(means)
        self.num_arms = len(means)
        self.rng = rng
        self._losses: np.ndarray | None = None

    def next_context(self) -> int:
        self._losses = (self.rng.random(self.num_arms) < self.means).astype(np.float64)
        return 0

    def loss_of(self, decision: int) -> float:
        return float(self._losses[_check_decision(decision, self.num_arms)])

    def baseline(self) -> RegretBaseline:
        best = int(np.argmin(self.means))
        return RegretBaseline(best_decision=best, per_round=float(self.means[best]))


class AdversarialMAB(Environment):
    """Oblivious scripted losses: row t of the script at round t."""

    kind = "adversarial-mab"

    def __init__(self, script):
        script = np.asarray(script, dtype=np.float64)
        if script.ndim != 2 or script.shape[0] < 1 or script.shape[1] < 2:
            raise ConfigError(f"script must be a T x K matrix, got shape {script.shape}")
        if np.any(script < 0.0) or np.any(script > 1.0) or not np.all(np.isfinite(script)):
            raise ConfigError("script entries must lie in [0, 1]")
        self.script = script
        self.num_arms = script.shape[1]
        self._t = -1

    @classmethod
    def from_csv(cls, path) -> "AdversarialMAB":
        return cls(np.loadtxt(path, delimiter=",", ndmin=2))

    @property
    def horizon(self) -> int:
        return self.script.shape[0]

    def next_context(self) -> int:
        self._t += 1
        if self._t >= self.script.shape[0]:
            raise ConfigError(f"script exhausted after {self.script.shape[0]} rounds")
        return 0

    def loss_of(self, decision: int) -> float:
        return float(self.script[self._t, _check_decision(decision, self.num_arms)])

    def baseline(self) -> RegretBaseline:
        best = int(np.argmin(self.script.sum(axis=0)))
        return RegretBaseline(best_decision=best, per_round=self.script[:, best].copy())


class StochasticContextual(Environment):
    """I.i.d. contexts with Bernoulli losses conditioned on the context.

    Decisions exchanged at play time are arms; regret baselines are
    computed exactly over a finite policy class (context-to-arm tables),
    by default the evaluation class handed to the constructor.
    """

    kind = "stochastic-contextual"

    def __init__(self, context_probs: Sequence[float], cond_means, policies, rng):
        probs = [float(x) for x in context_probs]
        if not probs or abs(sum(probs) - 1.0) > 1e-9 or any(x <= 0 for x in probs):
            raise ConfigError("context distribution must be positive and sum to 1")
        cond = np.asarray(cond_means, dtype=np.float64)
        if cond.ndim != 2 or cond.shape[0] != len(probs) or cond.shape[1] < 2:
            raise ConfigError(
                f"conditional means must be contexts x arms, got shape {cond.shape}"
            )
        if np.any(cond < 0.0) or np.any(cond > 1.0):
            raise ConfigError("conditional means must lie in [0, 1]")
        self.context_probs = probs
        self.cond_means = cond
        self.num_contexts = len(probs)
        self.num_arms = cond.shape[1]
        self.eval_policies = [tuple(int(a) for a in pol) for pol in policies]
        for pol in self.eval_policies:
            if len(pol) != self.num_contexts or any(
                not 0 <= a < self.num_arms for a in pol
            ):
                raise ConfigError(f"invalid evaluation policy {pol}")
        self.rng = rng
        self._context = 0
        self._losses: np.ndarray | None = None

    def next_context(self) -> int:
        self._context = sample_index(self.rng, self.context_probs)
        self._losses = (
            self.rng.random(self.num_arms) < self.cond_means[self._context]
        ).astype(np.float64)
        return self._context

    def loss_of(self, decision: int) -> float:
        return float(self._losses[_check_decision(decision, self.num_arms)])

    def expected_policy_loss(self, policy: Sequence[int]) -> float:
        return float(
            sum(
                p * self.cond_means[c, policy[c]]
                for c, p in enumerate(self.context_probs)
            )
        )

    def baseline(self, policies=None) -> RegretBaseline:
        table = self.eval_policies if policies is None else [tuple(p) for p in policies]
        values = [self.expected_policy_loss(pol) for pol in table]
        best = 0
        for j in range(1, len(values)):
            if values[j] < values[best]:
                best = j
        return RegretBaseline(best_decision=best, per_round=values[best])

    def arm_baseline(self) -> RegretBaseline:
        """Baseline over constant (context-blind) policies, i.e. fixed arms."""
        constant = [(a,) * self.num_contexts for a in range(self.num_arms)]
        return self.baseline(policies=constant)


class LowerBoundEnv(Environment):
    """Four deterministic actions split into a cheap pair and a dear pair.

    At construction one of two symmetric environments is drawn uniformly:
    either actions {0, 1} carry the losses {0.1, 0.2} and actions {2, 3}
    carry {0.3, 0.4}, or the pairs are swapped; the assignment inside each
    pair is also uniform. Losses are constant for the rest of the run, so a
    learner that identifies the 0.1 action once never regrets again.
    """

    kind = "lower-bound"

    def __init__(self, rng):
        self.num_arms = 4
        cheap_first = float(rng.random()) < 0.5
        flip_cheap = float(rng.random()) < 0.5
        flip_dear = float(rng.random()) < 0.5
        cheap = (0.2, 0.1) if flip_cheap else (0.1, 0.2)
        dear = (0.4, 0.3) if flip_dear else (0.3, 0.4)
        if cheap_first:
            self.losses = cheap + dear
        else:
            self.losses = dear + cheap
        self.cheap_pair = (0, 1) if cheap_first else (2, 3)

    def next_context(self) -> int:
        return 0

    def loss_of(self, decision: int) -> float:
        return self.losses[_check_decision(decision, self.num_arms)]

    def baseline(self) -> RegretBaseline:
        best = self.losses.index(0.1)
        return RegretBaseline(best_decision=best, per_round=0.1)


class InducedEnvironment:
    """Importance-weighting wrapper around an inner environment.

    Each round: draw the selection event with probability ``p_t`` from the
    schedule; on success reveal the learner's loss divided by ``p_t``, on
    failure reveal zero and replay the learner's own decision to the inner
    environment. The schedule must stay in (0, 1] -- a zero selection
    probability leaves the weighted loss undefined, so it is rejected
    rather than given ad-hoc semantics.
    """

    kind = "induced"

    def __init__(self, inner: Environment, schedule: float | Schedule, rng):
        self.inner = inner
        if callable(schedule):
            self._schedule: Schedule = schedule
        else:
            value = float(schedule)
            self._schedule = lambda t, v=value: v
        self.rng = rng
        self._t = -1
        self._prob = 1.0
        self._raw = None

    @property
    def num_arms(self) -> int:
        return self.inner.num_arms

    @property
    def num_contexts(self) -> int:
        return self.inner.num_contexts

    def next_context(self) -> int:
        self._t += 1
        prob = float(self._schedule(self._t))
        if not math.isfinite(prob) or not 0.0 < prob <= 1.0:
            raise ConfigError(f"sampling schedule must stay in (0, 1], got {prob}")
        self._prob = prob
        return self.inner.next_context()

    @property
    def sampling_prob(self) -> float:
        return self._prob

    @property
    def last_raw_loss(self) -> float | None:
        """Inner loss behind the last observe call; experimenter-side only."""
        return self._raw

    def observe(self, decision: int) -> tuple[bool, float]:
        """Reveal (selected, emitted weighted loss) for the learner's decision."""
        raw = self.inner.loss_of(decision)
        self._raw = raw
        selected = float(self.rng.random()) < self._prob
        if selected:
            return True, raw / self._prob
        return False, 0.0

    def baseline(self) -> RegretBaseline:
        return self.inner.baseline()
