"""Distributed binary testing: LRT decisions from quantized messages and a
Monte Carlo error / sample-complexity estimator.

Users observe iid samples, each pushed through a per-user channel (round
robin over `TestRule.channels`); the referee compares the log-likelihoods of
the message vector under the two hypotheses. Ties go to P.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import Channel, Distribution, apply_channel
from .errors import DimensionError, NonConvergenceError, ValidationError

DEFAULT_ERROR_BUDGET = 0.1
_Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class TestRule:
    """Channels assigned round robin: user i uses channels[i % len(channels)]."""

    __test__ = False  # statistical test rule, not a pytest case

    channels: tuple[Channel, ...]

    def __init__(self, channels: Sequence[Channel]):
        channels = tuple(channels)
        if not channels:
            raise ValidationError("a test rule needs at least one channel")
        k = channels[0].in_size
        if any(c.in_size != k for c in channels):
            raise DimensionError("all channels must share the input alphabet")
        object.__setattr__(self, "channels", channels)

    @property
    def identical(self) -> bool:
        return len(self.channels) == 1

    @property
    def in_size(self) -> int:
        return self.channels[0].in_size

    def channel_for(self, user: int) -> Channel:
        return self.channels[user % len(self.channels)]


def _log_likelihood_ratio(channel: Channel, p: Distribution, q: Distribution) -> np.ndarray:
    """Per-message log((Tp)_y / (Tq)_y); messages impossible under both get 0."""
    tp = apply_channel(channel, p).probs
    tq = apply_channel(channel, q).probs
    with np.errstate(divide="ignore"):
        llr = np.log(tp) - np.log(tq)
    llr[(tp == 0) & (tq == 0)] = 0.0
    return llr


def lrt_decide(
    p: Distribution, q: Distribution, rule: TestRule, messages: Sequence[int]
) -> str:
    """Decide "P" or "Q" from one message per user; ties go to P."""
    stat = 0.0
    for user, y in enumerate(messages):
        channel = rule.channel_for(user)
        if not (0 <= y < channel.out_size):
            raise ValidationError(f"message {y} out of range for user {user}")
        llr = _log_likelihood_ratio(channel, p, q)
        stat += float(llr[y])
        if math.isnan(stat):  # +inf followed by -inf: treat as balanced
            stat = 0.0
    return "P" if stat >= 0 else "Q"


@dataclass(frozen=True)
class SimulationReport:
    n: int
    trials: int
    error_p: float            # P(decide Q | truth P-branch)
    error_q: float            # P(decide P | truth Q-branch)
    error_sum_estimate: float
    ci_halfwidth: float
    seed: int

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "error_p": self.error_p,
            "error_q": self.error_q,
            "error_sum_estimate": self.error_sum_estimate,
            "ci_halfwidth": self.ci_halfwidth,
            "seed": self.seed,
        }


def _group_sizes(rule: TestRule, n: int) -> list[int]:
    g = len(rule.channels)
    return [(n - i + g - 1) // g for i in range(g)]


def _simulate_branch(
    rule: TestRule,
    p: Distribution,
    q: Distribution,
    truth: Distribution,
    n: int,
    trials: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """LRT statistics for `trials` runs of n users sampling from `truth`.

    Message counts per channel group are multinomial draws from T @ truth,
    which matches per-user sampling exactly (users are iid within a group).
    """
    stats = np.zeros(trials)
    for channel, n_g in zip(rule.channels, _group_sizes(rule, n)):
        if n_g == 0:
            continue
        msg_dist = apply_channel(channel, truth).probs
        llr = _log_likelihood_ratio(channel, p, q)
        counts = rng.multinomial(n_g, msg_dist, size=trials)
        with np.errstate(invalid="ignore"):
            contrib = np.where(counts > 0, counts * llr[np.newaxis, :], 0.0)
        stats += np.where(np.isnan(contrib), 0.0, contrib).sum(axis=1)
    return stats


def simulate_error(
    rule: TestRule,
    p: Distribution,
    q: Distribution,
    n: int,
    trials: int = 20000,
    seed: int = 0,
    p_sampler: Distribution | None = None,
    q_sampler: Distribution | None = None,
) -> SimulationReport:
    """Estimate the total error of the LRT rule at sample size n.

    Runs a P-branch (sampling from `p_sampler`, default p; wrong = decide Q)
    and a Q-branch (sampling from `q_sampler`, default q; wrong = decide P)
    and sums the two error frequencies.
    """
    if n < 1 or trials < 1:
        raise ValidationError("n and trials must be positive")
    seq = np.random.SeedSequence(seed)
    child_p, child_q = seq.spawn(2)
    truth_p = p_sampler if p_sampler is not None else p
    truth_q = q_sampler if q_sampler is not None else q

    stats_p = _simulate_branch(rule, p, q, truth_p, n, trials, np.random.default_rng(child_p))
    stats_q = _simulate_branch(rule, p, q, truth_q, n, trials, np.random.default_rng(child_q))
    err_p = float(np.count_nonzero(stats_p < 0)) / trials
    err_q = float(np.count_nonzero(stats_q >= 0)) / trials
    var = err_p * (1 - err_p) / trials + err_q * (1 - err_q) / trials
    return SimulationReport(
        n=n,
        trials=trials,
        error_p=err_p,
        error_q=err_q,
        error_sum_estimate=err_p + err_q,
        ci_halfwidth=_Z95 * math.sqrt(var),
        seed=seed,
    )


def scheffe_channel(p: Distribution, q: Distribution) -> Channel:
    """Binary indicator of the set A = {x : p(x) >= q(x)}; output 0 reports
    membership in A, so it preserves total variation exactly."""
    if p.k != q.k:
        raise DimensionError(f"alphabet mismatch: {p.k} vs {q.k}")
    in_a = p.probs >= q.probs
    m = np.vstack([in_a.astype(float), (~in_a).astype(float)])
    return Channel(m)


def empirical_sample_complexity(
    rule_factory: Callable[[int], TestRule],
    p: Distribution,
    q: Distribution,
    trials: int = 20000,
    seed: int = 0,
    budget: float = DEFAULT_ERROR_BUDGET,
    n_max: int = 1_000_000,
) -> int:
    """Smallest n whose estimated total error (plus CI half-width) is within
    `budget`, found by doubling then bisection. Deterministic given `seed`."""

    def accept(n: int) -> bool:
        run_seed = int(np.random.SeedSequence((seed, n)).generate_state(1)[0])
        rep = simulate_error(rule_factory(n), p, q, n, trials=trials, seed=run_seed)
        return rep.error_sum_estimate + rep.ci_halfwidth <= budget

    n = 1
    if accept(n):
        return n
    while True:
        lo, n = n, n * 2
        if n > n_max:
            raise NonConvergenceError(f"no acceptable n found up to {n_max}")
        if accept(n):
            break
    hi = n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if accept(mid):
            hi = mid
        else:
            lo = mid
    return hi
