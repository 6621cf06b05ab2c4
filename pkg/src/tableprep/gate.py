"""Group reward statistics, advantage normalization, and the variance gate.

Statistics are population statistics (divide by group size) and are computed
on exact rationals, so threshold comparisons in the gate are reproducible.
Advantages divide each reward's deviation by (std + epsilon); the epsilon
keeps constant groups at exactly zero instead of dividing by zero.

The gate rejects groups whose reward variance is below the variance threshold
(noise would be amplified into large advantages) or whose best reward is below
the quality threshold (the group would reinforce a merely least-bad output).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Sequence

from .errors import EmptyGroupError, GroupTooSmallError
from .ops import Pipeline

LOW_VARIANCE = "low_variance"
LOW_QUALITY = "low_quality"


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # via str() so 0.1 means one tenth, not its binary neighbor
        return Fraction(str(x))
    if isinstance(x, (int, Decimal)):
        return Fraction(x)
    return Fraction(str(x))


@dataclass(frozen=True)
class GateConfig:
    variance_threshold: Fraction = Fraction(1, 10)
    quality_threshold: Fraction = Fraction(1, 2)
    advantage_epsilon: Fraction = Fraction(1, 10**6)
    max_resample_attempts: int = 4

    def __post_init__(self):
        if self.variance_threshold < 0:
            raise ValueError("variance_threshold must be >= 0")
        if self.advantage_epsilon <= 0:
            raise ValueError("advantage_epsilon must be > 0")
        if self.max_resample_attempts < 1:
            raise ValueError("max_resample_attempts must be >= 1")

    @classmethod
    def from_json(cls, doc: dict) -> "GateConfig":
        kwargs = {}
        for key in ("variance_threshold", "quality_threshold", "advantage_epsilon"):
            if key in doc:
                kwargs[key] = as_fraction(doc[key])
        if "max_resample_attempts" in doc:
            kwargs["max_resample_attempts"] = int(doc["max_resample_attempts"])
        return cls(**kwargs)


@dataclass(frozen=True)
class GroupStats:
    mean: Fraction
    variance: Fraction
    std: float
    max: Fraction
    size: int


def group_stats(rewards: Sequence) -> GroupStats:
    """Population mean/variance/std/max of a reward group."""
    if not rewards:
        raise EmptyGroupError("cannot compute statistics of an empty group")
    values = [as_fraction(r) for r in rewards]
    n = len(values)
    mean = sum(values, Fraction(0)) / n
    variance = sum(((v - mean) ** 2 for v in values), Fraction(0)) / n
    return GroupStats(
        mean=mean,
        variance=variance,
        std=math.sqrt(variance),
        max=max(values),
        size=n,
    )


def advantages(rewards: Sequence, advantage_epsilon=Fraction(1, 10**6)) -> list[Fraction]:
    """Normalized deviations (R_i - mean) / (std + epsilon).

    Exact rationals: the denominator is shared, so the advantages sum to zero
    exactly and constant groups map to exact zeros.
    """
    if len(rewards) < 2:
        raise GroupTooSmallError("advantages need a group of at least 2")
    stats = group_stats(rewards)
    denominator = Fraction(stats.std) + as_fraction(advantage_epsilon)
    values = [as_fraction(r) for r in rewards]
    return [(v - stats.mean) / denominator for v in values]


@dataclass(frozen=True)
class GateDecision:
    accepted: bool
    reason: str | None = None  # LOW_VARIANCE or LOW_QUALITY when rejected


def vgr_accept(rewards: Sequence, config: GateConfig | None = None) -> GateDecision:
    """Apply both group constraints; the first failing one names the rejection.

    Variance is checked before quality.
    """
    cfg = config or GateConfig()
    stats = group_stats(rewards)
    if stats.variance < cfg.variance_threshold:
        return GateDecision(False, LOW_VARIANCE)
    if stats.max < cfg.quality_threshold:
        return GateDecision(False, LOW_QUALITY)
    return GateDecision(True)


@dataclass(frozen=True)
class GroupMember:
    output_text: str
    reward: Fraction
    pipeline: Pipeline | None = None


@dataclass(frozen=True)
class CandidateGroup:
    members: tuple[GroupMember, ...]

    @property
    def rewards(self) -> list[Fraction]:
        return [m.reward for m in self.members]


@dataclass(frozen=True)
class SampleOutcome:
    group: CandidateGroup | None  # None when exhausted
    advantages: tuple[Fraction, ...] | None
    attempts: int
    rejection_reasons: tuple[str, ...]

    @property
    def accepted(self) -> bool:
        return self.group is not None


def sample_accepted_group(
    source: Callable[[int], Sequence[GroupMember]],
    group_size: int,
    config: GateConfig | None = None,
) -> SampleOutcome:
    """Draw whole groups from ``source`` until one passes the gate.

    Rejected groups are discarded and drawn afresh; after the configured
    number of attempts the outcome is exhausted, carrying every rejection
    reason seen.
    """
    cfg = config or GateConfig()
    if group_size < 2:
        raise GroupTooSmallError("group_size must be at least 2")
    reasons: list[str] = []
    for attempt in range(1, cfg.max_resample_attempts + 1):
        members = tuple(source(group_size))
        group = CandidateGroup(members)
        decision = vgr_accept(group.rewards, cfg)
        if decision.accepted:
            adv = tuple(advantages(group.rewards, cfg.advantage_epsilon))
            return SampleOutcome(group, adv, attempt, tuple(reasons))
        reasons.append(decision.reason or "rejected")
    return SampleOutcome(None, None, cfg.max_resample_attempts, tuple(reasons))


def gate_record(instance_id: str, outcome: SampleOutcome) -> dict:
    """JSON shape emitted per group decision (one JSONL line)."""
    record = {
        "instance_id": instance_id,
        "accepted": outcome.accepted,
        "attempts": outcome.attempts,
        "rejected_reasons": list(outcome.rejection_reasons),
        "rewards": None,
        "advantages": None,
    }
    if outcome.group is not None:
        record["rewards"] = [float(r) for r in outcome.group.rewards]
        record["advantages"] = [float(a) for a in outcome.advantages or ()]
    return record
