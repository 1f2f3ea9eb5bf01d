"""Domain types and slot-level dynamics of the shared collision channel.

Two networks contend for a slotted medium: an age-optimizing network (AON)
whose nodes want fresh status updates at their peers, and a
throughput-optimizing network (TON) whose nodes want successful bits.  A slot
is idle (nobody transmits), a success (exactly one transmitter), or a
collision (two or more).  This module provides the closed-form slot-outcome
probabilities for the competitive mode (both networks access) and the
cooperative mode (a coordination device grants exclusive access), stochastic
slot sampling, and the age bookkeeping that drives the repeated games.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

# Probability identities (partition sums, derived means) are checked to this
# absolute tolerance; violations indicate a bug, not noise.
PROB_ATOL = 1e-12


class ConfigurationError(ValueError):
    """A domain object or argument violates its invariants."""


class Network(enum.Enum):
    AON = "aon"
    TON = "ton"


class Recommendation(enum.Enum):
    """Coordination-device coin toss: heads lets the AON access, tails the TON."""

    HEADS = "heads"
    TAILS = "tails"


@dataclass(frozen=True)
class SlotLengths:
    """Durations of the three slot types, in normalized time units."""

    idle: float
    success: float
    collision: float

    def __post_init__(self):
        if min(self.idle, self.success, self.collision) <= 0.0:
            raise ConfigurationError("slot lengths must be strictly positive")
        if not self.idle < self.success:
            # Carrier sensing keeps idle slots much shorter than data slots.
            raise ConfigurationError("idle slot must be shorter than a success slot")


@dataclass(frozen=True)
class NetworkSizes:
    n_aon: int
    n_ton: int

    def __post_init__(self):
        if self.n_aon < 1 or self.n_ton < 1:
            raise ConfigurationError("both networks need at least one node")


@dataclass(frozen=True)
class AccessProfile:
    """Per-network transmit probabilities for one stage."""

    tau_aon: float
    tau_ton: float

    def __post_init__(self):
        for tau in (self.tau_aon, self.tau_ton):
            if not 0.0 <= tau <= 1.0:
                raise ConfigurationError(f"access probability {tau} outside [0, 1]")


@dataclass(frozen=True)
class ScenarioParams:
    """Full parameterization of a coexistence scenario.

    ``initial_age`` defaults to the success-slot length, i.e. every AON node
    starts as if it had just delivered an update.
    """

    sizes: NetworkSizes
    slots: SlotLengths
    rate: float = 1.0
    alpha: float = 0.9
    p_r: float = 0.5
    initial_age: float | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError("discount factor must lie in (0, 1)")
        if not 0.0 <= self.p_r <= 1.0:
            raise ConfigurationError("device bias must lie in [0, 1]")
        if self.rate <= 0.0:
            raise ConfigurationError("transmission rate must be positive")
        if self.initial_age is None:
            object.__setattr__(self, "initial_age", self.slots.success)
        elif self.initial_age < 0.0:
            raise ConfigurationError("initial age must be non-negative")


@dataclass(frozen=True)
class SlotProbabilities:
    """Slot-outcome probabilities for one stage under a fixed access profile.

    ``p_success_node_*`` is the probability that one given node of that
    network is the single transmitter; ``p_busy_*`` that a given node stays
    silent while exactly one other node succeeds.
    """

    p_idle: float
    p_success_total: float
    p_success_node_aon: float
    p_success_node_ton: float
    p_busy_aon: float
    p_busy_ton: float
    p_collision: float

    def validate(self, sizes: NetworkSizes) -> None:
        fields = (
            self.p_idle,
            self.p_success_total,
            self.p_success_node_aon,
            self.p_success_node_ton,
            self.p_busy_aon,
            self.p_busy_ton,
            self.p_collision,
        )
        if any(not (-PROB_ATOL <= p <= 1.0 + PROB_ATOL) for p in fields):
            raise ConfigurationError(f"probability outside [0, 1]: {self}")
        if abs(self.p_idle + self.p_success_total + self.p_collision - 1.0) > PROB_ATOL:
            raise ConfigurationError("slot-type probabilities do not sum to 1")
        for p_succ, p_busy in (
            (self.p_success_node_aon, self.p_busy_aon),
            (self.p_success_node_ton, self.p_busy_ton),
        ):
            part = p_succ + p_busy + self.p_idle + self.p_collision
            if abs(part - 1.0) > PROB_ATOL:
                raise ConfigurationError("per-node event partition does not sum to 1")
        total = sizes.n_aon * self.p_success_node_aon + sizes.n_ton * self.p_success_node_ton
        if abs(total - self.p_success_total) > PROB_ATOL:
            raise ConfigurationError("per-node successes do not aggregate to p_success_total")


class SlotKind(enum.Enum):
    IDLE = "idle"
    SUCCESS_AON = "success_aon"
    SUCCESS_TON = "success_ton"
    COLLISION = "collision"


@dataclass(frozen=True)
class SlotEvent:
    """Realized outcome of one slot; ``node`` identifies the lone transmitter."""

    kind: SlotKind
    node: int | None = None

    def __post_init__(self):
        needs_node = self.kind in (SlotKind.SUCCESS_AON, SlotKind.SUCCESS_TON)
        if needs_node and (self.node is None or self.node < 0):
            raise ConfigurationError("success events must carry the transmitter index")
        if not needs_node and self.node is not None:
            raise ConfigurationError(f"{self.kind} events carry no node index")


@dataclass(frozen=True)
class AgeState:
    """Per-AON-node update ages at a slot boundary plus their network mean."""

    ages: np.ndarray
    network_age: float

    def __post_init__(self):
        ages = np.asarray(self.ages, dtype=np.float64)
        if ages.ndim != 1 or ages.size == 0:
            raise ConfigurationError("ages must be a non-empty vector")
        if np.any(ages < 0.0):
            raise ConfigurationError("ages must be non-negative")
        ages = ages.copy()
        ages.flags.writeable = False
        object.__setattr__(self, "ages", ages)
        if abs(self.network_age - ages.mean()) > PROB_ATOL:
            raise ConfigurationError("network_age must equal the mean of the node ages")

    @classmethod
    def from_ages(cls, ages) -> "AgeState":
        ages = np.asarray(ages, dtype=np.float64)
        return cls(ages=ages, network_age=float(ages.mean()) if ages.size else float("nan"))

    @classmethod
    def uniform(cls, n_nodes: int, age: float) -> "AgeState":
        return cls.from_ages(np.full(n_nodes, age, dtype=np.float64))


def _clip_probability(p: float) -> float:
    # Rounding in 1 - p_S - p_I can leave a tiny negative residue.
    if -PROB_ATOL < p < 0.0:
        return 0.0
    return p


def slot_probabilities_competitive(
    sizes: NetworkSizes, profile: AccessProfile
) -> SlotProbabilities:
    """Slot-outcome probabilities when both networks contend in the same slot."""
    ta, tt = profile.tau_aon, profile.tau_ton
    na, nt = sizes.n_aon, sizes.n_ton
    quiet_a = (1.0 - ta) ** na
    quiet_t = (1.0 - tt) ** nt
    succ_node_a = ta * (1.0 - ta) ** (na - 1) * quiet_t
    succ_node_t = tt * (1.0 - tt) ** (nt - 1) * quiet_a
    p_success = na * succ_node_a + nt * succ_node_t
    p_idle = quiet_a * quiet_t
    probs = SlotProbabilities(
        p_idle=p_idle,
        p_success_total=p_success,
        p_success_node_aon=succ_node_a,
        p_success_node_ton=succ_node_t,
        p_busy_aon=(na - 1) * succ_node_a + nt * succ_node_t,
        p_busy_ton=(nt - 1) * succ_node_t + na * succ_node_a,
        p_collision=_clip_probability(1.0 - p_success - p_idle),
    )
    probs.validate(sizes)
    return probs


def slot_probabilities_cooperative(
    sizes: NetworkSizes, profile: AccessProfile, p_r: float
) -> SlotProbabilities:
    """Slot-outcome probabilities under the coordination device.

    The device grants the AON exclusive access with probability ``p_r`` and
    the TON otherwise, so the channel is a ``p_r``-weighted mixture of the two
    single-network channels and the networks never collide with each other.
    """
    if not 0.0 <= p_r <= 1.0:
        raise ConfigurationError("device bias must lie in [0, 1]")
    ta, tt = profile.tau_aon, profile.tau_ton
    na, nt = sizes.n_aon, sizes.n_ton
    sel_t = 1.0 - p_r
    succ_one_a = ta * (1.0 - ta) ** (na - 1)
    succ_one_t = tt * (1.0 - tt) ** (nt - 1)
    p_idle = p_r * (1.0 - ta) ** na + sel_t * (1.0 - tt) ** nt
    p_success = p_r * na * succ_one_a + sel_t * nt * succ_one_t
    probs = SlotProbabilities(
        p_idle=p_idle,
        p_success_total=p_success,
        p_success_node_aon=p_r * succ_one_a,
        p_success_node_ton=sel_t * succ_one_t,
        p_busy_aon=p_r * (na - 1) * succ_one_a + sel_t * nt * succ_one_t,
        p_busy_ton=sel_t * (nt - 1) * succ_one_t + p_r * na * succ_one_a,
        p_collision=_clip_probability(1.0 - p_success - p_idle),
    )
    probs.validate(sizes)
    return probs


def expected_node_age(
    probs: SlotProbabilities,
    prior_age: float,
    slots: SlotLengths,
    network: Network = Network.AON,
) -> float:
    """Expected age of one AON node at the end of a slot, given its prior age.

    The node's age resets to the success-slot length if it transmits alone;
    otherwise it grows by the length of whatever slot occurred.
    """
    if network is not Network.AON:
        raise ConfigurationError("age is defined only for AON nodes")
    if prior_age < 0.0:
        raise ConfigurationError("prior age must be non-negative")
    growth = (
        probs.p_idle * slots.idle
        + probs.p_success_total * slots.success
        + probs.p_collision * slots.collision
    )
    return (1.0 - probs.p_success_node_aon) * prior_age + growth


def network_age(state: AgeState) -> float:
    """Arithmetic mean of the per-node ages."""
    return float(np.asarray(state.ages).mean())


def expected_network_throughput(
    probs: SlotProbabilities, slots: SlotLengths, rate: float
) -> float:
    """Mean TON bits per slot: node success probability times slot payload."""
    return probs.p_success_node_ton * slots.success * rate


def sample_slot(
    rng: np.random.Generator,
    sizes: NetworkSizes,
    profile: AccessProfile,
    recommendation: Recommendation | None = None,
) -> SlotEvent:
    """Draw one slot outcome.

    Each eligible node transmits independently with its network's access
    probability.  ``recommendation`` switches to cooperative mode: the
    selected network keeps its access probability while the other stays
    silent.  ``None`` means competitive mode (both networks eligible).
    """
    aon_tx = np.zeros(0, dtype=np.int64)
    ton_tx = np.zeros(0, dtype=np.int64)
    if recommendation is not Recommendation.TAILS:
        aon_tx = np.nonzero(rng.random(sizes.n_aon) < profile.tau_aon)[0]
    if recommendation is not Recommendation.HEADS:
        ton_tx = np.nonzero(rng.random(sizes.n_ton) < profile.tau_ton)[0]
    total = aon_tx.size + ton_tx.size
    if total == 0:
        return SlotEvent(SlotKind.IDLE)
    if total >= 2:
        return SlotEvent(SlotKind.COLLISION)
    if aon_tx.size == 1:
        return SlotEvent(SlotKind.SUCCESS_AON, node=int(aon_tx[0]))
    return SlotEvent(SlotKind.SUCCESS_TON, node=int(ton_tx[0]))


def apply_slot(state: AgeState, event: SlotEvent, slots: SlotLengths) -> AgeState:
    """Advance all AON ages by one slot outcome.

    A success by AON node ``i`` resets that node's age to the success-slot
    length while every other node ages by it; any other outcome ages all
    nodes by the realized slot length.
    """
    ages = state.ages.copy()
    if event.kind is SlotKind.IDLE:
        ages += slots.idle
    elif event.kind is SlotKind.COLLISION:
        ages += slots.collision
    elif event.kind is SlotKind.SUCCESS_TON:
        ages += slots.success
    else:
        if event.node >= ages.size:
            raise ConfigurationError("transmitter index outside the AON")
        ages += slots.success
        ages[event.node] = slots.success
    return AgeState.from_ages(ages)
