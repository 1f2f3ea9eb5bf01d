"""Stage-game solutions: competitive equilibrium and cooperative optimum.

In each slot the AON picks its access probability to minimize the expected
network age at the slot end, the TON to maximize its expected throughput.
Both problems have closed-form solutions with a threshold structure in the
current network age: below the threshold the AON is pinned to 0 or 1
(depending on which slot type is cheaper), above it an interior probability
applies.  A brute-force grid-search oracle is provided so tests can certify
the closed forms without re-deriving the optimality conditions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import (
    AccessProfile,
    ConfigurationError,
    NetworkSizes,
    SlotLengths,
    expected_network_throughput,
    expected_node_age,
    slot_probabilities_competitive,
    slot_probabilities_cooperative,
)

# Interior-formula output is clamped to [0, 1] only within this tolerance;
# anything farther out signals an unreachable parameter regime.
BOUNDARY_TOL = 1e-9


class OutOfRangeError(RuntimeError):
    """The interior access-probability formula left [0, 1] beyond tolerance."""


class Regime(enum.Enum):
    INTERIOR = "interior"
    FORCED_ONE = "forced_one"
    FORCED_ZERO = "forced_zero"


@dataclass(frozen=True)
class ThresholdAges:
    """Age thresholds of the three-branch access rule.

    ``th`` is the larger of the two candidate thresholds; which candidate
    wins decides whether the below-threshold branch transmits always or
    never.  ``th0`` degenerates to +/-inf when the TON is a single node
    (its equilibrium access probability 1 removes the interior trade-off).
    """

    th0: float
    th1: float
    th: float
    regime: Regime

    def __post_init__(self):
        if self.th != max(self.th0, self.th1):
            raise ConfigurationError("th must be the larger candidate threshold")


@dataclass(frozen=True)
class StagePayoffs:
    """Expected one-stage payoffs: the AON's is the negated network age."""

    u_aon: float
    u_ton: float

    def __post_init__(self):
        if self.u_ton < 0.0 or self.u_aon > 0.0:
            raise ConfigurationError("stage payoffs must satisfy u_ton >= 0 >= u_aon")


def _as_1d(delta):
    arr = np.atleast_1d(np.asarray(delta, dtype=np.float64))
    return arr, np.ndim(delta) == 0


def _three_branch(delta, th0: float, th1: float, interior) -> np.ndarray | float:
    """Evaluate the threshold rule; ties at th0 == th1 resolve to the silent branch."""
    th = max(th0, th1)
    pinned = 0.0 if th == th0 else 1.0
    arr, scalar = _as_1d(delta)
    out = np.full(arr.shape, pinned)
    mask = arr > th
    if np.any(mask):
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = interior(arr[mask])
        bad = ~np.isfinite(raw) | (raw < -BOUNDARY_TOL) | (raw > 1.0 + BOUNDARY_TOL)
        if np.any(bad):
            value = raw[np.nonzero(bad)[0][0]]
            raise OutOfRangeError(
                f"interior access probability {value} outside [0, 1] "
                f"(age {arr[mask][np.nonzero(bad)[0][0]]}, thresholds {th0}, {th1})"
            )
        out[mask] = np.clip(raw, 0.0, 1.0)
    return float(out[0]) if scalar else out


def _equal_slots_tau(delta, sizes: NetworkSizes, slots: SlotLengths):
    """AON access rule when success and collision slots have equal length."""
    na = sizes.n_aon
    si, ss, sc = slots.idle, slots.success, slots.collision

    def interior(d):
        return (na * (si - ss) + d) / (na * ((si - sc) + d))

    return _three_branch(delta, na * (ss - si), na * (ss - sc), interior)


def _msne_thresholds(sizes: NetworkSizes, slots: SlotLengths) -> tuple[float, float]:
    na, nt = sizes.n_aon, sizes.n_ton
    si, ss, sc = slots.idle, slots.success, slots.collision
    th1 = na * (ss - sc)
    if ss == sc:
        return na * (ss - si), th1
    if nt == 1:
        # tau_ton* = 1 makes the th0 denominator vanish; the sign of the
        # success/collision gap decides which branch survives.
        return (-np.inf if ss > sc else np.inf), th1
    tt = 1.0 / nt
    return na * (ss - si) - na * nt * tt * (ss - sc) / (1.0 - tt), th1


def _msne_tau(delta, sizes: NetworkSizes, slots: SlotLengths):
    """Competitive-equilibrium AON access probability (vectorized in the age)."""
    si, ss, sc = slots.idle, slots.success, slots.collision
    if ss == sc:
        return _equal_slots_tau(delta, sizes, slots)
    na, nt = sizes.n_aon, sizes.n_ton
    tt = 1.0 / nt
    th0, th1 = _msne_thresholds(sizes, slots)
    cross = na * nt * tt * (ss - sc)

    def interior(d):
        if na == 1:
            # Single-node AON: the stage objective is linear in the access
            # probability, the stationarity numerator and denominator
            # coincide, and the formula collapses to exactly 1.
            return np.ones_like(d)
        num = (1.0 - tt) * (d - na * (ss - si)) + cross
        den = (1.0 - tt) * na * (d + (si - sc) - na * (ss - sc)) + cross
        return num / den

    return _three_branch(delta, th0, th1, interior)


def _coop_thresholds(sizes: NetworkSizes, slots: SlotLengths) -> tuple[float, float]:
    na = sizes.n_aon
    return na * (slots.success - slots.idle), na * (slots.success - slots.collision)


def _coop_tau(delta, sizes: NetworkSizes, slots: SlotLengths):
    """Optimal AON access probability on the device-granted exclusive channel."""
    na = sizes.n_aon
    si, ss, sc = slots.idle, slots.success, slots.collision
    th0, th1 = _coop_thresholds(sizes, slots)

    def interior(d):
        if na == 1:
            # Same linear collapse as the competitive rule: one AON node has
            # no self-contention, so the interior formula is identically 1.
            return np.ones_like(d)
        return (d - na * (ss - si)) / (na * (d + (si - sc) - na * (ss - sc)))

    return _three_branch(delta, th0, th1, interior)


def _regime(delta: float, th0: float, th1: float) -> Regime:
    th = max(th0, th1)
    if delta > th:
        return Regime.INTERIOR
    return Regime.FORCED_ZERO if th == th0 else Regime.FORCED_ONE


def msne(
    sizes: NetworkSizes, slots: SlotLengths, network_age: float
) -> tuple[AccessProfile, ThresholdAges]:
    """Mixed-strategy equilibrium of the competitive stage game.

    The TON side is always ``1 / n_ton`` regardless of the AON; the AON side
    follows the three-branch threshold rule in the current network age.
    """
    if network_age < 0.0:
        raise ConfigurationError("network age must be non-negative")
    th0, th1 = _msne_thresholds(sizes, slots)
    tau_a = _msne_tau(network_age, sizes, slots)
    profile = AccessProfile(tau_aon=tau_a, tau_ton=1.0 / sizes.n_ton)
    return profile, ThresholdAges(th0, th1, max(th0, th1), _regime(network_age, th0, th1))


def msne_equal_slots(
    sizes: NetworkSizes, slots: SlotLengths, network_age: float
) -> AccessProfile:
    """Equilibrium specialization for equal success and collision slots."""
    if slots.success != slots.collision:
        raise ConfigurationError("equal-slots rule requires sigma_success == sigma_collision")
    if network_age < 0.0:
        raise ConfigurationError("network age must be non-negative")
    tau_a = _equal_slots_tau(network_age, sizes, slots)
    return AccessProfile(tau_aon=tau_a, tau_ton=1.0 / sizes.n_ton)


def cooperative_optimum(
    sizes: NetworkSizes, slots: SlotLengths, network_age: float
) -> tuple[AccessProfile, ThresholdAges]:
    """Optimal per-network access probabilities when the device grants access."""
    if network_age < 0.0:
        raise ConfigurationError("network age must be non-negative")
    th0, th1 = _coop_thresholds(sizes, slots)
    tau_a = _coop_tau(network_age, sizes, slots)
    profile = AccessProfile(tau_aon=tau_a, tau_ton=1.0 / sizes.n_ton)
    return profile, ThresholdAges(th0, th1, max(th0, th1), _regime(network_age, th0, th1))


def expected_stage_payoffs(
    sizes: NetworkSizes,
    slots: SlotLengths,
    profile: AccessProfile,
    network_age: float,
    rate: float,
    p_r: float | None = None,
) -> StagePayoffs:
    """Expected one-stage payoffs at a fixed profile.

    ``p_r=None`` evaluates the competitive channel, otherwise the cooperative
    channel with the given device bias.
    """
    if p_r is None:
        probs = slot_probabilities_competitive(sizes, profile)
    else:
        probs = slot_probabilities_cooperative(sizes, profile, p_r)
    return StagePayoffs(
        u_aon=-expected_node_age(probs, network_age, slots),
        u_ton=expected_network_throughput(probs, slots, rate),
    )


# Vectorized stage-payoff kernels shared by the simulation engine, the
# grid-search oracle, and the device-bias range scan.  They mirror the
# probability formulas in model.py term for term.


def _competitive_stage_age(tau_a, tau_t, sizes: NetworkSizes, slots: SlotLengths, delta):
    na, nt = sizes.n_aon, sizes.n_ton
    quiet_a = (1.0 - tau_a) ** na
    quiet_t = (1.0 - tau_t) ** nt
    succ_node_a = tau_a * (1.0 - tau_a) ** (na - 1) * quiet_t
    succ_node_t = tau_t * (1.0 - tau_t) ** (nt - 1) * quiet_a
    p_success = na * succ_node_a + nt * succ_node_t
    p_idle = quiet_a * quiet_t
    p_col = np.maximum(1.0 - p_success - p_idle, 0.0)
    growth = p_idle * slots.idle + p_success * slots.success + p_col * slots.collision
    return (1.0 - succ_node_a) * delta + growth


def _competitive_stage_throughput(tau_a, tau_t, sizes: NetworkSizes, slots: SlotLengths, rate):
    nt = sizes.n_ton
    succ_node_t = tau_t * (1.0 - tau_t) ** (nt - 1) * (1.0 - tau_a) ** sizes.n_aon
    return succ_node_t * slots.success * rate


def _cooperative_stage_age(
    tau_a, tau_t, p_r, sizes: NetworkSizes, slots: SlotLengths, delta
):
    na, nt = sizes.n_aon, sizes.n_ton
    sel_t = 1.0 - p_r
    succ_one_a = tau_a * (1.0 - tau_a) ** (na - 1)
    succ_one_t = tau_t * (1.0 - tau_t) ** (nt - 1)
    p_idle = p_r * (1.0 - tau_a) ** na + sel_t * (1.0 - tau_t) ** nt
    p_success = p_r * na * succ_one_a + sel_t * nt * succ_one_t
    p_col = np.maximum(1.0 - p_success - p_idle, 0.0)
    growth = p_idle * slots.idle + p_success * slots.success + p_col * slots.collision
    return (1.0 - p_r * succ_one_a) * delta + growth


def _cooperative_stage_throughput(
    tau_t, p_r, sizes: NetworkSizes, slots: SlotLengths, rate
):
    succ_one_t = tau_t * (1.0 - tau_t) ** (sizes.n_ton - 1)
    return (1.0 - p_r) * succ_one_t * slots.success * rate


def best_response_oracle(objective, grid_step: float) -> float:
    """Exhaustive grid search over access probabilities in [0, 1].

    ``objective`` maps an array of candidate probabilities to their payoffs
    (minimizers should negate their objective).  Returns the first grid
    argmax.  Test-only machinery for certifying the closed forms.
    """
    if not 0.0 < grid_step <= 0.01:
        raise ConfigurationError("grid step must lie in (0, 0.01]")
    taus = np.linspace(0.0, 1.0, int(round(1.0 / grid_step)) + 1)
    values = np.asarray(objective(taus), dtype=np.float64)
    if values.shape != taus.shape:
        values = np.asarray([float(objective(t)) for t in taus])
    return float(taus[int(np.argmax(values))])


@dataclass(frozen=True)
class CooperationRange:
    """Device biases at which both networks prefer cooperating in one stage.

    ``intervals`` are closed intervals of grid points where both one-shot
    payoff comparisons favor the cooperative channel.  The two ``reported_*``
    fields restate the published closed-form bounds for comparison only; the
    grid evaluation of the payoff inequalities is the ground truth.
    """

    intervals: tuple[tuple[float, float], ...]
    grid_step: float
    reported_lower_bound: float
    reported_upper_bound: float

    def contains(self, p_r: float) -> bool:
        return any(lo <= p_r <= hi for lo, hi in self.intervals)


def cooperation_beneficial_pr_set(
    sizes: NetworkSizes,
    slots: SlotLengths,
    network_age: float,
    pr_grid_step: float = 1e-3,
) -> CooperationRange:
    """Scan the device bias for one-shot mutual benefit of cooperation.

    Both networks compare their expected stage payoff on the cooperative
    channel (at the cooperative optimum) with the competitive one (at the
    equilibrium).  The transmission rate scales both throughput sides equally
    and cannot change the outcome, so it is fixed at 1 here.
    """
    if not 0.0 < pr_grid_step <= 0.01:
        raise ConfigurationError("grid step must lie in (0, 0.01]")
    nash, _ = msne(sizes, slots, network_age)
    coop, _ = cooperative_optimum(sizes, slots, network_age)
    base = expected_stage_payoffs(sizes, slots, nash, network_age, rate=1.0)

    pr = np.linspace(0.0, 1.0, int(round(1.0 / pr_grid_step)) + 1)
    age_c = _cooperative_stage_age(coop.tau_aon, coop.tau_ton, pr, sizes, slots, network_age)
    thr_c = _cooperative_stage_throughput(coop.tau_ton, pr, sizes, slots, 1.0)
    ok = (-age_c >= base.u_aon) & (thr_c >= base.u_ton)

    intervals = []
    start = None
    for i, good in enumerate(ok):
        if good and start is None:
            start = i
        elif not good and start is not None:
            intervals.append((float(pr[start]), float(pr[i - 1])))
            start = None
    if start is not None:
        intervals.append((float(pr[start]), float(pr[-1])))

    return CooperationRange(
        intervals=tuple(intervals),
        grid_step=pr_grid_step,
        reported_lower_bound=_reported_pr_lower_bound(sizes, slots, network_age, nash, coop),
        reported_upper_bound=1.0 - (1.0 - nash.tau_aon) ** sizes.n_aon,
    )


def _reported_pr_lower_bound(sizes, slots, network_age, nash, coop) -> float:
    """Published closed-form lower bound on the beneficial device bias.

    Solves the AON's linear-in-bias payoff comparison; reported for
    diagnostics, with the grid scan treated as authoritative.
    """
    na, nt = sizes.n_aon, sizes.n_ton
    si, ss, sc = slots.idle, slots.success, slots.collision
    probs = slot_probabilities_competitive(sizes, nash)
    ta, tt = coop.tau_aon, coop.tau_ton
    succ_one_a = ta * (1.0 - ta) ** (na - 1)
    succ_one_t = tt * (1.0 - tt) ** (nt - 1)
    num = (
        network_age * probs.p_success_node_aon
        - (si - sc) * (probs.p_idle - (1.0 - tt) ** nt)
        - (ss - sc) * (probs.p_success_total - nt * succ_one_t)
    )
    den = (
        network_age * succ_one_a
        - (si - sc) * ((1.0 - ta) ** na - (1.0 - tt) ** nt)
        - (ss - sc) * (na * succ_one_a - nt * succ_one_t)
    )
    if den == 0.0:
        return float("nan")
    return num / den
