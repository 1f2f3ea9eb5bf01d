"""Grim-trigger coexistence etiquette and self-enforceability analysis.

Under the etiquette both networks obey the coordination device; the first
disobeyed recommendation sends the game into competitive equilibrium play
forever.  Obedience is self-enforceable when, for either stage-1
recommendation, neither network gains from a unilateral stage-1 deviation.
That gives four payoff inequalities, estimated here by paired Monte Carlo:
the compliance branch forces the recommended stage-1 profile and then
cooperates forever, the deviation branch plays the deviating stage-1 profile
and then competes forever, and both branches of a run consume the same
uniform rows so the margin is a paired difference.

Only two deviation trajectories exist dynamically: both deviations onto
``(access, access)`` share one law, as do both onto ``(backoff, backoff)``
(an idle slot).  Margins within two standard errors of zero are reported as
indeterminate rather than forced to a boolean.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import equilibrium as eq
from .model import (
    ConfigurationError,
    NetworkSizes,
    Recommendation,
    ScenarioParams,
    SlotLengths,
    AccessProfile,
)
from .seeding import derive_seed, run_generator
from .sim import _Engine
from . import model as _model

_DEFAULT_CHUNK = 2048


class DeviationCase(enum.Enum):
    """The four unilateral stage-1 deviations from the device."""

    H_TON_DEVIATES = "h_ton_deviates"
    H_AON_DEVIATES = "h_aon_deviates"
    T_AON_DEVIATES = "t_aon_deviates"
    T_TON_DEVIATES = "t_ton_deviates"

    @property
    def recommendation(self) -> Recommendation:
        if self in (DeviationCase.H_TON_DEVIATES, DeviationCase.H_AON_DEVIATES):
            return Recommendation.HEADS
        return Recommendation.TAILS

    @property
    def joint_access(self) -> bool:
        """True when the deviation puts both networks on the air."""
        return self in (DeviationCase.H_TON_DEVIATES, DeviationCase.T_AON_DEVIATES)


@dataclass(frozen=True)
class ComplianceFlag:
    """Whether the stage's action profile matched the recommendation."""

    stage: int
    recommendation: Recommendation
    obeyed: bool


class Feasibility(enum.Enum):
    YES = 1
    NO = 0
    INDETERMINATE = -1

    def to_int(self) -> int:
        return self.value


def feasibility_and(*states: Feasibility) -> Feasibility:
    if any(s is Feasibility.NO for s in states):
        return Feasibility.NO
    if all(s is Feasibility.YES for s in states):
        return Feasibility.YES
    return Feasibility.INDETERMINATE


@dataclass(frozen=True)
class InequalityEstimate:
    """Monte Carlo estimate of one obey-versus-deviate payoff comparison."""

    name: str
    obey_mean: float
    deviate_mean: float
    margin: float
    se: float

    @property
    def holds(self) -> bool:
        return self.margin >= 0.0

    @property
    def decided(self) -> bool:
        return abs(self.margin) >= 2.0 * self.se

    @property
    def status(self) -> Feasibility:
        if not self.decided:
            return Feasibility.INDETERMINATE
        return Feasibility.YES if self.holds else Feasibility.NO


@dataclass(frozen=True)
class DeviationReport:
    """The four inequality estimates plus stage-1 diagnostics.

    ``stage1_age_mc`` / ``stage1_throughput_mc`` map each branch (keys
    ``obey_heads``, ``obey_tails``, ``deviate_joint``, ``deviate_idle``) to a
    ``(mean, standard error)`` pair of its Monte Carlo stage-1 outcome, for
    cross-checking against the analytic stage-1 forms.
    """

    aon_obeys_heads: InequalityEstimate
    ton_obeys_heads: InequalityEstimate
    aon_obeys_tails: InequalityEstimate
    ton_obeys_tails: InequalityEstimate
    stage1_age_mc: dict
    stage1_throughput_mc: dict
    stage1_profile: AccessProfile
    n_runs: int

    @property
    def inequalities(self) -> tuple[InequalityEstimate, ...]:
        return (
            self.aon_obeys_heads,
            self.ton_obeys_heads,
            self.aon_obeys_tails,
            self.ton_obeys_tails,
        )

    @property
    def aon_prefers(self) -> Feasibility:
        return feasibility_and(self.aon_obeys_heads.status, self.aon_obeys_tails.status)

    @property
    def ton_prefers(self) -> Feasibility:
        return feasibility_and(self.ton_obeys_heads.status, self.ton_obeys_tails.status)

    @property
    def self_enforceable(self) -> Feasibility:
        return feasibility_and(self.aon_prefers, self.ton_prefers)


def expected_next_network_age(
    case: Recommendation | DeviationCase,
    sizes: NetworkSizes,
    slots: SlotLengths,
    profile_hat: AccessProfile,
    network_age: float,
) -> float:
    """Closed-form expected network age after stage 1 for one etiquette case.

    ``profile_hat`` is the cooperative-optimum profile at ``network_age``.
    A ``Recommendation`` means both networks obeyed it; a ``DeviationCase``
    names the unilateral deviation.  The obey-tails form follows the
    published display literally, whose idle-slot weight is written with the
    AON's (silent) access probability.
    """
    na, nt = sizes.n_aon, sizes.n_ton
    si, ss, sc = slots.idle, slots.success, slots.collision
    ta, tt = profile_hat.tau_aon, profile_hat.tau_ton
    one_a = ta * (1.0 - ta) ** (na - 1)
    one_t = tt * (1.0 - tt) ** (nt - 1)
    quiet_a = (1.0 - ta) ** na
    quiet_t = (1.0 - tt) ** nt
    if case is Recommendation.HEADS:
        return network_age * (1.0 - one_a) + sc + quiet_a * (si - sc) + na * one_a * (ss - sc)
    if case is Recommendation.TAILS:
        return network_age + sc + quiet_a * (si - sc) + nt * one_t * (ss - sc)
    if isinstance(case, DeviationCase):
        if not case.joint_access:
            # Both networks silent: the slot is idle with certainty.
            return network_age + si
        return (
            network_age * (1.0 - one_a * quiet_t)
            + sc
            + quiet_t * quiet_a * (si - sc)
            + (na * one_a * quiet_t + nt * one_t * quiet_a) * (ss - sc)
        )
    raise ConfigurationError(f"unknown stage-1 case: {case!r}")


def stage1_expected_ton_throughput(
    case: Recommendation | DeviationCase,
    sizes: NetworkSizes,
    slots: SlotLengths,
    profile_hat: AccessProfile,
    rate: float,
) -> float:
    """Closed-form expected TON network throughput in stage 1 for one case."""
    nt = sizes.n_ton
    ta, tt = profile_hat.tau_aon, profile_hat.tau_ton
    one_t = tt * (1.0 - tt) ** (nt - 1)
    if case is Recommendation.HEADS:
        return 0.0
    if case is Recommendation.TAILS:
        return one_t * slots.success * rate
    if isinstance(case, DeviationCase):
        if not case.joint_access:
            return 0.0
        return one_t * (1.0 - ta) ** sizes.n_aon * slots.success * rate
    raise ConfigurationError(f"unknown stage-1 case: {case!r}")


# Branch tags for the paired trajectories.
_OBEY_HEADS = "obey_heads"
_OBEY_TAILS = "obey_tails"
_DEV_JOINT = "deviate_joint"
_DEV_IDLE = "deviate_idle"
_BRANCHES = (_OBEY_HEADS, _OBEY_TAILS, _DEV_JOINT, _DEV_IDLE)


def _branch_payoffs(engine: _Engine, uniforms: np.ndarray, branch: str, tau_hat0: float):
    """Discounted payoffs of one etiquette branch for a batch of runs.

    Stage 1 plays the branch's forced profile; compliance branches then obey
    the device forever while deviation branches fall to competitive play.
    Returns per-run (u_aon, u_ton, stage1_age, stage1_u_ton).
    """
    params = engine.params
    n_runs, n_stages, _ = uniforms.shape
    ages = engine.initial_ages(n_runs)
    u_aon = np.zeros(n_runs)
    u_ton = np.zeros(n_runs)
    weight = 1.0 - params.alpha

    urow = uniforms[:, 0, :]
    if branch == _OBEY_HEADS:
        k_a, k_t = engine.slot(ages, urow, tau_hat0, -1.0)
    elif branch == _OBEY_TAILS:
        k_a, k_t = engine.slot(ages, urow, -1.0, engine.tau_ton_star)
    elif branch == _DEV_JOINT:
        k_a, k_t = engine.slot(ages, urow, tau_hat0, engine.tau_ton_star)
    else:
        ages += params.slots.idle
        k_a = k_t = np.zeros(n_runs, dtype=np.int64)
    stage1_age = ages.mean(axis=1)
    stage1_u_ton = np.where((k_t == 1) & (k_a == 0), engine.ton_payout, 0.0)
    u_aon += weight * (-stage1_age)
    u_ton += weight * stage1_u_ton
    weight *= params.alpha

    cooperative = branch in (_OBEY_HEADS, _OBEY_TAILS)
    for n in range(1, n_stages):
        urow = uniforms[:, n, :]
        delta = ages.mean(axis=1)
        if cooperative:
            selected = urow[:, 0] < params.p_r
            tau = engine.coop_tau(delta)
            k_a, k_t = engine.slot(
                ages,
                urow,
                np.where(selected, tau, -1.0),
                np.where(selected, -1.0, engine.tau_ton_star),
            )
        else:
            tau = engine.msne_tau(delta)
            k_a, k_t = engine.slot(ages, urow, tau, engine.tau_ton_star)
        u_aon += weight * (-ages.mean(axis=1))
        u_ton += weight * np.where((k_t == 1) & (k_a == 0), engine.ton_payout, 0.0)
        weight *= params.alpha
    return u_aon, u_ton, stage1_age, stage1_u_ton


def deviation_inequalities(
    params: ScenarioParams,
    n_runs: int,
    n_stages: int,
    seed: int,
    threads: int = 1,
    chunk_size: int = _DEFAULT_CHUNK,
) -> DeviationReport:
    """Estimate the four obey-versus-deviate inequalities by paired Monte Carlo."""
    if n_runs < 1 or n_stages < 1:
        raise ConfigurationError("need at least one run and one stage")
    engine = _Engine(params)
    profile_hat, _ = eq.cooperative_optimum(params.sizes, params.slots, params.initial_age)
    tau_hat0 = profile_hat.tau_aon

    per_run = {
        branch: (np.empty(n_runs), np.empty(n_runs), np.empty(n_runs), np.empty(n_runs))
        for branch in _BRANCHES
    }

    def work(bounds):
        start, stop = bounds
        uniforms = engine.uniforms(seed, range(start, stop), n_stages)
        for branch in _BRANCHES:
            out = _branch_payoffs(engine, uniforms, branch, tau_hat0)
            for target, values in zip(per_run[branch], out):
                target[start:stop] = values

    chunks = [(s, min(s + chunk_size, n_runs)) for s in range(0, n_runs, chunk_size)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, chunks))
    else:
        for bounds in chunks:
            work(bounds)

    def estimate(name, obey_branch, dev_branch, payoff_index):
        obey = per_run[obey_branch][payoff_index]
        dev = per_run[dev_branch][payoff_index]
        diff = obey - dev
        se = 0.0 if n_runs < 2 else float(diff.std(ddof=1) / np.sqrt(n_runs))
        return InequalityEstimate(
            name=name,
            obey_mean=float(obey.mean()),
            deviate_mean=float(dev.mean()),
            margin=float(diff.mean()),
            se=se,
        )

    def mean_se(values):
        se = 0.0 if n_runs < 2 else float(values.std(ddof=1) / np.sqrt(n_runs))
        return float(values.mean()), se

    return DeviationReport(
        aon_obeys_heads=estimate("aon_obeys_heads", _OBEY_HEADS, _DEV_IDLE, 0),
        ton_obeys_heads=estimate("ton_obeys_heads", _OBEY_HEADS, _DEV_JOINT, 1),
        aon_obeys_tails=estimate("aon_obeys_tails", _OBEY_TAILS, _DEV_JOINT, 0),
        ton_obeys_tails=estimate("ton_obeys_tails", _OBEY_TAILS, _DEV_IDLE, 1),
        stage1_age_mc={b: mean_se(per_run[b][2]) for b in _BRANCHES},
        stage1_throughput_mc={b: mean_se(per_run[b][3]) for b in _BRANCHES},
        stage1_profile=profile_hat,
        n_runs=n_runs,
    )


def spe_feasible(
    params: ScenarioParams,
    alpha: float,
    p_r: float,
    n_runs: int,
    n_stages: int,
    seed: int,
    threads: int = 1,
) -> Feasibility:
    """Whether obeying the device is self-enforceable at one (alpha, bias) point."""
    if not 0.0 < alpha < 1.0 or not 0.0 < p_r < 1.0:
        raise ConfigurationError("alpha and p_r must lie in (0, 1)")
    point = replace(params, alpha=alpha, p_r=p_r)
    return deviation_inequalities(point, n_runs, n_stages, seed, threads).self_enforceable


@dataclass(frozen=True)
class RegionGrid:
    """Tri-state feasibility maps over an (alpha, device-bias) grid.

    Matrix entries are 1 (holds), 0 (fails), or -1 (indeterminate at two
    standard errors).  ``margins``/``ses`` stack the four inequality
    estimates in the order obey-H AON, obey-H TON, obey-T AON, obey-T TON.
    """

    alpha_axis: np.ndarray
    pr_axis: np.ndarray
    ton_prefers: np.ndarray
    aon_prefers: np.ndarray
    self_enforceable: np.ndarray
    margins: np.ndarray
    ses: np.ndarray

    def feasible_count(self) -> int:
        return int((self.self_enforceable == 1).sum())

    def monotonicity_flags(self) -> list[tuple[int, int, int]]:
        """Grid cells contradicting a feasibility threshold in alpha.

        Returns (lower alpha index, higher alpha index, bias index) triples
        where the lower cell is decidedly feasible but the higher one is
        decidedly infeasible; such pairs call for grid refinement.
        """
        flags = []
        n_alpha = self.alpha_axis.size
        for j in range(self.pr_axis.size):
            for i_low in range(n_alpha):
                if self.self_enforceable[i_low, j] != 1:
                    continue
                for i_high in range(i_low + 1, n_alpha):
                    if self.self_enforceable[i_high, j] == 0:
                        flags.append((i_low, i_high, j))
        return flags


def region_sweep(
    params: ScenarioParams,
    alpha_grid,
    pr_grid,
    n_runs: int,
    n_stages: int,
    seed: int,
    threads: int = 1,
) -> RegionGrid:
    """Evaluate the four inequalities on every (alpha, bias) grid cell.

    Cell (i, j) draws from the seed labeled by its coordinates, so the sweep
    is reproducible at any thread count.
    """
    alpha_axis = np.asarray(alpha_grid, dtype=np.float64)
    pr_axis = np.asarray(pr_grid, dtype=np.float64)
    if np.any(alpha_axis <= 0.0) or np.any(alpha_axis >= 1.0):
        raise ConfigurationError("alpha grid must lie inside (0, 1)")
    if np.any(pr_axis <= 0.0) or np.any(pr_axis >= 1.0):
        raise ConfigurationError("bias grid must lie inside (0, 1)")
    shape = (alpha_axis.size, pr_axis.size)
    ton = np.empty(shape, dtype=np.int8)
    aon = np.empty(shape, dtype=np.int8)
    spe = np.empty(shape, dtype=np.int8)
    margins = np.empty((4,) + shape)
    ses = np.empty((4,) + shape)

    def cell(index):
        i, j = index
        point = replace(params, alpha=float(alpha_axis[i]), p_r=float(pr_axis[j]))
        report = deviation_inequalities(
            point, n_runs, n_stages, derive_seed(seed, i, j), threads=1
        )
        ton[i, j] = report.ton_prefers.to_int()
        aon[i, j] = report.aon_prefers.to_int()
        spe[i, j] = report.self_enforceable.to_int()
        for k, est in enumerate(report.inequalities):
            margins[k, i, j] = est.margin
            ses[k, i, j] = est.se

    cells = [(i, j) for i in range(shape[0]) for j in range(shape[1])]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(cell, cells))
    else:
        for index in cells:
            cell(index)

    return RegionGrid(
        alpha_axis=alpha_axis,
        pr_axis=pr_axis,
        ton_prefers=ton,
        aon_prefers=aon,
        self_enforceable=spe,
        margins=margins,
        ses=ses,
    )


@dataclass(frozen=True)
class StageTrace:
    stage: int
    compliance: ComplianceFlag
    competitive_play: bool
    tau_aon: float
    tau_ton: float
    network_age_after: float


@dataclass(frozen=True)
class GrimTriggerTrace:
    stages: tuple[StageTrace, ...]

    @property
    def compliance(self) -> tuple[ComplianceFlag, ...]:
        return tuple(s.compliance for s in self.stages)


def simulate_grim_trigger(
    params: ScenarioParams,
    n_stages: int,
    seed: int,
    deviate_at_stage: int,
    case: DeviationCase,
) -> GrimTriggerTrace:
    """Single trajectory with one injected deviation, for etiquette audits.

    All stages before ``deviate_at_stage`` obey the device, the deviation
    stage forces the case's recommendation and profile, and every later stage
    plays the competitive equilibrium, as the trigger requires.
    """
    if not 0 <= deviate_at_stage < n_stages:
        raise ConfigurationError("deviation stage outside the run")
    rng = run_generator(seed, 0)
    sizes, slots = params.sizes, params.slots
    state = _model.AgeState.uniform(sizes.n_aon, params.initial_age)
    trace = []
    triggered = False
    for n in range(n_stages):
        device = (
            Recommendation.HEADS if rng.random() < params.p_r else Recommendation.TAILS
        )
        if triggered:
            profile, _ = eq.msne(sizes, slots, state.network_age)
            event = _model.sample_slot(rng, sizes, profile, recommendation=None)
            obeyed = False
        elif n == deviate_at_stage:
            device = case.recommendation
            coop, _ = eq.cooperative_optimum(sizes, slots, state.network_age)
            if case.joint_access:
                profile = coop
                event = _model.sample_slot(rng, sizes, profile, recommendation=None)
            else:
                profile = AccessProfile(0.0, 0.0)
                event = _model.SlotEvent(_model.SlotKind.IDLE)
            obeyed = False
            triggered = True
        else:
            profile, _ = eq.cooperative_optimum(sizes, slots, state.network_age)
            event = _model.sample_slot(rng, sizes, profile, recommendation=device)
            obeyed = True
        state = _model.apply_slot(state, event, slots)
        trace.append(
            StageTrace(
                stage=n,
                compliance=ComplianceFlag(stage=n, recommendation=device, obeyed=obeyed),
                competitive_play=triggered and not (n == deviate_at_stage),
                tau_aon=profile.tau_aon,
                tau_ton=profile.tau_ton,
                network_age_after=state.network_age,
            )
        )
    return GrimTriggerTrace(stages=tuple(trace))
