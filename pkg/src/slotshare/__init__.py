"""Coexistence of an age-optimizing and a throughput-optimizing network.

The library models two networks sharing a slotted collision channel: slot
outcome kernels and age dynamics (``model``), closed-form stage-game
solutions with a grid-search certification oracle (``equilibrium``),
repeated-game Monte Carlo (``sim``), grim-trigger self-enforceability
analysis (``etiquette``), and a CSV-emitting experiment CLI (``cli``).
"""

from .model import (
    AccessProfile,
    AgeState,
    ConfigurationError,
    Network,
    NetworkSizes,
    Recommendation,
    ScenarioParams,
    SlotEvent,
    SlotKind,
    SlotLengths,
    SlotProbabilities,
    apply_slot,
    expected_network_throughput,
    expected_node_age,
    network_age,
    sample_slot,
    slot_probabilities_competitive,
    slot_probabilities_cooperative,
)
from .equilibrium import (
    CooperationRange,
    OutOfRangeError,
    Regime,
    StagePayoffs,
    ThresholdAges,
    best_response_oracle,
    cooperation_beneficial_pr_set,
    cooperative_optimum,
    expected_stage_payoffs,
    msne,
    msne_equal_slots,
)
from .sim import (
    Aggregate,
    GainResult,
    Mode,
    RunConfig,
    RunResult,
    gain_of_cooperation,
    monte_carlo,
    run_competition,
    run_cooperation,
)
from .etiquette import (
    ComplianceFlag,
    DeviationCase,
    DeviationReport,
    Feasibility,
    InequalityEstimate,
    RegionGrid,
    deviation_inequalities,
    expected_next_network_age,
    region_sweep,
    simulate_grim_trigger,
    spe_feasible,
    stage1_expected_ton_throughput,
)
from .seeding import derive_seed, run_generator

__all__ = [name for name in dir() if not name.startswith("_")]
