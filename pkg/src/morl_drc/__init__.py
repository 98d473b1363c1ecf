"""Multi-objective R-learning for dynamic grant-free resource configuration."""

from .agent import (
    AgentTables,
    LearnParams,
    MORLAgent,
    QuantizerConfig,
    baseline_mode,
    match_or_add_state,
    quantize,
    run_timeslot,
    select_action,
    update_avg_reward,
    update_q,
)
from .config import PRESETS, ScenarioConfig, dump_config, load_config
from .experiment import RunArtifact, emit_report, run_experiment, run_sweep
from .grid import (
    GridDims,
    ResourceAction,
    TimeslotAction,
    action_energy,
    enumerate_actions,
    validate_action,
)
from .metrics import RunTrace, avg_der, avg_reward_series, record_timeslot
from .radio import (
    ChannelKind,
    ChannelModel,
    GrantFreeEnv,
    InterferencePattern,
    PhyParams,
    RewardVector,
    SinrDenominator,
    compute_sinr,
    default_pattern,
    dump_pattern,
    load_pattern,
    observe_powers,
)

__version__ = "0.1.0"
