"""arenaladder: a deterministic two-player fighting-game laboratory.

The package bundles a discrete simultaneous-move arena simulator, tabular and
exact best-response learners, population self-play loops (fictitious play,
Nash-mixture response, league training), game-theoretic evaluation (Elo,
exploitability, curriculum scheduling), versioned artifact storage, a command
line, and a tick-based play server for human-versus-agent matches.
"""

from .engine import (
    AttackSpec,
    EngineConfig,
    GameState,
    HumanAction,
    Observation,
    SpecialSpec,
    TransAction,
    action_set,
    dense_reward,
    encode_action,
    enumerate_observations,
    match_special,
    mirror_state,
    observe,
    reset,
    state_digest,
    step,
)
from .errors import (
    AliasingError,
    ArenaLadderError,
    CapacityError,
    ConfigError,
    ProtocolError,
    StoreError,
    UsageError,
)
from .eval import (
    CurriculumState,
    ExploitReport,
    RatingTable,
    RatingUpdate,
    curriculum_weights,
    elo_expected,
    elo_update,
    exploitability,
    full_game_train,
    run_tournament,
)
from .exact import (
    BeliefResponsePolicy,
    BRResult,
    exact_best_response,
    exact_value,
    observation_collisions,
    project_to_observations,
)
from .league import (
    ROLES,
    LeagueConfig,
    LeagueMember,
    LeagueResult,
    LeagueRoster,
    league_step,
    pfsp_priority,
    pfsp_weights,
    run_league,
)
from .learn import (
    LearnConfig,
    LearnOutcome,
    QLearner,
    evaluate_policy,
    independent_learn,
    rl_best_response,
)
from .match import MatchOutcome, outcome_score, play_match, replay_match
from .metagame import (
    PopulationLoopResult,
    exact_br,
    learned_br,
    population_loop,
)
from .nash import (
    MetaStrategy,
    NashSolution,
    solve_matrix_game,
    solve_nash,
    solve_uniform,
)
from .payoff import PayoffMatrix, estimate_payoff
from .policy import (
    CPU_LEVELS,
    MixturePolicy,
    Policy,
    PolicyId,
    PolicySession,
    ScriptedCPU,
    TabularPolicy,
    cpu_policy,
    mixture_draw,
    sample_action,
)
from .presets import default_config, small_config, tiny_config
from .rngutil import derive_seed, make_rng
from .store import (
    MatchRecord,
    RunManifest,
    append_match,
    config_digest,
    config_from_snapshot,
    config_snapshot,
    engine_config_to_ini,
    file_digest,
    load_engine_config,
    load_manifest,
    load_payoff,
    load_policy,
    load_replay,
    new_run,
    read_matches,
    runs_root,
    save_manifest,
    save_payoff,
    save_policy,
    save_replay,
)

__all__ = [
    "AliasingError",
    "ArenaLadderError",
    "AttackSpec",
    "BRResult",
    "BeliefResponsePolicy",
    "CPU_LEVELS",
    "CapacityError",
    "ConfigError",
    "CurriculumState",
    "EngineConfig",
    "ExploitReport",
    "GameState",
    "HumanAction",
    "LeagueConfig",
    "LeagueMember",
    "LeagueResult",
    "LeagueRoster",
    "LearnConfig",
    "LearnOutcome",
    "MatchOutcome",
    "MatchRecord",
    "MetaStrategy",
    "MixturePolicy",
    "NashSolution",
    "Observation",
    "PayoffMatrix",
    "Policy",
    "PolicyId",
    "PolicySession",
    "PopulationLoopResult",
    "ProtocolError",
    "QLearner",
    "ROLES",
    "RatingTable",
    "RatingUpdate",
    "RunManifest",
    "ScriptedCPU",
    "SpecialSpec",
    "StoreError",
    "TabularPolicy",
    "TransAction",
    "UsageError",
    "action_set",
    "append_match",
    "config_digest",
    "config_from_snapshot",
    "config_snapshot",
    "cpu_policy",
    "curriculum_weights",
    "default_config",
    "dense_reward",
    "derive_seed",
    "elo_expected",
    "elo_update",
    "encode_action",
    "engine_config_to_ini",
    "enumerate_observations",
    "estimate_payoff",
    "evaluate_policy",
    "exact_best_response",
    "exact_br",
    "exact_value",
    "exploitability",
    "file_digest",
    "full_game_train",
    "independent_learn",
    "league_step",
    "learned_br",
    "load_engine_config",
    "load_manifest",
    "load_payoff",
    "load_policy",
    "load_replay",
    "make_rng",
    "match_special",
    "mirror_state",
    "mixture_draw",
    "new_run",
    "observation_collisions",
    "observe",
    "outcome_score",
    "pfsp_priority",
    "pfsp_weights",
    "play_match",
    "population_loop",
    "project_to_observations",
    "read_matches",
    "replay_match",
    "reset",
    "run_league",
    "run_tournament",
    "runs_root",
    "sample_action",
    "save_manifest",
    "save_payoff",
    "save_policy",
    "save_replay",
    "small_config",
    "solve_matrix_game",
    "solve_nash",
    "solve_uniform",
    "state_digest",
    "step",
    "tiny_config",
]

__version__ = "0.1.0"
