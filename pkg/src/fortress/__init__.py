"""Deterministic FSM-agent grid-world simulator with a (1+1) hillclimber."""

from .config import ConfigError, SimConfig, parse_config, serialize_config
from .engine import EngineError, TickReport, evaluate_condition, execute_action, run, step
from .evolution import (EvolutionRecord, FitnessResult, Genome, HillclimbResult,
                        MutationParams, average_coverage, coverage_stats, fitness,
                        hillclimb, instantiate, mutate, random_genome, records_to_csv)
from .fsm import (ActionNode, EdgeCondition, EntityDef, FsmEdge, FsmError, FsmParseError,
                  expanded_actions, generate_fsm, parse_defs, parse_fsm, prune,
                  serialize_fsm, validate_def)
from .rng import Rng
from .world import (EXTINCTION, INACTIVITY, OVERPOPULATION, TICK_LIMIT, EntityInstance,
                    Fortress, LogEntry, SaveParseError, WorldError, init_fortress,
                    init_fortress_with_defs, parse_fortress, render_log,
                    serialize_fortress, terminated)

__version__ = "0.1.0"
