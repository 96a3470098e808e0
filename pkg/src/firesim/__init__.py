"""Deterministic, integer-exact simulator of the FIRE protocol economy."""

from .emission import (
    COIN, MSUPPLY, EmissionState, PremineSplit, base_reward, genesis_premine,
    penalized_reward, rolling_median, simulate_emission, vaporize,
)
from .scenario import Scenario, load_scenario, parse_scenario
from .simulation import RunResult, emit_reports, replay_block_log, run_scenario

__version__ = "0.1.0"
