"""
swarmcoord Configuration

Module-level defaults, environment overrides and the validated run-file
models. Run files are JSON objects of the form
``{"scenario": {...}, "run": {...}}``.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ScenarioConfigError

# Project paths
PROJECT_ROOT = Path(__file__).parent.parent
CONFIG_DIR = PROJECT_ROOT / "configs"

# Engine defaults
DEFAULT_STATE_BUDGET = 10_000_000
DEFAULT_WORKERS = 1
DEFAULT_MAX_TICKS = 1000
DEFAULT_RUNS = 100
PRNG_ALGORITHM = "PCG64"

# Scenario defaults
DEFAULT_QUEUE_CAPACITY = 4
DEFAULT_REPO_BOUND = 2
DEFAULT_CLOCK_BOUND = 4
DEFAULT_VOTER_PERIOD = 20
DEFAULT_DIRECTION_STEP = 45
DEFAULT_STIG_KEY = "direction"

SCENARIO_NAMES = (
    "foraging_broadcast",
    "foraging_scel",
    "foraging_ispl",
    "flocking_vstig",
    "flocking_voter",
    "flocking_ispl",
    "flocking_scel",
    "flocking_scel_lamport",
    "ispl",
)

load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ScenarioConfigError(f"{name} must be an integer, got {raw!r}") from None


def state_budget() -> int:
    return _env_int("SWARMCOORD_STATE_BUDGET", DEFAULT_STATE_BUDGET)


def worker_count() -> int:
    return _env_int("SWARMCOORD_WORKERS", DEFAULT_WORKERS)


def log_level() -> str:
    return os.getenv("SWARMCOORD_LOG_LEVEL", "WARNING").upper()


class ArenaConfig(BaseModel):
    """Arena size and topology."""
    model_config = ConfigDict(extra="forbid")

    width: int = Field(10, ge=1, description="Cells along x")
    height: int = Field(10, ge=1, description="Cells along y")
    topology: Literal["bounded", "toroidal"] = "bounded"


Cell = Tuple[int, int]


class ScenarioConfig(BaseModel):
    """Every scenario knob; builders read the subset they need."""
    model_config = ConfigDict(extra="forbid")

    scenario: Literal[SCENARIO_NAMES] = Field("flocking_voter", description="Scenario builder to run")
    foragers: int = Field(2, ge=1)
    items: int = Field(1, ge=0)
    robots: int = Field(2, ge=1)
    agents: int = Field(5, ge=1)
    arena: ArenaConfig = Field(default_factory=ArenaConfig)

    sense_range: int = Field(0, ge=0, description="Item sensing range (message foraging)")
    comm_range: int = Field(2, ge=0, description="Neighbour range for message passing")
    forager_range: int = Field(2, ge=0, description="Exposed range attribute of tuple-space foragers")
    item_positions: Optional[List[Cell]] = None
    forager_positions: Optional[List[Cell]] = None
    agent_positions: Optional[List[Cell]] = None
    initial_directions: Optional[List[int]] = None

    direction_step: int = Field(DEFAULT_DIRECTION_STEP, ge=1, le=180)
    control_threshold: int = Field(0, ge=0, description="Heading error tolerated before turning")
    voter_period: int = Field(DEFAULT_VOTER_PERIOD, ge=1)
    zealots: List[int] = Field(default_factory=list)
    topology: Literal["range", "complete", "ring", "line", "star"] = "range"
    stig_key: str = DEFAULT_STIG_KEY
    queue_capacity: int = Field(DEFAULT_QUEUE_CAPACITY, ge=1)
    repo_bound: int = Field(DEFAULT_REPO_BOUND, ge=1)
    clock_bound: int = Field(DEFAULT_CLOCK_BOUND, ge=1)
    walk: bool = True
    init_seed: int = Field(0, ge=0)
    ispl_path: Optional[str] = None
    prng: Literal["PCG64"] = PRNG_ALGORITHM

    @model_validator(mode="after")
    def _check_consistency(self) -> "ScenarioConfig":
        if 360 % self.direction_step:
            raise ValueError(f"direction_step must divide 360, got {self.direction_step}")
        for label in ("item_positions", "forager_positions", "agent_positions"):
            cells = getattr(self, label)
            if cells is None:
                continue
            for x, y in cells:
                if not (1 <= x <= self.arena.width and 1 <= y <= self.arena.height):
                    raise ValueError(f"{label}: ({x},{y}) lies outside the arena")
        if self.item_positions is not None and len(set(self.item_positions)) != len(self.item_positions):
            raise ValueError("item_positions must be unique")
        if self.scenario == "ispl" and not self.ispl_path:
            raise ValueError("scenario 'ispl' needs ispl_path")
        return self


class RunConfig(BaseModel):
    """Simulator and checker settings."""
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(0, ge=0, lt=2 ** 64)
    max_ticks: int = Field(DEFAULT_MAX_TICKS, ge=0)
    runs: int = Field(DEFAULT_RUNS, ge=1)
    budget: int = Field(default_factory=state_budget, ge=1)
    workers: int = Field(default_factory=worker_count, ge=1)
    formula: Optional[str] = None
    proposition: Optional[str] = None
    output: Optional[str] = None


class RunFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    run: RunConfig = Field(default_factory=RunConfig)


class Invocation(BaseModel):
    """One command-line invocation after config loading and overrides."""
    model_config = ConfigDict(extra="forbid")

    subcommand: Literal["sim", "check", "estimate", "parse", "stats", "step"]
    config_path: Optional[str] = None
    overrides: List[str] = Field(default_factory=list)
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    run: RunConfig = Field(default_factory=RunConfig)


def parse_override(item: str) -> Tuple[List[str], Any]:
    """
    Split ``scenario.arena.width=4`` into its key path and value.

    Values are read as JSON when possible and as plain strings otherwise.
    """
    if "=" not in item:
        raise ScenarioConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    path = [part for part in key.strip().split(".") if part]
    if not path:
        raise ScenarioConfigError(f"override {item!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Return a copy of a nested config dict with the overrides applied in order."""
    result = json.loads(json.dumps(data))
    for item in overrides:
        path, value = parse_override(item)
        node = result
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ScenarioConfigError(f"override {item!r}: {part} is not a section")
            node = child
        node[path[-1]] = value
    return result


def load_run_file(path: Optional[str] = None, overrides: Sequence[str] = ()) -> RunFile:
    """
    Load and validate a run file.

    Args:
        path: JSON run file, or None for all defaults
        overrides: Dotted key=value overrides applied after the file

    Returns:
        Validated RunFile

    Raises:
        ScenarioConfigError: on unreadable files, unknown keys or bad values
    """
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ScenarioConfigError(f"config {path} must hold a JSON object")
    data = apply_overrides(data, overrides)
    try:
        return RunFile.model_validate(data)
    except ValidationError as exc:
        raise ScenarioConfigError(str(exc)) from None


def scenario_config(**fields) -> ScenarioConfig:
    """Build a ScenarioConfig from keyword arguments, mapping validation errors."""
    try:
        return ScenarioConfig.model_validate(fields)
    except ValidationError as exc:
        raise ScenarioConfigError(str(exc)) from None
