import json
import logging
import os
import pathlib
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

MAX_SUBCHAIN = 12


class SweepConfig(BaseModel):
    """
    Resolved sweep configuration.

    Either `delta_grid` lists the anisotropies explicitly, or the grid is built
    from a coarse range plus an optional refined window (see resolved_grid()).
    """
    name: str = "sweep"
    delta_grid: Optional[List[float]] = None
    delta_min: float = 0.0
    delta_max: float = 3.0
    delta_step: float = Field(default=0.05, gt=0)
    refine_min: Optional[float] = 0.8
    refine_max: Optional[float] = 1.2
    refine_step: Optional[float] = Field(default=0.01, gt=0)

    n_list: List[int] = [2, 4, 6, 8, 10]
    objectives: List[Literal["mermin", "svetlichny"]] = ["mermin", "svetlichny"]

    D: int = Field(default=16, ge=1)
    schedule: Optional[List[Tuple[float, int, float]]] = None
    restarts: Optional[int] = Field(default=None, ge=1)
    seed: int = 7
    warm_start: bool = True
    offset: Literal["even", "odd", "average"] = "average"
    contracted_from_n: int = Field(default=8, ge=1)
    quick: bool = False

    output_path: str = "results/sweep.csv"
    checkpoint_dir: Optional[str] = None

    @field_validator("n_list")
    @classmethod
    def _check_n_list(cls, n_list):
        if not n_list:
            raise ValueError("n_list must not be empty")
        bad = [n for n in n_list if not 2 <= n <= MAX_SUBCHAIN]
        if bad:
            raise ValueError(f"Subchain lengths must lie in [2, {MAX_SUBCHAIN}], got {bad}")
        return sorted(set(n_list))

    @field_validator("objectives")
    @classmethod
    def _check_objectives(cls, objectives):
        if not objectives:
            raise ValueError("objectives must not be empty")
        return list(dict.fromkeys(objectives))

    @field_validator("delta_grid")
    @classmethod
    def _check_grid(cls, grid):
        if grid is not None:
            if not grid:
                raise ValueError("delta_grid must not be empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError("delta_grid must be strictly increasing")
        return grid

    @model_validator(mode="after")
    def _check_range(self):
        if self.delta_grid is None and self.delta_max < self.delta_min:
            raise ValueError(f"delta_max ({self.delta_max}) is below delta_min ({self.delta_min})")
        odd = [n for n in self.n_list if n % 2]
        if odd:
            logger.warning(f"[SWEEP] Odd subchain lengths {odd} are nonstandard for a two-site cell")
        return self

    def resolved_grid(self) -> List[float]:
        """Explicit grid, or the coarse range united with the refined window (rounded to 1e-10)."""
        if self.delta_grid is not None:
            return list(self.delta_grid)
        points = [_inclusive_range(self.delta_min, self.delta_max, self.delta_step)]
        if self.refine_min is not None and self.refine_max is not None and self.refine_step:
            lo = max(self.refine_min, self.delta_min)
            hi = min(self.refine_max, self.delta_max)
            if hi >= lo:
                points.append(_inclusive_range(lo, hi, self.refine_step))
        return [float(x) for x in np.unique(np.round(np.concatenate(points), 10))]


def _inclusive_range(start: float, stop: float, step: float) -> np.ndarray:
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def _default_config_dir() -> str:
    project_root = pathlib.Path(__file__).parent.parent.parent
    return str(project_root / "config")


def load_sweep_config(name_or_path: str, config_dir: str = None) -> SweepConfig:
    """
    Load a sweep configuration from JSON.

    Args:
        name_or_path: path to a JSON file, or a bare name resolved as config/<name>.json
        config_dir: directory for bare names (defaults to project config/)

    Returns:
        Validated SweepConfig

    Example:
        config = load_sweep_config("default_sweep")
        quick = load_sweep_config("quick_sweep")
    """
    if os.path.isfile(name_or_path):
        filepath = name_or_path
    else:
        if config_dir is None:
            config_dir = _default_config_dir()
        filename = name_or_path if name_or_path.endswith(".json") else f"{name_or_path.lower()}.json"
        filepath = os.path.join(config_dir, filename)

    try:
        with open(filepath, 'r') as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise FileNotFoundError(
            f"Sweep config not found: {filepath}\n"
            f"Expected a JSON file or a name from config/ (e.g. default_sweep)"
        )
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {filepath}: {e}")

    required_fields = ['n_list', 'objectives']
    missing = [field for field in required_fields if field not in raw]
    if missing:
        raise ConfigError(f"Sweep config missing required fields: {missing}")

    raw.setdefault("name", pathlib.Path(filepath).stem)
    try:
        return SweepConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Invalid sweep config {filepath}:\n{e}")


def apply_overrides(config: SweepConfig, **overrides) -> SweepConfig:
    """
    Return a copy with every non-None override applied and re-validated.
    Range overrides (delta_min/max/step) replace an explicit delta_grid.
    """
    updates = {k: v for k, v in overrides.items() if v is not None}
    if not updates:
        return config
    if {"delta_min", "delta_max", "delta_step"} & updates.keys():
        updates["delta_grid"] = None
    try:
        return SweepConfig.model_validate({**config.model_dump(), **updates})
    except ValidationError as e:
        raise ConfigError(f"Invalid override {sorted(updates)}:\n{e}")
