"""
Run configuration for the `clebsch` command.

Configs are YAML or JSON files read with `yaml.safe_load`. A config may name a
preset from settings.CLEBSCH_CONFIG_DIR; keys in the file override it.
"""
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
import yaml
from django.conf import settings
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app.errors import ConfigError
from app.integrals.quadratics import BodyState, project_to_leaf, sample_leaf_state
from app.params.algebra import SystemParams

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
COMMANDS = ('simulate', 'invariants', 'linearize', 'kummer', 'actions', 'special')


class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid', populate_by_name=True)


class ParamsBlock(_Strict):
    j: Tuple[float, float, float]
    lam: float = Field(1.0, alias='lambda')
    lam_prime: float = Field(1.0, alias='lambda_prime')

    @field_validator('j')
    @classmethod
    def j_increasing(cls, value):
        if not (value[0] < value[1] < value[2]):
            raise ValueError(f"j must be strictly increasing, got {list(value)}")
        return value


class InitialState(_Strict):
    K: Tuple[float, float, float]
    p: Tuple[float, float, float]
    project: bool = False


class SimulateOptions(_Strict):
    order_check: bool = True
    sweep: int = Field(0, ge=0)


class InvariantsOptions(_Strict):
    samples: int = Field(1000, gt=0)


class LinearizeOptions(_Strict):
    stencil_order: Literal[2, 4] = 4


class KummerOptions(_Strict):
    # Decimal levels are read exactly, so integral j gives a rational surface.
    c3: Optional[float] = None
    c4: Optional[float] = None
    exact: bool = True
    search_infinity: bool = False
    search_starts: int = Field(16, gt=0)


class ActionsOptions(_Strict):
    c3: Optional[float] = None
    c4: Optional[float] = None
    fd_step: float = Field(1e-5, gt=0)


class FamilySpec(_Strict):
    type: Literal['axis', 'delta']
    axis: Literal[1, 2, 3] = 1
    sigma_prime: Optional[float] = None
    k_axis: float = 0.5
    angle: float = 0.3


class SpecialOptions(_Strict):
    families: List[FamilySpec] = Field(default_factory=lambda: [FamilySpec(type='axis')])


class RunConfig(_Strict):
    version: Literal[1] = SCHEMA_VERSION
    preset: Optional[str] = None
    params: ParamsBlock
    state: Optional[InitialState] = None
    seed: int = Field(0, ge=0)
    horizon: float = Field(10.0, gt=0)
    step: float = Field(1e-3, gt=0)
    output: Optional[str] = None
    simulate: SimulateOptions = Field(default_factory=SimulateOptions)
    invariants: InvariantsOptions = Field(default_factory=InvariantsOptions)
    linearize: LinearizeOptions = Field(default_factory=LinearizeOptions)
    kummer: KummerOptions = Field(default_factory=KummerOptions)
    actions: ActionsOptions = Field(default_factory=ActionsOptions)
    special: SpecialOptions = Field(default_factory=SpecialOptions)

    def system_params(self) -> SystemParams:
        return SystemParams(j=self.params.j, lam=self.params.lam, lam_prime=self.params.lam_prime)

    def exact_params(self) -> SystemParams:
        """The same parameters as Fractions of their decimal spelling."""
        return SystemParams(
            j=tuple(exact_decimal(v) for v in self.params.j),
            lam=exact_decimal(self.params.lam),
            lam_prime=exact_decimal(self.params.lam_prime),
        )

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def initial_state(self) -> BodyState:
        """The configured state, or a leaf state drawn from the seed."""
        if self.state is None:
            return sample_leaf_state(self.rng())
        state = BodyState(K=np.array(self.state.K), p=np.array(self.state.p))
        return project_to_leaf(state) if self.state.project else state


def exact_decimal(value: float) -> Fraction:
    return Fraction(repr(float(value)))


def _deep_merge(base: Dict, override: Dict) -> Dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _read_mapping(path: Path) -> Dict[str, Any]:
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            data = yaml.safe_load(handle)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}", path=str(path))
    except yaml.YAMLError as exc:
        raise ConfigError(f"Config file is not valid YAML/JSON: {exc}", path=str(path))
    if not isinstance(data, dict):
        raise ConfigError(f"Config file must contain a mapping: {path}", path=str(path))
    return data


def load_preset(name: str) -> Dict[str, Any]:
    path = Path(settings.CLEBSCH_CONFIG_DIR) / f"{name}.yaml"
    if not path.exists():
        raise ConfigError(f"Unknown preset {name!r}", preset=name)
    return _read_mapping(path)


def parse_run_config(data: Dict[str, Any]) -> RunConfig:
    """Validate a config mapping, resolving its preset first."""
    preset = data.get('preset')
    if preset:
        data = _deep_merge(load_preset(preset), data)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError("Run config violates the schema", errors=json.loads(exc.json(include_url=False)))


def load_run_config(path, seed: Optional[int] = None) -> RunConfig:
    config = parse_run_config(_read_mapping(Path(path)))
    if seed is not None:
        if seed < 0:
            raise ConfigError(f"Seed must be non-negative, got {seed}")
        config = config.model_copy(update={'seed': seed})
    logger.debug("Loaded run config from %s (seed %d)", path, config.seed)
    return config
