"""
Run configuration: flat dotted key = value files

    command = sweep
    params.omega = 1.0
    params.omega0 = 1.0
    params.lambda = 0.1
    sweep.amplitude_fixed = 0.5
    sweep.lambda_sequence = 0.2, 0.1, 0.05, 0.025

Lines are read with python-dotenv's stream parser so diagnostics keep line
numbers; sections are validated by pydantic models with extra="forbid".
"""

import io
import os
from pathlib import Path
from typing import Dict, List, Literal, Optional, Type, Union

from dotenv.parser import parse_stream
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from ..config import settings
from ..errors import ConfigParseError, ConfigValidationError
from ..fockspace import SpinLabel
from ..models import (
    DriveParams,
    FloatList,
    FrozenModel,
    IntList,
    ModelParams,
    PropagationConfig,
    SeriesCutoffs,
    SweepConfig,
    Truncation,
    strictly_decreasing_positive,
)
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

Command = Literal["check-identities", "sweep", "fock-limit", "transform-limit", "evolve", "compare", "diagram"]

COMMANDS = ["check-identities", "sweep", "fock-limit", "transform-limit", "evolve", "compare", "diagram"]


# ========== SECTIONS ==========


class FieldSection(FrozenModel):
    """Initial field amplitude alpha, displaced level n0 and spin state"""

    alpha_re: float
    alpha_im: float = 0.0
    n0: int = 0
    spin: SpinLabel = "+z"

    @field_validator("n0")
    @classmethod
    def validate_n0(cls, v):
        if v < 0:
            raise ValueError("n0 >= 0")
        return v

    @property
    def alpha(self) -> complex:
        return complex(self.alpha_re, self.alpha_im)


class FockSection(FrozenModel):
    amplitudes: FloatList
    k_values: IntList
    n_sequence: IntList

    @field_validator("amplitudes")
    @classmethod
    def validate_amplitudes(cls, v):
        if not v or any(a < 0 for a in v):
            raise ValueError("amplitudes >= 0")
        return v

    @field_validator("k_values")
    @classmethod
    def validate_k(cls, v):
        if not v or any(k < 0 for k in v):
            raise ValueError("k_values >= 0")
        return v

    @field_validator("n_sequence")
    @classmethod
    def validate_n_sequence(cls, v):
        if len(v) < 2 or v[0] < 1 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("n_sequence strictly increasing, entries >= 1")
        return v


class TransformSection(FrozenModel):
    amplitude: float
    lambda_sequence: FloatList
    probe_levels: int = 10
    time_samples: Optional[FloatList] = None
    phase: float = 0.0  # arg alpha

    @field_validator("amplitude")
    @classmethod
    def validate_amplitude(cls, v):
        if not v > 0:
            raise ValueError("transform.amplitude > 0")
        return v

    @field_validator("lambda_sequence")
    @classmethod
    def validate_sequence(cls, v):
        return strictly_decreasing_positive(v, "lambda_sequence")

    @field_validator("probe_levels")
    @classmethod
    def validate_probe_levels(cls, v):
        if v < 1:
            raise ValueError("probe_levels >= 1")
        return v


class CompareSection(FrozenModel):
    amplitude: float
    lambda_sequence: FloatList
    collapse_lambda: Optional[float] = None
    collapse_alpha: Optional[float] = None
    collapse_window: float = 5.0
    collapse_t_end: float = 30.0
    spin: SpinLabel = "+z"

    @field_validator("amplitude")
    @classmethod
    def validate_amplitude(cls, v):
        if v < 0:
            raise ValueError("compare.amplitude >= 0")
        return v

    @field_validator("lambda_sequence")
    @classmethod
    def validate_sequence(cls, v):
        return strictly_decreasing_positive(v, "lambda_sequence")

    @model_validator(mode="after")
    def validate_collapse_pair(self):
        if (self.collapse_lambda is None) != (self.collapse_alpha is None):
            raise ValueError("collapse_lambda and collapse_alpha go together")
        if not 0 < 2.0 * self.collapse_window <= self.collapse_t_end:
            raise ValueError("collapse_t_end must cover at least two collapse windows")
        return self


class DiagramSection(FrozenModel):
    amplitudes: FloatList
    lambda_small: FloatList
    time: float = 0.3
    level: int = 0

    @field_validator("amplitudes")
    @classmethod
    def validate_amplitudes(cls, v):
        if not v or any(a < 0 for a in v):
            raise ValueError("amplitudes >= 0")
        return v

    @field_validator("lambda_small")
    @classmethod
    def validate_lambda_small(cls, v):
        if len(v) != 2:
            raise ValueError("lambda_small takes exactly two values")
        return strictly_decreasing_positive(v, "lambda_small")


class EvolveSection(FrozenModel):
    model: Literal["quantum", "semiclassical", "displaced", "rotating"]
    frame_check: bool = False  # displaced only: lab / rotating / displaced fidelities
    lab_N: Optional[int] = None

    @field_validator("lab_N")
    @classmethod
    def validate_lab_n(cls, v):
        if v is not None and v < 1:
            raise ValueError("lab_N >= 1")
        return v


class ChecksSection(FrozenModel):
    samples: int = settings.oracle_samples

    @field_validator("samples")
    @classmethod
    def validate_samples(cls, v):
        if v < 1:
            raise ValueError("samples >= 1")
        return v


class OutputSection(FrozenModel):
    path: str = settings.output_dir


REQUIRED_SECTIONS: Dict[str, List[str]] = {
    "check-identities": [],
    "sweep": ["sweep"],
    "fock-limit": ["fock"],
    "transform-limit": ["transform"],
    "evolve": ["evolve", "propagation"],
    "compare": ["compare", "propagation"],
    "diagram": ["diagram"],
}


class RunConfig(FrozenModel):
    """Fully validated run; physics parameters have no defaults"""

    command: Command
    params: ModelParams
    seed: int = settings.default_seed
    tolerance_scale: float = settings.tolerance_scale
    drive: Optional[DriveParams] = None
    field: Optional[FieldSection] = None
    truncation: Optional[Truncation] = None
    cutoffs: SeriesCutoffs = Field(default_factory=SeriesCutoffs)
    propagation: Optional[PropagationConfig] = None
    sweep: Optional[SweepConfig] = None
    fock: Optional[FockSection] = None
    transform: Optional[TransformSection] = None
    compare: Optional[CompareSection] = None
    diagram: Optional[DiagramSection] = None
    evolve: Optional[EvolveSection] = None
    checks: ChecksSection = Field(default_factory=ChecksSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @field_validator("tolerance_scale")
    @classmethod
    def validate_tolerance_scale(cls, v):
        if not v > 0:
            raise ValueError("tolerance_scale > 0")
        return v

    @model_validator(mode="after")
    def validate_required_sections(self):
        missing = [name for name in REQUIRED_SECTIONS[self.command] if getattr(self, name) is None]
        if missing:
            raise ValueError(f"command '{self.command}' requires section(s): {', '.join(missing)}")
        if self.command == "evolve":
            model = self.evolve.model
            if model == "semiclassical" and self.drive is None:
                raise ValueError("evolve with model=semiclassical requires section: drive")
            if model != "semiclassical" and self.field is None:
                raise ValueError(f"evolve with model={model} requires section: field")
            if model == "displaced" and self.field.alpha == 0:
                raise ValueError("evolve with model=displaced needs alpha != 0")
        return self

    def sweep_config(self) -> SweepConfig:
        return self.sweep.model_copy(update={"cutoffs": self.cutoffs})


SECTION_MODELS: Dict[str, Type[BaseModel]] = {
    "params": ModelParams,
    "drive": DriveParams,
    "field": FieldSection,
    "truncation": Truncation,
    "cutoffs": SeriesCutoffs,
    "propagation": PropagationConfig,
    "sweep": SweepConfig,
    "fock": FockSection,
    "transform": TransformSection,
    "compare": CompareSection,
    "diagram": DiagramSection,
    "evolve": EvolveSection,
    "checks": ChecksSection,
    "output": OutputSection,
}

TOP_LEVEL_KEYS = {"command", "seed", "tolerance_scale"}

# sweep cutoffs come from the shared cutoffs section
_EXCLUDED_KEYS = {"sweep": {"cutoffs"}}


def _allowed_keys(section: str) -> set:
    model = SECTION_MODELS[section]
    keys = set()
    for name, info in model.model_fields.items():
        keys.add(name)
        if info.alias:
            keys.add(info.alias)
    return keys - _EXCLUDED_KEYS.get(section, set())


# ========== PARSING ==========


def parse_config_text(
    text: str, source: str = "<config>", overrides: Optional[Dict[str, str]] = None
) -> RunConfig:
    """
    Parse and validate config text

    overrides (dotted key -> text value) replace file values before validation.

    Raises:
        ConfigParseError: malformed line, unknown or duplicate key
        ConfigValidationError: a declared invariant is violated
    """
    raw: Dict[str, Union[str, Dict[str, str]]] = {}
    for binding in parse_stream(io.StringIO(text)):
        line = binding.original.line
        if binding.error:
            raise ConfigParseError(f"{source}:{line}: malformed line: {binding.original.string.strip()!r}")
        if binding.key is None:
            continue
        key = binding.key.strip()
        value = (binding.value or "").strip()
        section, dot, name = key.partition(".")
        if not dot:
            if key not in TOP_LEVEL_KEYS:
                raise ConfigParseError(f"{source}:{line}: unknown key '{key}'")
            if key in raw:
                raise ConfigParseError(f"{source}:{line}: duplicate key '{key}'")
            raw[key] = value
            continue
        if section not in SECTION_MODELS or "." in name or name not in _allowed_keys(section):
            raise ConfigParseError(f"{source}:{line}: unknown key '{key}'")
        bucket = raw.setdefault(section, {})
        if name in bucket:
            raise ConfigParseError(f"{source}:{line}: duplicate key '{key}'")
        bucket[name] = value

    for key, value in (overrides or {}).items():
        section, dot, name = key.partition(".")
        if dot:
            raw.setdefault(section, {})[name] = value
        else:
            raw[key] = value

    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        logger.error(f"Invalid configuration {source}: {problems}")
        raise ConfigValidationError(problems) from e

    logger.info(f"Loaded {config.command} configuration from {source}")
    return config


def parse_config(path: Union[str, Path], overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigParseError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), str(path), overrides)


def ensure_writable(directory: Union[str, Path]) -> Path:
    """Create the output directory or fail with ConfigValidationError"""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigValidationError(f"output.path: cannot create {directory}: {e}") from e
    if not os.access(directory, os.W_OK):
        raise ConfigValidationError(f"output.path: {directory} is not writable")
    return directory
