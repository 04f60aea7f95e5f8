"""
Domain models: physical parameters, cutoffs, truncation and run settings
"""

import math
from typing import Annotated, Dict, List, Literal, Optional, Tuple

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    computed_field,
    field_validator,
    model_validator,
)

from .config import settings


def _split_list(v):
    """Accept 'a, b, c' strings from key=value config files"""
    if isinstance(v, str):
        return [item.strip() for item in v.split(",") if item.strip()]
    return v


def strictly_decreasing_positive(values: List[float], name: str) -> List[float]:
    if not values:
        raise ValueError(f"{name} must not be empty")
    if any(v <= 0 for v in values):
        raise ValueError(f"{name} entries > 0")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} strictly decreasing")
    return values


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)


# ========== PHYSICS ==========


class ModelParams(FrozenModel):
    """Omega (two-level splitting), omega0 (field frequency), lambda (coupling)"""

    omega: float
    omega0: float
    lam: float = Field(alias="lambda")

    @field_validator("omega")
    @classmethod
    def validate_omega(cls, v):
        if not math.isfinite(v) or v < 0:
            raise ValueError("omega >= 0")
        return v

    @field_validator("omega0")
    @classmethod
    def validate_omega0(cls, v):
        if not math.isfinite(v) or v <= 0:
            raise ValueError("omega0 > 0")
        return v

    @field_validator("lam")
    @classmethod
    def validate_lambda(cls, v):
        if not math.isfinite(v) or v < 0:
            raise ValueError("lambda >= 0")
        return v

    @computed_field
    @property
    def chi(self) -> float:
        return 2.0 * self.lam / self.omega0

    def with_coupling(self, lam: float) -> "ModelParams":
        return ModelParams(omega=self.omega, omega0=self.omega0, lam=lam)


class DriveParams(FrozenModel):
    """Semiclassical drive 2A cos(omega0 t + phase)"""

    amplitude: float
    phase: float = 0.0

    @field_validator("amplitude")
    @classmethod
    def validate_amplitude(cls, v):
        if not math.isfinite(v) or v < 0:
            raise ValueError("amplitude >= 0")
        return v

    @classmethod
    def from_coherent(cls, params: ModelParams, alpha: complex) -> "DriveParams":
        """A = lambda |alpha|, phase = -arg(alpha)"""
        alpha = complex(alpha)
        phase = -math.atan2(alpha.imag, alpha.real) if alpha != 0 else 0.0
        return cls(amplitude=params.lam * abs(alpha), phase=phase)


class SeriesControl(FrozenModel):
    max_terms: int = settings.series_max_terms
    tail_tolerance: float = settings.series_tail_tolerance

    @field_validator("max_terms")
    @classmethod
    def validate_max_terms(cls, v):
        if v < 1:
            raise ValueError("max_terms >= 1")
        return v

    @field_validator("tail_tolerance")
    @classmethod
    def validate_tail_tolerance(cls, v):
        if not v > 0:
            raise ValueError("tail_tolerance > 0")
        return v


class SeriesCutoffs(FrozenModel):
    """Harmonic cutoff p_max and normal-ordered cutoff l_max (None = automatic)"""

    p_max: Optional[int] = None
    l_max: Optional[int] = None
    tail_tolerance: float = settings.cutoff_tail_tolerance

    @field_validator("p_max")
    @classmethod
    def validate_p_max(cls, v):
        if v is not None and v < 1:
            raise ValueError("p_max >= 1")
        return v

    @field_validator("l_max")
    @classmethod
    def validate_l_max(cls, v):
        if v is not None and v < 0:
            raise ValueError("l_max >= 0")
        return v

    def harmonics_for(self, z: float, order: int = 0) -> int:
        """Resolved harmonic cutoff for Bessel argument z; automatic cutoffs also cover `order`"""
        if self.p_max is not None:
            return self.p_max
        return int(math.ceil(abs(z))) + 25 + order


class Truncation(FrozenModel):
    """Highest retained Fock level N; the top guard_band levels are unreliable"""

    N: int
    guard_band: Optional[int] = None  # default ceil(4 sqrt N), capped at N - 1

    @model_validator(mode="before")
    @classmethod
    def default_guard_band(cls, data):
        if isinstance(data, dict) and data.get("guard_band") is None and "N" in data:
            n = int(data["N"])
            if n >= 1:
                data = {**data, "guard_band": min(int(math.ceil(4.0 * math.sqrt(n))), n - 1)}
        return data

    @model_validator(mode="after")
    def validate_guard_band(self):
        if self.N < 1:
            raise ValueError("N >= 1")
        if self.guard_band is None or self.guard_band < 0 or self.guard_band >= self.N:
            raise ValueError("0 <= guard_band < N")
        return self

    @property
    def dim(self) -> int:
        return self.N + 1

    @property
    def reliable_max(self) -> int:
        return self.N - self.guard_band

    @classmethod
    def for_coherent(cls, alpha_mag: float) -> "Truncation":
        n2 = alpha_mag**2
        return cls(N=int(math.ceil(n2 + 8.0 * math.sqrt(n2 + 1.0) + 20.0)))

    @classmethod
    def for_displacement(cls, alpha_mag: float, levels: int = 0) -> "Truncation":
        """N >= 4|alpha|^2 + 8|alpha|, with room for `levels` reliable levels"""
        base = int(math.ceil(4.0 * alpha_mag**2 + 8.0 * alpha_mag))
        n = max(base, levels + 1, 8)
        trunc = cls(N=n)
        while trunc.reliable_max < levels:
            n += 8
            trunc = cls(N=n)
        return trunc


# ========== LIMIT SWEEPS ==========


def _default_probes() -> List[Tuple[int, int]]:
    return [(n, k) for n in range(6) for k in range(4)]


def _parse_probes(v):
    """'n:k, n:k' or list of pairs"""
    v = _split_list(v)
    pairs = []
    for item in v:
        if isinstance(item, str):
            n, _, k = item.partition(":")
            pairs.append((int(n), int(k)))
        else:
            pairs.append(tuple(item))
    return pairs


FloatList = Annotated[List[float], BeforeValidator(_split_list)]
IntList = Annotated[List[int], BeforeValidator(_split_list)]
ProbeList = Annotated[List[Tuple[int, int]], BeforeValidator(_parse_probes)]


class SweepConfig(FrozenModel):
    amplitude_fixed: float
    lambda_sequence: FloatList
    probe_levels: ProbeList = Field(default_factory=_default_probes)
    time_samples: Optional[FloatList] = None  # None: 16 points over one period
    cutoffs: SeriesCutoffs = Field(default_factory=SeriesCutoffs)

    @field_validator("amplitude_fixed")
    @classmethod
    def validate_amplitude(cls, v):
        if v < 0:
            raise ValueError("amplitude_fixed >= 0")
        return v

    @field_validator("lambda_sequence")
    @classmethod
    def validate_sequence(cls, v):
        return strictly_decreasing_positive(v, "lambda_sequence")

    @field_validator("probe_levels")
    @classmethod
    def validate_probes(cls, v):
        if not v or any(n < 0 or k < 0 for n, k in v):
            raise ValueError("probe_levels need n >= 0, k >= 0")
        return v

    def resolved_times(self, omega0: float) -> List[float]:
        if self.time_samples:
            return list(self.time_samples)
        period = 2.0 * math.pi / omega0
        return [period * j / 16 for j in range(16)]


# ========== DYNAMICS ==========


class PropagationConfig(FrozenModel):
    t_end: float
    dt_initial: float
    norm_tolerance: float = 1e-9
    max_step_halvings: int = 4
    error_tolerance: Optional[float] = None  # None: no step-doubling estimate
    sample_dt: Optional[float] = None  # None: sample every step
    scheme: Literal["cfm4", "midpoint"] = "cfm4"

    @field_validator("t_end")
    @classmethod
    def validate_t_end(cls, v):
        if not v > 0:
            raise ValueError("t_end > 0")
        return v

    @field_validator("dt_initial")
    @classmethod
    def validate_dt(cls, v):
        if not v > 0:
            raise ValueError("dt_initial > 0")
        return v

    @field_validator("norm_tolerance")
    @classmethod
    def validate_norm_tolerance(cls, v):
        if not 0 < v <= 1e-4:
            raise ValueError("norm_tolerance in (0, 1e-4]")
        return v

    @field_validator("max_step_halvings")
    @classmethod
    def validate_halvings(cls, v):
        if v < 0:
            raise ValueError("max_step_halvings >= 0")
        return v

    @field_validator("error_tolerance")
    @classmethod
    def validate_error_tolerance(cls, v):
        if v is not None and not v > 0:
            raise ValueError("error_tolerance > 0")
        return v

    @field_validator("sample_dt")
    @classmethod
    def validate_sample_dt(cls, v):
        if v is not None and not v > 0:
            raise ValueError("sample_dt > 0")
        return v


# ========== REPORTS ==========


class ConvergenceRow(FrozenModel):
    lam: float = Field(alias="lambda")
    alpha_mag: float
    offdiag_norm: float
    diag_residual: float

    @field_validator("offdiag_norm", "diag_residual")
    @classmethod
    def validate_nonnegative(cls, v):
        if v < 0:
            raise ValueError("norms must be >= 0")
        return v


class ConvergenceReport(FrozenModel):
    """One limit sweep: rows by decreasing lambda plus per-order fits"""

    amplitude: float
    rows: List[ConvergenceRow]
    offdiag_by_order: Dict[int, List[float]] = Field(default_factory=dict)
    fitted_exponents: Dict[int, float] = Field(default_factory=dict)
    fitted_prefactors: Dict[int, float] = Field(default_factory=dict)

    @field_validator("rows")
    @classmethod
    def validate_order(cls, v):
        if any(b.lam >= a.lam for a, b in zip(v, v[1:])):
            raise ValueError("rows must be ordered by decreasing lambda")
        return v

    def strictly_decreasing(self, column: str) -> bool:
        values = [getattr(row, column) for row in self.rows]
        return all(b < a for a, b in zip(values, values[1:]))
