"""
Schemas Pydantic del vector de decisión θ = (L, t_s, Q_rec, Q_F, Q_D, Q_E)
y de la distribución a priori uniforme sobre la caja de cotas.
"""
import math
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# Orden canónico de θ (se usa en vectores, CSV y checkpoints)
PARAMETER_NAMES = (
    "length",
    "switch_time",
    "recycle_flow",
    "feed_flow",
    "desorbent_flow",
    "extract_flow",
)

# Cabeceras CSV con unidades SI
PARAMETER_COLUMNS = ("L_m", "t_s_s", "Q_rec_m3_s", "Q_F_m3_s", "Q_D_m3_s", "Q_E_m3_s")


# ========== COTAS / PRIOR ==========

class ParameterBounds(BaseModel):
    """Caja [θ_min, θ_max] en el orden de PARAMETER_NAMES"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    lower: List[float] = Field(..., min_length=1)
    upper: List[float] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _ordered(self) -> "ParameterBounds":
        if len(self.lower) != len(self.upper):
            raise ValueError("lower y upper deben tener la misma dimensión")
        bad = [i for i, (lo, hi) in enumerate(zip(self.lower, self.upper)) if not lo < hi]
        if bad:
            raise ValueError(f"se requiere lower < upper en los índices {bad}")
        return self

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def width(self) -> np.ndarray:
        return np.asarray(self.upper, dtype=float) - np.asarray(self.lower, dtype=float)

    def contains(self, theta: Sequence[float]) -> bool:
        """Pertenencia a la caja cerrada"""
        x = np.asarray(theta, dtype=float)
        if x.shape != (self.dimension,) or not np.all(np.isfinite(x)):
            return False
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


class PriorSpec(BaseModel):
    """Prior no informativo: uniforme dentro de la caja, cero fuera"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    bounds: ParameterBounds

    def log_density(self, theta: Sequence[float]) -> float:
        """Log-densidad no normalizada: 0 dentro de la caja, -inf fuera"""
        return 0.0 if self.bounds.contains(theta) else -math.inf


# ========== PUNTO DE OPERACIÓN ==========

class OperatingPoint(BaseModel):
    """θ en unidades SI; las cotas son opcionales (el sampler las aporta)"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    length: float = Field(..., gt=0, description="L [m]")
    switch_time: float = Field(..., gt=0, description="t_s [s]")
    recycle_flow: float = Field(..., gt=0, description="Q_rec [m³/s]")
    feed_flow: float = Field(..., ge=0, description="Q_F [m³/s]")
    desorbent_flow: float = Field(..., ge=0, description="Q_D [m³/s]")
    extract_flow: float = Field(..., ge=0, description="Q_E [m³/s]")
    bounds: Optional[ParameterBounds] = None

    @field_validator("bounds")
    @classmethod
    def _six_dimensional(cls, v: Optional[ParameterBounds]) -> Optional[ParameterBounds]:
        if v is not None and v.dimension != len(PARAMETER_NAMES):
            raise ValueError(f"las cotas deben tener {len(PARAMETER_NAMES)} componentes")
        return v

    @model_validator(mode="after")
    def _inside_bounds(self) -> "OperatingPoint":
        if self.bounds is not None and not self.bounds.contains(self.to_vector()):
            outside = [
                name for name, x, lo, hi in zip(PARAMETER_NAMES, self.to_vector(), self.bounds.lower, self.bounds.upper)
                if not lo <= x <= hi
            ]
            raise ValueError(f"fuera de las cotas: {', '.join(outside)}")
        return self

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PARAMETER_NAMES], dtype=float)

    @classmethod
    def from_vector(cls, theta: Sequence[float], bounds: Optional[ParameterBounds] = None) -> "OperatingPoint":
        values = [float(x) for x in theta]
        if len(values) != len(PARAMETER_NAMES):
            raise ValueError(f"θ debe tener {len(PARAMETER_NAMES)} componentes, tiene {len(values)}")
        return cls(**dict(zip(PARAMETER_NAMES, values)), bounds=bounds)
