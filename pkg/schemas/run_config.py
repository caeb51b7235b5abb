"""
Schema del documento de configuración de una corrida (JSON).

Bloques: plant, solver, objective, sampler, paths y operating_point (opcional).
Todas las magnitudes en SI.
"""
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from schemas.operating import PARAMETER_NAMES, OperatingPoint, ParameterBounds, PriorSpec
from schemas.performance import ObjectiveSpec
from schemas.plant import (
    ColumnGeometry,
    Discretization,
    LinearIsotherm,
    NetworkConfig,
    SimulationSetup,
    TransportConfig,
)


# ========== PLANTA ==========

class PlantNetwork(BaseModel):
    """Disposición de zonas y concentraciones de entrada"""
    model_config = ConfigDict(extra="forbid")

    zone_layout: List[int] = Field(default_factory=lambda: [2, 2, 2, 2], min_length=4, max_length=4)
    feed_concentration: List[float] = Field(..., min_length=2)
    desorbent_concentration: List[float] = Field(..., min_length=2)


class PlantBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    geometry: ColumnGeometry
    transport: TransportConfig
    isotherm: LinearIsotherm
    network: PlantNetwork

    @field_validator("isotherm")
    @classmethod
    def _retained_components(cls, v: LinearIsotherm) -> LinearIsotherm:
        # H = 0 (trazador) solo se admite en llamadas directas al motor de transporte
        if any(h <= 0 for h in v.henry):
            raise ValueError("en una planta SMB todos los coeficientes de Henry deben ser > 0")
        return v


class SolverBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    discretization: Discretization = Field(default_factory=Discretization)
    css_tolerance: float = Field(1e-5, gt=0)
    css_max_switches: int = Field(300, ge=1)


# ========== SAMPLER ==========

class SamplerSettings(BaseModel):
    """Parámetros del muestreador (independientes de la dimensión de θ)"""
    model_config = ConfigDict(extra="forbid")

    chains: int = Field(2, ge=2)
    budget: int = Field(400, ge=1, description="muestras máximas por cadena (incluye θ0)")
    burn_in: Optional[int] = Field(50, ge=0)
    burn_in_fraction: Optional[float] = Field(None, ge=0, lt=1)
    rhat_threshold: float = Field(1.1, gt=0)
    seed: Optional[int] = Field(None, ge=0, lt=2 ** 64)
    adaptation_interval: int = Field(50, ge=2)
    monitor_every: int = Field(10, ge=1)
    shrink_factor: float = Field(0.1, gt=0, lt=1)
    sigma0: float = Field(1.0, gt=0)
    delayed_rejection: bool = True
    adaptation: bool = True
    freeze_adaptation_on_convergence: bool = True
    stop_on_convergence: bool = True
    initial_covariance: Literal["fisher", "pilot", "diagonal"] = "fisher"
    pilot_samples: int = Field(50, ge=2)

    @model_validator(mode="after")
    def _burn_in_below_budget(self) -> "SamplerSettings":
        if self.effective_burn_in() >= self.budget:
            raise ValueError(f"burn-in ({self.effective_burn_in()}) debe ser menor que budget ({self.budget})")
        return self

    def effective_burn_in(self) -> int:
        """Burn-in absoluto; la fracción tiene prioridad si está definida"""
        if self.burn_in_fraction is not None:
            return int(self.budget * self.burn_in_fraction)
        return self.burn_in or 0


class SamplerBlock(SamplerSettings):
    bounds: ParameterBounds
    initial_points: Optional[List[List[float]]] = None

    @field_validator("bounds")
    @classmethod
    def _six_dimensional(cls, v: ParameterBounds) -> ParameterBounds:
        if v.dimension != len(PARAMETER_NAMES):
            raise ValueError(f"las cotas deben tener {len(PARAMETER_NAMES)} componentes")
        return v

    @model_validator(mode="after")
    def _initial_points(self) -> "SamplerBlock":
        if self.initial_points is None:
            return self
        if len(self.initial_points) != self.chains:
            raise ValueError("initial_points debe tener un punto por cadena")
        for i, point in enumerate(self.initial_points):
            if not self.bounds.contains(point):
                raise ValueError(f"initial_points[{i}] fuera de las cotas")
        return self

    @property
    def prior(self) -> PriorSpec:
        return PriorSpec(bounds=self.bounds)


class PathsBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    output_dir: Optional[str] = None


# ========== DOCUMENTO COMPLETO ==========

class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    plant: PlantBlock
    solver: SolverBlock = Field(default_factory=SolverBlock)
    objective: ObjectiveSpec = Field(default_factory=ObjectiveSpec)
    sampler: Optional[SamplerBlock] = None
    paths: PathsBlock = Field(default_factory=PathsBlock)
    operating_point: Optional[OperatingPoint] = None

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        # Construir el setup valida el número de componentes en todos los bloques
        self.simulation_setup()
        m = self.plant.isotherm.n_components
        for name, idx in (("raffinate_component", self.objective.raffinate_component),
                          ("extract_component", self.objective.extract_component)):
            if not -m <= idx < m:
                raise ValueError(f"objective.{name} fuera de rango para {m} componentes")
        return self

    def network_config(self) -> NetworkConfig:
        return NetworkConfig(
            zone_layout=self.plant.network.zone_layout,
            feed_concentration=self.plant.network.feed_concentration,
            desorbent_concentration=self.plant.network.desorbent_concentration,
            css_tolerance=self.solver.css_tolerance,
            css_max_switches=self.solver.css_max_switches,
        )

    def simulation_setup(self) -> SimulationSetup:
        return SimulationSetup(
            geometry=self.plant.geometry,
            transport=self.plant.transport,
            isotherm=self.plant.isotherm,
            discretization=self.solver.discretization,
            network=self.network_config(),
        )
