"""
Schemas Pydantic de la planta SMB: geometría de columna, transporte,
isoterma lineal, discretización y red de columnas.
"""
import math
from enum import Enum
from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# ========== ENUMS ==========

class DiscretizationMode(str, Enum):
    """Modelo de columna que se integra"""
    GRM = "grm"
    EDM_EQUILIBRIUM = "edm-equilibrium"


# ========== COLUMNA ==========

class ColumnGeometry(BaseModel):
    """Geometría y porosidades de una columna (SI)"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    length: float = Field(..., gt=0, description="L [m]")
    diameter: float = Field(..., gt=0, description="d_c [m]")
    particle_radius: float = Field(..., gt=0, description="r_p [m]")
    column_porosity: float = Field(..., gt=0, lt=1, description="ε_c [-]")
    particle_porosity: float = Field(..., ge=0, lt=1, description="ε_p [-]")

    @property
    def total_porosity(self) -> float:
        """ε_t = ε_c + ε_p (1 - ε_c)"""
        return self.column_porosity + self.particle_porosity * (1.0 - self.column_porosity)

    @property
    def cross_section(self) -> float:
        return math.pi * self.diameter ** 2 / 4.0

    @property
    def column_volume(self) -> float:
        """V_c = L π d_c² / 4"""
        return self.length * self.cross_section

    @property
    def phase_ratio(self) -> float:
        """F = (1 - ε_t) / ε_t"""
        eps_t = self.total_porosity
        return (1.0 - eps_t) / eps_t

    def with_length(self, length: float) -> "ColumnGeometry":
        """Copia con otra longitud (L es variable de decisión)"""
        return self.model_copy(update={"length": float(length)})


class TransportParams(BaseModel):
    """Parámetros de transporte de UNA columna (la velocidad depende de la zona)"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    axial_dispersion: float = Field(..., gt=0, description="D_ax [m²/s]")
    pore_diffusion: List[float] = Field(..., min_length=1, description="D_p,i [m²/s]")
    film_transfer: List[float] = Field(..., min_length=1, description="k_f,i [m/s]")
    interstitial_velocity: float = Field(..., gt=0, description="u_int [m/s]")

    @field_validator("pore_diffusion", "film_transfer")
    @classmethod
    def _strictly_positive(cls, v: List[float]) -> List[float]:
        if any(x <= 0 for x in v):
            raise ValueError("todos los coeficientes deben ser > 0")
        return v

    @model_validator(mode="after")
    def _same_components(self) -> "TransportParams":
        if len(self.pore_diffusion) != len(self.film_transfer):
            raise ValueError("pore_diffusion y film_transfer deben tener un valor por componente")
        return self


class TransportConfig(BaseModel):
    """Transporte a nivel planta: D_ax por zona (I..IV) y coeficientes por componente"""
    model_config = ConfigDict(extra="forbid")

    axial_dispersion: List[float] = Field(
        default_factory=lambda: [1e-7, 1e-7, 1e-7, 1e-7],
        min_length=4, max_length=4,
        description="D_ax por zona I..IV [m²/s]",
    )
    pore_diffusion: List[float] = Field(..., min_length=1)
    film_transfer: List[float] = Field(..., min_length=1)

    @field_validator("axial_dispersion", "pore_diffusion", "film_transfer")
    @classmethod
    def _strictly_positive(cls, v: List[float]) -> List[float]:
        if any(x <= 0 for x in v):
            raise ValueError("todos los coeficientes deben ser > 0")
        return v

    def for_zone(self, zone: int, velocity: float) -> TransportParams:
        """TransportParams de una columna ubicada en la zona `zone` (0 = zona I)"""
        return TransportParams(
            axial_dispersion=self.axial_dispersion[zone],
            pore_diffusion=self.pore_diffusion,
            film_transfer=self.film_transfer,
            interstitial_velocity=velocity,
        )


class LinearIsotherm(BaseModel):
    """q_i = H_i c_p,i; componentes ordenados de menor a mayor H (débil primero, H = 0 es un trazador)"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    henry: List[float] = Field(..., min_length=1)
    component_names: List[str] = Field(default_factory=list)

    @field_validator("henry")
    @classmethod
    def _sorted_positive(cls, v: List[float]) -> List[float]:
        if any(h < 0 for h in v):
            raise ValueError("los coeficientes de Henry deben ser >= 0")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("los componentes deben ordenarse por H creciente")
        return v

    @model_validator(mode="after")
    def _default_names(self) -> "LinearIsotherm":
        if not self.component_names:
            object.__setattr__(self, "component_names", [f"c{i}" for i in range(len(self.henry))])
        if len(self.component_names) != len(self.henry):
            raise ValueError("component_names debe tener un nombre por componente")
        return self

    @property
    def n_components(self) -> int:
        return len(self.henry)


class Discretization(BaseModel):
    """Volúmenes finitos + integrador implícito adaptativo"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_axial: int = Field(40, ge=2, description="N_z")
    n_radial: int = Field(1, ge=1, description="N_r")
    mode: DiscretizationMode = DiscretizationMode.GRM
    abs_tol: float = Field(1e-10, gt=0)
    rel_tol: float = Field(1e-6, gt=0)
    initial_step: float = Field(1e-14, gt=0, description="[s]")
    max_step: float = Field(5e6, gt=0, description="[s]")
    samples_per_period: int = Field(200, ge=2, description="muestras de la traza de salida por período")


# ========== RED SMB ==========

class NetworkConfig(BaseModel):
    """Lazo de N columnas en cuatro zonas"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    zone_layout: List[int] = Field(default_factory=lambda: [2, 2, 2, 2], min_length=4, max_length=4)
    feed_concentration: List[float] = Field(..., min_length=2, description="c_in,i^F [mol/m³]")
    desorbent_concentration: List[float] = Field(..., min_length=2, description="c_in,i^D [mol/m³]")
    css_tolerance: float = Field(1e-5, gt=0)
    css_max_switches: int = Field(300, ge=1)

    @field_validator("zone_layout")
    @classmethod
    def _columns_per_zone(cls, v: List[int]) -> List[int]:
        if any(n < 1 for n in v):
            raise ValueError("cada zona necesita al menos una columna")
        return v

    @field_validator("feed_concentration", "desorbent_concentration")
    @classmethod
    def _non_negative(cls, v: List[float]) -> List[float]:
        if any(c < 0 for c in v):
            raise ValueError("las concentraciones deben ser >= 0")
        return v

    @model_validator(mode="after")
    def _same_components(self) -> "NetworkConfig":
        if len(self.feed_concentration) != len(self.desorbent_concentration):
            raise ValueError("alimentación y desorbente deben tener el mismo número de componentes")
        return self

    @property
    def n_columns(self) -> int:
        return sum(self.zone_layout)

    @property
    def n_components(self) -> int:
        return len(self.feed_concentration)


class SimulationSetup(BaseModel):
    """Todo lo que la simulación necesita además del punto de operación"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    geometry: ColumnGeometry
    transport: TransportConfig
    isotherm: LinearIsotherm
    discretization: Discretization
    network: NetworkConfig

    @model_validator(mode="after")
    def _component_counts(self) -> "SimulationSetup":
        m = self.isotherm.n_components
        counts = {
            "transport.pore_diffusion": len(self.transport.pore_diffusion),
            "transport.film_transfer": len(self.transport.film_transfer),
            "network.feed_concentration": self.network.n_components,
        }
        wrong = [name for name, n in counts.items() if n != m]
        if wrong:
            raise ValueError(f"número de componentes inconsistente con la isoterma ({m}): {', '.join(wrong)}")
        return self
