"""
Schemas Pydantic de desempeño: especificación del objetivo (ε-restricción con
penalización) y registro de indicadores Ψ = [Pu, Y, Pr] por puerto.
"""
import math
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


PORTS = ("E", "R")


class ObjectiveSpec(BaseModel):
    """
    f = -(Y_raf_comp^R + Y_ext_comp^E); g = Σ ‖min(0, Pu - ε)‖²; H = f + d_k·g.

    Por defecto el componente débil (índice 0) es el objetivo del refinado y
    el fuerte (último índice) el del extracto.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    raffinate_component: int = Field(0, ge=0)
    extract_component: int = Field(-1)
    purity_raffinate: float = Field(0.99, gt=0, lt=1)
    purity_extract: float = Field(0.99, gt=0, lt=1)
    penalty_factor: float = Field(100.0, gt=0, description="d_k")


class PerformanceRecord(BaseModel):
    """Indicadores de desempeño al estado cíclico estacionario"""
    model_config = ConfigDict(extra="forbid")

    component_names: List[str]
    average_extract: List[float] = Field(..., description="ċ^E [mol/m³]")
    average_raffinate: List[float] = Field(..., description="ċ^R [mol/m³]")
    purity_extract: List[float]
    purity_raffinate: List[float]
    yield_extract: List[float]
    yield_raffinate: List[float]
    productivity_extract: List[float] = Field(..., description="[mol/(m³·s)]")
    productivity_raffinate: List[float] = Field(..., description="[mol/(m³·s)]")
    f: Optional[float] = None
    g: Optional[float] = None
    h: Optional[float] = None

    @model_validator(mode="after")
    def _one_value_per_component(self) -> "PerformanceRecord":
        m = len(self.component_names)
        for name in (
            "average_extract", "average_raffinate", "purity_extract", "purity_raffinate",
            "yield_extract", "yield_raffinate", "productivity_extract", "productivity_raffinate",
        ):
            if len(getattr(self, name)) != m:
                raise ValueError(f"{name} debe tener {m} valores")
        return self

    @classmethod
    def zeros(cls, component_names: List[str]) -> "PerformanceRecord":
        """Registro nulo (alimentación sin soluto)"""
        z = [0.0] * len(component_names)
        return cls(
            component_names=list(component_names),
            average_extract=z, average_raffinate=z,
            purity_extract=z, purity_raffinate=z,
            yield_extract=z, yield_raffinate=z,
            productivity_extract=z, productivity_raffinate=z,
            f=0.0, g=0.0, h=0.0,
        )

    # ---------- acceso por nombre ----------

    def _values(self, kind: str, port: str) -> List[float]:
        suffix = {"E": "extract", "R": "raffinate"}[port]
        attr = {"Pu": "purity", "Y": "yield", "Pr": "productivity", "cavg": "average"}[kind]
        return getattr(self, f"{attr}_{suffix}")

    def indicator(self, kind: str, component: str, port: str) -> float:
        """Valor de Pu/Y/Pr/cavg para un componente y puerto (E o R)"""
        idx = self.component_names.index(component)
        return self._values(kind, port)[idx]

    def to_row(self) -> Dict[str, float]:
        """Fila plana para CSV (cabeceras con unidades SI)"""
        row: Dict[str, float] = {}
        for port in PORTS:
            for i, comp in enumerate(self.component_names):
                row[f"Pu_{comp}_{port}"] = self._values("Pu", port)[i]
                row[f"Y_{comp}_{port}"] = self._values("Y", port)[i]
                row[f"Pr_{comp}_{port}_mol_m3_s"] = self._values("Pr", port)[i]
                row[f"cavg_{comp}_{port}_mol_m3"] = self._values("cavg", port)[i]
        return row

    @classmethod
    def from_row(cls, row: Dict[str, float], component_names: List[str], f=None, g=None, h=None) -> "PerformanceRecord":
        """Inversa de to_row (lee filas de chain_<i>.csv)"""
        def col(kind: str, port: str, unit: str = "") -> List[float]:
            return [float(row[f"{kind}_{c}_{port}{unit}"]) for c in component_names]

        def opt(x):
            return None if x is None or (isinstance(x, float) and math.isnan(x)) else float(x)

        return cls(
            component_names=list(component_names),
            average_extract=col("cavg", "E", "_mol_m3"),
            average_raffinate=col("cavg", "R", "_mol_m3"),
            purity_extract=col("Pu", "E"),
            purity_raffinate=col("Pu", "R"),
            yield_extract=col("Y", "E"),
            yield_raffinate=col("Y", "R"),
            productivity_extract=col("Pr", "E", "_mol_m3_s"),
            productivity_raffinate=col("Pr", "R", "_mol_m3_s"),
            f=opt(f), g=opt(g), h=opt(h),
        )
