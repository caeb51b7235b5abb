"""
Schemas Pydantic de smb-bayes (entradas y registros validados).
"""
from .plant import (
    DiscretizationMode,
    ColumnGeometry,
    TransportParams,
    TransportConfig,
    LinearIsotherm,
    Discretization,
    NetworkConfig,
    SimulationSetup,
)
from .operating import (
    PARAMETER_NAMES,
    PARAMETER_COLUMNS,
    ParameterBounds,
    PriorSpec,
    OperatingPoint,
)
from .performance import PORTS, ObjectiveSpec, PerformanceRecord
from .run_config import (
    PlantNetwork,
    PlantBlock,
    SolverBlock,
    SamplerSettings,
    SamplerBlock,
    PathsBlock,
    RunConfig,
)

__all__ = [
    "DiscretizationMode", "ColumnGeometry", "TransportParams", "TransportConfig",
    "LinearIsotherm", "Discretization", "NetworkConfig", "SimulationSetup",
    "PARAMETER_NAMES", "PARAMETER_COLUMNS", "ParameterBounds", "PriorSpec", "OperatingPoint",
    "PORTS", "ObjectiveSpec", "PerformanceRecord",
    "PlantNetwork", "PlantBlock", "SolverBlock", "SamplerSettings", "SamplerBlock",
    "PathsBlock", "RunConfig",
]
