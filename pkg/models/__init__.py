"""
Objetos de estado en tiempo de ejecución (dataclasses).
"""
from .core import (
    REJECTED,
    ChainState,
    ColumnState,
    ConcentrationProfile,
    CssResult,
    Diagnostics,
    FlowrateRatios,
    LinearFit,
    MarginalDensity,
    ParetoSet,
    PortRole,
    PpcEnvelope,
    ProposalCovariance,
    RatioHistogram,
    Region,
    SampleRow,
    SampleStore,
    SmbState,
    SpatialOperator,
    TargetEvaluation,
    ZonalFlowrates,
)
