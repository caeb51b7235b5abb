"""
Motor de desempeño: promedios por período, indicadores Ψ = [Pu, Y, Pr],
objetivo penalizado H = f + d_k·g y verosimilitud exp(-H/2).

Funciones puras; no dependen del estado de la planta.
"""
import math
from typing import List, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from models.core import ConcentrationProfile, ZonalFlowrates
from schemas.operating import OperatingPoint
from schemas.performance import ObjectiveSpec, PerformanceRecord
from schemas.plant import ColumnGeometry, NetworkConfig
from utils.errors import DegenerateSimulationError, InvalidInputError

# Holgura relativa al exigir que la traza cubra un período completo
_SPAN_TOLERANCE = 1e-9


def period_average(trace: ConcentrationProfile, t_s: float) -> np.ndarray:
    """
    ċ_i = (1/t_s)·∫ c_i(t) dt sobre el primer período de la traza (trapecio compuesto).

    Raises:
        InvalidInputError: la traza es más corta que t_s
    """
    if t_s <= 0:
        raise InvalidInputError("t_s debe ser positivo", t_s=t_s)
    if trace.span < t_s * (1.0 - _SPAN_TOLERANCE):
        raise InvalidInputError("la traza no cubre un período completo", span=trace.span, t_s=t_s)

    start = trace.times[0]
    end = start + t_s
    if trace.times[-1] <= end:
        return trapezoid(trace.values, trace.times, axis=1) / t_s

    inside = trace.times < end
    times = np.append(trace.times[inside], end)
    values = np.hstack([trace.values[:, inside], trace.at(end)[:, None]])
    return trapezoid(values, times, axis=1) / t_s


def indicators(
    extract_average: Sequence[float],
    raffinate_average: Sequence[float],
    flows: ZonalFlowrates,
    op: OperatingPoint,
    config: NetworkConfig,
    geometry: ColumnGeometry,
    component_names: List[str],
) -> PerformanceRecord:
    """
    Pureza, rendimiento y productividad en extracto (E) y refinado (R).

    Pu_i^j = ċ_i^j / Σ_k ċ_k^j
    Y_i^j = Q^j·ċ_i^j / (Q_F·c_F,i); 0 para un componente que no se alimenta
    Pr_i^j = Q^j·ċ_i^j / ((1 - ε_c)·V_c·N), con V_c de la L muestreada

    Raises:
        DegenerateSimulationError: concentraciones nulas en un puerto
        InvalidInputError: promedios negativos o ningún componente alimentado
    """
    avg_e = np.asarray(extract_average, dtype=float)
    avg_r = np.asarray(raffinate_average, dtype=float)
    if np.any(avg_e < 0) or np.any(avg_r < 0):
        raise InvalidInputError("promedios de salida negativos")

    fed = flows.feed * np.asarray(config.feed_concentration, dtype=float)
    if np.any(fed < 0) or not np.any(fed > 0):
        raise InvalidInputError("el rendimiento requiere Q_F·c_F > 0 para algún componente")
    fed_safe = np.where(fed > 0, fed, 1.0)

    purities = []
    for port, avg in (("E", avg_e), ("R", avg_r)):
        total = avg.sum()
        if not total > 0:
            raise DegenerateSimulationError(f"concentración nula en el puerto {port}: pureza indefinida")
        purities.append(avg / total)

    bed_volume = (1.0 - geometry.column_porosity) * geometry.with_length(op.length).column_volume * config.n_columns
    out_e = flows.extract * avg_e
    out_r = flows.raffinate * avg_r
    return PerformanceRecord(
        component_names=list(component_names),
        average_extract=avg_e.tolist(),
        average_raffinate=avg_r.tolist(),
        purity_extract=purities[0].tolist(),
        purity_raffinate=purities[1].tolist(),
        yield_extract=np.where(fed > 0, out_e / fed_safe, 0.0).tolist(),
        yield_raffinate=np.where(fed > 0, out_r / fed_safe, 0.0).tolist(),
        productivity_extract=(out_e / bed_volume).tolist(),
        productivity_raffinate=(out_r / bed_volume).tolist(),
    )


def objective(record: PerformanceRecord, spec: ObjectiveSpec) -> Tuple[float, float, float]:
    """
    f = -(Y_raf^R + Y_ext^E); g = Σ_puertos min(0, Pu - ε)²; H = f + d_k·g
    """
    raf, ext = spec.raffinate_component, spec.extract_component
    f = -(record.yield_raffinate[raf] + record.yield_extract[ext])
    g = (
        min(0.0, record.purity_raffinate[raf] - spec.purity_raffinate) ** 2
        + min(0.0, record.purity_extract[ext] - spec.purity_extract) ** 2
    )
    return f, g, f + spec.penalty_factor * g


def with_objective(record: PerformanceRecord, spec: ObjectiveSpec) -> PerformanceRecord:
    f, g, h = objective(record, spec)
    return record.model_copy(update={"f": f, "g": g, "h": h})


def log_likelihood(h: float) -> float:
    """log p(Ψ|θ) = -H/2"""
    if not math.isfinite(h):
        raise InvalidInputError("H no finito", h=h)
    return -0.5 * h
