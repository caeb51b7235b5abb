"""
Motor de análisis: posproceso de las muestras del posterior.

- Razones de caudal m_j y regiones del plano (m_II, m_III)
- Frentes de Pareto sobre pares de indicadores
- Densidades marginales (KDE), intervalos de credibilidad y tabla resumen
- Envolvente predictiva posterior (PPC) de los perfiles CSS
- Ajustes lineales e histogramas de diferencias de razones
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from models.core import (
    FlowrateRatios,
    LinearFit,
    MarginalDensity,
    ParetoSet,
    PpcEnvelope,
    RatioHistogram,
    Region,
    ZonalFlowrates,
)
from schemas.operating import PARAMETER_COLUMNS, OperatingPoint
from schemas.plant import ColumnGeometry, LinearIsotherm
from utils.diagnostics import credible_interval
from utils.errors import AnalysisError, InsufficientSamplesError, InvalidInputError, SmbBayesError
from utils.logging_utils import log_event
from utils.network_engine import derive_flowrates

# Puntos de la grilla de densidad
KDE_GRID_POINTS = 512

# Pares de Pareto por defecto (extracto: componente fuerte; refinado: débil)
DEFAULT_PARETO_PAIRS = (
    ("Pu_{ext}_E", "Y_{ext}_E"),
    ("Pu_{raf}_R", "Y_{raf}_R"),
    ("Pu_{ext}_E", "Pu_{raf}_R"),
    ("Y_{ext}_E", "Y_{raf}_R"),
    ("Pu_{ext}_E", "Pr_{ext}_E_mol_m3_s"),
    ("Pu_{raf}_R", "Pr_{raf}_R_mol_m3_s"),
)

RATIO_PAIRS = ("III-II", "I-IV")

DERIVED_FLOW_COLUMNS = ("Q_R_m3_s", "Q_II_m3_s", "Q_III_m3_s", "Q_IV_m3_s")


# ========== RAZONES DE CAUDAL Y REGIONES ==========

def flowrate_ratios(
    op: OperatingPoint,
    geometry: ColumnGeometry,
    flows: Optional[ZonalFlowrates] = None,
) -> FlowrateRatios:
    """m_j = (t_s·Q^j - ε_t·V_c) / ((1 - ε_t)·V_c), con V_c de la L muestreada"""
    flows = flows or derive_flowrates(op)
    eps_t = geometry.total_porosity
    v_c = geometry.with_length(op.length).column_volume
    m = [(op.switch_time * q - eps_t * v_c) / ((1.0 - eps_t) * v_c) for q in flows.zones]
    return FlowrateRatios(m_I=m[0], m_II=m[1], m_III=m[2], m_IV=m[3])


def classify_region(m: FlowrateRatios, isotherm: LinearIsotherm) -> Region:
    """
    Región del plano (m_II, m_III) con H_débil < H_fuerte.

    Las fronteras (igualdades) se asignan a la región distinta de A:
    D si m_III <= m_II; A si H_w < m_II y m_III < H_s; C (refinado puro) si
    m_II <= H_w y m_III < H_s; B (extracto puro) si m_II > H_w y m_III >= H_s;
    E en otro caso.
    """
    h_weak, h_strong = isotherm.henry[0], isotherm.henry[-1]
    if m.m_III <= m.m_II:
        return Region.D
    if h_weak < m.m_II and m.m_III < h_strong:
        return Region.A
    if m.m_II <= h_weak and m.m_III < h_strong:
        return Region.C
    if m.m_II > h_weak and m.m_III >= h_strong:
        return Region.B
    return Region.E


def classify_operating_point(op: OperatingPoint, geometry: ColumnGeometry, isotherm: LinearIsotherm) -> FlowrateRatios:
    ratios = flowrate_ratios(op, geometry)
    return FlowrateRatios(ratios.m_I, ratios.m_II, ratios.m_III, ratios.m_IV, classify_region(ratios, isotherm))


def purity_class(purity_extract: float, purity_raffinate: float) -> str:
    """Clase de pureza de ambos puertos: '99.9', '99' o 'below'"""
    lowest = min(purity_extract, purity_raffinate)
    if lowest >= 0.999:
        return "99.9"
    if lowest >= 0.99:
        return "99"
    return "below"


def triangle_table(frame: pd.DataFrame, geometry: ColumnGeometry, isotherm: LinearIsotherm, ext: str, raf: str) -> pd.DataFrame:
    """m_I..m_IV, región y clase de pureza por muestra"""
    rows = []
    for _, sample in frame.iterrows():
        op = OperatingPoint.from_vector(sample[list(PARAMETER_COLUMNS)].to_numpy(dtype=float))
        ratios = classify_operating_point(op, geometry, isotherm)
        pu_e = sample.get(f"Pu_{ext}_E", np.nan)
        pu_r = sample.get(f"Pu_{raf}_R", np.nan)
        rows.append({
            "m_I": ratios.m_I,
            "m_II": ratios.m_II,
            "m_III": ratios.m_III,
            "m_IV": ratios.m_IV,
            "region": ratios.region.value,
            "purity_class": purity_class(pu_e, pu_r) if np.isfinite(pu_e) and np.isfinite(pu_r) else "below",
        })
    return pd.DataFrame(rows, columns=["m_I", "m_II", "m_III", "m_IV", "region", "purity_class"])


# ========== PARETO ==========

def pareto_front(values: np.ndarray, axes: Tuple[str, str] = ("x", "y")) -> ParetoSet:
    """
    Subconjunto no dominado maximizando ambos ejes (barrido por x descendente).

    Un punto queda en el frente si su y supera al mejor y de los puntos con x
    estrictamente mayor y es el máximo de su grupo de igual x; los duplicados
    exactos se conservan todos. Los índices se devuelven en orden de entrada.
    """
    points = np.asarray(values, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0 or points.shape[1] != 2:
        raise AnalysisError("pareto_front necesita al menos un punto con dos ejes", shape=points.shape)
    if not np.all(np.isfinite(points)):
        raise AnalysisError("valores no finitos en los ejes del frente")

    order = np.lexsort((-points[:, 1], -points[:, 0]))
    keep = np.zeros(points.shape[0], dtype=bool)
    best_greater = -np.inf
    start = 0
    while start < order.size:
        x = points[order[start], 0]
        stop = start
        while stop < order.size and points[order[stop], 0] == x:
            stop += 1
        group = order[start:stop]
        group_max = points[group, 1].max()
        if group_max > best_greater:
            keep[group[points[group, 1] == group_max]] = True
        best_greater = max(best_greater, group_max)
        start = stop

    front = np.flatnonzero(keep).tolist()
    dominated = np.flatnonzero(~keep).tolist()
    return ParetoSet(axes=tuple(axes), front=front, dominated=dominated, points=points)


def resolve_axis(template: str, component_names: Sequence[str]) -> str:
    """'Pu_{ext}_E' -> 'Pu_fru_E' (ext = componente más retenido, raf = menos)"""
    return template.format(ext=component_names[-1], raf=component_names[0])


# ========== DENSIDADES E INTERVALOS ==========

def marginal_density(samples: Sequence[float]) -> MarginalDensity:
    """KDE gaussiana con ancho de Silverman 1.06·σ̂·k^(-1/5) en 512 puntos"""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2 or np.ptp(x) == 0:
        raise InsufficientSamplesError("la densidad necesita al menos dos muestras distintas", samples=x.size)
    kde = stats.gaussian_kde(x, bw_method=1.06 * x.size ** (-1.0 / 5.0))
    bandwidth = float(np.sqrt(kde.covariance[0, 0]))
    grid = np.linspace(x.min() - 3 * bandwidth, x.max() + 3 * bandwidth, KDE_GRID_POINTS)
    return MarginalDensity(grid=grid, density=kde(grid), bandwidth=bandwidth)


def derived_flows(frame: pd.DataFrame) -> pd.DataFrame:
    """Q_R, Q_II, Q_III, Q_IV por muestra (mismas identidades que derive_flowrates)"""
    q_rec = frame["Q_rec_m3_s"]
    q_f, q_d, q_e = frame["Q_F_m3_s"], frame["Q_D_m3_s"], frame["Q_E_m3_s"]
    q_ii = q_rec - q_e
    return pd.DataFrame({
        "Q_R_m3_s": q_d + q_f - q_e,
        "Q_II_m3_s": q_ii,
        "Q_III_m3_s": q_ii + q_f,
        "Q_IV_m3_s": q_rec - q_d,
    }, index=frame.index)


def ci_table(frame: pd.DataFrame, columns: Sequence[str], mass: float = 0.66) -> pd.DataFrame:
    """
    Tabla de intervalos de credibilidad: μ (moda de la KDE), δ̆, δ̂ y
    desviaciones porcentuales respecto de μ.
    """
    rows = []
    for name in columns:
        values = frame[name].to_numpy(dtype=float)
        lower, upper = credible_interval(values, mass)
        try:
            mu = marginal_density(values).mode
        except InsufficientSamplesError:
            mu = float(values[0])
        rows.append({
            "parameter": name,
            "mu": mu,
            "lower": lower,
            "upper": upper,
            "lower_deviation_pct": 100.0 * (lower - mu) / mu if mu else np.nan,
            "upper_deviation_pct": 100.0 * (upper - mu) / mu if mu else np.nan,
        })
    return pd.DataFrame(rows, columns=["parameter", "mu", "lower", "upper", "lower_deviation_pct", "upper_deviation_pct"])


# ========== AJUSTES E HISTOGRAMAS ==========

def linear_fit(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Mínimos cuadrados con ordenada; R² = r²"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or np.unique(x).size < 2:
        raise AnalysisError("el ajuste necesita al menos dos valores de x distintos")
    result = stats.linregress(x, y)
    return LinearFit(slope=float(result.slope), intercept=float(result.intercept), r_squared=float(result.rvalue ** 2))


def ratio_difference_histogram(ratios: pd.DataFrame, pair: str, bins="auto") -> RatioHistogram:
    """
    Histograma de m_III - m_II ('III-II') o m_I - m_IV ('I-IV') y su moda por KDE.
    """
    if pair == "III-II":
        values = (ratios["m_III"] - ratios["m_II"]).to_numpy(dtype=float)
    elif pair == "I-IV":
        values = (ratios["m_I"] - ratios["m_IV"]).to_numpy(dtype=float)
    else:
        raise AnalysisError(f"par desconocido: {pair}", allowed=RATIO_PAIRS)
    if values.size == 0:
        raise InsufficientSamplesError("no hay muestras para el histograma")

    if np.ptp(values) == 0:
        v = float(values[0])
        return RatioHistogram(pair, np.array([v, v]), np.array([values.size]), v, values)
    counts, edges = np.histogram(values, bins=bins)
    return RatioHistogram(pair, edges, counts, marginal_density(values).mode, values)


# ========== PUNTOS CARACTERÍSTICOS ==========

def characteristic_points(frame: pd.DataFrame, ext: str, raf: str) -> Dict[str, int]:
    """
    Índices (etiquetas del frame) de tres puntos característicos:
    máxima log-posterior y los extremos del frente Pu_ext^E–Pu_raf^R.
    """
    axes = (f"Pu_{ext}_E", f"Pu_{raf}_R")
    usable = frame.dropna(subset=list(axes) + ["log_posterior"])
    if usable.empty:
        raise InsufficientSamplesError("no hay muestras con indicadores")
    pareto = pareto_front(usable[list(axes)].to_numpy(), axes)
    front = usable.iloc[pareto.front]
    return {
        "max_posterior": usable["log_posterior"].idxmax(),
        "max_extract_purity": front[axes[0]].idxmax(),
        "max_raffinate_purity": front[axes[1]].idxmax(),
    }


# ========== PPC ==========

def ppc_envelope(
    samples: np.ndarray,
    replicates: int,
    simulate: Callable[[np.ndarray], np.ndarray],
    n_columns: int,
    rng: np.random.Generator,
    threads: int = 1,
    anchor: Optional[int] = None,
) -> PpcEnvelope:
    """
    Envolvente min/max de los perfiles CSS de réplicas tomadas del posterior.

    Args:
        samples: θ post burn-in (k, n)
        replicates: Número de réplicas (>= 2)
        simulate: θ -> perfil axial (M, N·N_z) al CSS
        n_columns: Columnas del tren (para la coordenada adimensional)
        rng: Generador para elegir las réplicas
        threads: Hilos para simular en paralelo
        anchor: Fila que siempre se simula (el punto de máxima log-posterior);
            las otras replicates - 1 réplicas se sortean

    Raises:
        InsufficientSamplesError: menos de 2 réplicas exitosas
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if replicates < 2:
        raise InsufficientSamplesError("se necesitan al menos 2 réplicas", replicates=replicates)
    if samples.shape[0] == 0:
        raise InsufficientSamplesError("no hay muestras post burn-in")
    k = samples.shape[0]
    if anchor is None:
        chosen = rng.choice(k, size=replicates, replace=replicates > k)
    else:
        if not 0 <= anchor < k:
            raise InvalidInputError("fila ancla fuera de rango", anchor=anchor, samples=k)
        drawn = rng.choice(k, size=replicates - 1, replace=replicates - 1 > k)
        chosen = np.concatenate([[anchor], drawn])

    def run(index: int) -> Optional[np.ndarray]:
        try:
            return np.asarray(simulate(samples[index]), dtype=float)
        except SmbBayesError as e:
            log_event("analysis", "ppc", "replicate_failed", f"sample={index} {e}", level="WARNING")
            return None

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(run, chosen))
    anchor_profile = results[0] if anchor is not None else None
    profiles = [p for p in results if p is not None]
    if len(profiles) < 2:
        raise InsufficientSamplesError("menos de 2 réplicas PPC exitosas", succeeded=len(profiles))

    stacked = np.stack(profiles)
    n_total = stacked.shape[2]
    n_z = n_total // n_columns
    cells = np.arange(n_total)
    positions = cells // n_z + ((cells % n_z) + 0.5) / n_z
    return PpcEnvelope(
        positions=positions,
        lower=stacked.min(axis=0),
        upper=stacked.max(axis=0),
        replicates=len(profiles),
        profiles=stacked,
        anchor_profile=anchor_profile,
    )
