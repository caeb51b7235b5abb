"""
Objetos de estado en tiempo de ejecución (dataclasses sobre numpy).

Los schemas de schemas/ validan entradas; aquí viven los estados que mutan
durante la simulación y el muestreo: perfiles de concentración, estado de
columna y de planta, cadenas de Markov y resultados de análisis.
"""
import enum
import math
import threading
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from schemas.plant import ColumnGeometry, Discretization, DiscretizationMode


# ============================================================================
# ENUMS
# ============================================================================

class PortRole(str, enum.Enum):
    """Rol del nodo aguas abajo de una columna"""
    FEED = "F"
    DESORBENT = "D"
    RAFFINATE = "R"
    EXTRACT = "E"
    NONE = "none"


class Region(str, enum.Enum):
    """Regiones del plano (m_II, m_III)"""
    A = "A"  # separación completa
    B = "B"  # extracto puro
    C = "C"  # refinado puro (extracto contaminado)
    D = "D"  # m_III <= m_II, sin solución
    E = "E"  # ninguna corriente pura


# ============================================================================
# TRANSPORTE
# ============================================================================

@dataclass(frozen=True)
class ConcentrationProfile:
    """
    Traza c_i(t) muestreada: times (n,), values (M, n).

    Se interpola linealmente entre muestras; se usa tanto para la entrada
    de una columna como para su salida.
    """
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if times.ndim != 1 or times.size < 2:
            raise ValueError("un perfil necesita al menos dos instantes")
        if values.shape[1] != times.size:
            raise ValueError(f"values {values.shape} no coincide con times ({times.size})")
        if np.any(np.diff(times) <= 0):
            raise ValueError("los instantes deben ser estrictamente crecientes")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, concentration: Sequence[float], horizon: float, samples: int = 2) -> "ConcentrationProfile":
        times = np.linspace(0.0, horizon, max(samples, 2))
        values = np.repeat(np.asarray(concentration, dtype=float)[:, None], times.size, axis=1)
        return cls(times, values)

    @classmethod
    def zeros(cls, n_components: int, horizon: float, samples: int = 2) -> "ConcentrationProfile":
        return cls.constant(np.zeros(n_components), horizon, samples)

    @property
    def n_components(self) -> int:
        return self.values.shape[0]

    @property
    def span(self) -> float:
        return float(self.times[-1] - self.times[0])

    def at(self, t: float) -> np.ndarray:
        """c(t) por componente, interpolación lineal"""
        return np.array([np.interp(t, self.times, row) for row in self.values])


@dataclass(frozen=True)
class SpatialOperator:
    """
    Malla de volúmenes finitos de una columna.

    radial_diffusion es el acople entre capas esféricas por unidad de ε_p·D_p
    (filas ya divididas por la fracción de volumen de cada capa);
    surface_factor = 3/r_p.
    """
    geometry: ColumnGeometry
    discretization: Discretization
    cell_width: float
    cell_centers: np.ndarray
    face_positions: np.ndarray
    shell_edges: np.ndarray
    shell_fractions: np.ndarray
    radial_diffusion: np.ndarray
    surface_factor: float

    @property
    def n_axial(self) -> int:
        return self.discretization.n_axial

    @property
    def n_radial(self) -> int:
        return self.discretization.n_radial

    @property
    def mode(self) -> DiscretizationMode:
        return self.discretization.mode


@dataclass(frozen=True)
class ColumnState:
    """Concentraciones de una columna: c (M, N_z), c_p y q (M, N_z, N_r)"""
    c: np.ndarray
    cp: np.ndarray
    q: np.ndarray
    time: float = 0.0

    @classmethod
    def empty(cls, n_components: int, n_axial: int, n_radial: int) -> "ColumnState":
        return cls(
            c=np.zeros((n_components, n_axial)),
            cp=np.zeros((n_components, n_axial, n_radial)),
            q=np.zeros((n_components, n_axial, n_radial)),
        )

    @property
    def n_components(self) -> int:
        return self.c.shape[0]

    def is_empty(self) -> bool:
        return not (np.any(self.c) or np.any(self.cp))


# ============================================================================
# RED SMB
# ============================================================================

@dataclass(frozen=True)
class ZonalFlowrates:
    """Caudales de zona (I..IV), de puertos y velocidades intersticiales"""
    zones: Tuple[float, float, float, float]
    feed: float
    desorbent: float
    extract: float
    raffinate: float
    velocities: Tuple[float, ...] = ()

    @property
    def q_I(self) -> float:
        return self.zones[0]

    @property
    def q_II(self) -> float:
        return self.zones[1]

    @property
    def q_III(self) -> float:
        return self.zones[2]

    @property
    def q_IV(self) -> float:
        return self.zones[3]

    def port_flow(self, role: PortRole) -> float:
        return {
            PortRole.FEED: self.feed,
            PortRole.DESORBENT: self.desorbent,
            PortRole.EXTRACT: self.extract,
            PortRole.RAFFINATE: self.raffinate,
            PortRole.NONE: 0.0,
        }[role]


@dataclass
class SmbState:
    """
    Estado de la planta tras k conmutaciones.

    columns está en orden físico; la columna física en la posición p del marco
    de puertos es (p + k) mod N. La posición 0 es la primera columna de la
    zona I (aguas abajo del desorbente).
    """
    columns: List[ColumnState]
    zone_layout: Tuple[int, int, int, int]
    switch_index: int = 0
    recycle_trace: Optional[ConcentrationProfile] = None
    extract_trace: Optional[ConcentrationProfile] = None
    raffinate_trace: Optional[ConcentrationProfile] = None
    last_profile: Optional[np.ndarray] = None

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    def physical_index(self, position: int) -> int:
        return (position + self.switch_index) % self.n_columns

    def zone_of_position(self, position: int) -> int:
        """Zona (0 = I) de la columna en la posición dada"""
        edge = 0
        for zone, count in enumerate(self.zone_layout):
            edge += count
            if position < edge:
                return zone
        raise IndexError(position)

    def role_after_position(self, position: int) -> PortRole:
        n1, n2, n3, _ = self.zone_layout
        if position == n1 - 1:
            return PortRole.EXTRACT
        if position == n1 + n2 - 1:
            return PortRole.FEED
        if position == n1 + n2 + n3 - 1:
            return PortRole.RAFFINATE
        if position == self.n_columns - 1:
            return PortRole.DESORBENT
        return PortRole.NONE

    def port_roles(self) -> Dict[int, PortRole]:
        """Rol del nodo aguas abajo de cada columna física"""
        return {self.physical_index(p): self.role_after_position(p) for p in range(self.n_columns)}


@dataclass(frozen=True)
class CssResult:
    state: SmbState
    extract_trace: ConcentrationProfile
    raffinate_trace: ConcentrationProfile
    extract_average: np.ndarray
    raffinate_average: np.ndarray
    metric: float
    switches: int


# ============================================================================
# MUESTREO
# ============================================================================

@dataclass(frozen=True)
class TargetEvaluation:
    """Resultado de evaluar la densidad objetivo en θ"""
    log_posterior: float
    record: Optional[Any] = None  # PerformanceRecord en el caso SMB

    def _objective(self, name: str) -> float:
        value = getattr(self.record, name, None) if self.record is not None else None
        return math.nan if value is None else float(value)

    @property
    def h(self) -> float:
        return self._objective("h")

    @property
    def f(self) -> float:
        return self._objective("f")

    @property
    def g(self) -> float:
        return self._objective("g")


REJECTED = TargetEvaluation(log_posterior=-math.inf)


@dataclass(frozen=True)
class ProposalCovariance:
    """
    Σ del paseo aleatorio y su factor R (Σ = R·Rᵀ, triangular inferior).

    scaling = 2.4²/√n; regularizer = ε_a por coordenada; shrink = a de la
    segunda etapa; sigma0 = σ̃_0.
    """
    matrix: np.ndarray
    factor: np.ndarray
    regularizer: np.ndarray
    shrink: float = 0.1
    sigma0: float = 1.0

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, regularizer: Sequence[float], shrink: float = 0.1, sigma0: float = 1.0) -> "ProposalCovariance":
        matrix = np.asarray(matrix, dtype=float)
        matrix = 0.5 * (matrix + matrix.T)
        factor = linalg.cholesky(matrix, lower=True)
        return cls(matrix=matrix, factor=factor, regularizer=np.asarray(regularizer, dtype=float),
                   shrink=shrink, sigma0=sigma0)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def scaling(self) -> float:
        return 2.4 ** 2 / math.sqrt(self.dimension)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "matrix": self.matrix.tolist(),
            "regularizer": self.regularizer.tolist(),
            "shrink": self.shrink,
            "sigma0": self.sigma0,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProposalCovariance":
        return cls.from_matrix(np.asarray(data["matrix"]), data["regularizer"], data["shrink"], data["sigma0"])


@dataclass(frozen=True)
class ChainState:
    theta: np.ndarray
    evaluation: TargetEvaluation
    iteration: int = 0
    accepted_first: int = 0
    accepted_second: int = 0
    last_stage: int = 0  # 0 repetido, 1 aceptado en la primera etapa, 2 en la segunda

    @property
    def log_posterior(self) -> float:
        return self.evaluation.log_posterior

    def advanced(self, theta: np.ndarray, evaluation: TargetEvaluation, stage: int) -> "ChainState":
        return replace(
            self,
            theta=theta,
            evaluation=evaluation,
            iteration=self.iteration + 1,
            accepted_first=self.accepted_first + (stage == 1),
            accepted_second=self.accepted_second + (stage == 2),
            last_stage=stage,
        )


@dataclass(frozen=True)
class SampleRow:
    iteration: int
    theta: np.ndarray
    log_posterior: float
    stage: int
    record: Optional[Any] = None

    @classmethod
    def from_chain(cls, chain: ChainState) -> "SampleRow":
        return cls(
            iteration=chain.iteration,
            theta=np.array(chain.theta, dtype=float),
            log_posterior=chain.log_posterior,
            stage=chain.last_stage,
            record=chain.evaluation.record,
        )


class SampleStore:
    """
    Historia multi-cadena compartida.

    Cada cadena escribe sólo su propia lista; las lecturas del monitor toman
    una copia bajo el lock.
    """

    def __init__(self, n_chains: int, parameter_names: Sequence[str], burn_in: int = 0):
        if n_chains < 1:
            raise ValueError("se necesita al menos una cadena")
        self.parameter_names = tuple(parameter_names)
        self.burn_in = int(burn_in)
        self._rows: List[List[SampleRow]] = [[] for _ in range(n_chains)]
        self._lock = threading.Lock()

    @property
    def n_chains(self) -> int:
        return len(self._rows)

    @property
    def dimension(self) -> int:
        return len(self.parameter_names)

    def append(self, chain: int, row: SampleRow) -> None:
        with self._lock:
            self._rows[chain].append(row)

    def length(self, chain: int) -> int:
        with self._lock:
            return len(self._rows[chain])

    def lengths(self) -> List[int]:
        with self._lock:
            return [len(rows) for rows in self._rows]

    def rows(self, chain: int) -> List[SampleRow]:
        with self._lock:
            return list(self._rows[chain])

    def history(self, chain: int) -> np.ndarray:
        """Historia completa de θ de una cadena (k, n)"""
        rows = self.rows(chain)
        if not rows:
            return np.empty((0, self.dimension))
        return np.vstack([r.theta for r in rows])

    def snapshot(self, discard_burn_in: bool = True) -> np.ndarray:
        """Matriz Φ (m, k, n) con la misma longitud k para todas las cadenas"""
        with self._lock:
            chains = [list(rows) for rows in self._rows]
        start = self.burn_in if discard_burn_in else 0
        k = max(0, min(len(rows) for rows in chains) - start)
        out = np.empty((self.n_chains, k, self.dimension))
        for i, rows in enumerate(chains):
            for j, row in enumerate(rows[start:start + k]):
                out[i, j] = row.theta
        return out

    def post_burn_in_rows(self) -> List[Tuple[int, SampleRow]]:
        """(cadena, fila) de todas las muestras posteriores al burn-in"""
        with self._lock:
            return [(i, row) for i, rows in enumerate(self._rows) for row in rows[self.burn_in:]]


@dataclass
class Diagnostics:
    parameter_names: Tuple[str, ...]
    rhat: np.ndarray
    ess: np.ndarray
    autocorrelation: Dict[str, List[float]]
    threshold: float = 1.1
    converged: bool = False
    rhat_history: List[Dict[str, Any]] = field(default_factory=list)
    acceptance: List[Dict[str, float]] = field(default_factory=list)
    post_burn_in_length: int = 0

    @property
    def mean_ess(self) -> float:
        finite = self.ess[np.isfinite(self.ess)]
        return float(finite.mean()) if finite.size else math.nan


# ============================================================================
# ANÁLISIS
# ============================================================================

@dataclass(frozen=True)
class FlowrateRatios:
    m_I: float
    m_II: float
    m_III: float
    m_IV: float
    region: Optional[Region] = None


@dataclass(frozen=True)
class ParetoSet:
    axes: Tuple[str, str]
    front: List[int]       # índices en el orden de entrada
    dominated: List[int]
    points: np.ndarray     # (k, 2)


@dataclass(frozen=True)
class MarginalDensity:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    @property
    def mode(self) -> float:
        return float(self.grid[int(np.argmax(self.density))])


@dataclass(frozen=True)
class PpcEnvelope:
    positions: np.ndarray   # coordenada adimensional del tren (columna + z/L)
    lower: np.ndarray       # (M, P)
    upper: np.ndarray       # (M, P)
    replicates: int
    profiles: Optional[np.ndarray] = None  # (r, M, P)
    anchor_profile: Optional[np.ndarray] = None  # (M, P) perfil del punto de máxima log-posterior


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class RatioHistogram:
    pair: str
    edges: np.ndarray
    counts: np.ndarray
    mode: float
    values: np.ndarray
