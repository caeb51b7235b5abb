"""
Motor de red SMB: cuatro zonas en lazo cerrado, balances de nodo y conmutación
periódica de puertos hasta el estado cíclico estacionario (CSS).

Marco de posiciones: la posición 0 es la primera columna de la zona I (justo
aguas abajo del desorbente). Dentro de un período las columnas se resuelven en
el sentido del flujo empezando por la posición 0; el reciclo que cierra el lazo
usa la traza de salida de la última posición del período anterior.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.integrate import trapezoid

from models.core import (
    ColumnState,
    ConcentrationProfile,
    CssResult,
    PortRole,
    SmbState,
    ZonalFlowrates,
)
from schemas.operating import OperatingPoint
from schemas.plant import ColumnGeometry, NetworkConfig, SimulationSetup
from utils.errors import CssNotReachedError, InfeasibleOperatingPointError
from utils.logging_utils import log_event
from utils.performance_engine import period_average
from utils.transport_engine import build_grid, column_inventory, integrate_period


# ========== CAUDALES ==========

def derive_flowrates(op: OperatingPoint, geometry: Optional[ColumnGeometry] = None) -> ZonalFlowrates:
    """
    Caudales de zona a partir de θ:
    Q_I = Q_rec, Q_II = Q_rec - Q_E, Q_III = Q_II + Q_F, Q_IV = Q_rec - Q_D,
    Q_R = Q_D + Q_F - Q_E; u_int^j = Q^j / (ε_c·A) si se pasa la geometría.

    Raises:
        InfeasibleOperatingPointError: algún caudal derivado <= 0
    """
    q_i = op.recycle_flow
    q_ii = op.recycle_flow - op.extract_flow
    q_iii = q_ii + op.feed_flow
    q_iv = op.recycle_flow - op.desorbent_flow
    q_r = op.desorbent_flow + op.feed_flow - op.extract_flow

    derived = {"Q_I": q_i, "Q_II": q_ii, "Q_III": q_iii, "Q_IV": q_iv, "Q_R": q_r}
    bad = {name: value for name, value in derived.items() if not value > 0}
    if bad:
        detail = ", ".join(f"{k}={v:.4g}" for k, v in bad.items())
        raise InfeasibleOperatingPointError(f"caudales de zona no positivos: {detail}", **bad)

    zones = (q_i, q_ii, q_iii, q_iv)
    velocities = ()
    if geometry is not None:
        free_area = geometry.column_porosity * geometry.cross_section
        velocities = tuple(q / free_area for q in zones)
    return ZonalFlowrates(
        zones=zones,
        feed=op.feed_flow,
        desorbent=op.desorbent_flow,
        extract=op.extract_flow,
        raffinate=q_r,
        velocities=velocities,
    )


# ========== NODOS ==========

def node_balance(
    c_out: np.ndarray,
    q_up: float,
    role: PortRole,
    config: NetworkConfig,
    flows: ZonalFlowrates,
) -> np.ndarray:
    """
    Concentración de entrada de la columna aguas abajo de un nodo.

    c_in = (c_out·Q_up + δ)/Q_down con δ = c_F·Q_F en alimentación, c_D·Q_D en
    desorbente y -c_out·Q_port en las extracciones (que no cambian c).
    Acepta c_out (M,) o trazas (M, n).
    """
    c_out = np.asarray(c_out, dtype=float)
    port = flows.port_flow(role)
    if role in (PortRole.FEED, PortRole.DESORBENT):
        q_down = q_up + port
    else:
        q_down = q_up - port
    if not q_up > 0 or not q_down > 0:
        raise InfeasibleOperatingPointError(
            f"caudal no positivo en el nodo {role.value}", q_up=q_up, q_down=q_down
        )

    if role == PortRole.FEED:
        injected = np.asarray(config.feed_concentration) * port
    elif role == PortRole.DESORBENT:
        injected = np.asarray(config.desorbent_concentration) * port
    else:
        injected = -c_out * port
    if c_out.ndim == 2 and np.ndim(injected) == 1:
        injected = injected[:, None]
    return (c_out * q_up + injected) / q_down


# ========== CONMUTACIÓN ==========

def initial_state(setup: SimulationSetup) -> SmbState:
    """Planta con todas las columnas vacías de soluto"""
    net, disc = setup.network, setup.discretization
    columns = [
        ColumnState.empty(net.n_components, disc.n_axial, disc.n_radial)
        for _ in range(net.n_columns)
    ]
    return SmbState(columns=columns, zone_layout=tuple(net.zone_layout))


def advance_switch(
    state: SmbState,
    op: OperatingPoint,
    setup: SimulationSetup,
    flows: Optional[ZonalFlowrates] = None,
) -> SmbState:
    """
    Integra todas las columnas durante t_s y avanza los puertos una columna en
    el sentido del flujo.

    Args:
        state: Estado tras k conmutaciones
        op: Punto de operación (L y t_s incluidos)
        setup: Planta, transporte, isoterma, discretización y red
        flows: Caudales ya derivados (se recalculan si faltan)

    Returns:
        Estado tras k + 1 conmutaciones con las trazas E/R y el perfil axial
        del final del período
    """
    geometry = setup.geometry.with_length(op.length)
    if flows is None or not flows.velocities:
        flows = derive_flowrates(op, geometry)
    operator = build_grid(geometry, setup.discretization)
    net = setup.network
    n_cols = state.n_columns
    horizon = op.switch_time
    samples = setup.discretization.samples_per_period + 1

    params = [setup.transport.for_zone(z, flows.velocities[z]) for z in range(4)]

    recycle = state.recycle_trace or ConcentrationProfile.zeros(net.n_components, horizon, samples)
    inlet = ConcentrationProfile(
        recycle.times,
        node_balance(recycle.values, flows.q_IV, PortRole.DESORBENT, net, flows),
    )

    columns = list(state.columns)
    extract = raffinate = last_outlet = None
    for position in range(n_cols):
        index = state.physical_index(position)
        zone = state.zone_of_position(position)
        columns[index], outlet = integrate_period(
            state.columns[index], inlet, params[zone], setup.isotherm, horizon, operator
        )
        role = state.role_after_position(position)
        if role == PortRole.EXTRACT:
            extract = outlet
        elif role == PortRole.RAFFINATE:
            raffinate = outlet

        if position < n_cols - 1:
            inlet = ConcentrationProfile(
                outlet.times,
                node_balance(outlet.values, flows.zones[zone], role, net, flows),
            )
        else:
            last_outlet = outlet

    profile = np.concatenate([columns[state.physical_index(p)].c for p in range(n_cols)], axis=1)
    return SmbState(
        columns=columns,
        zone_layout=state.zone_layout,
        switch_index=state.switch_index + 1,
        recycle_trace=last_outlet,
        extract_trace=extract,
        raffinate_trace=raffinate,
        last_profile=profile,
    )


# ========== ESTADO CÍCLICO ESTACIONARIO ==========

def css_metric(
    extract: np.ndarray,
    raffinate: np.ndarray,
    previous_extract: np.ndarray,
    previous_raffinate: np.ndarray,
    feed_concentration: List[float],
) -> float:
    """max_i,puerto |ċ_k - ċ_{k-1}| / c_F,i (escala 1 si c_F,i = 0)"""
    scale = np.asarray(feed_concentration, dtype=float)
    scale = np.where(scale > 0, scale, 1.0)
    delta = np.concatenate([
        np.abs(extract - previous_extract) / scale,
        np.abs(raffinate - previous_raffinate) / scale,
    ])
    return float(delta.max())


def simulate_to_css(
    op: OperatingPoint,
    setup: SimulationSetup,
    on_switch: Optional[Callable[[SmbState, float], None]] = None,
) -> CssResult:
    """
    Repite advance_switch hasta que la métrica CSS baja de la tolerancia.

    Raises:
        InfeasibleOperatingPointError: caudales derivados no positivos
        CssNotReachedError: se alcanzó css_max_switches (lleva la última métrica y el estado)
    """
    net = setup.network
    geometry = setup.geometry.with_length(op.length)
    flows = derive_flowrates(op, geometry)

    state = initial_state(setup)
    previous_e = np.zeros(net.n_components)
    previous_r = np.zeros(net.n_components)
    metric = float("inf")

    for switch in range(1, net.css_max_switches + 1):
        state = advance_switch(state, op, setup, flows)
        avg_e = period_average(state.extract_trace, op.switch_time)
        avg_r = period_average(state.raffinate_trace, op.switch_time)
        metric = css_metric(avg_e, avg_r, previous_e, previous_r, net.feed_concentration)
        previous_e, previous_r = avg_e, avg_r
        if on_switch is not None:
            on_switch(state, metric)
        if metric < net.css_tolerance:
            log_event("network", "network", "css_reached", level="DEBUG", switches=switch, metric=metric)
            return CssResult(
                state=state,
                extract_trace=state.extract_trace,
                raffinate_trace=state.raffinate_trace,
                extract_average=avg_e,
                raffinate_average=avg_r,
                metric=metric,
                switches=switch,
            )

    log_event("network", "network", "css_not_reached", level="WARNING", switches=net.css_max_switches, metric=metric)
    raise CssNotReachedError(
        "no se alcanzó el estado cíclico estacionario",
        metric=metric,
        switches=net.css_max_switches,
        state=state,
    )


# ========== PERFIL Y BALANCE ==========

def axial_profile(state: SmbState, geometry: ColumnGeometry) -> Dict[str, np.ndarray]:
    """
    Perfil a lo largo del tren de columnas al final del último período,
    en el marco de puertos previo a la rotación (zona I primero).
    """
    if state.last_profile is None:
        raise ValueError("el estado no tiene perfil: avanzar al menos una conmutación")
    n_total = state.last_profile.shape[1]
    n_z = n_total // state.n_columns
    dz = geometry.length / n_z
    positions = (np.arange(n_total) + 0.5) * dz
    train = np.arange(n_total) // n_z + ((np.arange(n_total) % n_z) + 0.5) / n_z
    return {"position_m": positions, "train_position": train, "concentration": state.last_profile}


@dataclass(frozen=True)
class MoleBalance:
    """Balance molar de un período por componente [mol]"""
    fed: np.ndarray
    withdrawn: np.ndarray
    recycle_lag: np.ndarray
    inventory_change: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        return self.fed + self.recycle_lag - self.withdrawn - self.inventory_change


def plant_inventory(state: SmbState, op: OperatingPoint, setup: SimulationSetup) -> np.ndarray:
    operator = build_grid(setup.geometry.with_length(op.length), setup.discretization)
    return sum(column_inventory(col, operator, setup.isotherm) for col in state.columns)


def mole_balance(
    before: SmbState,
    after: SmbState,
    op: OperatingPoint,
    setup: SimulationSetup,
) -> MoleBalance:
    """
    Balance de un período (after = advance_switch(before)).

    recycle_lag es lo que entró a la zona I por el reciclo retrasado menos lo
    que salió de la última columna; se anula en el CSS.
    """
    net = setup.network
    flows = derive_flowrates(op)
    t_s = op.switch_time
    fed = t_s * (flows.feed * np.asarray(net.feed_concentration) + flows.desorbent * np.asarray(net.desorbent_concentration))

    def integral(trace: Optional[ConcentrationProfile]) -> np.ndarray:
        if trace is None:
            return np.zeros(net.n_components)
        return trapezoid(trace.values, trace.times, axis=1)

    withdrawn = flows.extract * integral(after.extract_trace) + flows.raffinate * integral(after.raffinate_trace)
    recycle_lag = flows.q_IV * (integral(before.recycle_trace) - integral(after.recycle_trace))
    change = plant_inventory(after, op, setup) - plant_inventory(before, op, setup)
    return MoleBalance(fed=fed, withdrawn=withdrawn, recycle_lag=recycle_lag, inventory_change=change)
