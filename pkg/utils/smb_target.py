"""
Densidad objetivo del diseño SMB: θ -> CSS -> Ψ -> H -> log p(θ|Ψ).

Une network_engine y performance_engine para el muestreador, el comando
simulate y el análisis PPC.
"""
from typing import Callable, Optional

import numpy as np

from models.core import CssResult, TargetEvaluation
from schemas.operating import OperatingPoint, PriorSpec
from schemas.performance import ObjectiveSpec, PerformanceRecord
from schemas.plant import SimulationSetup
from utils.network_engine import derive_flowrates, simulate_to_css
from utils.performance_engine import indicators, log_likelihood, with_objective


def evaluate_operating_point(
    op: OperatingPoint,
    setup: SimulationSetup,
    spec: ObjectiveSpec,
    css: Optional[CssResult] = None,
) -> PerformanceRecord:
    """Simula hasta el CSS (si no se pasa `css`) y devuelve Ψ con f, g y H"""
    geometry = setup.geometry.with_length(op.length)
    flows = derive_flowrates(op, geometry)
    css = css or simulate_to_css(op, setup)
    record = indicators(
        css.extract_average,
        css.raffinate_average,
        flows,
        op,
        setup.network,
        geometry,
        setup.isotherm.component_names,
    )
    return with_objective(record, spec)


class SmbTarget:
    """
    Log-posterior no normalizada: log p(θ) - H(θ)/2.

    Reentrante: cada llamada simula desde la planta vacía.
    """

    def __init__(self, setup: SimulationSetup, spec: ObjectiveSpec, prior: PriorSpec):
        self.setup = setup
        self.spec = spec
        self.prior = prior

    def __call__(self, theta: np.ndarray) -> TargetEvaluation:
        log_prior = self.prior.log_density(theta)
        if not np.isfinite(log_prior):
            return TargetEvaluation(log_posterior=-np.inf)
        op = OperatingPoint.from_vector(theta)
        record = evaluate_operating_point(op, self.setup, self.spec)
        return TargetEvaluation(log_posterior=log_prior + log_likelihood(record.h), record=record)


def outlet_chromatogram_model(setup: SimulationSetup) -> Callable[[np.ndarray], np.ndarray]:
    """
    θ -> trazas de salida E y R del período CSS concatenadas (por índice de
    muestra). Es el modelo cuyo Jacobiano arma la covarianza inicial de Fisher.
    """
    def model(theta: np.ndarray) -> np.ndarray:
        css = simulate_to_css(OperatingPoint.from_vector(theta), setup)
        return np.concatenate([css.extract_trace.values.ravel(), css.raffinate_trace.values.ravel()])

    return model


def css_profile_simulator(setup: SimulationSetup) -> Callable[[np.ndarray], np.ndarray]:
    """θ -> perfil axial (M, N·N_z) en el marco de posiciones al final del período CSS"""
    def simulate(theta: np.ndarray) -> np.ndarray:
        css = simulate_to_css(OperatingPoint.from_vector(theta), setup)
        return css.state.last_profile

    return simulate
