"""
Jerarquía de errores de smb-bayes.

Cada excepción lleva el código de salida que usa la CLI:
0 ok, 1 fallo numérico, 2 entrada inválida.
"""
from typing import Any, Optional

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_INVALID_INPUT = 2


class SmbBayesError(Exception):
    """Base de todos los errores del dominio"""

    exit_code: int = EXIT_NUMERICAL

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context

    def __str__(self) -> str:
        if not self.context:
            return self.message
        ctx = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{self.message} ({ctx})"


# ========== ENTRADA INVÁLIDA (exit 2) ==========

class InvalidInputError(SmbBayesError):
    """Precondición violada por los datos de entrada"""

    exit_code = EXIT_INVALID_INPUT


class InfeasibleOperatingPointError(InvalidInputError):
    """Algún caudal derivado del balance de zonas es <= 0"""


class CheckpointError(InvalidInputError):
    """Checkpoint ausente, corrupto o incompatible con la configuración"""


class AnalysisError(InvalidInputError):
    """Análisis desconocido o datos que no permiten el análisis pedido"""


# ========== FALLOS NUMÉRICOS (exit 1) ==========

class IntegratorError(SmbBayesError):
    """El integrador de la columna falló o produjo concentraciones negativas"""


class CssNotReachedError(SmbBayesError):
    """Se alcanzó el tope de conmutaciones sin llegar al estado cíclico estacionario"""

    def __init__(self, message: str, metric: float, switches: int, state: Optional[Any] = None):
        super().__init__(message, metric=metric, switches=switches)
        self.metric = metric
        self.switches = switches
        self.state = state


class DegenerateSimulationError(SmbBayesError):
    """Concentraciones nulas en un puerto: la pureza no está definida"""


class DiagnosticsError(SmbBayesError):
    """Diagnóstico de convergencia no definido (varianza nula)"""


class RankDeficientJacobianError(SmbBayesError):
    """El Jacobiano del modelo no tiene rango completo"""


class InsufficientSamplesError(SmbBayesError):
    """No hay suficientes muestras para la estadística pedida"""
