"""
Diagnósticos de convergencia MCMC: R̂ de Gelman-Rubin, autocorrelación,
tamaño efectivo de muestra e intervalos de credibilidad.
"""
from typing import Dict, List, Optional, Sequence

import numpy as np

from models.core import Diagnostics, SampleStore
from utils.errors import DiagnosticsError, InsufficientSamplesError, InvalidInputError

# Horizonte de las curvas de autocorrelación que se exportan
AUTOCORRELATION_MAX_LAG = 250


def gelman_rhat(chains: np.ndarray) -> float:
    """
    Factor de reducción de escala potencial para un parámetro.

    Args:
        chains: (m, k) muestras post burn-in, m >= 2 cadenas de igual longitud k >= 2

    Returns:
        R̂ = √(var⁺/W), var⁺ = (k-1)/k·W + B/k
    """
    chains = np.asarray(chains, dtype=float)
    if chains.ndim != 2 or chains.shape[0] < 2 or chains.shape[1] < 2:
        raise InsufficientSamplesError("R̂ necesita m >= 2 cadenas con k >= 2 muestras", shape=chains.shape)
    m, k = chains.shape
    means = chains.mean(axis=1)
    between = k / (m - 1) * np.sum((means - means.mean()) ** 2)
    within = chains.var(axis=1, ddof=1).mean()
    if not within > 0:
        raise DiagnosticsError("varianza intra-cadena nula: R̂ indefinido")
    var_plus = (k - 1) / k * within + between / k
    return float(np.sqrt(var_plus / within))


def rhat_per_parameter(samples: np.ndarray) -> np.ndarray:
    """R̂ de cada parámetro de Φ (m, k, n); NaN donde no está definido"""
    out = np.full(samples.shape[2], np.nan)
    for ell in range(samples.shape[2]):
        try:
            out[ell] = gelman_rhat(samples[:, :, ell])
        except (DiagnosticsError, InsufficientSamplesError):
            pass
    return out


def autocorrelation(values: Sequence[float], lag: int) -> float:
    """ρ_t con el estimador sesgado (divide por k en todos los retardos)"""
    x = np.asarray(values, dtype=float)
    if not 0 <= lag < x.size:
        raise InvalidInputError("retardo fuera de rango", lag=lag, length=x.size)
    d = x - x.mean()
    c0 = np.dot(d, d)
    if not c0 > 0:
        raise DiagnosticsError("varianza nula: autocorrelación indefinida")
    return float(np.dot(d[: x.size - lag], d[lag:]) / c0)


def autocorrelation_curve(values: Sequence[float], max_lag: Optional[int] = None) -> np.ndarray:
    """ρ_0..ρ_max_lag vía FFT con el mismo estimador sesgado"""
    x = np.asarray(values, dtype=float)
    n = x.size
    max_lag = n - 1 if max_lag is None else min(max_lag, n - 1)
    d = x - x.mean()
    c0 = np.dot(d, d)
    if not c0 > 0:
        raise DiagnosticsError("varianza nula: autocorrelación indefinida")
    size = 1 << int(np.ceil(np.log2(2 * n)))
    spectrum = np.fft.rfft(d, size)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), size)[: max_lag + 1]
    return acov / c0


def _pooled_autocorrelation(chains: np.ndarray) -> np.ndarray:
    """ρ_t promediando las autocovarianzas por cadena alrededor de la media global"""
    m, k = chains.shape
    grand = chains.mean()
    size = 1 << int(np.ceil(np.log2(2 * k)))
    acov = np.zeros(k)
    for chain in chains:
        d = chain - grand
        spectrum = np.fft.rfft(d, size)
        acov += np.fft.irfft(spectrum * np.conj(spectrum), size)[:k]
    if not acov[0] > 0:
        raise DiagnosticsError("varianza nula: tamaño efectivo indefinido")
    return acov / acov[0]


def effective_sample_size(chains: np.ndarray) -> float:
    """
    n_eff = m·k / (1 + 2·Σ ρ_t), truncando la suma en el primer t con
    ρ_t + ρ_{t+1} < 0. Acotado a m·k.

    Args:
        chains: (m, k) o (k,) muestras post burn-in de un parámetro
    """
    chains = np.atleast_2d(np.asarray(chains, dtype=float))
    m, k = chains.shape
    if k < 2:
        raise InsufficientSamplesError("se necesitan al menos 2 muestras por cadena", k=k)
    rho = _pooled_autocorrelation(chains)

    total = 0.0
    for t in range(1, k - 1):
        if rho[t] + rho[t + 1] < 0:
            break
        total += rho[t]
    n_eff = m * k / (1.0 + 2.0 * total)
    return float(min(n_eff, m * k))


def credible_interval(samples: Sequence[float], mass: float = 0.66) -> tuple:
    """
    Percentiles α/2 y 1-α/2 con 1-α = mass.

    Regla de Hazen ((i - ½)/n), de modo que el 66 % de {1..100} da [17.5, 83.5];
    con mass = 1 devuelve [min, max].
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientSamplesError("intervalo de credibilidad sin muestras")
    if not 0 < mass <= 1:
        raise InvalidInputError("la masa debe estar en (0, 1]", mass=mass)
    if mass == 1:
        return float(x.min()), float(x.max())
    alpha = 1.0 - mass
    low, high = np.percentile(x, [100 * alpha / 2, 100 * (1 - alpha / 2)], method="hazen")
    return float(low), float(high)


def acceptance_statistics(store: SampleStore) -> List[Dict[str, float]]:
    """Aceptaciones por etapa y cadena (la fila 0 es θ0 y no cuenta)"""
    stats = []
    for chain in range(store.n_chains):
        rows = store.rows(chain)[1:]
        steps = len(rows)
        first = sum(1 for r in rows if r.stage == 1)
        second = sum(1 for r in rows if r.stage == 2)
        stats.append({
            "chain": chain,
            "steps": steps,
            "accepted_first_stage": first,
            "accepted_second_stage": second,
            "acceptance_rate": (first + second) / steps if steps else float("nan"),
        })
    return stats


def summarize(
    store: SampleStore,
    threshold: float = 1.1,
    rhat_history: Optional[List[Dict]] = None,
) -> Diagnostics:
    """Diagnósticos finales sobre las muestras post burn-in de todas las cadenas"""
    samples = store.snapshot()
    names = store.parameter_names
    n = len(names)
    k = samples.shape[1]

    rhat = rhat_per_parameter(samples) if k >= 2 else np.full(n, np.nan)
    ess = np.full(n, np.nan)
    curves: Dict[str, List[float]] = {}
    for ell, name in enumerate(names):
        if k < 2:
            continue
        try:
            ess[ell] = effective_sample_size(samples[:, :, ell])
            mixed = samples[:, :, ell].ravel()
            curves[name] = autocorrelation_curve(mixed, AUTOCORRELATION_MAX_LAG).tolist()
        except (DiagnosticsError, InsufficientSamplesError):
            pass

    converged = bool(np.all(np.isfinite(rhat)) and np.all(rhat < threshold))
    return Diagnostics(
        parameter_names=tuple(names),
        rhat=rhat,
        ess=ess,
        autocorrelation=curves,
        threshold=threshold,
        converged=converged,
        rhat_history=list(rhat_history or []),
        acceptance=acceptance_statistics(store),
        post_burn_in_length=k,
    )
