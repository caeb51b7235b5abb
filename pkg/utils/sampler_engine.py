"""
Muestreador Metropolis de paseo aleatorio con covarianza adaptativa y rechazo
retardado (una etapa extra con covarianza reducida a·Σ).

Las cadenas avanzan en rondas de `monitor_every` pasos en un ThreadPoolExecutor;
entre rondas el monitor calcula R̂ sobre una copia del almacén y decide si
congelar la adaptación o detenerse. Como cada cadena usa su propio generador y
las decisiones sólo se toman entre rondas, una semilla fija reproduce la corrida
con cualquier número de hilos.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import linalg

from models.core import (
    REJECTED,
    ChainState,
    Diagnostics,
    ProposalCovariance,
    SampleRow,
    SampleStore,
    TargetEvaluation,
)
from schemas.operating import ParameterBounds, PriorSpec
from schemas.run_config import SamplerSettings
from utils.diagnostics import rhat_per_parameter, summarize
from utils.errors import (
    CheckpointError,
    InsufficientSamplesError,
    InvalidInputError,
    RankDeficientJacobianError,
    SmbBayesError,
)
from utils.logging_utils import log_event

Target = Callable[[np.ndarray], TargetEvaluation]

# ε_a relativo al ancho de la caja
REGULARIZER_SCALE = 1e-12
# Paso relativo de las diferencias finitas centradas
FISHER_RELATIVE_STEP = 1e-4
# Umbral relativo de rango del Jacobiano
RANK_TOLERANCE = 1e-12


# ========== SEMILLAS ==========

def chain_seed_sequences(seed: int, n_chains: int) -> List[np.random.SeedSequence]:
    """Un hijo de SeedSequence(seed) por cadena (spawn_key = (i,))"""
    return np.random.SeedSequence(seed).spawn(n_chains)


def describe_seed_sequence(sequence: np.random.SeedSequence) -> Dict[str, Any]:
    """entropy + spawn_key: basta para reconstruir el flujo con SeedSequence(entropy, spawn_key=...)"""
    return {"entropy": int(sequence.entropy), "spawn_key": [int(k) for k in sequence.spawn_key]}


# ========== EVALUACIÓN SEGURA ==========

def safe_evaluate(target: Target, theta: np.ndarray, prior: PriorSpec) -> TargetEvaluation:
    """Fuera de la caja o con error del modelo -> log-posterior = -inf"""
    if not prior.bounds.contains(theta):
        return REJECTED
    try:
        evaluation = target(theta)
    except (SmbBayesError, ValueError, ArithmeticError) as e:
        log_event("sampler", "target", "evaluation_failed", str(e), level="DEBUG")
        return REJECTED
    if not math.isfinite(evaluation.log_posterior):
        return TargetEvaluation(log_posterior=-math.inf, record=evaluation.record)
    return evaluation


def _log1mexp(x: float) -> float:
    """log(1 - e^x) para x <= 0"""
    if x == -math.inf:
        return 0.0
    if x >= 0:
        return -math.inf
    return math.log(-math.expm1(x))


# ========== COVARIANZA INICIAL ==========

def regularizer_from_bounds(bounds: ParameterBounds) -> np.ndarray:
    """ε_a = 1e-12·(ancho de la caja)² por coordenada"""
    return REGULARIZER_SCALE * bounds.width ** 2


def diagonal_covariance(bounds: ParameterBounds, shrink: float = 0.1, sigma0: float = 1.0) -> ProposalCovariance:
    """Σ_0 = diag((ancho/10)²)"""
    reg = regularizer_from_bounds(bounds)
    return ProposalCovariance.from_matrix(np.diag((bounds.width / 10.0) ** 2) + np.diag(reg), reg, shrink, sigma0)


def finite_difference_jacobian(
    model: Callable[[np.ndarray], np.ndarray],
    theta0: np.ndarray,
    relative_step: float = FISHER_RELATIVE_STEP,
) -> np.ndarray:
    """∂y/∂θ por diferencias centradas con paso relativo por parámetro"""
    theta0 = np.asarray(theta0, dtype=float)
    columns = []
    for ell in range(theta0.size):
        h = relative_step * abs(theta0[ell]) or relative_step
        up, down = theta0.copy(), theta0.copy()
        up[ell] += h
        down[ell] -= h
        columns.append((np.asarray(model(up), dtype=float) - np.asarray(model(down), dtype=float)) / (2.0 * h))
    return np.column_stack(columns)


def covariance_from_jacobian(
    jacobian: np.ndarray,
    regularizer: Sequence[float],
    sigma0: float = 1.0,
    shrink: float = 0.1,
) -> ProposalCovariance:
    """Σ_0 = σ̃_0·V·(SᵀS)⁻¹·Vᵀ + ε_a a partir de J = U·S·Vᵀ"""
    jacobian = np.atleast_2d(np.asarray(jacobian, dtype=float))
    n = jacobian.shape[1]
    _, s, vt = linalg.svd(jacobian, full_matrices=False)
    if s.size < n or s.max() == 0 or s.min() <= RANK_TOLERANCE * s.max():
        raise RankDeficientJacobianError(
            "el Jacobiano del modelo no tiene rango completo",
            rows=jacobian.shape[0],
            singular_min=float(s.min()) if s.size else 0.0,
        )
    matrix = sigma0 * (vt.T * (1.0 / s ** 2)) @ vt + np.diag(regularizer)
    return ProposalCovariance.from_matrix(matrix, regularizer, shrink, sigma0)


def initial_covariance_fisher(
    theta0: np.ndarray,
    model: Callable[[np.ndarray], np.ndarray],
    sigma0: float,
    regularizer: Sequence[float],
    shrink: float = 0.1,
    relative_step: float = FISHER_RELATIVE_STEP,
) -> ProposalCovariance:
    """
    Covarianza inicial basada en la información de Fisher del modelo en θ0.

    Raises:
        RankDeficientJacobianError: J sin rango completo
    """
    jacobian = finite_difference_jacobian(model, theta0, relative_step)
    return covariance_from_jacobian(jacobian, regularizer, sigma0, shrink)


def initial_covariance_pilot(
    samples: np.ndarray,
    regularizer: Sequence[float],
    shrink: float = 0.1,
    sigma0: float = 1.0,
) -> ProposalCovariance:
    """
    c·Cov(piloto) + ε_a, con c = 2.4²/√n.

    Raises:
        InsufficientSamplesError: menos de n + 1 muestras
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    k, n = samples.shape
    if k < n + 1:
        raise InsufficientSamplesError("la corrida piloto necesita al menos n + 1 muestras", samples=k, dimension=n)
    scaling = 2.4 ** 2 / math.sqrt(n)
    matrix = scaling * np.cov(samples, rowvar=False, ddof=1).reshape(n, n) + np.diag(regularizer)
    return ProposalCovariance.from_matrix(matrix, regularizer, shrink, sigma0)


# ========== PASOS DE LA CADENA ==========

def second_stage_log_acceptance(
    lp0: float,
    lp1: float,
    lp2: float,
    theta0: np.ndarray,
    theta1: np.ndarray,
    theta2: np.ndarray,
    factor: np.ndarray,
) -> float:
    """
    log del cociente de aceptación de la segunda etapa:
    (π2/π0)·q2·(1 - α1(θ2→θ1)) / (1 - α1(θ0→θ1)),
    q2 = exp(-½(‖R⁻¹(θ2-θ1)‖² - ‖R⁻¹(θ0-θ1)‖²)).
    """
    if lp2 == -math.inf:
        return -math.inf
    numerator = _log1mexp(min(0.0, lp1 - lp2))
    if numerator == -math.inf:
        return -math.inf
    denominator = _log1mexp(min(0.0, lp1 - lp0))
    w2 = linalg.solve_triangular(factor, theta2 - theta1, lower=True)
    w0 = linalg.solve_triangular(factor, theta0 - theta1, lower=True)
    log_q2 = -0.5 * (np.dot(w2, w2) - np.dot(w0, w0))
    return (lp2 - lp0) + log_q2 + numerator - denominator


def delayed_rejection_step(
    chain: ChainState,
    rejected: np.ndarray,
    rejected_evaluation: TargetEvaluation,
    cov: ProposalCovariance,
    target: Target,
    rng: np.random.Generator,
    prior: PriorSpec,
) -> ChainState:
    """Segunda etapa desde θ^{i-1} con N(θ^{i-1}, a·Σ); si rechaza repite θ^{i-1}"""
    z = rng.standard_normal(chain.theta.size)
    u = rng.random()
    candidate = chain.theta + math.sqrt(cov.shrink) * (cov.factor @ z)
    evaluation = safe_evaluate(target, candidate, prior)
    log_alpha = second_stage_log_acceptance(
        chain.log_posterior,
        rejected_evaluation.log_posterior,
        evaluation.log_posterior,
        chain.theta,
        rejected,
        candidate,
        cov.factor,
    )
    if log_alpha > -math.inf and u <= math.exp(min(0.0, log_alpha)):
        return chain.advanced(candidate, evaluation, stage=2)
    return chain.advanced(chain.theta, chain.evaluation, stage=0)


def metropolis_step(
    chain: ChainState,
    cov: ProposalCovariance,
    target: Target,
    rng: np.random.Generator,
    prior: PriorSpec,
    delayed_rejection: bool = True,
) -> ChainState:
    """
    Un paso: θ̃ = θ + R·z; acepta si β <= min(1, γ), γ = exp(lp̃ - lp).
    Si rechaza y delayed_rejection está activo, pasa a la segunda etapa.
    """
    z = rng.standard_normal(chain.theta.size)
    u = rng.random()
    candidate = chain.theta + cov.factor @ z
    evaluation = safe_evaluate(target, candidate, prior)
    log_gamma = evaluation.log_posterior - chain.log_posterior
    if evaluation.log_posterior > -math.inf and u <= math.exp(min(0.0, log_gamma)):
        return chain.advanced(candidate, evaluation, stage=1)
    if delayed_rejection:
        return delayed_rejection_step(chain, candidate, evaluation, cov, target, rng, prior)
    return chain.advanced(chain.theta, chain.evaluation, stage=0)


def adapt_covariance(
    store: SampleStore,
    chain: int,
    cov: ProposalCovariance,
    enabled: bool = True,
) -> ProposalCovariance:
    """Σ ← c·Cov(historia completa de la cadena) + ε_a"""
    if not enabled:
        return cov
    history = store.history(chain)
    if history.shape[0] < 2:
        return cov
    n = history.shape[1]
    matrix = cov.scaling * np.cov(history, rowvar=False, ddof=1).reshape(n, n) + np.diag(cov.regularizer)
    try:
        return ProposalCovariance.from_matrix(matrix, cov.regularizer, cov.shrink, cov.sigma0)
    except linalg.LinAlgError as e:
        raise AssertionError(f"covarianza adaptada no definida positiva: {e}") from e


# ========== CORRIDA MULTI-CADENA ==========

@dataclass
class ChainContext:
    index: int
    state: ChainState
    covariance: ProposalCovariance
    rng: np.random.Generator


@dataclass
class RunResult:
    store: SampleStore
    diagnostics: Diagnostics
    chains: List[ChainContext]
    converged: bool
    rounds: int
    seed: int
    rhat_history: List[Dict[str, Any]] = field(default_factory=list)


class SamplerRun:
    """Estado completo de una corrida (reanudable desde checkpoint)"""

    def __init__(
        self,
        target: Target,
        prior: PriorSpec,
        settings: SamplerSettings,
        parameter_names: Sequence[str],
        seed: int,
        chains: List[ChainContext],
        store: SampleStore,
    ):
        self.target = target
        self.prior = prior
        self.settings = settings
        self.parameter_names = tuple(parameter_names)
        self.seed = int(seed)
        self.chains = chains
        self.store = store
        self.burn_in = settings.effective_burn_in()
        self.rounds = 0
        self.frozen = False
        self.converged = False
        self.rhat_history: List[Dict[str, Any]] = []

    # ---------- construcción ----------

    @classmethod
    def start(
        cls,
        target: Target,
        prior: PriorSpec,
        settings: SamplerSettings,
        initial_points: Sequence[Sequence[float]],
        covariances: Sequence[ProposalCovariance],
        parameter_names: Sequence[str],
        seed: int,
        threads: int = 1,
    ) -> "SamplerRun":
        m = len(initial_points)
        if m < 2:
            raise InvalidInputError("se necesitan al menos 2 cadenas", chains=m)
        if len(covariances) != m:
            raise InvalidInputError("se necesita una covarianza por cadena", chains=m, covariances=len(covariances))

        points = [np.asarray(p, dtype=float) for p in initial_points]
        with ThreadPoolExecutor(max_workers=max(1, min(threads, m))) as pool:
            evaluations = list(pool.map(lambda p: safe_evaluate(target, p, prior), points))
        infeasible = [i for i, e in enumerate(evaluations) if e.log_posterior == -math.inf]
        if len(infeasible) == m:
            raise InvalidInputError("ninguna cadena tiene un punto inicial factible")
        if infeasible:
            raise InvalidInputError("puntos iniciales no factibles", chains=infeasible)

        rngs = [np.random.default_rng(s) for s in chain_seed_sequences(seed, m)]
        store = SampleStore(m, parameter_names, settings.effective_burn_in())
        chains = []
        for i in range(m):
            state = ChainState(theta=points[i], evaluation=evaluations[i])
            store.append(i, SampleRow.from_chain(state))
            chains.append(ChainContext(index=i, state=state, covariance=covariances[i], rng=rngs[i]))
        return cls(target, prior, settings, parameter_names, seed, chains, store)

    # ---------- avance ----------

    def _advance_chain(self, ctx: ChainContext, steps: int) -> None:
        settings = self.settings
        for _ in range(steps):
            if self.store.length(ctx.index) >= settings.budget:
                return
            ctx.state = metropolis_step(
                ctx.state, ctx.covariance, self.target, ctx.rng, self.prior, settings.delayed_rejection
            )
            self.store.append(ctx.index, SampleRow.from_chain(ctx.state))
            post = ctx.state.iteration - self.burn_in
            if settings.adaptation and not self.frozen and post > 0 and post % settings.adaptation_interval == 0:
                ctx.covariance = adapt_covariance(self.store, ctx.index, ctx.covariance)
                log_event("sampler", f"chain-{ctx.index}", "adapt", level="DEBUG", iteration=ctx.state.iteration)

    def _monitor(self) -> None:
        samples = self.store.snapshot()
        k = samples.shape[1]
        rhat = rhat_per_parameter(samples) if k >= 2 else np.full(len(self.parameter_names), np.nan)
        self.rhat_history.append({
            "round": self.rounds,
            "samples_per_chain": int(self.store.lengths()[0]),
            "rhat": [None if not np.isfinite(r) else float(r) for r in rhat],
        })
        log_event("sampler", "monitor", "round", round=self.rounds, samples_per_chain=k, rhat=rhat)
        if k >= 2 and np.all(np.isfinite(rhat)) and np.all(rhat < self.settings.rhat_threshold):
            if not self.converged:
                log_event("sampler", "monitor", "converged", round=self.rounds, samples_per_chain=k)
            self.converged = True
            if self.settings.freeze_adaptation_on_convergence:
                self.frozen = True

    def _finished(self) -> bool:
        if self.converged and self.settings.stop_on_convergence:
            return True
        return all(n >= self.settings.budget for n in self.store.lengths())

    def run(
        self,
        threads: int = 1,
        on_checkpoint: Optional[Callable[["SamplerRun"], None]] = None,
    ) -> RunResult:
        settings = self.settings
        checkpoint_every = max(1, settings.adaptation_interval // settings.monitor_every)
        with ThreadPoolExecutor(max_workers=max(1, min(threads, len(self.chains)))) as pool:
            while not self._finished():
                list(pool.map(lambda ctx: self._advance_chain(ctx, settings.monitor_every), self.chains))
                self.rounds += 1
                self._monitor()
                if on_checkpoint is not None and self.rounds % checkpoint_every == 0:
                    on_checkpoint(self)
        if on_checkpoint is not None:
            on_checkpoint(self)

        diagnostics = summarize(self.store, settings.rhat_threshold, self.rhat_history)
        return RunResult(
            store=self.store,
            diagnostics=diagnostics,
            chains=self.chains,
            converged=diagnostics.converged,
            rounds=self.rounds,
            seed=self.seed,
            rhat_history=self.rhat_history,
        )

    # ---------- checkpoint ----------

    def to_checkpoint(self) -> Dict[str, Any]:
        def record_dump(record):
            if record is None:
                return None
            return record.model_dump() if hasattr(record, "model_dump") else record

        chains = []
        for ctx in self.chains:
            rows = self.store.rows(ctx.index)
            chains.append({
                "covariance": ctx.covariance.to_dict(),
                "rng_state": ctx.rng.bit_generator.state,
                "accepted_first": ctx.state.accepted_first,
                "accepted_second": ctx.state.accepted_second,
                "rows": [
                    {
                        "iteration": r.iteration,
                        "theta": r.theta.tolist(),
                        "log_posterior": r.log_posterior,
                        "stage": r.stage,
                        "record": record_dump(r.record),
                    }
                    for r in rows
                ],
            })
        return {
            "seed": self.seed,
            "parameter_names": list(self.parameter_names),
            "settings": self.settings.model_dump(mode="json"),
            "rounds": self.rounds,
            "frozen": self.frozen,
            "converged": self.converged,
            "rhat_history": self.rhat_history,
            "chains": chains,
        }

    @classmethod
    def from_checkpoint(
        cls,
        data: Dict[str, Any],
        target: Target,
        prior: PriorSpec,
        settings: SamplerSettings,
        record_factory: Optional[Callable[[Dict[str, Any]], Any]] = None,
    ) -> "SamplerRun":
        try:
            names = data["parameter_names"]
            store = SampleStore(len(data["chains"]), names, settings.effective_burn_in())
            contexts = []
            for i, entry in enumerate(data["chains"]):
                rows = entry["rows"]
                if not rows:
                    raise CheckpointError("cadena sin muestras en el checkpoint", chain=i)
                for raw in rows:
                    record = raw["record"]
                    if record is not None and record_factory is not None:
                        record = record_factory(record)
                    store.append(i, SampleRow(
                        iteration=int(raw["iteration"]),
                        theta=np.asarray(raw["theta"], dtype=float),
                        log_posterior=float(raw["log_posterior"]),
                        stage=int(raw["stage"]),
                        record=record,
                    ))
                last = store.rows(i)[-1]
                state = ChainState(
                    theta=last.theta,
                    evaluation=TargetEvaluation(log_posterior=last.log_posterior, record=last.record),
                    iteration=last.iteration,
                    accepted_first=int(entry["accepted_first"]),
                    accepted_second=int(entry["accepted_second"]),
                    last_stage=last.stage,
                )
                rng = np.random.default_rng()
                rng.bit_generator.state = entry["rng_state"]
                contexts.append(ChainContext(i, state, ProposalCovariance.from_dict(entry["covariance"]), rng))
            run = cls(target, prior, settings, names, int(data["seed"]), contexts, store)
            run.rounds = int(data["rounds"])
            run.frozen = bool(data["frozen"])
            run.converged = bool(data["converged"])
            run.rhat_history = list(data["rhat_history"])
        except CheckpointError:
            raise
        except (KeyError, TypeError, ValueError, linalg.LinAlgError) as e:
            raise CheckpointError(f"checkpoint corrupto: {e}") from e
        return run


def run_chains(
    target: Target,
    initial_points: Sequence[Sequence[float]],
    prior: PriorSpec,
    settings: SamplerSettings,
    covariances: Sequence[ProposalCovariance],
    parameter_names: Sequence[str],
    seed: Optional[int] = None,
    threads: int = 1,
    on_checkpoint: Optional[Callable[[SamplerRun], None]] = None,
) -> RunResult:
    """
    Corre m cadenas hasta que todos los R̂ < umbral (si stop_on_convergence)
    o hasta agotar el presupuesto por cadena.

    Args:
        target: θ -> TargetEvaluation (log-posterior no normalizada)
        initial_points: θ0 por cadena
        prior: Caja uniforme
        settings: Presupuesto, burn-in, cadencias, DR y adaptación
        covariances: Σ_0 por cadena
        parameter_names: Nombres de las columnas de θ
        seed: Semilla raíz (se deriva un flujo independiente por cadena)
        threads: Hilos del pool
        on_checkpoint: Se llama cada intervalo de adaptación y al final
    """
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % 2 ** 64)
    run = SamplerRun.start(target, prior, settings, initial_points, covariances, parameter_names, seed, threads)
    log_event("sampler", "run", "start", chains=len(initial_points), budget=settings.budget, seed=seed)
    result = run.run(threads=threads, on_checkpoint=on_checkpoint)
    log_event("sampler", "run", "finish", rounds=result.rounds, converged=result.converged)
    return result
