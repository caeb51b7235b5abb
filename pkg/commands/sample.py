"""
Comando sample: cadenas DRAM sobre el posterior de θ.

Escribe chain_<i>.csv, run_metadata.json, diagnostics.json y checkpoint.json
(cada intervalo de adaptación). Con --resume continúa desde un checkpoint.
"""
from pathlib import Path
from typing import Dict, List, Optional

import click
import numpy as np

from commands.common import resolve_config, resolve_output_dir, resolve_threads, run_command, write_run_config
from config import THREADS_ENV_VAR
from models.core import ProposalCovariance, SampleStore
from schemas.operating import PARAMETER_COLUMNS, PARAMETER_NAMES, OperatingPoint
from schemas.performance import PerformanceRecord
from schemas.plant import SimulationSetup
from schemas.run_config import RunConfig, SamplerBlock, SamplerSettings
from storage.run_store import RunStore, read_checkpoint
from utils.diagnostics import credible_interval
from utils.errors import EXIT_OK, CheckpointError, InsufficientSamplesError, InvalidInputError, SmbBayesError
from utils.logging_utils import log_event
from utils.network_engine import derive_flowrates
from utils.sampler_engine import (
    SamplerRun,
    chain_seed_sequences,
    describe_seed_sequence,
    diagonal_covariance,
    initial_covariance_fisher,
    initial_covariance_pilot,
    regularizer_from_bounds,
    run_chains,
)
from utils.smb_target import SmbTarget, outlet_chromatogram_model

# Intentos para sortear un punto inicial con caudales factibles
_MAX_START_DRAWS = 1000

CREDIBLE_MASS = 0.66


# ========== PUNTOS INICIALES ==========

def _feasible(theta: np.ndarray) -> bool:
    try:
        derive_flowrates(OperatingPoint.from_vector(theta))
    except (SmbBayesError, ValueError):
        return False
    return True


def start_seed_sequence(seed: int, n_chains: int) -> np.random.SeedSequence:
    """Hijo n_chains de la semilla raíz: no coincide con los flujos de las cadenas (hijos 0..m-1)"""
    return np.random.SeedSequence(seed).spawn(n_chains + 1)[n_chains]


def pilot_seed(seed: int) -> int:
    """Semilla raíz propia de la corrida piloto"""
    return int(np.random.SeedSequence([seed, 1]).generate_state(1, np.uint64)[0])


def initial_points(config: RunConfig, seed: int) -> List[np.ndarray]:
    """
    θ0 por cadena: initial_points de la config; si no, la cadena 0 arranca en
    operating_point (si está en la caja) y las demás en sorteos uniformes
    factibles dentro de la caja.
    """
    sampler = config.sampler
    if sampler.initial_points is not None:
        return [np.asarray(p, dtype=float) for p in sampler.initial_points]

    m = sampler.chains
    lower = np.asarray(sampler.bounds.lower, dtype=float)
    upper = np.asarray(sampler.bounds.upper, dtype=float)
    rng = np.random.default_rng(start_seed_sequence(seed, m))

    points: List[np.ndarray] = []
    if config.operating_point is not None and sampler.bounds.contains(config.operating_point.to_vector()):
        points.append(config.operating_point.to_vector())
    while len(points) < m:
        for _ in range(_MAX_START_DRAWS):
            theta = rng.uniform(lower, upper)
            if _feasible(theta):
                points.append(theta)
                break
        else:
            raise InvalidInputError("no se encontró un punto inicial con caudales factibles en la caja")
    return points


# ========== COVARIANZA INICIAL ==========

def _pilot_covariances(
    target: SmbTarget,
    sampler: SamplerBlock,
    points: List[np.ndarray],
    seed: int,
    threads: int,
) -> List[ProposalCovariance]:
    """Corrida piloto sin adaptación con Σ diagonal; Σ_0 = c·Cov(piloto) por cadena"""
    pilot_root = pilot_seed(seed)
    diagonal = diagonal_covariance(sampler.bounds, sampler.shrink_factor, sampler.sigma0)
    pilot_settings = SamplerSettings(
        chains=sampler.chains,
        budget=sampler.pilot_samples,
        burn_in=0,
        seed=pilot_root,
        adaptation_interval=max(2, sampler.pilot_samples),
        monitor_every=sampler.monitor_every,
        shrink_factor=sampler.shrink_factor,
        sigma0=sampler.sigma0,
        delayed_rejection=sampler.delayed_rejection,
        adaptation=False,
        stop_on_convergence=False,
    )
    pilot = run_chains(
        target, points, sampler.prior, pilot_settings, [diagonal] * len(points),
        PARAMETER_NAMES, seed=pilot_root, threads=threads,
    )
    reg = regularizer_from_bounds(sampler.bounds)
    covariances = []
    for i in range(len(points)):
        try:
            covariances.append(initial_covariance_pilot(pilot.store.history(i), reg, sampler.shrink_factor, sampler.sigma0))
        except (InsufficientSamplesError, np.linalg.LinAlgError) as e:
            log_event("sampler", f"chain-{i}", "pilot_fallback", str(e), level="WARNING")
            covariances.append(diagonal)
    return covariances


def initial_covariances(
    config: RunConfig,
    setup: SimulationSetup,
    target: SmbTarget,
    points: List[np.ndarray],
    seed: int,
    threads: int,
) -> List[ProposalCovariance]:
    """Σ_0 por cadena según sampler.initial_covariance (fisher | pilot | diagonal)"""
    sampler = config.sampler
    diagonal = diagonal_covariance(sampler.bounds, sampler.shrink_factor, sampler.sigma0)
    if sampler.initial_covariance == "diagonal":
        return [diagonal] * len(points)
    if sampler.initial_covariance == "pilot":
        return _pilot_covariances(target, sampler, points, seed, threads)

    model = outlet_chromatogram_model(setup)
    reg = regularizer_from_bounds(sampler.bounds)
    covariances = []
    for i, theta0 in enumerate(points):
        try:
            covariances.append(initial_covariance_fisher(theta0, model, sampler.sigma0, reg, sampler.shrink_factor))
        except (SmbBayesError, np.linalg.LinAlgError) as e:
            log_event("sampler", f"chain-{i}", "fisher_fallback", str(e), level="WARNING")
            covariances.append(diagonal)
    return covariances


# ========== RESULTADOS ==========

def credible_intervals(store: SampleStore, mass: float = CREDIBLE_MASS) -> Dict[str, Dict[str, float]]:
    """CI por parámetro sobre las muestras post burn-in de todas las cadenas"""
    samples = store.snapshot()
    out: Dict[str, Dict[str, float]] = {}
    for ell, column in enumerate(PARAMETER_COLUMNS):
        values = samples[:, :, ell].ravel()
        if values.size == 0:
            continue
        lower, upper = credible_interval(values, mass)
        out[column] = {"mass": mass, "lower": lower, "upper": upper}
    return out


def _metadata(config: RunConfig, seed: int, threads: int, result, resumed_from: Optional[str]) -> Dict:
    sampler = config.sampler
    return {
        "seed": seed,
        "seed_sequences": {
            "chains": [describe_seed_sequence(s) for s in chain_seed_sequences(seed, sampler.chains)],
            "initial_points": describe_seed_sequence(start_seed_sequence(seed, sampler.chains)),
            "pilot_seed": pilot_seed(seed) if sampler.initial_covariance == "pilot" else None,
        },
        "threads": threads,
        "chains": sampler.chains,
        "budget": sampler.budget,
        "burn_in": sampler.effective_burn_in(),
        "adaptation_interval": sampler.adaptation_interval,
        "monitor_every": sampler.monitor_every,
        "rhat_threshold": sampler.rhat_threshold,
        "delayed_rejection": sampler.delayed_rejection,
        "initial_covariance": sampler.initial_covariance,
        "penalty_factor": config.objective.penalty_factor,
        "purity_extract": config.objective.purity_extract,
        "purity_raffinate": config.objective.purity_raffinate,
        "bounds": sampler.bounds.model_dump(),
        "parameter_columns": list(PARAMETER_COLUMNS),
        "component_names": config.plant.isotherm.component_names,
        "rounds": result.rounds,
        "converged": result.converged,
        "samples_per_chain": result.store.lengths(),
        "resumed_from": resumed_from,
    }


def cmd_sample(
    config: RunConfig,
    out_dir: Path,
    seed: Optional[int] = None,
    threads: int = 1,
    resume: Optional[str] = None,
) -> int:
    """
    Corre el muestreador y persiste cadenas, metadatos y diagnósticos.

    Raises:
        InvalidInputError: sin bloque sampler o θ0 no factible
        CheckpointError: checkpoint ausente, corrupto o incompatible
    """
    if config.sampler is None:
        raise InvalidInputError("falta el bloque sampler en la configuración")
    sampler = config.sampler
    setup = config.simulation_setup()
    target = SmbTarget(setup, config.objective, sampler.prior)
    names = setup.isotherm.component_names
    store = RunStore(out_dir).ensure()
    write_run_config(config, store.root)

    def on_checkpoint(run: SamplerRun) -> None:
        store.write_checkpoint(run.to_checkpoint())
        store.write_chains(run.store, names)

    if resume:
        data = read_checkpoint(resume)
        if list(data.get("parameter_names", [])) != list(PARAMETER_NAMES) or len(data["chains"]) != sampler.chains:
            raise CheckpointError("el checkpoint no corresponde a esta configuración", path=resume)
        run = SamplerRun.from_checkpoint(data, target, sampler.prior, sampler, PerformanceRecord.model_validate)
        seed = run.seed
        log_event("sampler", "run", "resume", f"path={resume} rounds={run.rounds}")
        result = run.run(threads=threads, on_checkpoint=on_checkpoint)
    else:
        if seed is None:
            seed = sampler.seed if sampler.seed is not None else int(np.random.SeedSequence().entropy % 2 ** 64)
        points = initial_points(config, seed)
        covariances = initial_covariances(config, setup, target, points, seed, threads)
        result = run_chains(
            target, points, sampler.prior, sampler, covariances, PARAMETER_NAMES,
            seed=seed, threads=threads, on_checkpoint=on_checkpoint,
        )

    store.write_chains(result.store, names)
    store.write_metadata(_metadata(config, seed, threads, result, resume))
    store.write_diagnostics(result.diagnostics, credible_intervals(result.store))
    click.echo(
        f"{result.store.n_chains} cadenas, {result.store.lengths()} muestras, "
        f"convergencia={'sí' if result.converged else 'no'}"
    )
    return EXIT_OK


@click.command("sample")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Archivo JSON de configuración")
@click.option("--preset", default=None, help="Preset empaquetado (p. ej. klatt-reference)")
@click.option("--out", default=None, help="Directorio de salida")
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None, help="Semilla raíz (U64)")
@click.option("--threads", type=click.IntRange(min=1), default=None, envvar=THREADS_ENV_VAR, help="Hilos del pool")
@click.option("--resume", type=click.Path(), default=None, help="Checkpoint desde el cual continuar")
@click.pass_context
def sample(
    ctx: click.Context,
    config_path: Optional[str],
    preset: Optional[str],
    out: Optional[str],
    seed: Optional[int],
    threads: Optional[int],
    resume: Optional[str],
):
    """Muestrea el posterior de las condiciones de operación."""
    def action() -> int:
        config = resolve_config(config_path, preset)
        out_dir = resolve_output_dir(out, config)
        return cmd_sample(config, out_dir, seed, resolve_threads(threads), resume)

    ctx.exit(run_command("sample", action))
